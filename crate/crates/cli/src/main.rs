use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use outcap_cli::config::ConfigMap;
use outcap_cli::params::channel_from_map;
use outcap_cli::query::{self, OutputFormat, Record};
use outcap_cli::sweep::{run_sweep, SweepSpec};
use outcap_cli::validate::{run_validation, ValidationSettings};
use outcap_cli::THREADS_ENV;
use outcap_core::mimo_bounds::{asymptotic_benchmark, outage_capacity_bounds};
use outcap_core::montecarlo::mc_outage_capacity;
use outcap_core::outage::outage_capacity;
use outcap_core::snr_models::{combiner_quantile, ga_quantile};
use outcap_core::{
    AsymptoticOptions, CapacityMethod, ChannelConfig, DiversityScheme, EdgeConstant, Error,
    McSettings,
};

#[derive(Parser)]
#[command(
    name = "outcap",
    version,
    about = "Outage capacity of Rayleigh-faded SIMO/MISO/MIMO diversity channels",
    after_help = "Every option may also come from a `key = value` file given with --config \
                  (keys are the long option names). Options on the command line win. \
                  Set OUTCAP_THREADS to override the worker thread count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// SNR outage threshold gamma0 = F^-1(eps)
    Quantile(QuantileArgs),
    /// Outage capacity and benchmark gaps
    Capacity(CapacityArgs),
    /// CSV parameter sweep
    Sweep(SweepArgs),
    /// MIMO outage-capacity bounds and asymptotic benchmark
    MimoBounds(MimoArgs),
    /// Monte Carlo estimate of the outage threshold and capacity
    Mc(McArgs),
    /// Run the validation suite and write a TSV report
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ChannelArgs {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// mrc | sc | mrt | st | mimo-opt | stc
    #[arg(long)]
    scheme: Option<DiversityScheme>,
    /// Receive antennas
    #[arg(long)]
    m: Option<u64>,
    /// Transmit antennas
    #[arg(long)]
    n: Option<u64>,
    /// Outage probability
    #[arg(long)]
    eps: Option<f64>,
    /// Per-branch average SNR (dB)
    #[arg(long, allow_negative_numbers = true)]
    branch_snr_db: Option<f64>,
    /// Mean combiner SNR (dB); the branch SNR is back-solved
    #[arg(long, allow_negative_numbers = true)]
    combiner_snr_db: Option<f64>,
    /// Per-link SNR rho for mimo-opt (dB)
    #[arg(long, allow_negative_numbers = true)]
    link_snr_db: Option<f64>,
    /// text | csv
    #[arg(long)]
    format: Option<OutputFormat>,
}

const CHANNEL_KEYS: &[&str] = &[
    "scheme",
    "m",
    "n",
    "eps",
    "branch_snr_db",
    "combiner_snr_db",
    "link_snr_db",
    "format",
];

impl ChannelArgs {
    fn map(&self) -> Result<ConfigMap> {
        let mut map = match &self.config {
            Some(p) => ConfigMap::load(p)?,
            None => ConfigMap::new(),
        };
        map.overlay("scheme", self.scheme);
        map.overlay("m", self.m);
        map.overlay("n", self.n);
        map.overlay("eps", self.eps);
        map.overlay("branch_snr_db", self.branch_snr_db);
        map.overlay("combiner_snr_db", self.combiner_snr_db);
        map.overlay("link_snr_db", self.link_snr_db);
        map.overlay("format", self.format);
        Ok(map)
    }
}

struct Resolved {
    map: ConfigMap,
    cfg: ChannelConfig,
    eps: f64,
    format: OutputFormat,
}

fn resolve(map: ConfigMap, extra_keys: &[&str]) -> Result<Resolved> {
    let allowed: Vec<&str> = CHANNEL_KEYS.iter().chain(extra_keys).copied().collect();
    map.check_keys(&allowed)?;
    let cfg = channel_from_map(&map)?;
    let eps: f64 = map.require("eps")?;
    let format = map.get_or("format", OutputFormat::Text)?;
    Ok(Resolved {
        map,
        cfg,
        eps,
        format,
    })
}

#[derive(Args)]
struct QuantileArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// exact | ga
    #[arg(long)]
    method: Option<CapacityMethod>,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// exact | ga
    #[arg(long)]
    method: Option<CapacityMethod>,
    /// all | outage_capacity | gap_branch | gap_combiner | ratio_combiner | bounds
    #[arg(long)]
    quantity: Option<String>,
    #[command(flatten)]
    asymptotic: AsymptoticArgs,
}

#[derive(Args)]
struct AsymptoticArgs {
    /// paper (c = 2) | marchenko_pastur (c = 1)
    #[arg(long)]
    edge_constant: Option<EdgeConstant>,
    /// Round the asymptotic order up to an integer
    #[arg(long)]
    round_up: bool,
    /// Smallest M and N for the asymptotic benchmark
    #[arg(long)]
    asymptotic_floor: Option<u64>,
}

const ASYMPTOTIC_KEYS: &[&str] = &["edge_constant", "round_up", "asymptotic_floor"];

impl AsymptoticArgs {
    fn overlay(&self, map: &mut ConfigMap) {
        map.overlay("edge_constant", self.edge_constant);
        map.overlay("round_up", self.round_up.then_some(true));
        map.overlay("asymptotic_floor", self.asymptotic_floor);
    }

    fn options(map: &ConfigMap) -> Result<AsymptoticOptions> {
        let d = AsymptoticOptions::default();
        Ok(AsymptoticOptions {
            edge: map.get_or("edge_constant", d.edge)?,
            round_up: map.get_or("round_up", d.round_up)?,
            floor: map.get_or("asymptotic_floor", d.floor)?,
        })
    }
}

#[derive(Args)]
struct MimoArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    asymptotic: AsymptoticArgs,
}

#[derive(Args)]
struct McOptions {
    /// Number of draws
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Independent substreams (results depend on seed and chunks)
    #[arg(long)]
    chunks: Option<u32>,
    #[arg(long)]
    power_iter_tol: Option<f64>,
    #[arg(long)]
    power_iter_max: Option<u32>,
}

const MC_KEYS: &[&str] = &[
    "samples",
    "seed",
    "chunks",
    "power_iter_tol",
    "power_iter_max",
];

impl McOptions {
    fn overlay(&self, map: &mut ConfigMap) {
        map.overlay("samples", self.samples);
        map.overlay("seed", self.seed);
        map.overlay("chunks", self.chunks);
        map.overlay("power_iter_tol", self.power_iter_tol);
        map.overlay("power_iter_max", self.power_iter_max);
    }

    fn settings(map: &ConfigMap, default_samples: u64, default_seed: u64) -> Result<McSettings> {
        let mut s = McSettings::new(
            map.get_or("samples", default_samples)?,
            map.get_or("seed", default_seed)?,
        )?;
        if let Some(c) = map.get("chunks")? {
            s = s.with_chunks(c)?;
        }
        s.power_iter_tol = map.get_or("power_iter_tol", s.power_iter_tol)?;
        s.power_iter_max = map.get_or("power_iter_max", s.power_iter_max)?;
        s.validate()?;
        Ok(s)
    }
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    mc: McOptions,
}

#[derive(Args)]
struct SweepArgs {
    /// key = value sweep specification
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<DiversityScheme>,
    /// m | n | snr_db
    #[arg(long)]
    variable: Option<String>,
    /// Explicit comma-separated grid
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    grid_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    grid_stop: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// linear | log
    #[arg(long)]
    grid_spacing: Option<String>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    /// branch | combiner | link (which SNR the snr_db variable sets)
    #[arg(long)]
    snr_reference: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    branch_snr_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    combiner_snr_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    link_snr_db: Option<f64>,
    /// Comma-separated outage probabilities
    #[arg(long)]
    eps: Option<String>,
    /// Comma-separated: outage_capacity, gap_branch, gap_combiner,
    /// ratio_combiner, ga_variant, bounds, asymptotic
    #[arg(long)]
    outputs: Option<String>,
    #[arg(long)]
    edge_constant: Option<EdgeConstant>,
    #[arg(long)]
    round_up: bool,
    /// Output file (default stdout)
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Print the resolved specification as a config file and exit
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    mc: McOptions,
    /// Comma-separated outage probabilities for the quantile checks
    #[arg(long)]
    eps: Option<String>,
    /// Draws for the 100 x 100 edge-constant comparison
    #[arg(long)]
    asymptotic_samples: Option<u64>,
    /// Seeds per cell for the CI coverage check
    #[arg(long)]
    coverage_seeds: Option<u32>,
    /// Report path (default stdout)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Test mode: compare samples with a deliberately wrong CDF
    #[arg(long)]
    inject_mismatch: bool,
}

fn emit(record: &Record, format: OutputFormat) -> Result<()> {
    io::stdout().write_all(record.render(format).as_bytes())?;
    Ok(())
}

fn quantile(args: QuantileArgs) -> Result<()> {
    let mut map = args.channel.map()?;
    map.overlay("method", args.method);
    let r = resolve(map, &["method"])?;
    let method = r.map.get_or("method", CapacityMethod::Exact)?;
    let q = match method {
        CapacityMethod::Exact => combiner_quantile(&r.cfg, r.eps)?,
        CapacityMethod::GaussianApprox => ga_quantile(&r.cfg, r.eps)?,
    };
    emit(&query::quantile_record(&r.cfg, r.eps, &q), r.format)
}

const CONTEXT: &[&str] = &["scheme", "m", "n", "branch_snr_db", "eps"];
const EXACT_QUANTITIES: &[&str] = &[
    "outage_capacity",
    "gap_branch",
    "gap_combiner",
    "ratio_combiner",
];

fn with_asymptotic(
    cfg: &ChannelConfig,
    eps: f64,
    opts: &AsymptoticOptions,
) -> Result<outcap_core::MimoBoundReport> {
    let mut report = outage_capacity_bounds(cfg, eps)?;
    report.asymptotic_benchmark = match asymptotic_benchmark(cfg, eps, opts) {
        Ok(a) => Some(a),
        Err(Error::BelowAsymptoticFloor { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(report)
}

fn capacity(args: CapacityArgs) -> Result<()> {
    let mut map = args.channel.map()?;
    map.overlay("method", args.method);
    map.overlay("quantity", args.quantity.clone());
    args.asymptotic.overlay(&mut map);
    let keys: Vec<&str> = ["method", "quantity"]
        .iter()
        .chain(ASYMPTOTIC_KEYS)
        .copied()
        .collect();
    let r = resolve(map, &keys)?;
    let quantity = r.map.raw("quantity").unwrap_or("all").to_ascii_lowercase();
    let mimo = r.cfg.scheme() == DiversityScheme::MimoOptimal;

    if mimo {
        if quantity != "bounds" && quantity != "all" {
            return Err(Error::UnsupportedExactCdf(r.cfg.scheme().as_str()))
                .context(format!("--quantity {quantity}; use --quantity bounds"));
        }
        let opts = AsymptoticArgs::options(&r.map)?;
        let report = with_asymptotic(&r.cfg, r.eps, &opts)?;
        return emit(&query::bounds_record(&r.cfg, r.eps, &report), r.format);
    }
    if quantity == "bounds" {
        bail!("--quantity bounds needs --scheme mimo-opt");
    }
    let method = r.map.get_or("method", CapacityMethod::Exact)?;
    let report = outage_capacity(&r.cfg, r.eps, method)?;
    let record = query::capacity_record(&r.cfg, r.eps, &report);
    if quantity == "all" {
        return emit(&record, r.format);
    }
    if !EXACT_QUANTITIES.contains(&quantity.as_str()) {
        bail!("unknown quantity `{quantity}`");
    }
    emit(&record.select(&[quantity.as_str()], CONTEXT), r.format)
}

fn mimo_bounds(args: MimoArgs) -> Result<()> {
    let mut map = args.channel.map()?;
    args.asymptotic.overlay(&mut map);
    let r = resolve(map, ASYMPTOTIC_KEYS)?;
    let opts = AsymptoticArgs::options(&r.map)?;
    let report = with_asymptotic(&r.cfg, r.eps, &opts)?;
    emit(&query::bounds_record(&r.cfg, r.eps, &report), r.format)
}

fn monte_carlo(args: McArgs) -> Result<()> {
    let mut map = args.channel.map()?;
    args.mc.overlay(&mut map);
    let r = resolve(map, MC_KEYS)?;
    let settings = McOptions::settings(&r.map, 100_000, 42)?;
    if !settings.enough_for(r.eps) {
        eprintln!(
            "warning: {} samples is below ceil(10/eps) = {}; the CI is unreliable",
            settings.samples,
            outcap_core::montecarlo::min_reliable_samples(r.eps)
        );
    }
    let c = mc_outage_capacity(&r.cfg, r.eps, &settings)?;
    emit(&query::mc_record(&r.cfg, &c), r.format)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut map = match &args.config {
        Some(p) => ConfigMap::load(p)?,
        None => ConfigMap::new(),
    };
    let snr_flags = [
        ("branch_snr_db", args.branch_snr_db),
        ("combiner_snr_db", args.combiner_snr_db),
        ("link_snr_db", args.link_snr_db),
    ];
    // a command-line grid or SNR replaces whichever form the file used
    if snr_flags.iter().any(|(_, v)| v.is_some()) {
        for (k, _) in snr_flags {
            map.remove(k);
        }
        map.remove("snr_reference");
    }
    if args.grid.is_some() {
        for k in ["grid_start", "grid_stop", "grid_points", "grid_spacing"] {
            map.remove(k);
        }
    }
    if args.grid_start.is_some() || args.grid_stop.is_some() {
        map.remove("grid");
    }
    for (k, v) in snr_flags {
        map.overlay(k, v);
    }
    map.overlay("scheme", args.scheme);
    map.overlay("variable", args.variable);
    map.overlay("grid", args.grid);
    map.overlay("grid_start", args.grid_start);
    map.overlay("grid_stop", args.grid_stop);
    map.overlay("grid_points", args.grid_points);
    map.overlay("grid_spacing", args.grid_spacing);
    map.overlay("m", args.m);
    map.overlay("n", args.n);
    map.overlay("snr_reference", args.snr_reference);
    map.overlay("eps", args.eps);
    map.overlay("outputs", args.outputs);
    map.overlay("edge_constant", args.edge_constant);
    map.overlay("round_up", args.round_up.then_some(true));
    let spec = SweepSpec::from_config(&map)?;
    if args.print_config {
        print!("{}", spec.to_config().to_text());
        return Ok(());
    }
    let rows = match &args.out {
        Some(path) => write_file(path, |w| Ok(run_sweep(&spec, w)?))?,
        None => run_sweep(&spec, &mut io::stdout().lock())?,
    };
    if args.out.is_some() {
        eprintln!("wrote {rows} rows");
    }
    Ok(())
}

fn write_file<T>(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<T>) -> Result<T> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    let v = f(&mut w)?;
    w.flush()?;
    Ok(v)
}

fn validate(args: ValidateArgs) -> Result<bool> {
    let mut map = match &args.config {
        Some(p) => ConfigMap::load(p)?,
        None => ConfigMap::new(),
    };
    args.mc.overlay(&mut map);
    map.overlay("eps", args.eps);
    map.overlay("asymptotic_samples", args.asymptotic_samples);
    map.overlay("coverage_seeds", args.coverage_seeds);
    map.overlay("inject_mismatch", args.inject_mismatch.then_some(true));
    let keys: Vec<&str> = MC_KEYS
        .iter()
        .chain(&[
            "eps",
            "asymptotic_samples",
            "coverage_seeds",
            "inject_mismatch",
        ])
        .copied()
        .collect();
    map.check_keys(&keys)?;
    let mut settings = ValidationSettings::new(McOptions::settings(
        &map,
        ValidationSettings::DEFAULT_SAMPLES,
        ValidationSettings::DEFAULT_SEED,
    )?);
    if let Some(eps) = map.get_list("eps")? {
        settings.eps = eps;
    }
    settings.asymptotic_samples = map.get_or("asymptotic_samples", settings.asymptotic_samples)?;
    settings.coverage_seeds = map.get_or("coverage_seeds", settings.coverage_seeds)?;
    settings.inject_mismatch = map.get_or("inject_mismatch", false)?;

    let report = run_validation(&settings)?;
    match &args.report {
        Some(path) => write_file(path, |w| Ok(report.write_tsv(w)?))?,
        None => report.write_tsv(&mut io::stdout().lock())?,
    }
    for c in report.failures() {
        eprintln!(
            "FAIL {}: expected {}, observed {}",
            c.name, c.expected, c.observed
        );
    }
    eprintln!(
        "{} checks: {} pass, {} fail, {} skipped-unreliable, {} info",
        report.checks.len(),
        report.count(outcap_cli::validate::Verdict::Pass),
        report.count(outcap_cli::validate::Verdict::Fail),
        report.count(outcap_cli::validate::Verdict::SkippedUnreliable),
        report.count(outcap_cli::validate::Verdict::Info),
    );
    Ok(report.passed())
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
        if n == 0 {
            bail!("{THREADS_ENV} must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    match cli.command {
        Command::Quantile(a) => quantile(a)?,
        Command::Capacity(a) => capacity(a)?,
        Command::Sweep(a) => sweep(a)?,
        Command::MimoBounds(a) => mimo_bounds(a)?,
        Command::Mc(a) => monte_carlo(a)?,
        Command::Validate(a) => return validate(a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
