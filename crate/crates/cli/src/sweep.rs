//! Parameter sweeps written as CSV.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use outcap_core::mimo_bounds::{asymptotic_benchmark, outage_capacity_bounds};
use outcap_core::outage::{outage_capacity, CapacityReport};
use outcap_core::{
    AsymptoticOptions, CapacityMethod, ChannelConfig, DiversityScheme, EdgeConstant, Error,
};
use rayon::prelude::*;

use crate::config::{ConfigError, ConfigMap};
use crate::format::g9;
use crate::params::{build_channel, snr_reference, ParamError, SnrReference};

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid sweep: {0}")]
    Invalid(String),
    #[error("at {at}: {source}")]
    Point {
        at: String,
        #[source]
        source: ParamError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(msg: impl Into<String>) -> SweepError {
    SweepError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    M,
    N,
    SnrDb,
}

impl Variable {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variable::M => "m",
            Variable::N => "n",
            Variable::SnrDb => "snr_db",
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" => Ok(Variable::M),
            "n" => Ok(Variable::N),
            "snr_db" | "snr-db" | "snr" => Ok(Variable::SnrDb),
            other => Err(format!("unknown variable `{other}` (m|n|snr_db)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spacing {
    Linear,
    Log,
}

impl Spacing {
    pub fn as_str(&self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        }
    }
}

impl FromStr for Spacing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            other => Err(format!("unknown spacing `{other}` (linear|log)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Explicit(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
        spacing: Spacing,
    },
}

impl Grid {
    pub fn validate(&self) -> Result<(), SweepError> {
        match self {
            Grid::Explicit(v) => {
                if v.is_empty() {
                    return Err(invalid("grid is empty"));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(invalid("grid values must be finite"));
                }
                if v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("grid must be strictly increasing"));
                }
            }
            &Grid::Range {
                start,
                stop,
                points,
                spacing,
            } => {
                if points == 0 {
                    return Err(invalid("grid needs at least one point"));
                }
                if !(start.is_finite() && stop.is_finite()) {
                    return Err(invalid("grid endpoints must be finite"));
                }
                if points > 1 && stop <= start {
                    return Err(invalid("grid stop must exceed start"));
                }
                if spacing == Spacing::Log && start <= 0.0 {
                    return Err(invalid("log spacing needs positive endpoints"));
                }
            }
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Explicit(v) => v.clone(),
            &Grid::Range {
                start,
                stop,
                points,
                spacing,
            } => {
                if points == 1 {
                    return vec![start];
                }
                let last = (points - 1) as f64;
                (0..points)
                    .map(|i| {
                        if i + 1 == points {
                            return stop;
                        }
                        let t = i as f64 / last;
                        match spacing {
                            Spacing::Linear => start + t * (stop - start),
                            Spacing::Log => (start.ln() + t * (stop.ln() - start.ln())).exp(),
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Quantities a sweep can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Output {
    OutageCapacity,
    GapBranch,
    GapCombiner,
    RatioCombiner,
    /// The four quantities above under the Gaussian approximation, plus a
    /// flag column.
    GaVariant,
    /// MIMO combiner-SNR, capacity and benchmark bounds.
    Bounds,
    Asymptotic,
}

impl Output {
    pub const ALL: [Output; 7] = [
        Output::OutageCapacity,
        Output::GapBranch,
        Output::GapCombiner,
        Output::RatioCombiner,
        Output::GaVariant,
        Output::Bounds,
        Output::Asymptotic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Output::OutageCapacity => "outage_capacity",
            Output::GapBranch => "gap_branch",
            Output::GapCombiner => "gap_combiner",
            Output::RatioCombiner => "ratio_combiner",
            Output::GaVariant => "ga_variant",
            Output::Bounds => "bounds",
            Output::Asymptotic => "asymptotic",
        }
    }

    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Output::OutageCapacity => &["outage_capacity"],
            Output::GapBranch => &["gap_branch"],
            Output::GapCombiner => &["gap_combiner"],
            Output::RatioCombiner => &["ratio_combiner"],
            Output::GaVariant => &[
                "ga_outage_capacity",
                "ga_gap_branch",
                "ga_gap_combiner",
                "ga_ratio_combiner",
                "ga_flag",
            ],
            Output::Bounds => &[
                "combiner_snr_lower",
                "combiner_snr_upper",
                "capacity_lower",
                "capacity_upper",
                "benchmark_lower",
                "benchmark_upper",
            ],
            Output::Asymptotic => &["asymptotic_order", "asymptotic_capacity", "asymptotic_flag"],
        }
    }

    fn needs_mimo(&self) -> bool {
        matches!(self, Output::Bounds | Output::Asymptotic)
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Output {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        Output::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| format!("unknown output `{s}`"))
    }
}

pub const GA_OK: &str = "ok";
pub const GA_INVALID: &str = "ga-invalid-regime";
pub const ASYMPTOTIC_OK: &str = "ok";
pub const ASYMPTOTIC_BELOW_FLOOR: &str = "below-floor";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scheme: DiversityScheme,
    pub variable: Variable,
    pub grid: Grid,
    pub m: u64,
    pub n: u64,
    pub snr_reference: SnrReference,
    /// Fixed SNR in dB; unused when sweeping `snr_db`.
    pub snr_db: Option<f64>,
    pub eps: Vec<f64>,
    pub outputs: Vec<Output>,
    pub edge: EdgeConstant,
    pub round_up: bool,
}

const KEYS: &[&str] = &[
    "scheme",
    "variable",
    "grid",
    "grid_start",
    "grid_stop",
    "grid_points",
    "grid_spacing",
    "m",
    "n",
    "snr_reference",
    "branch_snr_db",
    "combiner_snr_db",
    "link_snr_db",
    "eps",
    "outputs",
    "edge_constant",
    "round_up",
];

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        self.grid.validate()?;
        if self.eps.is_empty() {
            return Err(invalid("eps list is empty"));
        }
        if let Some(e) = self.eps.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return Err(invalid(format!("eps {e} is not in (0, 1)")));
        }
        if self.outputs.is_empty() {
            return Err(invalid("no outputs requested"));
        }
        let mimo = self.scheme == DiversityScheme::MimoOptimal;
        for o in &self.outputs {
            if o.needs_mimo() != mimo {
                return Err(invalid(format!(
                    "output `{o}` is not available for scheme {}",
                    self.scheme
                )));
            }
            if *o == Output::GaVariant && !self.scheme.is_ratio_combining() {
                return Err(invalid(format!(
                    "ga_variant applies to mrc/mrt only, not {}",
                    self.scheme
                )));
            }
        }
        match (self.variable, self.snr_db) {
            (Variable::SnrDb, _) => {}
            (_, None) => return Err(invalid("a fixed SNR is required unless sweeping snr_db")),
            (_, Some(db)) if !db.is_finite() => return Err(invalid("SNR must be finite")),
            _ => {}
        }
        if matches!(self.variable, Variable::M | Variable::N) {
            if let Some(v) = self.grid.values().iter().find(|v| v.round() < 1.0) {
                return Err(invalid(format!("antenna count {v} rounds below 1")));
            }
        }
        Ok(())
    }

    pub fn from_config(map: &ConfigMap) -> Result<Self, SweepError> {
        map.check_keys(KEYS)?;
        let scheme: DiversityScheme = map.require("scheme")?;
        let variable: Variable = map.require("variable")?;
        let grid = match map.get_list::<f64>("grid")? {
            Some(v) => {
                if map.contains("grid_start") || map.contains("grid_stop") {
                    return Err(invalid("give either `grid` or `grid_start`/`grid_stop`"));
                }
                Grid::Explicit(v)
            }
            None => Grid::Range {
                start: map.require("grid_start")?,
                stop: map.require("grid_stop")?,
                points: map.require("grid_points")?,
                spacing: map.get_or("grid_spacing", Spacing::Linear)?,
            },
        };
        let found = snr_reference(map).map_err(|e| invalid(e.to_string()))?;
        let named: Option<SnrReference> = map.get("snr_reference")?;
        let (snr_reference, snr_db) = match (named, found) {
            (Some(r), Some((f, _))) if r != f => {
                return Err(invalid(format!(
                    "snr_reference = {r} conflicts with `{}`",
                    f.key()
                )))
            }
            (_, Some((r, db))) => (r, Some(db)),
            (Some(r), None) => (r, None),
            (None, None) if scheme == DiversityScheme::MimoOptimal => (SnrReference::Link, None),
            (None, None) => (SnrReference::Branch, None),
        };
        let spec = Self {
            scheme,
            variable,
            grid,
            m: map.get_or("m", 1)?,
            n: map.get_or("n", 1)?,
            snr_reference,
            snr_db,
            eps: map
                .get_list("eps")?
                .ok_or_else(|| ConfigError::Missing("eps".into()))?,
            outputs: map
                .get_list("outputs")?
                .ok_or_else(|| ConfigError::Missing("outputs".into()))?,
            edge: map.get_or("edge_constant", EdgeConstant::Paper)?,
            round_up: map.get_or("round_up", false)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_config(&self) -> ConfigMap {
        let mut map = ConfigMap::new();
        map.set("scheme", self.scheme.as_str());
        map.set("variable", self.variable.as_str());
        match &self.grid {
            Grid::Explicit(v) => map.set("grid", join(v.iter())),
            Grid::Range {
                start,
                stop,
                points,
                spacing,
            } => {
                map.set("grid_start", start.to_string());
                map.set("grid_stop", stop.to_string());
                map.set("grid_points", points.to_string());
                map.set("grid_spacing", spacing.as_str());
            }
        }
        map.set("m", self.m.to_string());
        map.set("n", self.n.to_string());
        map.set("snr_reference", self.snr_reference.as_str());
        if let Some(db) = self.snr_db {
            map.set(self.snr_reference.key(), db.to_string());
        }
        map.set("eps", join(self.eps.iter()));
        map.set("outputs", join(self.outputs.iter()));
        map.set("edge_constant", self.edge.as_str());
        map.set("round_up", self.round_up.to_string());
        map
    }

    pub fn header(&self) -> Vec<&'static str> {
        let mut h = vec![self.variable.as_str(), "eps", "method"];
        for o in &self.outputs {
            h.extend_from_slice(o.columns());
        }
        h
    }

    /// Rows the sweep will produce.
    pub fn row_count(&self) -> usize {
        self.grid.values().len() * self.eps.len()
    }

    fn channel_at(&self, x: f64) -> Result<ChannelConfig, ParamError> {
        let (mut m, mut n, mut db) = (self.m, self.n, self.snr_db.unwrap_or(0.0));
        match self.variable {
            Variable::M => m = x.round() as u64,
            Variable::N => n = x.round() as u64,
            Variable::SnrDb => db = x,
        }
        build_channel(self.scheme, m, n, self.snr_reference, db)
    }

    fn variable_cell(&self, x: f64) -> String {
        match self.variable {
            Variable::M | Variable::N => format!("{}", x.round() as u64),
            Variable::SnrDb => g9(x),
        }
    }
}

fn join<T: fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn push_report(cells: &mut Vec<String>, r: &CapacityReport) {
    cells.push(g9(r.outage_capacity));
    cells.push(g9(r.gap_vs_branch));
    cells.push(g9(r.gap_vs_combiner));
    cells.push(r.ratio_vs_combiner.map(g9).unwrap_or_default());
}

fn row(spec: &SweepSpec, x: f64, eps: f64) -> Result<String, ParamError> {
    let cfg = spec.channel_at(x)?;
    let mimo = spec.scheme == DiversityScheme::MimoOptimal;
    let exact = if mimo {
        None
    } else {
        Some(outage_capacity(&cfg, eps, CapacityMethod::Exact)?)
    };
    let method = exact.map_or("bounds", |r| r.method.as_str());
    let mut cells = vec![spec.variable_cell(x), g9(eps), method.to_string()];
    for o in &spec.outputs {
        match o {
            Output::OutageCapacity => cells.push(g9(exact.expect("exact").outage_capacity)),
            Output::GapBranch => cells.push(g9(exact.expect("exact").gap_vs_branch)),
            Output::GapCombiner => cells.push(g9(exact.expect("exact").gap_vs_combiner)),
            Output::RatioCombiner => cells.push(
                exact
                    .expect("exact")
                    .ratio_vs_combiner
                    .map(g9)
                    .unwrap_or_default(),
            ),
            Output::GaVariant => match outage_capacity(&cfg, eps, CapacityMethod::GaussianApprox) {
                Ok(r) => {
                    push_report(&mut cells, &r);
                    cells.push(GA_OK.into());
                }
                Err(Error::GaInvalidRegime { .. }) => {
                    cells.extend(std::iter::repeat(String::new()).take(4));
                    cells.push(GA_INVALID.into());
                }
                Err(e) => return Err(e.into()),
            },
            Output::Bounds => {
                let b = outage_capacity_bounds(&cfg, eps)?;
                for v in [
                    b.bounds.mean_lower,
                    b.bounds.mean_upper,
                    b.capacity_lower,
                    b.capacity_upper,
                    b.benchmark_lower,
                    b.benchmark_upper,
                ] {
                    cells.push(g9(v));
                }
            }
            Output::Asymptotic => {
                let opts = AsymptoticOptions {
                    edge: spec.edge,
                    round_up: spec.round_up,
                    ..AsymptoticOptions::default()
                };
                match asymptotic_benchmark(&cfg, eps, &opts) {
                    Ok(a) => {
                        cells.push(g9(a.order_used));
                        cells.push(g9(a.capacity));
                        cells.push(ASYMPTOTIC_OK.into());
                    }
                    Err(Error::BelowAsymptoticFloor { .. }) => {
                        cells.extend([String::new(), String::new()]);
                        cells.push(ASYMPTOTIC_BELOW_FLOOR.into());
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    Ok(cells.join(","))
}

/// Evaluates every (grid point, eps) pair and writes the CSV, header first.
///
/// Points run in parallel; rows come out in grid order, eps order within a
/// point. Returns the number of data rows.
pub fn run_sweep(spec: &SweepSpec, out: &mut dyn Write) -> Result<usize, SweepError> {
    spec.validate()?;
    let xs = spec.grid.values();
    let cells: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| spec.eps.iter().map(move |&e| (x, e)))
        .collect();
    let rows: Vec<Result<String, SweepError>> = cells
        .par_iter()
        .map(|&(x, eps)| {
            row(spec, x, eps).map_err(|source| SweepError::Point {
                at: format!(
                    "{} = {}, eps = {}",
                    spec.variable,
                    spec.variable_cell(x),
                    eps
                ),
                source,
            })
        })
        .collect();
    let mut buf = spec.header().join(",");
    buf.push('\n');
    let mut count = 0;
    for r in rows {
        buf.push_str(&r?);
        buf.push('\n');
        count += 1;
    }
    out.write_all(buf.as_bytes())?;
    Ok(count)
}
