//! Cross-module validation suite with a TSV report.
//!
//! Analytic results are checked against independent closed forms and
//! against the Monte Carlo oracle. One line per check:
//! `name<TAB>expected<TAB>observed<TAB>tol<TAB>verdict`.

use std::fmt;
use std::io::Write;

use outcap_core::mimo_bounds::{effective_order, outage_capacity_bounds};
use outcap_core::montecarlo::{
    capacity_from_estimate, empirical_quantile, estimate, ks_critical_value, ks_distance,
    mean_and_stderr, sample_combiner_snr,
};
use outcap_core::outage::{asymptotic_gap, outage_capacity, sc_gain_factor};
use outcap_core::snr_models::{combiner_cdf, combiner_quantile, selection_law_cdf, sum_law_cdf};
use outcap_core::{
    CapacityMethod, ChannelConfig, DiversityScheme, EdgeConstant, McSettings, Result, SnrRegime,
};

use crate::format::g9;

/// Asymptotic 99% KS constant.
pub const KS_C99: f64 = 1.63;
pub const EDGE_TOLERANCE: f64 = 0.05;
/// Minimum fraction of (cell, seed) pairs whose 95% CI holds the analytic
/// quantile.
pub const COVERAGE_TARGET: f64 = 0.93;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    SkippedUnreliable,
    Info,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::SkippedUnreliable => "skipped-unreliable",
            Verdict::Info => "info",
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub tol: String,
    pub verdict: Verdict,
}

impl Check {
    fn new(
        name: impl Into<String>,
        expected: impl Into<String>,
        observed: impl Into<String>,
        tol: impl Into<String>,
        verdict: Verdict,
    ) -> Self {
        Self {
            name: name.into(),
            expected: expected.into(),
            observed: observed.into(),
            tol: tol.into(),
            verdict,
        }
    }

    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.name, self.expected, self.observed, self.tol, self.verdict
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSettings {
    pub mc: McSettings,
    pub eps: Vec<f64>,
    /// Draws for the 100 x 100 edge comparison.
    pub asymptotic_samples: u64,
    /// Seeds per cell for the CI coverage check.
    pub coverage_seeds: u32,
    /// Test mode: compare Monte Carlo samples with the wrong CDF.
    pub inject_mismatch: bool,
}

impl ValidationSettings {
    pub const DEFAULT_SAMPLES: u64 = 100_000;
    pub const DEFAULT_SEED: u64 = 42;
    pub const DEFAULT_ASYMPTOTIC_SAMPLES: u64 = 1000;
    pub const DEFAULT_COVERAGE_SEEDS: u32 = 20;

    pub fn new(mc: McSettings) -> Self {
        Self {
            mc,
            eps: vec![0.1, 1e-3],
            asymptotic_samples: Self::DEFAULT_ASYMPTOTIC_SAMPLES,
            coverage_seeds: Self::DEFAULT_COVERAGE_SEEDS,
            inject_mismatch: false,
        }
    }
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self::new(McSettings::new(Self::DEFAULT_SAMPLES, Self::DEFAULT_SEED).expect("valid"))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub const HEADER: &'static str = "name\texpected\tobserved\ttol\tverdict";

    /// True when no check failed.
    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail)
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.checks.iter().filter(|c| c.verdict == verdict).count()
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for c in &self.checks {
            s.push_str(&c.to_tsv());
            s.push('\n');
        }
        s
    }

    pub fn write_tsv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        out.write_all(self.to_tsv().as_bytes())
    }
}

fn harmonic_direct(n: u64) -> f64 {
    (1..=n).rev().map(|k| 1.0 / k as f64).sum()
}

fn cfg(scheme: DiversityScheme, m: u64, n: u64, snr: f64) -> Result<ChannelConfig> {
    ChannelConfig::new(scheme, m, n, snr)
}

fn label(c: &ChannelConfig) -> String {
    format!("{} M={} N={}", c.scheme(), c.m(), c.n())
}

fn snr_model_checks(out: &mut Vec<Check>) -> Result<()> {
    let mut worst: f64 = 0.0;
    for m in [1u64, 2, 5, 10, 50, 100, 1000, 10_000] {
        let c = cfg(DiversityScheme::Mrc, m, 1, 1.0)?;
        for eps in [1e-4, 1e-3, 1e-2, 1e-1, 0.5] {
            let q = combiner_quantile(&c, eps)?;
            let back = combiner_cdf(&c, q.gamma0)?;
            worst = worst.max((back - eps).abs() / eps);
        }
    }
    out.push(Check::new(
        "snr_models/mrc_cdf_round_trip",
        "0",
        g9(worst),
        "1e-9",
        Verdict::from_bool(worst <= 1e-9),
    ));

    let mut worst: f64 = 0.0;
    for m in [1u64, 2, 10, 100, 1000] {
        let c = cfg(DiversityScheme::Sc, m, 1, 1.0)?;
        for eps in [1e-3f64, 1e-2, 0.1, 0.5] {
            let closed = (1.0f64 / (1.0 - eps.powf(1.0 / m as f64))).ln();
            let q = combiner_quantile(&c, eps)?.gamma0;
            worst = worst.max((q - closed).abs() / closed);
        }
    }
    out.push(Check::new(
        "snr_models/sc_closed_form",
        "0",
        g9(worst),
        "1e-10",
        Verdict::from_bool(worst <= 1e-10),
    ));
    Ok(())
}

fn outage_checks(out: &mut Vec<Check>) -> Result<()> {
    let mut max_gap = f64::NEG_INFINITY;
    let (mut min_ratio, mut max_ratio) = (f64::INFINITY, f64::NEG_INFINITY);
    for scheme in [
        DiversityScheme::Mrc,
        DiversityScheme::Sc,
        DiversityScheme::Mrt,
        DiversityScheme::St,
        DiversityScheme::Stc,
    ] {
        for d in [1u64, 2, 10, 100, 1000] {
            for db in [-10.0, 0.0, 10.0, 30.0] {
                let c = ChannelConfig::with_order(scheme, d, 10f64.powf(db / 10.0))?;
                for eps in [1e-3, 1e-2, 0.1, 0.5] {
                    let r = outage_capacity(&c, eps, CapacityMethod::Exact)?;
                    max_gap = max_gap.max(r.gap_vs_combiner);
                    let ratio = r.ratio_vs_combiner.unwrap_or(f64::NAN);
                    min_ratio = min_ratio.min(ratio);
                    max_ratio = max_ratio.max(ratio);
                }
            }
        }
    }
    out.push(Check::new(
        "outage/gap_combiner_negative",
        "< 0",
        g9(max_gap),
        "0",
        Verdict::from_bool(max_gap < 0.0),
    ));
    out.push(Check::new(
        "outage/ratio_combiner_in_unit_interval",
        "(0, 1)",
        format!("[{}, {}]", g9(min_ratio), g9(max_ratio)),
        "0",
        Verdict::from_bool(min_ratio > 0.0 && max_ratio < 1.0),
    ));

    let mut scaled = Vec::new();
    for m in [10u64, 100, 1000, 10_000, 100_000, 1_000_000] {
        let c = cfg(DiversityScheme::Mrc, m, 1, 1e6)?;
        let r = asymptotic_gap(&c, 0.1, SnrRegime::HighSnr)?;
        scaled.push(r.value * (m as f64).sqrt());
    }
    let first = scaled[0];
    let spread = scaled
        .iter()
        .map(|v| (v - first).abs() / first.abs())
        .fold(0.0, f64::max);
    out.push(Check::new(
        "outage/mrc_ga_gap_sqrt_scaling",
        g9(first),
        g9(spread),
        "1e-12",
        Verdict::from_bool(spread <= 1e-12),
    ));

    let ms = [
        10u64, 30, 100, 300, 1000, 3000, 10_000, 100_000, 1_000_000, 10_000_000,
    ];
    let factors: Vec<f64> = ms
        .iter()
        .map(|&m| sc_gain_factor(m, 0.1))
        .collect::<Result<_>>()?;
    let increasing = factors.windows(2).all(|w| w[1] > w[0]);
    let last = *factors.last().expect("nonempty");
    out.push(Check::new(
        "outage/sc_factor_increasing_below_one",
        "increasing, < 1",
        format!("{} .. {}", g9(factors[0]), g9(last)),
        "0",
        Verdict::from_bool(increasing && last < 1.0),
    ));

    for (m, quoted) in [(100u64, -0.94), (1000, -0.59), (10_000, -0.43)] {
        let c = cfg(DiversityScheme::Sc, m, 1, 1e6)?;
        let r = asymptotic_gap(&c, 1e-3, SnrRegime::HighSnr)?;
        let v = r.intermediate.unwrap_or(f64::NAN);
        out.push(Check::new(
            format!("outage/sc_high_snr_gap[M={m},eps=1e-3]"),
            g9(quoted),
            g9(v),
            "0.01",
            Verdict::from_bool((v - quoted).abs() <= 0.01),
        ));
    }
    Ok(())
}

fn mimo_checks(settings: &ValidationSettings, out: &mut Vec<Check>) -> Result<()> {
    let mut ordered = true;
    for (m, n) in [(100u64, 2u64), (64, 4), (100, 100), (1, 1)] {
        for db in [-10.0, 0.0, 10.0, 20.0, 30.0] {
            let c = cfg(DiversityScheme::MimoOptimal, m, n, 10f64.powf(db / 10.0))?;
            let b = outage_capacity_bounds(&c, 0.1)?;
            ordered &= b.capacity_lower <= b.capacity_upper;
            ordered &= b.benchmark_lower <= b.benchmark_upper;
        }
    }
    out.push(Check::new(
        "mimo_bounds/bounds_ordered",
        "lower <= upper",
        if ordered { "ordered" } else { "violated" },
        "0",
        Verdict::from_bool(ordered),
    ));

    let eps = 0.1;
    for (m, n) in [(100u64, 2u64), (64, 4)] {
        let c = cfg(DiversityScheme::MimoOptimal, m, n, 1.0)?;
        let b = outage_capacity_bounds(&c, eps)?;
        let name = format!("mimo_bounds/mc_sandwich[M={m},N={n},rho_db=0,eps=0.1]");
        let expected = format!("[{}, {}]", g9(b.capacity_lower), g9(b.capacity_upper));
        let mc = capacity_from_estimate(estimate(&c, eps, &settings.mc)?);
        let tol = format!("3 sigma = {}", g9(3.0 * mc.sigma));
        let verdict = if !mc.estimate.ci_reliable {
            Verdict::SkippedUnreliable
        } else {
            Verdict::from_bool(
                b.capacity_lower - 3.0 * mc.sigma <= mc.capacity
                    && mc.capacity <= b.capacity_upper + 3.0 * mc.sigma,
            )
        };
        out.push(Check::new(name, expected, g9(mc.capacity), tol, verdict));
    }

    out.extend(edge_comparison(settings)?);
    Ok(())
}

/// Sample mean of `sigma_max^2 / N` at `M = N = 100` against both edge
/// constants. Recorded, never asserted.
pub fn edge_comparison(settings: &ValidationSettings) -> Result<Vec<Check>> {
    let (m, n) = (100u64, 100u64);
    let c = cfg(DiversityScheme::MimoOptimal, m, n, 1.0)?;
    let samples = settings.asymptotic_samples.max(McSettings::MIN_SAMPLES);
    let mc = McSettings {
        samples,
        chunks: settings.mc.chunks.min(samples as u32),
        ..settings.mc
    };
    let set = sample_combiner_snr(&c, &mc)?;
    let (mean, se) = mean_and_stderr(&set.values)?;
    let (mean, se) = (mean / n as f64, se / n as f64);
    let mut checks = Vec::new();
    let mut closest: Option<(EdgeConstant, f64)> = None;
    for edge in [EdgeConstant::Paper, EdgeConstant::MarchenkoPastur] {
        let predicted = effective_order(m, n, edge) / n as f64;
        let rel = (mean - predicted).abs() / predicted;
        if closest.map_or(true, |(_, r)| rel < r) {
            closest = Some((edge, rel));
        }
        checks.push(Check::new(
            format!("mimo_bounds/edge_constant[c={}]", edge.value()),
            g9(predicted),
            format!(
                "{} (se {}, rel err {}, n {}, redrawn {})",
                g9(mean),
                g9(se),
                g9(rel),
                samples,
                set.redrawn
            ),
            g9(EDGE_TOLERANCE),
            Verdict::Info,
        ));
    }
    let (edge, rel) = closest.expect("two edges");
    let within = if rel < EDGE_TOLERANCE {
        "within"
    } else {
        "outside"
    };
    checks.push(Check::new(
        "mimo_bounds/edge_constant_closest",
        "c with rel err < 0.05",
        format!(
            "c={} ({}, rel err {} {} tolerance)",
            edge.value(),
            edge,
            g9(rel),
            within
        ),
        g9(EDGE_TOLERANCE),
        Verdict::Info,
    ));
    Ok(checks)
}

const MC_CELLS: [(DiversityScheme, u64, u64); 6] = [
    (DiversityScheme::Mrc, 2, 1),
    (DiversityScheme::Mrc, 10, 1),
    (DiversityScheme::Sc, 2, 1),
    (DiversityScheme::Sc, 10, 1),
    (DiversityScheme::Stc, 2, 1),
    (DiversityScheme::Stc, 5, 2),
];

/// Distinct seed per (replicate, cell) so that no two cells share draws.
fn cell_settings(base: &McSettings, replicate: u64, cell: usize) -> McSettings {
    McSettings {
        seed: base
            .seed
            .wrapping_add(replicate * MC_CELLS.len() as u64 + cell as u64),
        ..*base
    }
}

fn montecarlo_checks(settings: &ValidationSettings, out: &mut Vec<Check>) -> Result<()> {
    let s = &settings.mc;
    let (mut covered, mut trials) = (0usize, 0usize);
    for (i, &(scheme, m, n)) in MC_CELLS.iter().enumerate() {
        let c = cfg(scheme, m, n, 1.0)?;
        let d = c.diversity_order();
        let tag = label(&c);
        let exact: Vec<f64> = settings
            .eps
            .iter()
            .map(|&e| combiner_quantile(&c, e).map(|q| q.gamma0))
            .collect::<Result<_>>()?;
        let set = sample_combiner_snr(&c, &cell_settings(s, 0, i))?;
        let (mean, se) = mean_and_stderr(&set.values)?;
        let expected_mean = if scheme.is_ratio_combining() {
            d as f64
        } else {
            harmonic_direct(d)
        };
        out.push(Check::new(
            format!("montecarlo/mean[{tag}]"),
            g9(expected_mean),
            g9(mean),
            format!("3 se = {}", g9(3.0 * se)),
            Verdict::from_bool((mean - expected_mean).abs() <= 3.0 * se),
        ));

        let sorted = outcap_core::SortedSamples::new(set.values)?;
        let order = d as f64;
        let ks = if settings.inject_mismatch {
            // swap the law: sum samples against the max CDF and vice versa
            if scheme.is_ratio_combining() {
                ks_distance(&sorted, |g| {
                    selection_law_cdf(order, 1.0, g).expect("valid")
                })
            } else {
                ks_distance(&sorted, |g| sum_law_cdf(order, 1.0, g).expect("valid"))
            }
        } else {
            ks_distance(&sorted, |g| combiner_cdf(&c, g).expect("valid"))
        };
        let crit = ks_critical_value(sorted.len(), KS_C99);
        out.push(Check::new(
            format!("montecarlo/ks[{tag}]"),
            "0",
            g9(ks),
            g9(crit),
            Verdict::from_bool(ks < crit),
        ));

        for (&eps, &q) in settings.eps.iter().zip(&exact) {
            let est = empirical_quantile(&sorted, eps)?;
            let inside = est.ci_lower <= q && q <= est.ci_upper;
            if est.ci_reliable && settings.coverage_seeds > 0 {
                trials += 1;
                covered += usize::from(inside);
            }
            let verdict = if est.ci_reliable {
                Verdict::Info
            } else {
                Verdict::SkippedUnreliable
            };
            out.push(Check::new(
                format!("montecarlo/quantile_in_ci[{tag},eps={}]", g9(eps)),
                g9(q),
                format!(
                    "{} ({})",
                    g9(est.quantile_gamma0),
                    if inside { "inside" } else { "outside" }
                ),
                format!("95% CI [{}, {}]", g9(est.ci_lower), g9(est.ci_upper)),
                verdict,
            ));
        }

        for r in 1..settings.coverage_seeds as u64 {
            let set = sample_combiner_snr(&c, &cell_settings(s, r, i))?;
            let sorted = outcap_core::SortedSamples::new(set.values)?;
            for (&eps, &q) in settings.eps.iter().zip(&exact) {
                let est = empirical_quantile(&sorted, eps)?;
                if est.ci_reliable {
                    trials += 1;
                    covered += usize::from(est.ci_lower <= q && q <= est.ci_upper);
                }
            }
        }
    }
    let name = format!(
        "montecarlo/quantile_ci_coverage[{} cells x {} seeds]",
        MC_CELLS.len() * settings.eps.len(),
        settings.coverage_seeds
    );
    let expected = format!(">= {}", g9(COVERAGE_TARGET));
    if trials == 0 {
        out.push(Check::new(
            name,
            expected,
            "no reliable cells",
            "0",
            Verdict::SkippedUnreliable,
        ));
    } else {
        let frac = covered as f64 / trials as f64;
        out.push(Check::new(
            name,
            expected,
            format!("{} ({covered}/{trials})", g9(frac)),
            "0",
            Verdict::from_bool(frac >= COVERAGE_TARGET),
        ));
    }

    let c = cfg(DiversityScheme::MimoOptimal, 4, 3, 1.0)?;
    let small = McSettings {
        samples: s.samples.min(2000),
        chunks: s.chunks.min(s.samples.min(2000) as u32),
        ..*s
    };
    let a = estimate(&c, 0.1, &small)?;
    let b = estimate(&c, 0.1, &small)?;
    out.push(Check::new(
        "montecarlo/determinism[mimo-opt M=4 N=3]",
        "bit-identical",
        if a == b { "bit-identical" } else { "differs" },
        "0",
        Verdict::from_bool(a == b),
    ));
    Ok(())
}

/// Runs every suite. Errors only on invalid settings; failed checks are
/// reported, not raised.
pub fn run_validation(settings: &ValidationSettings) -> Result<ValidationReport> {
    settings.mc.validate()?;
    for &e in &settings.eps {
        if !(e > 0.0 && e < 1.0) {
            return Err(outcap_core::Error::InvalidArgument {
                name: "eps",
                reason: format!("{e} is not in (0, 1)"),
            });
        }
    }
    let mut checks = Vec::new();
    snr_model_checks(&mut checks)?;
    outage_checks(&mut checks)?;
    mimo_checks(settings, &mut checks)?;
    montecarlo_checks(settings, &mut checks)?;
    Ok(ValidationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(samples: u64) -> ValidationSettings {
        let mut s = ValidationSettings::new(McSettings::new(samples, 42).unwrap());
        s.asymptotic_samples = 100;
        s.coverage_seeds = 2;
        s
    }

    #[test]
    fn tsv_lines_have_five_fields() {
        let r = run_validation(&quick(2000)).unwrap();
        let tsv = r.to_tsv();
        assert!(tsv.starts_with(ValidationReport::HEADER));
        for line in tsv.lines() {
            assert_eq!(line.split('\t').count(), 5, "{line}");
        }
        assert!(tsv.ends_with('\n'));
    }

    #[test]
    fn small_sample_skips_deep_tail() {
        let mut s = quick(100);
        s.eps = vec![1e-3];
        let r = run_validation(&s).unwrap();
        let q: Vec<_> = r
            .checks
            .iter()
            .filter(|c| c.name.starts_with("montecarlo/quantile_in_ci"))
            .collect();
        assert!(!q.is_empty());
        assert!(q.iter().all(|c| c.verdict == Verdict::SkippedUnreliable));
        let cov = r
            .checks
            .iter()
            .find(|c| c.name.starts_with("montecarlo/quantile_ci_coverage"))
            .unwrap();
        assert_eq!(cov.verdict, Verdict::SkippedUnreliable);
    }

    #[test]
    fn mismatch_injection_fails_ks() {
        let mut s = quick(5000);
        s.inject_mismatch = true;
        let r = run_validation(&s).unwrap();
        assert!(!r.passed());
        assert!(r
            .checks
            .iter()
            .filter(|c| c.name.starts_with("montecarlo/ks["))
            .all(|c| c.verdict == Verdict::Fail));
    }

    #[test]
    fn edge_comparison_records_both_constants() {
        let r = edge_comparison(&quick(1000)).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|c| c.verdict == Verdict::Info));
        assert_eq!(r[0].expected, "8");
        assert_eq!(r[1].expected, "4");
    }
}
