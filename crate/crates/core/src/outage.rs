//! Outage capacity and its comparison with AWGN benchmarks.
//!
//! Two benchmarks are reported for every configuration: the AWGN capacity
//! at the per-branch SNR, and the AWGN capacity at the mean combiner SNR
//! (which removes the array gain). High SNR is compared through the
//! difference, low SNR through the ratio.

use std::f64::consts::LN_2;
use std::fmt;

use crate::error::{check_probability, invalid, Error, Result};
use crate::numerics::{harmonic_number, log2_1p, q_inverse};
use crate::snr_models::{
    combiner_quantile, exact_mean_snr, ga_quantile, ChannelConfig, DiversityScheme, QuantileMethod,
    SnrQuantile,
};

/// Linear-SNR threshold standing in for "much greater than one".
pub const HIGH_SNR_THRESHOLD: f64 = 10.0;
/// Linear-SNR threshold standing in for "much less than one".
pub const LOW_SNR_THRESHOLD: f64 = 0.1;

/// Which threshold law feeds the outage capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CapacityMethod {
    Exact,
    GaussianApprox,
}

impl CapacityMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CapacityMethod::Exact => "exact",
            CapacityMethod::GaussianApprox => "gaussian_approx",
        }
    }
}

impl fmt::Display for CapacityMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CapacityMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(CapacityMethod::Exact),
            "ga" | "gaussian_approx" | "gaussian-approx" => Ok(CapacityMethod::GaussianApprox),
            other => Err(invalid("method", format!("unknown method `{other}`"))),
        }
    }
}

/// Outage capacity and its benchmark comparisons, all in b/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityReport {
    pub outage_capacity: f64,
    /// `C(branch_snr)`.
    pub benchmark_branch: f64,
    /// `C(mean combiner SNR)`.
    pub benchmark_combiner: f64,
    pub gap_vs_branch: f64,
    pub gap_vs_combiner: f64,
    /// `None` only when the combiner benchmark underflows to zero.
    pub ratio_vs_combiner: Option<f64>,
    pub method: QuantileMethod,
    pub quantile: SnrQuantile,
    pub mean_combiner_snr: f64,
}

/// Regime of a closed-form approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SnrRegime {
    HighSnr,
    LowSnr,
}

impl SnrRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            SnrRegime::HighSnr => "high_snr",
            SnrRegime::LowSnr => "low_snr",
        }
    }
}

/// Whether an approximation describes a capacity difference or a ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproximationKind {
    /// b/s/Hz
    Gap,
    /// dimensionless
    Ratio,
}

/// One operating-point condition behind an approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityCheck {
    pub condition: &'static str,
    pub observed: f64,
    pub threshold: f64,
    pub held: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationReport {
    pub regime: SnrRegime,
    pub kind: ApproximationKind,
    /// The leading-order closed form.
    pub value: f64,
    /// The intermediate, less coarse form (`log2` of the SNR factor for a
    /// gap) when it exists.
    pub intermediate: Option<f64>,
    pub validity_flags: Vec<ValidityCheck>,
}

impl ApproximationReport {
    pub fn all_conditions_hold(&self) -> bool {
        self.validity_flags.iter().all(|c| c.held)
    }
}

/// AWGN capacity `log2(1 + gamma)` in b/s/Hz.
pub fn awgn_capacity(gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(invalid("gamma", format!("{gamma} must be >= 0")));
    }
    Ok(log2_1p(gamma))
}

/// SC mean-normalized threshold factor `(1/H_d) ln(1 / (1 - eps^(1/d)))`.
///
/// The high-SNR SC gap against the combiner benchmark tends to
/// `log2` of this factor, and the low-SNR ratio tends to the factor itself.
pub fn sc_gain_factor(d: u64, eps: f64) -> Result<f64> {
    check_probability(eps)?;
    let h = harmonic_number(d)?;
    let gap = -(eps.ln() / d as f64).exp_m1();
    Ok(-gap.ln() / h)
}

fn threshold(cfg: &ChannelConfig, eps: f64, method: CapacityMethod) -> Result<SnrQuantile> {
    match method {
        CapacityMethod::Exact => combiner_quantile(cfg, eps),
        CapacityMethod::GaussianApprox => ga_quantile(cfg, eps),
    }
}

fn reject_mimo(cfg: &ChannelConfig) -> Result<()> {
    if cfg.scheme() == DiversityScheme::MimoOptimal {
        Err(Error::UnsupportedExactCdf(cfg.scheme().as_str()))
    } else {
        Ok(())
    }
}

/// Outage capacity `C(F^-1(eps))` with both benchmark comparisons.
pub fn outage_capacity(
    cfg: &ChannelConfig,
    eps: f64,
    method: CapacityMethod,
) -> Result<CapacityReport> {
    reject_mimo(cfg)?;
    let quantile = threshold(cfg, eps, method)?;
    let mean = exact_mean_snr(cfg)?;
    let outage_capacity = awgn_capacity(quantile.gamma0)?;
    let benchmark_branch = awgn_capacity(cfg.branch_snr())?;
    let benchmark_combiner = awgn_capacity(mean)?;
    let ratio_vs_combiner =
        (benchmark_combiner > 0.0).then(|| outage_capacity / benchmark_combiner);
    Ok(CapacityReport {
        outage_capacity,
        benchmark_branch,
        benchmark_combiner,
        gap_vs_branch: outage_capacity - benchmark_branch,
        gap_vs_combiner: outage_capacity - benchmark_combiner,
        ratio_vs_combiner,
        method: quantile.method,
        quantile,
        mean_combiner_snr: mean,
    })
}

/// `C_eps - C(branch_snr)` with the branch SNR held fixed.
pub fn gap_vs_branch_benchmark(
    cfg: &ChannelConfig,
    eps: f64,
    method: CapacityMethod,
) -> Result<f64> {
    outage_capacity(cfg, eps, method).map(|r| r.gap_vs_branch)
}

/// `C_eps - C(mean combiner SNR)`.
///
/// To hold the combiner SNR fixed across orders, build `cfg` with
/// [`ChannelConfig::from_combiner_snr`].
pub fn gap_vs_combiner_benchmark(
    cfg: &ChannelConfig,
    eps: f64,
    method: CapacityMethod,
) -> Result<f64> {
    outage_capacity(cfg, eps, method).map(|r| r.gap_vs_combiner)
}

/// `C_eps / C(mean combiner SNR)`.
pub fn ratio_vs_combiner_benchmark(
    cfg: &ChannelConfig,
    eps: f64,
    method: CapacityMethod,
) -> Result<f64> {
    outage_capacity(cfg, eps, method)?
        .ratio_vs_combiner
        .ok_or_else(|| invalid("cfg", "combiner benchmark capacity is zero"))
}

fn greater(condition: &'static str, observed: f64) -> ValidityCheck {
    ValidityCheck {
        condition,
        observed,
        threshold: HIGH_SNR_THRESHOLD,
        held: observed > HIGH_SNR_THRESHOLD,
    }
}

fn less(condition: &'static str, observed: f64) -> ValidityCheck {
    ValidityCheck {
        condition,
        observed,
        threshold: LOW_SNR_THRESHOLD,
        held: observed < LOW_SNR_THRESHOLD,
    }
}

/// Closed-form large-order approximations against the combiner benchmark.
///
/// | scheme     | high SNR (gap)                          | low SNR (ratio)          |
/// |------------|-----------------------------------------|--------------------------|
/// | MRC/MRT    | `-Q^-1(eps) / (sqrt(d) ln 2)`           | `1 - Q^-1(eps)/sqrt(d)`  |
/// | SC/ST/STC  | `-ln(-ln eps) / (ln d ln 2)`            | `sc_gain_factor(d, eps)` |
///
/// The validity flags test the operating point of `cfg` against
/// [`HIGH_SNR_THRESHOLD`] / [`LOW_SNR_THRESHOLD`].
pub fn asymptotic_gap(
    cfg: &ChannelConfig,
    eps: f64,
    regime: SnrRegime,
) -> Result<ApproximationReport> {
    reject_mimo(cfg)?;
    check_probability(eps)?;
    let d = cfg.diversity_order();
    let mean = exact_mean_snr(cfg)?;

    if cfg.scheme().is_ratio_combining() {
        let shrink = q_inverse(eps)? / (d as f64).sqrt();
        let factor = 1.0 - shrink;
        let report = match regime {
            SnrRegime::HighSnr => ApproximationReport {
                regime,
                kind: ApproximationKind::Gap,
                value: -shrink / LN_2,
                intermediate: (factor > 0.0).then(|| factor.log2()),
                validity_flags: vec![
                    greater("mean combiner SNR >> 1", mean),
                    greater(
                        "mean combiner SNR (1 - Q^-1(eps)/sqrt(d)) >> 1",
                        mean * factor,
                    ),
                ],
            },
            SnrRegime::LowSnr => ApproximationReport {
                regime,
                kind: ApproximationKind::Ratio,
                value: factor,
                intermediate: None,
                validity_flags: vec![
                    less("mean combiner SNR << 1", mean),
                    less(
                        "mean combiner SNR (1 - Q^-1(eps)/sqrt(d)) << 1",
                        mean * factor,
                    ),
                ],
            },
        };
        return Ok(report);
    }

    let factor = sc_gain_factor(d, eps)?;
    match regime {
        SnrRegime::HighSnr => {
            if d < 2 {
                return Err(Error::Unsupported(
                    "the selection high-SNR form needs d >= 2 (it divides by ln d)".into(),
                ));
            }
            Ok(ApproximationReport {
                regime,
                kind: ApproximationKind::Gap,
                value: -(-eps.ln()).ln() / ((d as f64).ln() * LN_2),
                intermediate: Some(factor.log2()),
                validity_flags: vec![
                    greater("mean combiner SNR >> 1", mean),
                    greater("mean combiner SNR * selection factor >> 1", mean * factor),
                ],
            })
        }
        SnrRegime::LowSnr => Ok(ApproximationReport {
            regime,
            kind: ApproximationKind::Ratio,
            value: factor,
            intermediate: None,
            validity_flags: vec![
                less("mean combiner SNR << 1", mean),
                less("mean combiner SNR * selection factor << 1", mean * factor),
            ],
        }),
    }
}
