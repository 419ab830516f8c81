//! Combiner-SNR laws of the diversity schemes under i.i.d. Rayleigh fading.
//!
//! Every scheme except optimal MIMO beamforming reduces to one of two
//! laws in the normalized SNR `x = gamma / branch_snr`:
//!
//! * sum of `d` unit exponentials (MRC, MRT): `F(x) = P(d, x)`;
//! * max of `d` unit exponentials (SC, ST, STC): `F(x) = (1 - e^-x)^d`.
//!
//! MRT and ST are MRC and SC with the transmit count `N` as the order, and
//! STC is SC over all `M N` antenna pairs. Routing every scheme through
//! the same order-`d` function makes those equivalences exact.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_probability, invalid, Error, Result};
use crate::numerics::{
    harmonic_number, invert_monotone_cdf, q_inverse, regularized_lower_gamma, RootSolveSettings,
};

/// Linear processing scheme at transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiversityScheme {
    /// Maximal ratio combining, SIMO (`N = 1`).
    Mrc,
    /// Selection combining, SIMO (`N = 1`).
    Sc,
    /// Maximal ratio transmission, MISO (`M = 1`).
    Mrt,
    /// Transmit antenna selection, MISO (`M = 1`).
    St,
    /// Principal singular-vector beamforming and combining.
    MimoOptimal,
    /// Joint transmit/receive antenna selection.
    Stc,
}

impl DiversityScheme {
    pub const ALL: [DiversityScheme; 6] = [
        DiversityScheme::Mrc,
        DiversityScheme::Sc,
        DiversityScheme::Mrt,
        DiversityScheme::St,
        DiversityScheme::MimoOptimal,
        DiversityScheme::Stc,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DiversityScheme::Mrc => "mrc",
            DiversityScheme::Sc => "sc",
            DiversityScheme::Mrt => "mrt",
            DiversityScheme::St => "st",
            DiversityScheme::MimoOptimal => "mimo-opt",
            DiversityScheme::Stc => "stc",
        }
    }

    pub(crate) fn law(&self) -> Option<Law> {
        match self {
            DiversityScheme::Mrc | DiversityScheme::Mrt => Some(Law::Sum),
            DiversityScheme::Sc | DiversityScheme::St | DiversityScheme::Stc => {
                Some(Law::Selection)
            }
            DiversityScheme::MimoOptimal => None,
        }
    }

    /// True for the combiners whose SNR is a sum of branch SNRs.
    pub fn is_ratio_combining(&self) -> bool {
        matches!(self, DiversityScheme::Mrc | DiversityScheme::Mrt)
    }

    /// True for the combiners whose SNR is a max over branch SNRs.
    pub fn is_selection(&self) -> bool {
        matches!(self.law(), Some(Law::Selection))
    }
}

impl fmt::Display for DiversityScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiversityScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mrc" => Ok(DiversityScheme::Mrc),
            "sc" => Ok(DiversityScheme::Sc),
            "mrt" => Ok(DiversityScheme::Mrt),
            "st" => Ok(DiversityScheme::St),
            "mimo-opt" | "mimo_opt" | "mimooptimal" | "mimo" => Ok(DiversityScheme::MimoOptimal),
            "stc" => Ok(DiversityScheme::Stc),
            other => Err(invalid("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Law {
    Sum,
    Selection,
}

/// Scheme, antenna counts and per-link average SNR; the input to every
/// analytic query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    scheme: DiversityScheme,
    m: u64,
    n: u64,
    branch_snr: f64,
}

impl ChannelConfig {
    pub const DEFAULT_MAX_ANTENNAS: u64 = 1_000_000;

    /// `m` receive antennas, `n` transmit antennas, `branch_snr` linear.
    pub fn new(scheme: DiversityScheme, m: u64, n: u64, branch_snr: f64) -> Result<Self> {
        Self::with_max_antennas(scheme, m, n, branch_snr, Self::DEFAULT_MAX_ANTENNAS)
    }

    pub fn with_max_antennas(
        scheme: DiversityScheme,
        m: u64,
        n: u64,
        branch_snr: f64,
        max_antennas: u64,
    ) -> Result<Self> {
        if !(branch_snr.is_finite() && branch_snr > 0.0) {
            return Err(invalid(
                "branch_snr",
                format!("{branch_snr} must be finite and > 0"),
            ));
        }
        if m == 0 || n == 0 {
            return Err(invalid("antennas", "M and N must be >= 1"));
        }
        if m > max_antennas || n > max_antennas {
            return Err(invalid(
                "antennas",
                format!("M = {m}, N = {n} exceed the maximum {max_antennas}"),
            ));
        }
        match scheme {
            DiversityScheme::Mrc | DiversityScheme::Sc if n != 1 => Err(Error::SchemeMismatch {
                scheme: scheme.as_str(),
                requirement: "a single transmit antenna (N = 1)",
            }),
            DiversityScheme::Mrt | DiversityScheme::St if m != 1 => Err(Error::SchemeMismatch {
                scheme: scheme.as_str(),
                requirement: "a single receive antenna (M = 1)",
            }),
            _ => Ok(Self {
                scheme,
                m,
                n,
                branch_snr,
            }),
        }
    }

    /// Single-sided configuration with `d` antennas on the diversity side.
    ///
    /// `d` goes to `M` for receive schemes and to `N` for transmit schemes;
    /// for the two-sided schemes it is `M` with `N = 1`.
    pub fn with_order(scheme: DiversityScheme, d: u64, branch_snr: f64) -> Result<Self> {
        match scheme {
            DiversityScheme::Mrt | DiversityScheme::St => Self::new(scheme, 1, d, branch_snr),
            _ => Self::new(scheme, d, 1, branch_snr),
        }
    }

    /// Builds a configuration whose mean combiner SNR equals `combiner_snr`,
    /// back-solving the branch SNR with the exact mean gain (`d` or `H_d`).
    pub fn from_combiner_snr(
        scheme: DiversityScheme,
        m: u64,
        n: u64,
        combiner_snr: f64,
    ) -> Result<Self> {
        if !(combiner_snr.is_finite() && combiner_snr > 0.0) {
            return Err(invalid(
                "combiner_snr",
                format!("{combiner_snr} must be finite and > 0"),
            ));
        }
        // validate shape with a unit branch SNR first
        let probe = Self::new(scheme, m, n, 1.0)?;
        let gain = probe.mean_gain()?;
        Self::new(scheme, m, n, combiner_snr / gain)
    }

    pub fn scheme(&self) -> DiversityScheme {
        self.scheme
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Per-branch average SNR, equal to the per-link SNR for MIMO.
    pub fn branch_snr(&self) -> f64 {
        self.branch_snr
    }

    /// Number of independently faded branches the scheme combines.
    pub fn diversity_order(&self) -> u64 {
        match self.scheme {
            DiversityScheme::Mrc | DiversityScheme::Sc => self.m,
            DiversityScheme::Mrt | DiversityScheme::St => self.n,
            DiversityScheme::MimoOptimal | DiversityScheme::Stc => self.m * self.n,
        }
    }

    /// Mean combiner SNR divided by branch SNR, for the schemes with an exact law.
    pub(crate) fn mean_gain(&self) -> Result<f64> {
        let d = self.diversity_order();
        match self.scheme.law() {
            Some(Law::Sum) => Ok(d as f64),
            Some(Law::Selection) => harmonic_number(d),
            None => Err(Error::UnsupportedExactCdf(self.scheme.as_str())),
        }
    }

    pub(crate) fn exact_law(&self) -> Result<Law> {
        self.scheme
            .law()
            .ok_or(Error::UnsupportedExactCdf(self.scheme.as_str()))
    }
}

/// How an SNR outage threshold was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantileMethod {
    ClosedForm,
    NumericInversion,
    GaussianApprox,
    BoundLower,
    BoundUpper,
}

impl QuantileMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            QuantileMethod::ClosedForm => "closed_form",
            QuantileMethod::NumericInversion => "numeric_inversion",
            QuantileMethod::GaussianApprox => "gaussian_approx",
            QuantileMethod::BoundLower => "bound_lower",
            QuantileMethod::BoundUpper => "bound_upper",
        }
    }
}

impl fmt::Display for QuantileMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// SNR outage threshold `gamma0 = F^-1(eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrQuantile {
    /// Linear SNR.
    pub gamma0: f64,
    pub method: QuantileMethod,
    /// `|F(gamma0) - eps|` under the exact law.
    pub residual: f64,
    pub iterations: u32,
}

/// Mean combiner SNR; only bounds are known for optimal MIMO.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanSnr {
    Exact(f64),
    Interval { lower: f64, upper: f64 },
}

impl MeanSnr {
    pub fn exact(&self) -> Option<f64> {
        match self {
            MeanSnr::Exact(v) => Some(*v),
            MeanSnr::Interval { .. } => None,
        }
    }
}

fn check_snr(gamma: f64) -> Result<()> {
    if gamma.is_nan() || gamma < 0.0 {
        Err(invalid("gamma", format!("{gamma} must be >= 0")))
    } else {
        Ok(())
    }
}

/// CDF of the sum of `order` unit-mean exponentials scaled by `branch_snr`.
///
/// `order` may be non-integer (gamma law); used by the MIMO bounds and the
/// asymptotic benchmark as well as MRC/MRT.
pub fn sum_law_cdf(order: f64, branch_snr: f64, gamma: f64) -> Result<f64> {
    check_snr(gamma)?;
    regularized_lower_gamma(order, gamma / branch_snr)
}

/// CDF of the max of `order` unit-mean exponentials scaled by `branch_snr`.
pub fn selection_law_cdf(order: f64, branch_snr: f64, gamma: f64) -> Result<f64> {
    check_snr(gamma)?;
    if !(order.is_finite() && order > 0.0) {
        return Err(invalid("order", "must be finite and > 0"));
    }
    let single = -(-gamma / branch_snr).exp_m1();
    if single == 0.0 {
        return Ok(0.0);
    }
    Ok((order * single.ln()).exp())
}

/// Quantile of [`sum_law_cdf`] by numeric inversion started at the mean.
pub fn sum_law_quantile(
    order: f64,
    branch_snr: f64,
    eps: f64,
    settings: &RootSolveSettings,
) -> Result<SnrQuantile> {
    check_probability(eps)?;
    let root = invert_monotone_cdf(|x| regularized_lower_gamma(order, x), eps, order, settings)?;
    Ok(SnrQuantile {
        gamma0: branch_snr * root.x,
        method: QuantileMethod::NumericInversion,
        residual: root.residual,
        iterations: root.iterations,
    })
}

/// Closed-form quantile `branch_snr ln(1 / (1 - eps^(1/order)))`.
pub fn selection_law_quantile(order: f64, branch_snr: f64, eps: f64) -> Result<SnrQuantile> {
    check_probability(eps)?;
    // 1 - eps^(1/d) = -expm1(ln(eps)/d), exact even when eps^(1/d) ~ 1
    let gap = -(eps.ln() / order).exp_m1();
    let gamma0 = -branch_snr * gap.ln();
    let residual = (selection_law_cdf(order, branch_snr, gamma0)? - eps).abs();
    Ok(SnrQuantile {
        gamma0,
        method: QuantileMethod::ClosedForm,
        residual,
        iterations: 0,
    })
}

/// CDF of the combiner SNR at `gamma` (linear).
pub fn combiner_cdf(cfg: &ChannelConfig, gamma: f64) -> Result<f64> {
    let d = cfg.diversity_order() as f64;
    match cfg.exact_law()? {
        Law::Sum => sum_law_cdf(d, cfg.branch_snr, gamma),
        Law::Selection => selection_law_cdf(d, cfg.branch_snr, gamma),
    }
}

/// SNR outage threshold with the default solver settings.
pub fn combiner_quantile(cfg: &ChannelConfig, eps: f64) -> Result<SnrQuantile> {
    combiner_quantile_with(cfg, eps, &RootSolveSettings::default())
}

pub fn combiner_quantile_with(
    cfg: &ChannelConfig,
    eps: f64,
    settings: &RootSolveSettings,
) -> Result<SnrQuantile> {
    let d = cfg.diversity_order() as f64;
    match cfg.exact_law()? {
        Law::Sum => sum_law_quantile(d, cfg.branch_snr, eps, settings),
        Law::Selection => selection_law_quantile(d, cfg.branch_snr, eps),
    }
}

/// Mean combiner SNR.
///
/// MRC/MRT: `d * branch_snr`; SC/ST/STC: `H_d * branch_snr`; optimal MIMO:
/// the interval `[rho max(M, N), rho M N]`.
pub fn mean_combiner_snr(cfg: &ChannelConfig) -> MeanSnr {
    match cfg.scheme {
        DiversityScheme::MimoOptimal => MeanSnr::Interval {
            lower: cfg.branch_snr * cfg.m.max(cfg.n) as f64,
            upper: cfg.branch_snr * (cfg.m * cfg.n) as f64,
        },
        _ => MeanSnr::Exact(cfg.branch_snr * cfg.mean_gain().expect("exact law")),
    }
}

/// Mean combiner SNR for schemes with an exact law.
pub(crate) fn exact_mean_snr(cfg: &ChannelConfig) -> Result<f64> {
    Ok(cfg.branch_snr * cfg.mean_gain()?)
}

/// Gaussian (central-limit) approximation of the MRC/MRT threshold,
/// `branch_snr (d - sqrt(d) Q^-1(eps))`.
///
/// Fails with [`Error::GaInvalidRegime`] when `d < [Q^-1(eps)]^2`, where
/// the approximation would give a negative threshold.
pub fn ga_quantile(cfg: &ChannelConfig, eps: f64) -> Result<SnrQuantile> {
    if !cfg.scheme.is_ratio_combining() {
        return Err(Error::Unsupported(format!(
            "Gaussian approximation applies to MRC/MRT only, not {}",
            cfg.scheme
        )));
    }
    let qi = q_inverse(eps)?;
    let d = cfg.diversity_order() as f64;
    let required = qi * qi;
    if qi > 0.0 && d < required {
        return Err(Error::GaInvalidRegime { order: d, required });
    }
    let gamma0 = (cfg.branch_snr * (d - d.sqrt() * qi)).max(0.0);
    let residual = (combiner_cdf(cfg, gamma0)? - eps).abs();
    Ok(SnrQuantile {
        gamma0,
        method: QuantileMethod::GaussianApprox,
        residual,
        iterations: 0,
    })
}
