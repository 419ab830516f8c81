//! Bounds and the large-array benchmark for optimal-beamforming MIMO.
//!
//! The combiner SNR `rho * sigma_max^2` is sandwiched by
//! `rho ||H||_F^2 / min(M, N) <= gamma_c <= rho ||H||_F^2`, and
//! `||H||_F^2` is a sum of `M N` unit exponentials. Both sides are
//! therefore MRC laws of order `M N`, with per-branch SNR `rho / min(M, N)`
//! (lower) and `rho` (upper).

use std::fmt;
use std::str::FromStr;

use crate::error::{check_probability, invalid, Error, Result};
use crate::numerics::RootSolveSettings;
use crate::outage::awgn_capacity;
use crate::snr_models::{
    sum_law_quantile, ChannelConfig, DiversityScheme, QuantileMethod, SnrQuantile,
};

/// Antenna floor below which the asymptotic benchmark is refused.
pub const DEFAULT_ASYMPTOTIC_FLOOR: u64 = 16;

/// Per-branch and mean SNR bounds, all linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrBounds {
    /// `rho`
    pub per_branch_upper: f64,
    /// `rho / min(M, N)`
    pub per_branch_lower: f64,
    /// `rho max(M, N)`
    pub mean_lower: f64,
    /// `rho M N`
    pub mean_upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimoBoundReport {
    pub bounds: SnrBounds,
    /// b/s/Hz
    pub capacity_lower: f64,
    /// b/s/Hz
    pub capacity_upper: f64,
    pub quantile_lower: SnrQuantile,
    pub quantile_upper: SnrQuantile,
    /// `C(mean_lower)`
    pub benchmark_lower: f64,
    /// `C(mean_upper)`
    pub benchmark_upper: f64,
    pub asymptotic_benchmark: Option<AsymptoticBenchmark>,
}

/// Constant `c` in the largest-eigenvalue edge `c (1 + sqrt(M/N))^2 N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EdgeConstant {
    /// `c = 2`
    #[default]
    Paper,
    /// `c = 1`, the Marchenko-Pastur edge `(sqrt M + sqrt N)^2` for
    /// unit-variance complex entries.
    MarchenkoPastur,
}

impl EdgeConstant {
    pub fn value(&self) -> f64 {
        match self {
            EdgeConstant::Paper => 2.0,
            EdgeConstant::MarchenkoPastur => 1.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeConstant::Paper => "paper",
            EdgeConstant::MarchenkoPastur => "marchenko_pastur",
        }
    }
}

impl fmt::Display for EdgeConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeConstant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(EdgeConstant::Paper),
            "marchenko_pastur" | "marchenko-pastur" | "mp" => Ok(EdgeConstant::MarchenkoPastur),
            other => Err(invalid(
                "edge_constant",
                format!("unknown constant `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticOptions {
    pub edge: EdgeConstant,
    /// Round the effective order up to an integer branch count.
    pub round_up: bool,
    pub floor: u64,
}

impl Default for AsymptoticOptions {
    fn default() -> Self {
        Self {
            edge: EdgeConstant::Paper,
            round_up: false,
            floor: DEFAULT_ASYMPTOTIC_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticBenchmark {
    pub edge: EdgeConstant,
    /// `c (1 + sqrt(y))^2 N`, `y = M/N`.
    pub effective_order: f64,
    /// Order fed to the MRC law (equal to `effective_order` unless rounded).
    pub order_used: f64,
    /// Limit of the mean combiner SNR, `rho * effective_order`.
    pub mean_combiner_snr: f64,
    /// MRC outage capacity at `order_used` branches, b/s/Hz.
    pub capacity: f64,
}

fn require_mimo(cfg: &ChannelConfig) -> Result<()> {
    if cfg.scheme() == DiversityScheme::MimoOptimal {
        Ok(())
    } else {
        Err(Error::SchemeMismatch {
            scheme: cfg.scheme().as_str(),
            requirement: "optimal MIMO beamforming (mimo-opt) for this query",
        })
    }
}

/// SNR bound set for optimal-beamforming MIMO.
pub fn snr_bounds(cfg: &ChannelConfig) -> Result<SnrBounds> {
    require_mimo(cfg)?;
    let rho = cfg.branch_snr();
    let (m, n) = (cfg.m(), cfg.n());
    Ok(SnrBounds {
        per_branch_upper: rho,
        per_branch_lower: rho / m.min(n) as f64,
        mean_lower: rho * m.max(n) as f64,
        mean_upper: rho * (m * n) as f64,
    })
}

/// `E ||H||_F^2 = M N` for unit-variance entries.
pub fn frobenius_mean(cfg: &ChannelConfig) -> Result<f64> {
    require_mimo(cfg)?;
    Ok((cfg.m() * cfg.n()) as f64)
}

/// Lower and upper outage-capacity bounds at outage probability `eps`.
pub fn outage_capacity_bounds(cfg: &ChannelConfig, eps: f64) -> Result<MimoBoundReport> {
    outage_capacity_bounds_with(cfg, eps, &RootSolveSettings::default())
}

pub fn outage_capacity_bounds_with(
    cfg: &ChannelConfig,
    eps: f64,
    settings: &RootSolveSettings,
) -> Result<MimoBoundReport> {
    let bounds = snr_bounds(cfg)?;
    check_probability(eps)?;
    let order = (cfg.m() * cfg.n()) as f64;
    let mut quantile_upper = sum_law_quantile(order, bounds.per_branch_upper, eps, settings)?;
    quantile_upper.method = QuantileMethod::BoundUpper;
    let mut quantile_lower = sum_law_quantile(order, bounds.per_branch_lower, eps, settings)?;
    quantile_lower.method = QuantileMethod::BoundLower;
    Ok(MimoBoundReport {
        bounds,
        capacity_lower: awgn_capacity(quantile_lower.gamma0)?,
        capacity_upper: awgn_capacity(quantile_upper.gamma0)?,
        quantile_lower,
        quantile_upper,
        benchmark_lower: awgn_capacity(bounds.mean_lower)?,
        benchmark_upper: awgn_capacity(bounds.mean_upper)?,
        asymptotic_benchmark: None,
    })
}

/// Effective MRC order `c (1 + sqrt(M/N))^2 N` of the largest squared
/// singular value.
pub fn effective_order(m: u64, n: u64, edge: EdgeConstant) -> f64 {
    let y = m as f64 / n as f64;
    edge.value() * (1.0 + y.sqrt()).powi(2) * n as f64
}

/// MRC outage capacity at the asymptotic effective order, per-branch SNR `rho`.
pub fn asymptotic_benchmark(
    cfg: &ChannelConfig,
    eps: f64,
    options: &AsymptoticOptions,
) -> Result<AsymptoticBenchmark> {
    require_mimo(cfg)?;
    check_probability(eps)?;
    if cfg.m() < options.floor || cfg.n() < options.floor {
        return Err(Error::BelowAsymptoticFloor {
            m: cfg.m(),
            n: cfg.n(),
            floor: options.floor,
        });
    }
    let effective = effective_order(cfg.m(), cfg.n(), options.edge);
    let order_used = if options.round_up {
        effective.ceil()
    } else {
        effective
    };
    let rho = cfg.branch_snr();
    let q = sum_law_quantile(order_used, rho, eps, &RootSolveSettings::default())?;
    Ok(AsymptoticBenchmark {
        edge: options.edge,
        effective_order: effective,
        order_used,
        mean_combiner_snr: rho * effective,
        capacity: awgn_capacity(q.gamma0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outage::{outage_capacity, CapacityMethod};

    fn mimo(m: u64, n: u64, rho: f64) -> ChannelConfig {
        ChannelConfig::new(DiversityScheme::MimoOptimal, m, n, rho).unwrap()
    }

    #[test]
    fn snr_bound_examples() {
        let b = snr_bounds(&mimo(100, 2, 1.0)).unwrap();
        assert_eq!((b.mean_lower, b.mean_upper), (100.0, 200.0));
        assert_eq!((b.per_branch_lower, b.per_branch_upper), (0.5, 1.0));

        let b = snr_bounds(&mimo(1, 1, 5.0)).unwrap();
        for v in [
            b.mean_lower,
            b.mean_upper,
            b.per_branch_lower,
            b.per_branch_upper,
        ] {
            assert_eq!(v, 5.0);
        }
        let b = snr_bounds(&mimo(100, 100, 1.0)).unwrap();
        assert_eq!((b.mean_lower, b.mean_upper), (100.0, 10_000.0));

        let mrc = ChannelConfig::new(DiversityScheme::Mrc, 4, 1, 1.0).unwrap();
        assert!(snr_bounds(&mrc).is_err());
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_mean(&mimo(4, 3, 1.0)).unwrap(), 12.0);
        assert_eq!(frobenius_mean(&mimo(1, 1, 1.0)).unwrap(), 1.0);
        assert_eq!(frobenius_mean(&mimo(100, 100, 1.0)).unwrap(), 10_000.0);
    }

    #[test]
    fn bound_examples() {
        let r = outage_capacity_bounds(&mimo(1, 1, 1.0), 0.1).unwrap();
        let expected = (1.0 + (1.0f64 / 0.9).ln()).log2();
        assert!((r.capacity_lower - expected).abs() < 1e-12);
        assert_eq!(r.capacity_lower, r.capacity_upper);
        assert_eq!(r.quantile_lower.method, QuantileMethod::BoundLower);
        assert_eq!(r.quantile_upper.method, QuantileMethod::BoundUpper);

        let r = outage_capacity_bounds(&mimo(100, 1, 1.0), 0.1).unwrap();
        let simo = ChannelConfig::new(DiversityScheme::Mrc, 100, 1, 1.0).unwrap();
        let c = outage_capacity(&simo, 0.1, CapacityMethod::Exact).unwrap();
        assert_eq!(r.capacity_lower, c.outage_capacity);
        assert_eq!(r.capacity_upper, c.outage_capacity);

        let r = outage_capacity_bounds(&mimo(100, 2, 1.0), 0.1).unwrap();
        assert!(r.capacity_lower < r.capacity_upper);
        assert!((r.benchmark_lower - 101f64.log2()).abs() < 1e-15);
        assert!((r.benchmark_upper - 201f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn miso_reduction() {
        for n in [1u64, 3, 40] {
            let r = outage_capacity_bounds(&mimo(1, n, 2.0), 0.05).unwrap();
            let miso = ChannelConfig::new(DiversityScheme::Mrt, 1, n, 2.0).unwrap();
            let c = outage_capacity(&miso, 0.05, CapacityMethod::Exact).unwrap();
            assert_eq!(r.capacity_lower, c.outage_capacity);
            assert_eq!(r.capacity_upper, c.outage_capacity);
        }
    }

    #[test]
    fn sandwich_and_monotonicity() {
        for (m, n) in [(2u64, 2u64), (8, 3), (64, 4), (100, 100)] {
            for rho in [0.1, 1.0, 100.0] {
                let r = outage_capacity_bounds(&mimo(m, n, rho), 0.1).unwrap();
                assert!(r.capacity_lower < r.capacity_upper);
                let more_rx = outage_capacity_bounds(&mimo(m + 1, n, rho), 0.1).unwrap();
                let more_tx = outage_capacity_bounds(&mimo(m, n + 1, rho), 0.1).unwrap();
                let more_snr = outage_capacity_bounds(&mimo(m, n, rho * 1.5), 0.1).unwrap();
                assert!(more_rx.capacity_upper >= r.capacity_upper);
                assert!(more_tx.capacity_upper >= r.capacity_upper);
                assert!(more_snr.capacity_upper >= r.capacity_upper);
            }
        }
    }

    #[test]
    fn effective_order_examples() {
        assert_eq!(effective_order(100, 100, EdgeConstant::Paper), 800.0);
        assert_eq!(
            effective_order(100, 100, EdgeConstant::MarchenkoPastur),
            400.0
        );
        assert_eq!(effective_order(100, 25, EdgeConstant::Paper), 450.0);
        let mp = effective_order(90, 40, EdgeConstant::MarchenkoPastur);
        let direct = (90f64.sqrt() + 40f64.sqrt()).powi(2);
        assert!((mp - direct).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_benchmark_matches_mrc() {
        let cfg = mimo(100, 100, 1.0);
        let b = asymptotic_benchmark(&cfg, 0.1, &AsymptoticOptions::default()).unwrap();
        assert_eq!(b.order_used, 800.0);
        assert_eq!(b.mean_combiner_snr, 800.0);
        let mrc = ChannelConfig::new(DiversityScheme::Mrc, 800, 1, 1.0).unwrap();
        let c = outage_capacity(&mrc, 0.1, CapacityMethod::Exact).unwrap();
        assert_eq!(b.capacity, c.outage_capacity);

        let opts = AsymptoticOptions {
            edge: EdgeConstant::MarchenkoPastur,
            ..Default::default()
        };
        let mp = asymptotic_benchmark(&cfg, 0.1, &opts).unwrap();
        assert_eq!(mp.effective_order, 400.0);
        assert!(mp.capacity < b.capacity);

        // non-integer effective order: real shape vs rounded branch count
        let cfg = mimo(40, 17, 1.0);
        let real = asymptotic_benchmark(&cfg, 0.1, &AsymptoticOptions::default()).unwrap();
        let rounded = asymptotic_benchmark(
            &cfg,
            0.1,
            &AsymptoticOptions {
                round_up: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(real.effective_order.fract() != 0.0);
        assert_eq!(rounded.order_used, real.effective_order.ceil());
        assert!(rounded.capacity > real.capacity);
    }

    #[test]
    fn asymptotic_benchmark_needs_large_arrays() {
        let err = asymptotic_benchmark(&mimo(100, 2, 1.0), 0.1, &AsymptoticOptions::default());
        assert!(matches!(err, Err(Error::BelowAsymptoticFloor { .. })));
        let relaxed = AsymptoticOptions {
            floor: 2,
            ..Default::default()
        };
        assert!(asymptotic_benchmark(&mimo(100, 2, 1.0), 0.1, &relaxed).is_ok());
    }

    #[test]
    fn edge_constant_parsing() {
        assert_eq!(
            "paper".parse::<EdgeConstant>().unwrap(),
            EdgeConstant::Paper
        );
        assert_eq!(
            "marchenko-pastur".parse::<EdgeConstant>().unwrap(),
            EdgeConstant::MarchenkoPastur
        );
        assert!("tracy".parse::<EdgeConstant>().is_err());
    }
}
