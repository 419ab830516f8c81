//! Seeded Monte Carlo oracle for the combiner SNR.
//!
//! Samples are drawn in `chunks` independent ChaCha8 substreams derived from
//! the seed and evaluated in parallel. Output is bit-identical for a given
//! `(seed, chunks)` pair. Different chunk counts give different streams.

pub mod spectral;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_probability, invalid, Error, Result};
use crate::numerics::log2_1p;
use crate::snr_models::{combiner_cdf, ChannelConfig, DiversityScheme};
use spectral::{largest_singular_value_sqr, ComplexMatrix};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Consecutive non-convergent draws tolerated before giving up on a sample.
pub const MAX_CONSECUTIVE_REDRAWS: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub samples: u64,
    pub seed: u64,
    pub chunks: u32,
    pub power_iter_tol: f64,
    pub power_iter_max: u32,
}

impl McSettings {
    pub const MIN_SAMPLES: u64 = 100;
    pub const DEFAULT_CHUNKS: u32 = 64;

    /// Settings with the default chunk count (capped at `samples`) and
    /// power-iteration controls.
    pub fn new(samples: u64, seed: u64) -> Result<Self> {
        let s = Self {
            samples,
            seed,
            chunks: Self::DEFAULT_CHUNKS.min(samples.max(1).min(u32::MAX as u64) as u32),
            power_iter_tol: 1e-10,
            power_iter_max: 500,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_chunks(mut self, chunks: u32) -> Result<Self> {
        self.chunks = chunks;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < Self::MIN_SAMPLES {
            return Err(invalid(
                "samples",
                format!(
                    "{} is below the minimum {}",
                    self.samples,
                    Self::MIN_SAMPLES
                ),
            ));
        }
        if self.chunks == 0 || self.chunks as u64 > self.samples {
            return Err(invalid(
                "chunks",
                format!("{} must be in [1, samples = {}]", self.chunks, self.samples),
            ));
        }
        if !(self.power_iter_tol > 0.0 && self.power_iter_tol < 1.0) {
            return Err(invalid("power_iter_tol", "must be in (0, 1)"));
        }
        if self.power_iter_max == 0 {
            return Err(invalid("power_iter_max", "must be >= 1"));
        }
        Ok(())
    }

    /// True when `samples >= ceil(10 / eps)`.
    pub fn enough_for(&self, eps: f64) -> bool {
        self.samples >= min_reliable_samples(eps)
    }
}

/// `ceil(10 / eps)`, the sample count needed for a trustworthy tail CI.
pub fn min_reliable_samples(eps: f64) -> u64 {
    (10.0 / eps).ceil() as u64
}

/// Raw combiner-SNR draws in sample-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub values: Vec<f64>,
    /// Channel draws discarded because power iteration did not converge.
    pub redrawn: u64,
    pub seed: u64,
    pub chunks: u32,
}

/// Samples sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSamples(Vec<f64>);

impl SortedSamples {
    /// # Errors
    /// Empty input or a NaN value.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySamples);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(invalid("samples", "contains NaN"));
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based order statistic, clamped to `[1, n]`.
    fn order_stat(&self, rank: i64) -> f64 {
        let n = self.0.len() as i64;
        self.0[(rank.clamp(1, n) - 1) as usize]
    }
}

/// Empirical quantile, mean and optional KS summary.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub eps: f64,
    pub quantile_gamma0: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub quantile_ci_halfwidth: f64,
    /// False when fewer than `ceil(10 / eps)` samples back the CI.
    pub ci_reliable: bool,
    pub sample_mean: f64,
    pub sample_mean_stderr: f64,
    pub ks_statistic: Option<f64>,
    pub samples_used: u64,
    pub seed: Option<u64>,
    pub redrawn: u64,
}

/// Empirical outage capacity with the CI mapped through `log2(1 + x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct McCapacity {
    pub capacity: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// CI half-width divided by 1.96.
    pub sigma: f64,
    pub estimate: McEstimate,
}

/// Standard complex Gaussian pair via the Marsaglia polar method, scaled to
/// `E|h|^2 = 1`.
fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    loop {
        let u: f64 = rng.random::<f64>() * 2.0 - 1.0;
        let v: f64 = rng.random::<f64>() * 2.0 - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            // (u, v) * sqrt(-2 ln s / s) are N(0,1); halve the variance
            let f = (-s.ln() / s).sqrt();
            return Complex64::new(u * f, v * f);
        }
    }
}

fn fill_gaussian<R: Rng>(rng: &mut R, out: &mut [Complex64]) {
    for h in out {
        *h = complex_gaussian(rng);
    }
}

struct Sampler {
    scheme: DiversityScheme,
    rows: usize,
    cols: usize,
    snr: f64,
    tol: f64,
    max_iter: u32,
}

impl Sampler {
    fn new(cfg: &ChannelConfig, settings: &McSettings) -> Result<Self> {
        let rows = usize::try_from(cfg.m()).map_err(|_| invalid("m", "too large"))?;
        let cols = usize::try_from(cfg.n()).map_err(|_| invalid("n", "too large"))?;
        rows.checked_mul(cols)
            .ok_or_else(|| invalid("antennas", "M * N overflows"))?;
        Ok(Self {
            scheme: cfg.scheme(),
            rows,
            cols,
            snr: cfg.branch_snr(),
            tol: settings.power_iter_tol,
            max_iter: settings.power_iter_max,
        })
    }

    /// One normalized sample (branch SNR factored out) and the redraw count.
    fn draw<R: Rng>(&self, rng: &mut R, h: &mut ComplexMatrix) -> Result<(f64, u64)> {
        match self.scheme {
            DiversityScheme::Mrc
            | DiversityScheme::Mrt
            | DiversityScheme::Sc
            | DiversityScheme::St
            | DiversityScheme::Stc => {
                fill_gaussian(rng, h.data_mut());
                let value = if self.scheme.is_ratio_combining() {
                    h.frobenius_norm_sqr()
                } else {
                    h.data_mut()
                        .iter()
                        .map(|z| z.norm_sqr())
                        .fold(0.0, f64::max)
                };
                Ok((value, 0))
            }
            DiversityScheme::MimoOptimal => {
                if self.rows.min(self.cols) == 1 {
                    fill_gaussian(rng, h.data_mut());
                    return Ok((h.frobenius_norm_sqr(), 0));
                }
                for redrawn in 0..=MAX_CONSECUTIVE_REDRAWS {
                    fill_gaussian(rng, h.data_mut());
                    if let Some(p) = largest_singular_value_sqr(h, self.tol, self.max_iter) {
                        return Ok((p.value, redrawn as u64));
                    }
                }
                Err(Error::NoConvergence {
                    what: "power iteration",
                    iterations: self.max_iter,
                })
            }
        }
    }
}

fn chunk_len(samples: u64, chunks: u32, c: u32) -> usize {
    let base = samples / chunks as u64;
    let extra = samples % chunks as u64;
    (base + u64::from((c as u64) < extra)) as usize
}

/// Draws `settings.samples` combiner SNRs (linear).
///
/// MRC/MRT give `snr * sum |h|^2`, SC/ST/STC `snr * max |h|^2` over the
/// `d` branches, optimal MIMO `rho * sigma_max^2(H)` by power iteration.
/// Sample `i` depends only on `(seed, chunks, i)`.
pub fn sample_combiner_snr(cfg: &ChannelConfig, settings: &McSettings) -> Result<SampleSet> {
    settings.validate()?;
    let sampler = Sampler::new(cfg, settings)?;
    let parts: Vec<Result<(Vec<f64>, u64)>> = (0..settings.chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(c as u64);
            let len = chunk_len(settings.samples, settings.chunks, c);
            let mut h = ComplexMatrix::zeros(sampler.rows, sampler.cols);
            let mut out = Vec::with_capacity(len);
            let mut redrawn = 0;
            for _ in 0..len {
                let (v, r) = sampler.draw(&mut rng, &mut h)?;
                out.push(sampler.snr * v);
                redrawn += r;
            }
            Ok((out, redrawn))
        })
        .collect();
    let mut values = Vec::with_capacity(settings.samples as usize);
    let mut redrawn = 0;
    for part in parts {
        let (v, r) = part?;
        values.extend(v);
        redrawn += r;
    }
    Ok(SampleSet {
        values,
        redrawn,
        seed: settings.seed,
        chunks: settings.chunks,
    })
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((mean, (ss / (n - 1.0)).sqrt() / n.sqrt()))
}

/// Nearest-rank quantile `x_(ceil(eps n))` with a 95% order-statistic CI.
///
/// The CI ranks are `n eps -+ 1.96 sqrt(n eps (1 - eps))`, rounded outward
/// and clamped to `[1, n]`.
pub fn empirical_quantile(samples: &SortedSamples, eps: f64) -> Result<McEstimate> {
    check_probability(eps)?;
    let x = samples.as_slice();
    if x.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = x.len() as f64;
    let rank = (eps * n).ceil() as i64;
    let q = samples.order_stat(rank);
    let spread = Z_95 * (n * eps * (1.0 - eps)).sqrt();
    let lo = samples.order_stat((n * eps - spread).floor() as i64);
    let hi = samples.order_stat((n * eps + spread).ceil() as i64);
    let (mean, stderr) = mean_and_stderr(x)?;
    Ok(McEstimate {
        eps,
        quantile_gamma0: q,
        ci_lower: lo,
        ci_upper: hi,
        quantile_ci_halfwidth: 0.5 * (hi - lo),
        ci_reliable: x.len() as u64 >= min_reliable_samples(eps),
        sample_mean: mean,
        sample_mean_stderr: stderr,
        ks_statistic: None,
        samples_used: x.len() as u64,
        seed: None,
        redrawn: 0,
    })
}

/// Kolmogorov-Smirnov distance `sup |F_n - F|` over the sorted samples.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &SortedSamples, cdf: F) -> f64 {
    let x = samples.as_slice();
    let n = x.len() as f64;
    let mut d = 0.0f64;
    for (i, &xi) in x.iter().enumerate() {
        let f = cdf(xi);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    d.clamp(0.0, 1.0)
}

/// Asymptotic critical value `c / sqrt(n)` of the KS statistic
/// (`c = 1.63` at the 99% level).
pub fn ks_critical_value(n: usize, c: f64) -> f64 {
    c / (n as f64).sqrt()
}

/// Samples `cfg` and summarizes at `eps`, adding the KS distance to the
/// analytic CDF when the scheme has one.
pub fn estimate(cfg: &ChannelConfig, eps: f64, settings: &McSettings) -> Result<McEstimate> {
    check_probability(eps)?;
    let set = sample_combiner_snr(cfg, settings)?;
    let redrawn = set.redrawn;
    let sorted = SortedSamples::new(set.values)?;
    let mut est = empirical_quantile(&sorted, eps)?;
    est.seed = Some(settings.seed);
    est.redrawn = redrawn;
    if cfg.scheme() != DiversityScheme::MimoOptimal {
        est.ks_statistic = Some(ks_distance(&sorted, |g| {
            combiner_cdf(cfg, g).expect("valid argument")
        }));
    }
    Ok(est)
}

/// Empirical outage capacity `log2(1 + gamma0_hat)` with its CI.
pub fn mc_outage_capacity(
    cfg: &ChannelConfig,
    eps: f64,
    settings: &McSettings,
) -> Result<McCapacity> {
    let est = estimate(cfg, eps, settings)?;
    Ok(capacity_from_estimate(est))
}

pub fn capacity_from_estimate(estimate: McEstimate) -> McCapacity {
    let lo = log2_1p(estimate.ci_lower);
    let hi = log2_1p(estimate.ci_upper);
    McCapacity {
        capacity: log2_1p(estimate.quantile_gamma0),
        ci_lower: lo,
        ci_upper: hi,
        sigma: 0.5 * (hi - lo) / Z_95,
        estimate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{harmonic_number, regularized_lower_gamma};
    use crate::snr_models::combiner_quantile;
    use DiversityScheme::*;

    fn settings(samples: u64, seed: u64) -> McSettings {
        McSettings::new(samples, seed).unwrap()
    }

    #[test]
    fn settings_validation() {
        assert!(McSettings::new(99, 1).is_err());
        assert!(settings(100, 1).with_chunks(0).is_err());
        assert!(settings(100, 1).with_chunks(101).is_err());
        assert_eq!(settings(100, 1).chunks, 64);
        assert!(settings(1000, 0).enough_for(0.01));
        assert!(!settings(999, 0).enough_for(0.01));
    }

    #[test]
    fn chunks_cover_all_samples() {
        for (n, c) in [(100u64, 7u32), (1000, 64), (101, 101)] {
            let total: usize = (0..c).map(|i| chunk_len(n, c, i)).sum();
            assert_eq!(total as u64, n);
        }
    }

    #[test]
    fn unit_variance_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let (mut p, mut re2, mut im2) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let h = complex_gaussian(&mut rng);
            p += h.norm_sqr();
            re2 += h.re * h.re;
            im2 += h.im * h.im;
        }
        let n = n as f64;
        assert!((p / n - 1.0).abs() < 0.01);
        assert!((re2 / n - 0.5).abs() < 0.01);
        assert!((im2 / n - 0.5).abs() < 0.01);
    }

    #[test]
    fn single_branch_is_unit_exponential() {
        let cfg = ChannelConfig::with_order(Mrc, 1, 1.0).unwrap();
        let set = sample_combiner_snr(&cfg, &settings(100_000, 7)).unwrap();
        let (mean, se) = mean_and_stderr(&set.values).unwrap();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
        let sorted = SortedSamples::new(set.values).unwrap();
        let d = ks_distance(&sorted, |g| -(-g).exp_m1());
        assert!(d < ks_critical_value(sorted.len(), 1.63), "ks {d}");
    }

    #[test]
    fn rank_one_mimo_equals_ratio_combining_bitwise() {
        let s = settings(2000, 11).with_chunks(3).unwrap();
        let mimo = ChannelConfig::new(MimoOptimal, 5, 1, 1.0).unwrap();
        let mrc = ChannelConfig::new(Mrc, 5, 1, 1.0).unwrap();
        let a = sample_combiner_snr(&mimo, &s).unwrap();
        let b = sample_combiner_snr(&mrc, &s).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.redrawn, 0);
    }

    #[test]
    fn rank_one_mimo_is_norm_of_the_drawn_vector() {
        let s = settings(100, 5).with_chunks(1).unwrap();
        let cfg = ChannelConfig::new(MimoOptimal, 5, 1, 1.0).unwrap();
        let set = sample_combiner_snr(&cfg, &s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        rng.set_stream(0);
        let mut h = ComplexMatrix::zeros(5, 1);
        fill_gaussian(&mut rng, h.data_mut());
        assert_eq!(set.values[0], h.frobenius_norm_sqr());
    }

    #[test]
    fn deterministic_per_seed_and_chunks() {
        let cfg = ChannelConfig::new(MimoOptimal, 3, 4, 2.0).unwrap();
        let s = settings(500, 42).with_chunks(5).unwrap();
        let a = estimate(&cfg, 0.1, &s).unwrap();
        let b = estimate(&cfg, 0.1, &s).unwrap();
        assert_eq!(a, b);
        let c = estimate(&cfg, 0.1, &s.with_chunks(4).unwrap()).unwrap();
        assert_ne!(a.quantile_gamma0, c.quantile_gamma0);
    }

    #[test]
    fn stc_mean_matches_harmonic_number() {
        let cfg = ChannelConfig::new(Stc, 3, 2, 1.0).unwrap();
        let set = sample_combiner_snr(&cfg, &settings(200_000, 9)).unwrap();
        let (mean, se) = mean_and_stderr(&set.values).unwrap();
        let h6 = harmonic_number(6).unwrap();
        assert!((h6 - 2.45).abs() < 1e-12);
        assert!((mean - h6).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn constant_samples_have_zero_width() {
        let s = SortedSamples::new(vec![2.5; 1000]).unwrap();
        for eps in [1e-3, 0.1, 0.5, 0.9] {
            let e = empirical_quantile(&s, eps).unwrap();
            assert_eq!(e.quantile_gamma0, 2.5);
            assert_eq!(e.quantile_ci_halfwidth, 0.0);
            assert_eq!(e.sample_mean_stderr, 0.0);
        }
        // a continuous CDF sees the atom as a jump of height ~ 1/2 or more
        let d = ks_distance(&s, |g| regularized_lower_gamma(2.0, g).unwrap());
        assert!(d >= 0.5, "{d}");
    }

    #[test]
    fn nearest_rank_indexing() {
        let s = SortedSamples::new((1..=10).rev().map(f64::from).collect()).unwrap();
        assert_eq!(empirical_quantile(&s, 0.1).unwrap().quantile_gamma0, 1.0);
        assert_eq!(empirical_quantile(&s, 0.11).unwrap().quantile_gamma0, 2.0);
        assert_eq!(empirical_quantile(&s, 0.5).unwrap().quantile_gamma0, 5.0);
        assert!(!empirical_quantile(&s, 0.5).unwrap().ci_reliable);
        assert!(SortedSamples::new(vec![]).is_err());
        assert!(SortedSamples::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn reliability_flag_follows_ten_over_eps() {
        let many = SortedSamples::new((0..100).map(f64::from).collect()).unwrap();
        assert!(empirical_quantile(&many, 0.5).unwrap().ci_reliable);
        assert!(empirical_quantile(&many, 0.1).unwrap().ci_reliable);
        assert!(!empirical_quantile(&many, 0.05).unwrap().ci_reliable);
    }

    #[test]
    fn cross_scheme_ks_is_large() {
        let mrc = ChannelConfig::with_order(Mrc, 10, 1.0).unwrap();
        let sc = ChannelConfig::with_order(Sc, 10, 1.0).unwrap();
        let set = sample_combiner_snr(&mrc, &settings(10_000, 1)).unwrap();
        let sorted = SortedSamples::new(set.values).unwrap();
        let d = ks_distance(&sorted, |g| combiner_cdf(&sc, g).unwrap());
        assert!(d > 20.0 * ks_critical_value(sorted.len(), 1.63), "{d}");
    }

    #[test]
    fn mrc_quantile_inside_ci_mostly() {
        // 20 seeds at moderate n; expect ~95% coverage, require >= 80%
        let cfg = ChannelConfig::with_order(Mrc, 2, 1.0).unwrap();
        let exact = combiner_quantile(&cfg, 0.1).unwrap().gamma0;
        let hits = (0..20)
            .filter(|&seed| {
                let e = estimate(&cfg, 0.1, &settings(20_000, seed)).unwrap();
                e.ci_lower <= exact && exact <= e.ci_upper
            })
            .count();
        assert!(hits >= 16, "{hits}/20");
    }

    #[test]
    fn capacity_ci_is_monotone_image() {
        let cfg = ChannelConfig::with_order(Mrc, 1, 1.0).unwrap();
        let c = mc_outage_capacity(&cfg, 0.1, &settings(100_000, 42)).unwrap();
        assert!(c.ci_lower <= c.capacity && c.capacity <= c.ci_upper);
        assert!(c.sigma > 0.0);
        let target = (1.0 + (1.0f64 / 0.9).ln()).log2();
        assert!(c.ci_lower - 3.0 * c.sigma <= target && target <= c.ci_upper + 3.0 * c.sigma);
    }

    #[test]
    fn mimo_stays_between_frobenius_bounds() {
        let cfg = ChannelConfig::new(MimoOptimal, 4, 3, 1.0).unwrap();
        let s = settings(200, 2).with_chunks(1).unwrap();
        let set = sample_combiner_snr(&cfg, &s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        rng.set_stream(0);
        let mut h = ComplexMatrix::zeros(4, 3);
        for &v in &set.values[..20] {
            fill_gaussian(&mut rng, h.data_mut());
            let f = h.frobenius_norm_sqr();
            assert!(v <= f * (1.0 + 1e-12) && v >= f / 3.0 * (1.0 - 1e-12));
        }
    }

    #[test]
    #[ignore = "full-size oracle agreement; run with --ignored"]
    fn oracle_agreement_full_size() {
        let mut cells = 0;
        let mut hits = 0;
        for scheme in [Mrc, Sc, Mrt, St, Stc] {
            for d in [1u64, 2, 10, 100] {
                for eps in [1e-2, 1e-1] {
                    let cfg = ChannelConfig::with_order(scheme, d, 1.0).unwrap();
                    let exact = combiner_quantile(&cfg, eps).unwrap().gamma0;
                    for seed in 0..20 {
                        let e = estimate(&cfg, eps, &settings(1_000_000, seed)).unwrap();
                        cells += 1;
                        hits += usize::from(e.ci_lower <= exact && exact <= e.ci_upper);
                    }
                }
            }
        }
        assert!(hits as f64 >= 0.93 * cells as f64, "{hits}/{cells}");
    }
}
