//! Special functions and scalar root finding.
//!
//! The regularized incomplete gamma function carries every chi-square
//! diversity law in the crate, so it is written for relative accuracy
//! close to machine precision over shapes from `1/2` (used by the Gaussian
//! tail) up to about `10^6` branches. The power-law prefactor
//! `x^a e^-x / Gamma(a+1)` is evaluated in the saddle-point form
//! `exp(-bd0(a, x) - stirlerr(a)) / sqrt(2 pi a)`, which avoids the
//! catastrophic cancellation of `a ln x - x - ln Gamma(a+1)` at large `a`.

use std::f64::consts::{LN_2, PI};

use crate::error::{check_probability, invalid, Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Integer shapes up to this value may use the finite Poisson sum.
pub const POISSON_SUM_MAX_SHAPE: f64 = 50.0;

/// Above this `n` the harmonic number comes from its asymptotic expansion.
pub const HARMONIC_CROSSOVER: u64 = 1000;

const SERIES_MAX_TERMS: usize = 5_000_000;

/// Tolerances shared by the monotone root solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSolveSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: u32,
}

impl Default for RootSolveSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_iter: 200,
        }
    }
}

impl RootSolveSettings {
    pub fn new(rel_tol: f64, abs_tol: f64, max_iter: u32) -> Result<Self> {
        let settings = Self {
            rel_tol,
            abs_tol,
            max_iter,
        };
        settings.validate()?;
        Ok(settings)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(invalid("rel_tol", "must be finite and > 0"));
        }
        if !(self.abs_tol.is_finite() && self.abs_tol >= 0.0) {
            return Err(invalid("abs_tol", "must be finite and >= 0"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be >= 1"));
        }
        Ok(())
    }

    fn target_tolerance(&self, eps: f64) -> f64 {
        self.rel_tol * eps.abs() + self.abs_tol
    }
}

/// Result of [`invert_monotone_cdf`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSolution {
    pub x: f64,
    /// `|f(x) - target|` at the returned point.
    pub residual: f64,
    /// Bracket expansions plus refinement steps.
    pub iterations: u32,
}

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln Gamma(a+1) - [(a + 1/2) ln a - a + ln sqrt(2 pi)]`.
fn stirling_error(a: f64) -> f64 {
    if a < 10.0 {
        return ln_gamma(a + 1.0) - (a + 0.5) * a.ln() + a - LN_SQRT_2PI;
    }
    let inv = 1.0 / a;
    let inv2 = inv * inv;
    inv * (1.0 / 12.0
        - inv2
            * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))))
}

/// Deviance term `a ln(a/x) + x - a`, accurate when `x` is close to `a`.
fn deviance(a: f64, x: f64) -> f64 {
    let diff = a - x;
    let sum = a + x;
    if diff.abs() < 0.1 * sum {
        let mut v = diff / sum;
        let mut total = diff * v;
        let mut term = 2.0 * a * v;
        v *= v;
        for j in 1..1000 {
            term *= v;
            let next = total + term / (2 * j + 1) as f64;
            if next == total {
                return next;
            }
            total = next;
        }
        total
    } else {
        a * (a / x).ln() + x - a
    }
}

/// `x^a e^-x / Gamma(a + 1)`.
fn power_prefactor(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if a < 10.0 {
        (a * x.ln() - x - ln_gamma(a + 1.0)).exp()
    } else {
        (-deviance(a, x) - stirling_error(a)).exp() / (2.0 * PI * a).sqrt()
    }
}

fn lower_gamma_series(a: f64, x: f64) -> Result<f64> {
    let prefactor = power_prefactor(a, x);
    if prefactor == 0.0 {
        return Ok(0.0);
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..SERIES_MAX_TERMS {
        term *= x / (a + n as f64);
        sum += term;
        if term < sum * f64::EPSILON * 0.25 {
            return Ok((prefactor * sum).min(1.0));
        }
    }
    Err(Error::NoConvergence {
        what: "incomplete gamma series",
        iterations: SERIES_MAX_TERMS as u32,
    })
}

/// Modified Lentz continued fraction for the upper tail.
fn upper_gamma_fraction(a: f64, x: f64) -> Result<f64> {
    let prefactor = a * power_prefactor(a, x);
    if prefactor == 0.0 {
        return Ok(0.0);
    }
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..SERIES_MAX_TERMS {
        let fi = i as f64;
        let an = -fi * (fi - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok((prefactor * h).min(1.0));
        }
    }
    Err(Error::NoConvergence {
        what: "incomplete gamma continued fraction",
        iterations: SERIES_MAX_TERMS as u32,
    })
}

/// `e^-x sum_{l < a} x^l / l!` with Neumaier summation; `a` a small integer.
fn upper_gamma_poisson_sum(a: u32, x: f64) -> f64 {
    let mut term = (-x).exp();
    let mut sum = term;
    let mut carry = 0.0;
    for l in 1..a {
        term *= x / l as f64;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            carry += (sum - t) + term;
        } else {
            carry += (term - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

fn check_gamma_args(a: f64, x: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(invalid("a", format!("shape {a} must be finite and > 0")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(invalid("x", format!("{x} must be >= 0")));
    }
    Ok(())
}

/// Returns `(P(a, x), Q(a, x))`, each computed on the side where it is accurate.
fn incomplete_gamma_pair(a: f64, x: f64) -> Result<(f64, f64)> {
    check_gamma_args(a, x)?;
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x == f64::INFINITY {
        return Ok((1.0, 0.0));
    }
    if a == 1.0 {
        return Ok((-(-x).exp_m1(), (-x).exp()));
    }
    if a.fract() == 0.0 && a <= POISSON_SUM_MAX_SHAPE && x >= a {
        let q = upper_gamma_poisson_sum(a as u32, x).clamp(0.0, 1.0);
        return Ok((1.0 - q, q));
    }
    if x < a + 1.0 {
        let p = lower_gamma_series(a, x)?;
        Ok((p, 1.0 - p))
    } else {
        let q = upper_gamma_fraction(a, x)?;
        Ok((1.0 - q, q))
    }
}

/// Regularized lower incomplete gamma function `P(a, x)`.
///
/// For integer `a = M` this is the CDF of the MRC combiner SNR normalized by
/// the branch mean, `1 - e^-x sum_{l<M} x^l / l!`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64> {
    incomplete_gamma_pair(a, x).map(|(p, _)| p)
}

/// Regularized upper incomplete gamma function `Q(a, x) = 1 - P(a, x)`.
pub fn regularized_upper_gamma(a: f64, x: f64) -> Result<f64> {
    incomplete_gamma_pair(a, x).map(|(_, q)| q)
}

/// Standard Gaussian tail `Q(x) = P(X > x)`.
pub fn q_function(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(invalid("x", "must be finite"));
    }
    Ok(gaussian_tail(x))
}

fn gaussian_tail(x: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    let z = 0.5 * x * x;
    // erfc(t) = Q(1/2, t^2), so Q(x) = Q(1/2, x^2/2) / 2 for x > 0
    let (p, q) = incomplete_gamma_pair(0.5, z).expect("shape 1/2 with finite z");
    if x > 0.0 {
        0.5 * q
    } else {
        0.5 + 0.5 * p
    }
}

fn gaussian_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Acklam's rational approximation to the standard normal quantile for `p <= 1/2`.
fn acklam_lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Inverse of the Gaussian tail: `Q(q_inverse(eps)) = eps`.
///
/// A rational first guess is polished with two Newton steps on `Q`.
/// The result is odd about `eps = 1/2`.
pub fn q_inverse(eps: f64) -> Result<f64> {
    check_probability(eps)?;
    if eps == 0.5 {
        return Ok(0.0);
    }
    if eps > 0.5 {
        return Ok(-upper_tail_quantile(1.0 - eps));
    }
    Ok(upper_tail_quantile(eps))
}

fn upper_tail_quantile(eps: f64) -> f64 {
    let mut x = -acklam_lower_quantile(eps);
    for _ in 0..2 {
        let density = gaussian_density(x);
        if density == 0.0 {
            break;
        }
        x += (gaussian_tail(x) - eps) / density;
    }
    x
}

/// `H_n = sum_{l=1}^n 1/l`.
///
/// Summed directly up to [`HARMONIC_CROSSOVER`]; beyond it the expansion
/// `ln n + k1 + 1/(2n) - 1/(12 n^2) + 1/(120 n^4) - 1/(252 n^6)` is used,
/// whose truncation error is below `1e-25` there.
pub fn harmonic_number(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "harmonic number needs n >= 1"));
    }
    if n <= HARMONIC_CROSSOVER {
        // smallest terms first
        Ok((1..=n).rev().map(|l| 1.0 / l as f64).sum())
    } else {
        Ok((n as f64).ln() + EULER_MASCHERONI + harmonic_excess(n)?)
    }
}

/// `H_n - ln n - k1`, positive and decreasing to zero.
pub fn harmonic_excess(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "harmonic number needs n >= 1"));
    }
    if n <= HARMONIC_CROSSOVER {
        return Ok(harmonic_number(n)? - (n as f64).ln() - EULER_MASCHERONI);
    }
    let inv = 1.0 / n as f64;
    let inv2 = inv * inv;
    Ok(inv * 0.5 - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0)))
}

/// Solves `f(x) = eps` for a nondecreasing `f` on `[0, inf)` with `f(0) <= eps`.
///
/// The bracket grows geometrically from `bracket_hint` until `f` crosses
/// `eps`, then Brent's method (inverse quadratic interpolation with
/// bisection fallback) refines it. Every refinement point is checked to
/// lie between the bracket values; a violation reports [`Error::NonMonotone`].
/// If the bracket shrinks to floating-point resolution before the residual
/// meets `rel_tol * eps + abs_tol`, the best point is returned with its
/// residual.
pub fn invert_monotone_cdf<F>(
    f: F,
    eps: f64,
    bracket_hint: f64,
    settings: &RootSolveSettings,
) -> Result<RootSolution>
where
    F: Fn(f64) -> Result<f64>,
{
    settings.validate()?;
    if !(eps.is_finite() && eps < 1.0) {
        return Err(invalid("eps", format!("{eps} must be finite and < 1")));
    }
    if !(bracket_hint.is_finite() && bracket_hint > 0.0) {
        return Err(invalid("bracket_hint", "must be finite and > 0"));
    }
    let tol = settings.target_tolerance(eps);
    let eval = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if v.is_finite() {
            Ok(v - eps)
        } else {
            Err(invalid("f", format!("non-finite value at x = {x}")))
        }
    };
    let slack = |a: f64, b: f64| settings.abs_tol + 1e-12 * a.abs().max(b.abs()).max(eps);

    let mut lo = 0.0;
    let mut g_lo = eval(lo)?;
    if g_lo > tol {
        return Err(invalid(
            "f",
            format!("f(0) = {} exceeds eps = {eps}", g_lo + eps),
        ));
    }
    if g_lo.abs() <= tol {
        return Ok(RootSolution {
            x: 0.0,
            residual: g_lo.abs(),
            iterations: 0,
        });
    }

    let mut hi = bracket_hint;
    let mut iterations = 0u32;
    let mut g_hi;
    loop {
        iterations += 1;
        g_hi = eval(hi)?;
        if g_hi.abs() <= tol {
            return Ok(RootSolution {
                x: hi,
                residual: g_hi.abs(),
                iterations,
            });
        }
        if g_hi < g_lo - slack(g_lo + eps, g_hi + eps) {
            return Err(Error::NonMonotone {
                x: hi,
                value: g_hi + eps,
                low: g_lo + eps,
                high: f64::INFINITY,
            });
        }
        if g_hi > 0.0 {
            break;
        }
        if iterations >= settings.max_iter || !hi.is_finite() {
            return Err(Error::BracketFailure {
                iterations,
                upper: hi,
            });
        }
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
    }

    brent(
        eval,
        (lo, g_lo),
        (hi, g_hi),
        tol,
        settings.max_iter,
        iterations,
        slack,
    )
}

#[allow(clippy::too_many_arguments)]
fn brent<G, S>(
    g: G,
    (lo, g_lo): (f64, f64),
    (hi, g_hi): (f64, f64),
    tol: f64,
    max_iter: u32,
    mut iterations: u32,
    slack: S,
) -> Result<RootSolution>
where
    G: Fn(f64) -> Result<f64>,
    S: Fn(f64, f64) -> f64,
{
    let (mut a, mut b, mut c) = (lo, hi, hi);
    let (mut fa, mut fb, mut fc) = (g_lo, g_hi, g_hi);
    let mut d = b - a;
    let mut e = d;
    let mut best = if fa.abs() < fb.abs() {
        (a, fa)
    } else {
        (b, fb)
    };

    for _ in 0..max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        if fb.abs() < best.1.abs() {
            best = (b, fb);
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + f64::MIN_POSITIVE;
        let xm = 0.5 * (c - b);
        if fb.abs() <= tol || xm.abs() <= tol1 {
            return Ok(RootSolution {
                x: best.0,
                residual: best.1.abs(),
                iterations,
            });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        let (bracket_lo, bracket_hi) = (fb.min(fc), fb.max(fc));
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = g(b)?;
        iterations += 1;
        let allowance = slack(bracket_lo, bracket_hi);
        if fb < bracket_lo - allowance || fb > bracket_hi + allowance {
            return Err(Error::NonMonotone {
                x: b,
                value: fb,
                low: bracket_lo,
                high: bracket_hi,
            });
        }
    }
    if fb.abs() < best.1.abs() {
        best = (b, fb);
    }
    if best.1.abs() <= tol {
        return Ok(RootSolution {
            x: best.0,
            residual: best.1.abs(),
            iterations,
        });
    }
    Err(Error::NoConvergence {
        what: "monotone CDF inversion",
        iterations,
    })
}

/// `log2(1 + x)` without cancellation for small `x`.
pub(crate) fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}
