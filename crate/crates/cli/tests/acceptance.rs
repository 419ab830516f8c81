//! Acceptance suite. One `PASS`/`FAIL` line per criterion.
//!
//! Exit status is nonzero when a criterion fails that is not listed in
//! `KNOWN_FAILURES`. Those are printed as `FAIL` all the same.

use std::process::ExitCode;
use std::time::Instant;

use outcap_cli::format::g9;
use outcap_cli::validate::{edge_comparison, ValidationSettings, KS_C99};
use outcap_core::montecarlo::{capacity_from_estimate, estimate, ks_critical_value};
use outcap_core::numerics::q_inverse;
use outcap_core::outage::{asymptotic_gap, outage_capacity, sc_gain_factor};
use outcap_core::snr_models::{combiner_cdf, combiner_quantile, ga_quantile, mean_combiner_snr};
use outcap_core::{
    outage_capacity_bounds, CapacityMethod, ChannelConfig, DiversityScheme, McEstimate, McSettings,
    SnrRegime,
};

/// Criteria that fail as stated: 3 does not hold for the exact laws, 4
/// misses one 95% interval at the fixed seed (nine intervals all cover
/// with probability 0.95^9). Each has an analysis in the decisions ledger.
const KNOWN_FAILURES: &[u32] = &[3, 4];

const SEED: u64 = 42;

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

fn mrc(m: u64) -> ChannelConfig {
    ChannelConfig::new(DiversityScheme::Mrc, m, 1, 1.0).unwrap()
}

fn criterion_1() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (m, quoted) in [(100u64, -0.94), (1000, -0.59), (10_000, -0.43)] {
        let eps: f64 = 1e-3;
        let h: f64 = (1..=m).map(|l| 1.0 / l as f64).sum();
        let oracle = ((1.0 / h) * (1.0 / (1.0 - eps.powf(1.0 / m as f64))).ln()).log2();
        let c = ChannelConfig::new(DiversityScheme::Sc, m, 1, 1e6).unwrap();
        let lib = asymptotic_gap(&c, eps, SnrRegime::HighSnr)
            .unwrap()
            .intermediate
            .unwrap();
        pass &= (oracle - quoted).abs() <= 0.01 && (lib - oracle).abs() <= 1e-9;
        parts.push(format!("M={m}: {} (quoted {quoted})", g9(lib)));
    }
    Outcome {
        id: 1,
        pass,
        detail: format!("SC high-SNR gaps at eps=1e-3: {}", parts.join(", ")),
    }
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for m in [1u64, 2, 5, 10, 50, 100, 1000, 10_000] {
        for eps in [1e-4, 1e-3, 1e-2, 1e-1, 0.5] {
            let c = mrc(m);
            let q = combiner_quantile(&c, eps).unwrap();
            let back = combiner_cdf(&c, q.gamma0).unwrap();
            worst = worst.max((back - eps).abs() / eps);
        }
    }
    Outcome {
        id: 2,
        pass: worst <= 1e-9,
        detail: format!(
            "MRC F(F^-1(eps)) worst relative error {} (tol 1e-9)",
            g9(worst)
        ),
    }
}

fn ga_error(m: u64, eps: f64) -> Option<f64> {
    let c = mrc(m);
    let exact = combiner_quantile(&c, eps).unwrap().gamma0;
    ga_quantile(&c, eps)
        .ok()
        .map(|q| (q.gamma0 - exact).abs() / exact)
}

fn criterion_3() -> Outcome {
    let ms = [10u64, 100, 1000, 10_000];
    let coarse: Vec<f64> = ms.iter().map(|&m| ga_error(m, 0.1).unwrap()).collect();
    let monotone = coarse.windows(2).all(|w| w[1] < w[0]);
    let coarse_ok = coarse[2] < 0.02;
    let fine: Vec<Option<f64>> = ms.iter().map(|&m| ga_error(m, 1e-3)).collect();
    // "met only at M >= 1e4": not below 2% at 1e3, below at 1e4
    let fine_ok = fine[2].map_or(true, |e| e >= 0.02) && fine[3].is_some_and(|e| e < 0.02);
    let show = |v: &[Option<f64>]| {
        v.iter()
            .zip(ms)
            .map(|(e, m)| format!("{m}:{}", e.map_or("invalid-regime".into(), g9)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let coarse_opt: Vec<Option<f64>> = coarse.iter().copied().map(Some).collect();
    Outcome {
        id: 3,
        pass: monotone && coarse_ok && fine_ok,
        detail: format!(
            "MRC GA rel err eps=0.1 [{}] monotone={monotone} <2%@1e3={coarse_ok}; \
             eps=1e-3 [{}] threshold-only-at->=1e4={fine_ok}",
            show(&coarse_opt),
            show(&fine)
        ),
    }
}

fn mc_cells() -> Vec<(String, ChannelConfig)> {
    let mut cells = Vec::new();
    for d in [2u64, 10, 100] {
        cells.push((
            format!("mrc d={d}"),
            ChannelConfig::new(DiversityScheme::Mrc, d, 1, 1.0).unwrap(),
        ));
    }
    for d in [2u64, 10, 100] {
        cells.push((
            format!("sc d={d}"),
            ChannelConfig::new(DiversityScheme::Sc, d, 1, 1.0).unwrap(),
        ));
    }
    for (m, n) in [(2u64, 1u64), (5, 2), (10, 10)] {
        cells.push((
            format!("stc d={}", m * n),
            ChannelConfig::new(DiversityScheme::Stc, m, n, 1.0).unwrap(),
        ));
    }
    cells
}

/// One sample set per cell at n = 1e6, seed 42 + cell index.
fn large_estimates() -> Vec<(String, ChannelConfig, McEstimate)> {
    mc_cells()
        .into_iter()
        .enumerate()
        .map(|(i, (name, c))| {
            let s = McSettings::new(1_000_000, SEED + i as u64).unwrap();
            let e = estimate(&c, 0.1, &s).unwrap();
            (name, c, e)
        })
        .collect()
}

fn criterion_4(est: &[(String, ChannelConfig, McEstimate)]) -> Outcome {
    let mut misses = Vec::new();
    let mut worst_ks: f64 = 0.0;
    for (name, c, e) in est {
        let exact = combiner_quantile(c, 0.1).unwrap().gamma0;
        if !(e.ci_lower <= exact && exact <= e.ci_upper) {
            misses.push(format!(
                "{name} quantile {} not in [{}, {}]",
                g9(exact),
                g9(e.ci_lower),
                g9(e.ci_upper)
            ));
        }
        let crit = ks_critical_value(e.samples_used as usize, KS_C99);
        let ks = e.ks_statistic.unwrap();
        worst_ks = worst_ks.max(ks / crit);
        if ks >= crit {
            misses.push(format!("{name} KS {} >= {}", g9(ks), g9(crit)));
        }
    }
    Outcome {
        id: 4,
        pass: misses.is_empty(),
        detail: format!(
            "{} cells at n=1e6: quantile in 95% CI and KS < 1.63/sqrt(n) (max KS/crit {}){}",
            est.len(),
            g9(worst_ks),
            if misses.is_empty() {
                String::new()
            } else {
                format!("; {}", misses.join("; "))
            }
        ),
    }
}

fn criterion_5() -> Outcome {
    let mut misses = Vec::new();
    let mut points = 0;
    let mut idx = 0u64;
    for (n, m) in [(2u64, 100u64), (4, 64)] {
        for step in 0..9 {
            let rho_db = -10.0 + 5.0 * step as f64;
            let c = ChannelConfig::new(DiversityScheme::MimoOptimal, m, n, db(rho_db)).unwrap();
            let b = outage_capacity_bounds(&c, 0.1).unwrap();
            let s = McSettings::new(10_000, SEED + idx).unwrap();
            idx += 1;
            let mc = capacity_from_estimate(estimate(&c, 0.1, &s).unwrap());
            points += 1;
            let ok = b.capacity_lower - 3.0 * mc.sigma <= mc.capacity
                && mc.capacity <= b.capacity_upper + 3.0 * mc.sigma;
            if !ok {
                misses.push(format!(
                    "N={n} M={m} rho={rho_db}dB: {} vs [{}, {}] sigma {}",
                    g9(mc.capacity),
                    g9(b.capacity_lower),
                    g9(b.capacity_upper),
                    g9(mc.sigma)
                ));
            }
        }
    }
    Outcome {
        id: 5,
        pass: misses.is_empty(),
        detail: format!(
            "MIMO sandwich at {points} points, n=1e4, +-3 sigma{}",
            if misses.is_empty() {
                String::new()
            } else {
                format!("; {}", misses.join("; "))
            }
        ),
    }
}

fn criterion_6() -> Outcome {
    let mut settings = ValidationSettings::new(McSettings::new(100_000, SEED).unwrap());
    settings.asymptotic_samples = 1000;
    let checks = edge_comparison(&settings).unwrap();
    let detail = checks
        .iter()
        .map(|c| {
            format!(
                "{}: expected {} observed {}",
                c.name, c.expected, c.observed
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Outcome {
        id: 6,
        pass: checks.len() == 3,
        detail: format!("M=N=100, n=1e3 sigma_max^2/N: {detail}"),
    }
}

fn criterion_7(est: &[(String, ChannelConfig, McEstimate)]) -> Outcome {
    let mut misses = Vec::new();
    let mut worst_z: f64 = 0.0;
    for (name, c, e) in est {
        let d = c.diversity_order();
        // M gamma for MRC, gamma H_d for selection
        let oracle = if c.scheme().is_ratio_combining() {
            d as f64
        } else {
            (1..=d).map(|l| 1.0 / l as f64).sum()
        };
        let lib = mean_combiner_snr(c).exact().unwrap();
        assert!((lib - oracle).abs() <= 1e-14 * oracle, "{lib} vs {oracle}");
        let z = (e.sample_mean - oracle) / e.sample_mean_stderr;
        worst_z = worst_z.max(z.abs());
        if z.abs() > 3.0 {
            misses.push(format!(
                "{name} mean {} vs {} (z {})",
                g9(e.sample_mean),
                g9(oracle),
                g9(z)
            ));
        }
    }
    Outcome {
        id: 7,
        pass: misses.is_empty(),
        detail: format!(
            "{} sample means at n=1e6 within 3 se (max |z| {}){}",
            est.len(),
            g9(worst_z),
            if misses.is_empty() {
                String::new()
            } else {
                format!("; {}", misses.join("; "))
            }
        ),
    }
}

fn criterion_8() -> Outcome {
    let mut max_gap = f64::NEG_INFINITY;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for scheme in [
        DiversityScheme::Mrc,
        DiversityScheme::Sc,
        DiversityScheme::Mrt,
        DiversityScheme::St,
        DiversityScheme::Stc,
    ] {
        for d in [1u64, 2, 10, 100, 1000] {
            for snr_db in [-10.0, 0.0, 10.0, 30.0] {
                let c = ChannelConfig::with_order(scheme, d, db(snr_db)).unwrap();
                for eps in [1e-3, 1e-2, 0.1, 0.5] {
                    let r = outage_capacity(&c, eps, CapacityMethod::Exact).unwrap();
                    max_gap = max_gap.max(r.gap_vs_combiner);
                    let ratio = r.ratio_vs_combiner.unwrap_or(f64::NAN);
                    lo = lo.min(ratio);
                    hi = hi.max(ratio);
                }
            }
        }
    }
    let signs = max_gap < 0.0 && lo > 0.0 && hi < 1.0;

    let qi = q_inverse(0.1).unwrap();
    let mut spread: f64 = 0.0;
    for m in [10u64, 100, 1000, 10_000, 100_000, 1_000_000] {
        let g = asymptotic_gap(&mrc(m), 0.1, SnrRegime::HighSnr)
            .unwrap()
            .value;
        let scaled = g * (m as f64).sqrt();
        let oracle = -qi / std::f64::consts::LN_2;
        spread = spread.max((scaled - oracle).abs() / oracle.abs());
    }
    let scaling = spread <= 1e-12;

    let factors: Vec<f64> = [10u64, 100, 1000, 10_000, 100_000, 1_000_000, 10_000_000]
        .iter()
        .map(|&m| sc_gain_factor(m, 0.1).unwrap())
        .collect();
    let toward_one = factors.windows(2).all(|w| w[1] > w[0]) && factors[factors.len() - 1] < 1.0;

    Outcome {
        id: 8,
        pass: signs && scaling && toward_one,
        detail: format!(
            "max gap_combiner {}, ratio in [{}, {}]; sqrt(M) GA gap spread {}; SC factor {} .. {}",
            g9(max_gap),
            g9(lo),
            g9(hi),
            g9(spread),
            g9(factors[0]),
            g9(factors[factors.len() - 1])
        ),
    }
}

fn main() -> ExitCode {
    let mut outcomes = Vec::new();
    let mut timed = |f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let mut o = f();
        o.detail
            .push_str(&format!(" [{:.1}s]", t.elapsed().as_secs_f64()));
        outcomes.push(o);
    };
    timed(&mut criterion_1);
    timed(&mut criterion_2);
    timed(&mut criterion_3);
    let t = Instant::now();
    let est = large_estimates();
    let sampling = t.elapsed().as_secs_f64();
    timed(&mut || {
        let mut o = criterion_4(&est);
        o.detail.push_str(&format!(" [sampling {sampling:.1}s]"));
        o
    });
    timed(&mut criterion_5);
    timed(&mut criterion_6);
    timed(&mut || criterion_7(&est));
    timed(&mut criterion_8);

    let mut unexpected = 0;
    for o in &outcomes {
        let known = KNOWN_FAILURES.contains(&o.id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known, see decisions ledger)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("{tag} criterion {}: {}", o.id, o.detail);
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!(
        "{passed}/{} criteria passed, {unexpected} unexpected failures",
        outcomes.len()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
