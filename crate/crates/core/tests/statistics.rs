//! Distributional checks of the simulation engine against the exact
//! distribution and against its own symmetries.

use rand::Rng;

use runstat::exact::{ExactConfig, ExactDistribution};
use runstat::ks::{ks_one_sample, ks_two_sample};
use runstat::mc::simulate_null_side;
use runstat::power::{
    fit_study, power_study, Design, FitStudyConfig, PeakAlternative, PeakShape, PowerConfig,
};
use runstat::rng::{substream, Domain};
use runstat::runs::{largest_run_weights, Side};

#[test]
fn success_and_failure_sides_are_exchangeable() {
    for n in [10, 25] {
        let a = simulate_null_side(n, 10_000, 101, Side::Success).unwrap();
        let b = simulate_null_side(n, 10_000, 202, Side::Failure).unwrap();
        let ks = ks_two_sample(a.values(), b.values()).unwrap();
        assert!(ks.p_value > 0.01, "N = {n}: D = {}, p = {}", ks.statistic, ks.p_value);
    }
}

#[test]
fn mc_tail_matches_exact_tail() {
    let k = 10_000;
    for n in [5, 10, 25, 50] {
        let dist = ExactDistribution::new(n, ExactConfig::default()).unwrap();
        let samples = simulate_null_side(n, k, 303, Side::Success).unwrap();
        let grid: Vec<f64> = (0..30).map(|i| 0.5 + i as f64).collect();
        let mut max_se = 0.0f64;
        let mut sup = 0.0f64;
        for &t in &grid {
            let p = dist.pvalue(t).unwrap();
            max_se = max_se.max((p * (1.0 - p) / samples.retained() as f64).sqrt());
            sup = sup.max((samples.pvalue(t).p - p).abs());
        }
        assert!(sup <= 3.0 * max_se, "N = {n}: sup {sup}, 3 SE {}", 3.0 * max_se);
    }
}

#[test]
fn null_p_values_are_uniform() {
    let n = 25;
    let table = simulate_null_side(n, 100_000, 404, Side::Success).unwrap();
    let mut rng = substream(405, Domain::Validation, 0);
    let mut pvalues = Vec::new();
    let mut z = vec![0.0; n];
    while pvalues.len() < 2000 {
        for v in z.iter_mut() {
            *v = rng.sample(rand_distr::StandardNormal);
        }
        if let Some(t) = largest_run_weights(&z).success {
            pvalues.push(table.pvalue(t).p);
        }
    }
    let ks = ks_one_sample(&pvalues, |p| Ok(p.clamp(0.0, 1.0))).unwrap();
    assert!(ks.p_value > 0.01, "D = {}, p = {}", ks.statistic, ks.p_value);
}

/// Pool-adjacent-violators fit of a nondecreasing sequence.
fn isotonic(ys: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &y in ys {
        blocks.push((y, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (m2, c2) = blocks.pop().unwrap();
            let (m1, c1) = blocks.pop().unwrap();
            blocks.push(((m1 * c1 as f64 + m2 * c2 as f64) / (c1 + c2) as f64, c1 + c2));
        }
    }
    blocks.into_iter().flat_map(|(m, c)| std::iter::repeat_n(m, c)).collect()
}

fn curve(shape: PeakShape, amplitudes: &[f64]) -> Vec<runstat::power::PowerPoint> {
    let alts: Vec<_> = amplitudes
        .iter()
        .map(|&a| PeakAlternative { shape, ..PeakAlternative::cauchy(a, 5.5, 2.0) })
        .collect();
    let config = PowerConfig::new(Design::unit(10), 5_000, 0.05, 505);
    power_study(&alts, &config).unwrap().points
}

#[test]
fn power_grows_with_amplitude() {
    let amplitudes: Vec<f64> = (0..=12).map(|i| i as f64 * 0.5).collect();
    let points = curve(PeakShape::Cauchy, &amplitudes);
    // common random numbers and a positive peak make T pointwise
    // nondecreasing in A, so its power is exactly monotone
    assert!(points.windows(2).all(|w| w[1].power_t >= w[0].power_t));
    let chi2: Vec<f64> = points.iter().map(|p| p.power_chi2).collect();
    for (p, fit) in points.iter().zip(isotonic(&chi2)) {
        let se = p.se_chi2.max(0.003);
        assert!((p.power_chi2 - fit).abs() <= 3.0 * se, "{p:?} vs isotonic {fit}");
    }
}

#[test]
fn gauss_peak_keeps_the_advantage() {
    let points = curve(PeakShape::Gauss, &[1.0, 1.5, 2.0]);
    for p in &points {
        let se = (p.se_t.powi(2) + p.se_chi2.powi(2)).sqrt();
        assert!(p.power_t - p.power_chi2 > 3.0 * se, "{p:?}");
    }
}

#[test]
fn fitting_lowers_critical_values() {
    let result = fit_study(&FitStudyConfig::new(10, 10_000, 606)).unwrap();
    for cv in &result.critical_values {
        let no_fit = cv.no_fit_exact.unwrap();
        assert!(cv.success < no_fit && cv.failure < no_fit, "{cv:?}");
    }
    let exact = ExactDistribution::new(10, ExactConfig::default()).unwrap();
    for side in Side::BOTH {
        let samples = result.samples.get(side);
        for i in 0..30 {
            let t = 4.0 + i as f64 * 0.5;
            let fitted = samples.pvalue(t);
            let no_fit = exact.pvalue(t).unwrap();
            let se = (no_fit * (1.0 - no_fit) / samples.retained() as f64).sqrt();
            assert!(fitted.p <= no_fit + 3.0 * se, "{side} at t = {t}: {} vs {no_fit}", fitted.p);
        }
    }
}
