//! Monte Carlo null distribution of `T`.
//!
//! Each experiment draws `N` standard normal residuals, computes the
//! largest success-run and failure-run weights, and keeps the value for a
//! side only when that side has at least one run. p-values are the fraction
//! of retained values at or above the observed statistic.

use std::io::{BufRead, Write};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, substream, Domain};
use crate::runs::{largest_run_weights, PerSide, Side};

/// Experiments used for critical-value tables.
pub const TABLE_EXPERIMENTS: usize = 100_000;
/// Experiments used for one-off p-values.
pub const QUICK_EXPERIMENTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SidePolicy {
    Success,
    Failure,
    Both,
}

impl SidePolicy {
    pub fn sides(self) -> &'static [Side] {
        match self {
            SidePolicy::Success => &[Side::Success],
            SidePolicy::Failure => &[Side::Failure],
            SidePolicy::Both => &Side::BOTH,
        }
    }
}

impl From<Side> for SidePolicy {
    fn from(side: Side) -> Self {
        match side {
            Side::Success => SidePolicy::Success,
            Side::Failure => SidePolicy::Failure,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    /// Number of simulated experiments `K`.
    pub experiments: usize,
    /// Observations per experiment `N`.
    pub n: usize,
    pub seed: u64,
    pub sides: SidePolicy,
}

impl McConfig {
    pub fn new(n: usize, experiments: usize, seed: u64) -> Self {
        Self {
            experiments,
            n,
            seed,
            sides: SidePolicy::Both,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiments == 0 {
            return Err(Error::invalid("number of experiments must be at least 1"));
        }
        if self.n == 0 {
            return Err(Error::invalid("observations per experiment must be at least 1"));
        }
        Ok(())
    }
}

/// Runs `experiments` independent experiments of `n` standard normal
/// draws each. Experiment `j` always sees substream `j`, so the output is
/// identical for any thread count.
pub(crate) fn run_experiments<T, F>(
    experiments: usize,
    n: usize,
    seed: u64,
    domain: Domain,
    f: F,
) -> Vec<T>
where
    T: Send,
    F: Fn(&mut [f64], &mut ChaCha8Rng) -> T + Sync,
{
    (0..experiments as u64)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, j| {
                let mut rng = substream(seed, domain, j);
                fill_standard_normal(&mut rng, buf);
                f(buf, &mut rng)
            },
        )
        .collect()
}

/// Retained null values of `T` for one side, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullSampleSet {
    pub side: Side,
    pub n: usize,
    pub experiments: usize,
    pub seed: u64,
    /// Experiments without a run on this side.
    pub discarded: usize,
    values: Vec<f64>,
}

impl NullSampleSet {
    /// Builds a set from per-experiment values, `None` meaning the
    /// experiment had no run on this side.
    pub fn from_experiments(
        side: Side,
        n: usize,
        seed: u64,
        outcomes: impl IntoIterator<Item = Option<f64>>,
    ) -> Result<Self> {
        let mut values = Vec::new();
        let mut discarded = 0;
        for v in outcomes {
            match v {
                Some(v) => values.push(v),
                None => discarded += 1,
            }
        }
        if values.is_empty() {
            return Err(Error::EmptySample(format!(
                "all {discarded} experiments were filtered out on the {side} side"
            )));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self {
            side,
            n,
            experiments: values.len() + discarded,
            seed,
            discarded,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `K'`.
    pub fn retained(&self) -> usize {
        self.values.len()
    }

    pub fn ecdf(&self) -> Ecdf {
        Ecdf::from_sorted(self.values.clone())
    }

    pub fn pvalue(&self, t_obs: f64) -> McPValue {
        mc_pvalue(t_obs, self)
    }

    pub fn critical_value(&self, alpha: f64) -> Result<f64> {
        mc_critical_value(alpha, self)
    }

    /// Writes the set as text: one comment line echoing the
    /// configuration, a `t` header, then one value per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# runstat null samples: side={} n={} experiments={} seed={} discarded={}",
            self.side, self.n, self.experiments, self.seed, self.discarded
        )?;
        writeln!(w, "t")?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::data(Some(1), "empty sample file"))?;
        let first = first?;
        let echo = first
            .strip_prefix("# runstat null samples:")
            .ok_or_else(|| Error::data(Some(1), "missing configuration line"))?;
        let mut side = None;
        let mut n = None;
        let mut experiments = None;
        let mut seed = None;
        let mut discarded = None;
        for kv in echo.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::data(Some(1), format!("malformed field '{kv}'")))?;
            let bad = |_| Error::data(Some(1), format!("malformed value in '{kv}'"));
            match k {
                "side" => side = Some(v.parse::<Side>().map_err(|_| Error::data(Some(1), format!("unknown side '{v}'")))?),
                "n" => n = Some(v.parse::<usize>().map_err(bad)?),
                "experiments" => experiments = Some(v.parse::<usize>().map_err(bad)?),
                "seed" => seed = Some(v.parse::<u64>().map_err(bad)?),
                "discarded" => discarded = Some(v.parse::<usize>().map_err(bad)?),
                _ => {}
            }
        }
        let missing = |name: &str| Error::data(Some(1), format!("configuration line lacks '{name}'"));
        let side = side.ok_or_else(|| missing("side"))?;
        let n = n.ok_or_else(|| missing("n"))?;
        let experiments = experiments.ok_or_else(|| missing("experiments"))?;
        let seed = seed.ok_or_else(|| missing("seed"))?;
        let discarded = discarded.ok_or_else(|| missing("discarded"))?;

        match lines.next() {
            Some((_, Ok(h))) if h.trim() == "t" => {}
            _ => return Err(Error::data(Some(2), "expected header 't'")),
        }
        let mut values = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| Error::data(Some(i + 1), format!("not a number: '{line}'")))?;
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::data(Some(i + 1), format!("invalid statistic value {v}")));
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::EmptySample("sample file contains no values".into()));
        }
        if values.len() + discarded != experiments {
            return Err(Error::data(
                None,
                format!(
                    "{} values plus {discarded} discarded does not match {experiments} experiments",
                    values.len()
                ),
            ));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self {
            side,
            n,
            experiments,
            seed,
            discarded,
            values,
        })
    }
}

/// Simulates the null distribution for each side in `config.sides`, in
/// that order.
pub fn simulate_null(config: &McConfig) -> Result<Vec<NullSampleSet>> {
    config.validate()?;
    let outcomes = run_experiments(
        config.experiments,
        config.n,
        config.seed,
        Domain::NullSamples,
        |z, _| largest_run_weights(z),
    );
    config
        .sides
        .sides()
        .iter()
        .map(|&side| {
            NullSampleSet::from_experiments(
                side,
                config.n,
                config.seed,
                outcomes.iter().map(|o: &PerSide<Option<f64>>| *o.get(side)),
            )
        })
        .collect()
}

/// Single-side convenience wrapper around [`simulate_null`].
pub fn simulate_null_side(n: usize, experiments: usize, seed: u64, side: Side) -> Result<NullSampleSet> {
    let config = McConfig {
        experiments,
        n,
        seed,
        sides: side.into(),
    };
    simulate_null(&config).map(|mut v| v.remove(0))
}

/// Empirical distribution function with linear interpolation.
///
/// The `i`-th order statistic (0-based) carries cumulative fraction
/// `(i + 1/2) / K'`, the midpoint of the ECDF step there. Below the
/// smallest point the function is 0 and above the largest it is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    points: Vec<f64>,
}

impl Ecdf {
    pub fn from_sorted(points: Vec<f64>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] <= w[1]));
        Self { points }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn fraction_at(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.points.len() as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        let (Some(&lo), Some(&hi)) = (pts.first(), pts.last()) else {
            return 0.0;
        };
        if x < lo {
            return 0.0;
        }
        if x > hi {
            return 1.0;
        }
        // last index with pts[i] <= x
        let i = pts.partition_point(|&p| p <= x) - 1;
        if i + 1 == pts.len() || pts[i] == x {
            return self.fraction_at(i);
        }
        let (x0, x1) = (pts[i], pts[i + 1]);
        let (f0, f1) = (self.fraction_at(i), self.fraction_at(i + 1));
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }

    /// Inverse of [`Ecdf::eval`] for `q` between the first and last
    /// cumulative fractions.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        let k = self.points.len();
        if k == 0 {
            return None;
        }
        let h = q * k as f64 - 0.5;
        if h < 0.0 || h > (k - 1) as f64 {
            return None;
        }
        let i = h.floor() as usize;
        let frac = h - i as f64;
        if i + 1 >= k {
            return Some(self.points[k - 1]);
        }
        Some(self.points[i] + frac * (self.points[i + 1] - self.points[i]))
    }
}

/// Monte Carlo p-value with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McPValue {
    pub p: f64,
    pub standard_error: f64,
    pub retained: usize,
    /// `t_obs` exceeds every simulated value; `p = 0` only bounds the
    /// true p-value from above by about `1/K'`.
    pub beyond_support: bool,
}

/// Fraction of retained samples at or above `t_obs`.
pub fn mc_pvalue(t_obs: f64, samples: &NullSampleSet) -> McPValue {
    let v = samples.values();
    let k = v.len();
    let below = v.partition_point(|&x| x < t_obs);
    let p = (k - below) as f64 / k as f64;
    McPValue {
        p,
        standard_error: (p * (1.0 - p) / k as f64).sqrt(),
        retained: k,
        beyond_support: below == k,
    }
}

/// Threshold `t*` with `1 - ECDF(t*) = alpha`.
pub fn mc_critical_value(alpha: f64, samples: &NullSampleSet) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let k = samples.retained() as f64;
    if k * alpha.min(1.0 - alpha) < 10.0 {
        return Err(Error::InsufficientTail(format!(
            "{} retained samples leave fewer than 10 in the tail at alpha = {alpha}; increase the number of experiments",
            samples.retained()
        )));
    }
    samples
        .ecdf()
        .quantile(1.0 - alpha)
        .ok_or_else(|| Error::InsufficientTail(format!("alpha = {alpha} outside sample support")))
}

/// Least-squares line `T_crit ≈ slope · ln N + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub alpha: f64,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    /// One critical value per requested alpha, in order.
    pub critical_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalValueScaling {
    pub alphas: Vec<f64>,
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<LineFit>,
}

/// Monte Carlo critical values over an `(N, alpha)` grid on the success
/// side, with a per-alpha line fit against `ln N`.
pub fn critical_value_scaling(
    alphas: &[f64],
    ns: &[usize],
    experiments: usize,
    seed: u64,
) -> Result<CriticalValueScaling> {
    let mut distinct = ns.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::invalid("a line fit needs at least two distinct values of N"));
    }
    if alphas.is_empty() {
        return Err(Error::invalid("no alpha levels given"));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let samples = simulate_null_side(n, experiments, seed, Side::Success)?;
        let critical_values = alphas
            .iter()
            .map(|&a| mc_critical_value(a, &samples))
            .collect::<Result<Vec<_>>>()?;
        rows.push(ScalingRow { n, critical_values });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let fits = alphas
        .iter()
        .enumerate()
        .map(|(j, &alpha)| {
            let ys: Vec<f64> = rows.iter().map(|r| r.critical_values[j]).collect();
            let (slope, intercept) = least_squares_line(&xs, &ys)?;
            Ok(LineFit { alpha, slope, intercept })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CriticalValueScaling {
        alphas: alphas.to_vec(),
        rows,
        fits,
    })
}

/// Ordinary least squares `y ≈ slope · x + intercept`.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("degenerate design: all abscissae are equal"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
