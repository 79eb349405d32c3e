//! Run decomposition of an ordered observation series and the observed
//! weighted-runs statistic.
//!
//! An observation is a success when it lies strictly above its expected
//! value; exact ties count as failures. The weight of a run is the χ² sum of
//! its standardized residuals and `T` is the largest weight among the runs
//! of one side.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::RunLengthVector;

/// Which runs the statistic is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Success,
    Failure,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Success, Side::Failure];

    pub fn opposite(self) -> Side {
        match self {
            Side::Success => Side::Failure,
            Side::Failure => Side::Success,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Success => "success",
            Side::Failure => "failure",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "success" => Ok(Side::Success),
            "failure" => Ok(Side::Failure),
            _ => Err(Error::invalid(format!("unknown side '{s}'"))),
        }
    }
}

/// A pair of values, one per side.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerSide<T> {
    pub success: T,
    pub failure: T,
}

impl<T> PerSide<T> {
    pub fn get(&self, side: Side) -> &T {
        match side {
            Side::Success => &self.success,
            Side::Failure => &self.failure,
        }
    }

    pub fn get_mut(&mut self, side: Side) -> &mut T {
        match side {
            Side::Success => &mut self.success,
            Side::Failure => &mut self.failure,
        }
    }
}

/// One ordered observation with its Gaussian expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: f64,
    pub observed: f64,
    pub mean: f64,
    pub sigma: f64,
}

impl Observation {
    /// Standardized residual `(X - μ) / σ`.
    pub fn residual(&self) -> f64 {
        (self.observed - self.mean) / self.sigma
    }

    pub fn is_success(&self) -> bool {
        self.observed > self.mean
    }
}

/// A validated, ordered, non-empty series of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    obs: Vec<Observation>,
}

impl ObservationSeries {
    pub fn new(obs: Vec<Observation>) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::data(None, "series must contain at least one observation"));
        }
        for (i, o) in obs.iter().enumerate() {
            if !(o.x.is_finite() && o.observed.is_finite() && o.mean.is_finite()) {
                return Err(Error::data(Some(i + 1), "non-finite value"));
            }
            if !(o.sigma > 0.0) || !o.sigma.is_finite() {
                return Err(Error::data(
                    Some(i + 1),
                    format!("sigma must be strictly positive, got {}", o.sigma),
                ));
            }
        }
        Ok(Self { obs })
    }

    /// Series with `x_i = i`, zero means, unit sigmas and the given
    /// observations.
    pub fn from_standardized(residuals: &[f64]) -> Result<Self> {
        Self::new(
            residuals
                .iter()
                .enumerate()
                .map(|(i, &r)| Observation {
                    x: (i + 1) as f64,
                    observed: r,
                    mean: 0.0,
                    sigma: 1.0,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.obs
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.obs.iter().map(Observation::residual).collect()
    }

    /// Mirror every observation about its mean.
    pub fn negated(&self) -> Self {
        Self {
            obs: self
                .obs
                .iter()
                .map(|o| Observation {
                    observed: o.mean - (o.observed - o.mean),
                    ..*o
                })
                .collect(),
        }
    }

    /// The classic statistic `Σ (X_i - μ_i)² / σ_i²`.
    pub fn chi_square(&self) -> f64 {
        self.obs.iter().map(|o| o.residual().powi(2)).sum()
    }
}

/// The split of a series into success and failure runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunDecomposition {
    signs: Vec<Side>,
    success_runs: Vec<Range<usize>>,
    failure_runs: Vec<Range<usize>>,
    run_lengths: RunLengthVector,
}

impl RunDecomposition {
    /// Decomposes a plain sign sequence.
    pub fn from_signs(signs: Vec<Side>) -> Self {
        let mut success_runs = Vec::new();
        let mut failure_runs = Vec::new();
        let mut start = 0;
        for i in 1..=signs.len() {
            if i == signs.len() || signs[i] != signs[start] {
                let run = start..i;
                match signs[start] {
                    Side::Success => success_runs.push(run),
                    Side::Failure => failure_runs.push(run),
                }
                start = i;
            }
        }
        let run_lengths = RunLengthVector::from_run_lengths(success_runs.iter().map(|r| r.len()));
        Self {
            signs,
            success_runs,
            failure_runs,
            run_lengths,
        }
    }

    pub fn signs(&self) -> &[Side] {
        &self.signs
    }

    pub fn runs(&self, side: Side) -> &[Range<usize>] {
        match side {
            Side::Success => &self.success_runs,
            Side::Failure => &self.failure_runs,
        }
    }

    /// Success-run length vector `n`.
    pub fn run_lengths(&self) -> &RunLengthVector {
        &self.run_lengths
    }

    /// Number of successes `r`.
    pub fn successes(&self) -> usize {
        self.run_lengths.successes()
    }

    /// Number of success runs `M`.
    pub fn success_run_count(&self) -> usize {
        self.success_runs.len()
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// Rebuilds the sign sequence from the run ranges alone.
    pub fn reconstruct_signs(&self) -> Vec<Side> {
        let mut out = vec![Side::Failure; self.len()];
        for r in &self.success_runs {
            out[r.clone()].fill(Side::Success);
        }
        out
    }
}

pub fn decompose_runs(series: &ObservationSeries) -> RunDecomposition {
    let signs = series
        .observations()
        .iter()
        .map(|o| if o.is_success() { Side::Success } else { Side::Failure })
        .collect();
    RunDecomposition::from_signs(signs)
}

/// χ² weight of the observations in `range`.
pub fn run_weight(series: &ObservationSeries, range: Range<usize>) -> f64 {
    series.observations()[range]
        .iter()
        .map(|o| o.residual().powi(2))
        .sum()
}

/// The observed statistic for one side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatisticValue {
    pub side: Side,
    pub t_obs: f64,
    /// Run attaining the maximum (first one on ties).
    pub argmax: Range<usize>,
    /// Weights of all runs of this side, in order.
    pub weights: Vec<f64>,
}

/// Largest run weight on `side`, or `None` when that side has no runs.
pub fn compute_statistic(series: &ObservationSeries, side: Side) -> Option<StatisticValue> {
    let decomposition = decompose_runs(series);
    statistic_from_decomposition(series, &decomposition, side)
}

pub fn statistic_from_decomposition(
    series: &ObservationSeries,
    decomposition: &RunDecomposition,
    side: Side,
) -> Option<StatisticValue> {
    let runs = decomposition.runs(side);
    let weights: Vec<f64> = runs.iter().map(|r| run_weight(series, r.clone())).collect();
    let (best, &t_obs) = weights
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &f64)>, (i, w)| match acc {
            Some((_, b)) if *b >= *w => acc,
            _ => Some((i, w)),
        })?;
    Some(StatisticValue {
        side,
        t_obs,
        argmax: runs[best].clone(),
        weights,
    })
}

/// Largest run weight per side from standardized residuals, in one pass.
///
/// Equivalent to [`compute_statistic`] on a series with these residuals;
/// used on the simulation hot paths.
pub fn largest_run_weights(residuals: &[f64]) -> PerSide<Option<f64>> {
    let mut best = PerSide {
        success: None::<f64>,
        failure: None::<f64>,
    };
    let mut current: Option<(Side, f64)> = None;
    let close = |best: &mut PerSide<Option<f64>>, side: Side, w: f64| {
        let slot = best.get_mut(side);
        if slot.is_none_or(|b| w > b) {
            *slot = Some(w);
        }
    };
    for &z in residuals {
        let side = if z > 0.0 { Side::Success } else { Side::Failure };
        let w = z * z;
        current = match current {
            Some((s, acc)) if s == side => Some((s, acc + w)),
            Some((s, acc)) => {
                close(&mut best, s, acc);
                Some((side, w))
            }
            None => Some((side, w)),
        };
    }
    if let Some((s, acc)) = current {
        close(&mut best, s, acc);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signs(s: &str) -> Vec<Side> {
        s.chars()
            .map(|c| if c == 'S' { Side::Success } else { Side::Failure })
            .collect()
    }

    #[test]
    fn decomposition_examples() {
        let d = RunDecomposition::from_signs(signs("SSSFFSFS"));
        assert_eq!(d.run_lengths().counts(), &[2, 0, 1]);
        assert_eq!(d.successes(), 5);
        assert_eq!(d.success_run_count(), 3);
        assert_eq!(d.runs(Side::Success), &[0..3, 5..6, 7..8]);
        assert_eq!(d.runs(Side::Failure), &[3..5, 6..7]);

        let d = RunDecomposition::from_signs(signs("FFFF"));
        assert_eq!(d.successes(), 0);
        assert_eq!(d.success_run_count(), 0);
        assert_eq!(d.run_lengths().padded(4), vec![0, 0, 0, 0]);

        let d = RunDecomposition::from_signs(signs("FSFSS"));
        assert_eq!(d.run_lengths().counts(), &[1, 1]);
        assert_eq!(d.successes(), 3);
        assert_eq!(d.success_run_count(), 2);
    }

    #[test]
    fn ties_are_failures() {
        let s = ObservationSeries::from_standardized(&[0.0, 1.0, 0.0]).unwrap();
        let d = decompose_runs(&s);
        assert_eq!(d.signs(), &signs("FSF")[..]);
    }

    #[test]
    fn validation() {
        assert!(ObservationSeries::new(vec![]).is_err());
        let bad = Observation { x: 1.0, observed: 1.0, mean: 0.0, sigma: 0.0 };
        assert!(matches!(ObservationSeries::new(vec![bad]), Err(Error::Data { row: Some(1), .. })));
        let bad = Observation { sigma: -2.0, ..bad };
        assert!(ObservationSeries::new(vec![bad]).is_err());
        let nan = Observation { x: 1.0, observed: f64::NAN, mean: 0.0, sigma: 1.0 };
        assert!(ObservationSeries::new(vec![nan]).is_err());
    }

    #[test]
    fn run_weight_examples() {
        let s = ObservationSeries::new(vec![Observation { x: 0.0, observed: 5.0, mean: 1.0, sigma: 2.0 }]).unwrap();
        assert_eq!(run_weight(&s, 0..1), 4.0);
        let s = ObservationSeries::from_standardized(&[0.0, 0.0]).unwrap();
        assert_eq!(run_weight(&s, 0..2), 0.0);
        let s = ObservationSeries::from_standardized(&[0.5, 1.0, 1.5]).unwrap();
        assert_eq!(run_weight(&s, 0..3), 3.5);
    }

    #[test]
    fn statistic_examples() {
        let s = ObservationSeries::from_standardized(&[1.7]).unwrap();
        let v = compute_statistic(&s, Side::Success).unwrap();
        assert!((v.t_obs - 2.89).abs() < 1e-12);
        assert!(compute_statistic(&s, Side::Failure).is_none());

        let w = [3.1f64, 7.4, 0.2];
        let residuals = [w[0].sqrt(), -1.0, w[1].sqrt(), -1.0, w[2].sqrt()];
        let s = ObservationSeries::from_standardized(&residuals).unwrap();
        let v = compute_statistic(&s, Side::Success).unwrap();
        assert!((v.t_obs - 7.4).abs() < 1e-12);
        assert_eq!(v.argmax, 2..3);
        assert_eq!(v.weights.len(), 3);
    }

    #[test]
    fn fast_path_matches_general_path() {
        let residuals = [0.3, 1.2, -0.4, -2.0, 0.0, 0.9, -0.1, 2.2, 1.1];
        let s = ObservationSeries::from_standardized(&residuals).unwrap();
        let fast = largest_run_weights(&residuals);
        for side in Side::BOTH {
            let slow = compute_statistic(&s, side).map(|v| v.t_obs);
            assert_eq!(*fast.get(side), slow);
        }
        assert_eq!(largest_run_weights(&[1.0, 2.0]).failure, None);
    }
}
