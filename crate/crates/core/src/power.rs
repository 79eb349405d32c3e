//! Power of the runs statistic against the classic χ² test under a
//! localized peak, and the null distribution of `T` after a straight-line
//! fit.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{ExactConfig, ExactDistribution};
use crate::mc::{mc_critical_value, run_experiments, simulate_null_side, NullSampleSet, TABLE_EXPERIMENTS};
use crate::rng::Domain;
use crate::runs::{largest_run_weights, ObservationSeries, PerSide, Side};
use crate::special::chi2_sf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakShape {
    /// `A / (1 + (x - β)² / γ²)`
    Cauchy,
    /// Gaussian with the same height and half width at half maximum.
    Gauss,
}

/// A peak added on top of the null expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakAlternative {
    pub amplitude: f64,
    pub location: f64,
    pub scale: f64,
    pub shape: PeakShape,
}

impl PeakAlternative {
    pub fn cauchy(amplitude: f64, location: f64, scale: f64) -> Self {
        Self {
            amplitude,
            location,
            scale,
            shape: PeakShape::Cauchy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::invalid(format!("peak scale must be positive, got {}", self.scale)));
        }
        if !self.amplitude.is_finite() || !self.location.is_finite() {
            return Err(Error::invalid("peak parameters must be finite"));
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.shape {
            PeakShape::Cauchy => cauchy_peak(x, self),
            PeakShape::Gauss => gauss_peak(x, self),
        }
    }
}

pub fn cauchy_peak(x: f64, alt: &PeakAlternative) -> f64 {
    let u = (x - alt.location) / alt.scale;
    alt.amplitude / (1.0 + u * u)
}

/// Gaussian peak reaching `A/2` at `x = β ± γ`, matching the Cauchy form.
pub fn gauss_peak(x: f64, alt: &PeakAlternative) -> f64 {
    let u = (x - alt.location) / alt.scale;
    alt.amplitude * (-std::f64::consts::LN_2 * u * u).exp()
}

/// p-value of the classic χ² test with `N` degrees of freedom.
pub fn chi2_total_pvalue(series: &ObservationSeries) -> Result<f64> {
    chi2_sf(series.chi_square(), series.len())
}

/// Design points, null expectation and uncertainties for simulated data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Design {
    pub x: Vec<f64>,
    pub baseline: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Design {
    /// `x_i = i` for `i = 1..=n`, zero baseline, unit sigma.
    pub fn unit(n: usize) -> Self {
        Self {
            x: (1..=n).map(|i| i as f64).collect(),
            baseline: vec![0.0; n],
            sigma: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::invalid("design has no points"));
        }
        if self.baseline.len() != self.x.len() || self.sigma.len() != self.x.len() {
            return Err(Error::invalid("design columns differ in length"));
        }
        if self.sigma.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::invalid("design sigmas must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerConfig {
    pub design: Design,
    pub experiments: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Side whose `T` is tested.
    pub side: Side,
    #[serde(skip)]
    pub exact: ExactConfig,
    /// Experiments in the Monte Carlo null table used when `N` exceeds the
    /// exact cutover.
    pub null_experiments: usize,
}

impl PowerConfig {
    pub fn new(design: Design, experiments: usize, alpha: f64, seed: u64) -> Self {
        Self {
            design,
            experiments,
            alpha,
            seed,
            side: Side::Success,
            exact: ExactConfig::default(),
            null_experiments: TABLE_EXPERIMENTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerPoint {
    pub amplitude: f64,
    pub power_t: f64,
    pub se_t: f64,
    pub power_chi2: f64,
    pub se_chi2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMethod {
    Exact,
    Mc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCurve {
    pub points: Vec<PowerPoint>,
    pub experiments: usize,
    pub alpha: f64,
    pub seed: u64,
    pub side: Side,
    /// Rejection threshold for `T`, fixed once from the null.
    pub t_critical: f64,
    pub threshold_method: ThresholdMethod,
}

impl PowerCurve {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["A", "power_T", "se_T", "power_chi2", "se_chi2"])?;
        for p in &self.points {
            out.write_record(&[
                p.amplitude.to_string(),
                p.power_t.to_string(),
                p.se_t.to_string(),
                p.power_chi2.to_string(),
                p.se_chi2.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn binomial_se(p: f64, k: usize) -> f64 {
    (p * (1.0 - p) / k as f64).sqrt()
}

/// Critical value of `T` under the null: exact within the cutover,
/// otherwise from a Monte Carlo table on its own substream domain.
fn null_threshold(config: &PowerConfig) -> Result<(f64, ThresholdMethod)> {
    let n = config.design.len();
    if n <= config.exact.max_exact_n {
        let t = ExactDistribution::new(n, config.exact)?.critical_value(config.alpha)?;
        return Ok((t, ThresholdMethod::Exact));
    }
    let table = simulate_null_side(
        n,
        config.null_experiments,
        crate::rng::substream_seed(config.seed, Domain::PowerNullTable),
        config.side,
    )?;
    Ok((mc_critical_value(config.alpha, &table)?, ThresholdMethod::Mc))
}

/// Rejection rates of `T` and χ² for data simulated under each
/// alternative and analysed under the baseline.
///
/// All alternatives share the same normal draws, so differences between
/// grid points reflect the peak rather than sampling noise.
pub fn power_study(alternatives: &[PeakAlternative], config: &PowerConfig) -> Result<PowerCurve> {
    if alternatives.is_empty() {
        return Err(Error::invalid("no amplitudes given"));
    }
    if config.experiments < 100 {
        return Err(Error::invalid("power study needs at least 100 experiments"));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", config.alpha)));
    }
    config.design.validate()?;
    for alt in alternatives {
        alt.validate()?;
    }
    let (t_critical, threshold_method) = null_threshold(config)?;
    let design = &config.design;
    let n = design.len();
    let k = config.experiments;

    let mut points = Vec::with_capacity(alternatives.len());
    for alt in alternatives {
        let shift: Vec<f64> = design.x.iter().map(|&x| alt.value(x)).collect();
        let outcomes = run_experiments(k, n, config.seed, Domain::PowerAlternative, |z, _| {
            for i in 0..n {
                // y = f + g + σz, analysed against f
                let y = design.baseline[i] + shift[i] + design.sigma[i] * z[i];
                z[i] = (y - design.baseline[i]) / design.sigma[i];
            }
            let t = *largest_run_weights(z).get(config.side);
            let reject_t = t.is_some_and(|t| t >= t_critical);
            let chi2: f64 = z.iter().map(|r| r * r).sum();
            let reject_chi2 = chi2_sf(chi2, n).map(|p| p <= config.alpha);
            (reject_t, reject_chi2)
        });
        let mut hits_t = 0usize;
        let mut hits_chi2 = 0usize;
        for (rt, rc) in outcomes {
            hits_t += rt as usize;
            hits_chi2 += rc? as usize;
        }
        let power_t = hits_t as f64 / k as f64;
        let power_chi2 = hits_chi2 as f64 / k as f64;
        points.push(PowerPoint {
            amplitude: alt.amplitude,
            power_t,
            se_t: binomial_se(power_t, k),
            power_chi2,
            se_chi2: binomial_se(power_chi2, k),
        });
    }
    Ok(PowerCurve {
        points,
        experiments: k,
        alpha: config.alpha,
        seed: config.seed,
        side: config.side,
        t_critical,
        threshold_method,
    })
}

/// Levels at which fitted critical values are reported.
pub const FIT_STUDY_ALPHAS: [f64; 3] = [0.05, 0.01, 0.001];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitStudyConfig {
    pub n: usize,
    pub experiments: usize,
    pub slope: f64,
    pub intercept: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Design points; `None` means `x_i = i`.
    pub x: Option<Vec<f64>>,
}

impl FitStudyConfig {
    pub fn new(n: usize, experiments: usize, seed: u64) -> Self {
        Self {
            n,
            experiments,
            slope: 1.0,
            intercept: 0.0,
            sigma: 1.0,
            seed,
            x: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitCriticalValue {
    pub alpha: f64,
    pub success: f64,
    pub failure: f64,
    /// Exact critical value without fitted parameters, when `N` is within
    /// the exact cutover.
    pub no_fit_exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitStudyResult {
    #[serde(skip)]
    pub samples: PerSide<NullSampleSet>,
    pub critical_values: Vec<FitCriticalValue>,
}

impl FitStudyResult {
    /// Writes `side,t,p_value` rows, `p_value` being the fraction of
    /// fitted samples at or above `t`.
    pub fn write_ecdf_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["side", "t", "p_value"])?;
        for side in Side::BOTH {
            let s = self.samples.get(side);
            let k = s.retained();
            for (i, v) in s.values().iter().enumerate() {
                // first index of a tie block gives the ≥ count
                if i > 0 && s.values()[i - 1] == *v {
                    continue;
                }
                let p = (k - i) as f64 / k as f64;
                out.write_record(&[side.to_string(), v.to_string(), p.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Least-squares line through `(x, y)` with precomputed design moments.
struct LineFitter {
    x: Vec<f64>,
    mean_x: f64,
    sxx: f64,
}

impl LineFitter {
    fn new(x: Vec<f64>) -> Result<Self> {
        let n = x.len() as f64;
        let mean_x = x.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mean_x).powi(2)).sum();
        if !(sxx > 0.0) {
            return Err(Error::invalid("degenerate design: all x values are equal"));
        }
        Ok(Self { x, mean_x, sxx })
    }

    fn fit(&self, y: &[f64]) -> (f64, f64) {
        let n = y.len() as f64;
        let mean_y = y.iter().sum::<f64>() / n;
        let sxy: f64 = self.x.iter().zip(y).map(|(x, y)| (x - self.mean_x) * (y - mean_y)).sum();
        let m = sxy / self.sxx;
        (m, mean_y - m * self.mean_x)
    }
}

/// Distribution of `T` when the line parameters are fitted to the same
/// data the statistic is computed on.
pub fn fit_study(config: &FitStudyConfig) -> Result<FitStudyResult> {
    if config.n < 3 {
        return Err(Error::invalid(format!(
            "fit study needs at least 3 points for a two-parameter fit, got {}",
            config.n
        )));
    }
    if config.experiments == 0 {
        return Err(Error::invalid("number of experiments must be at least 1"));
    }
    if !(config.sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let x = match &config.x {
        Some(x) if x.len() != config.n => {
            return Err(Error::invalid("design length differs from n"));
        }
        Some(x) => x.clone(),
        None => (1..=config.n).map(|i| i as f64).collect(),
    };
    let fitter = LineFitter::new(x)?;
    let n = config.n;
    let outcomes = run_experiments(config.experiments, n, config.seed, Domain::FitStudy, |z, _| {
        let y: Vec<f64> = fitter
            .x
            .iter()
            .zip(z.iter())
            .map(|(&x, &e)| config.slope * x + config.intercept + config.sigma * e)
            .collect();
        let (m, b) = fitter.fit(&y);
        for i in 0..n {
            z[i] = (y[i] - (m * fitter.x[i] + b)) / config.sigma;
        }
        largest_run_weights(z)
    });
    let samples = PerSide {
        success: NullSampleSet::from_experiments(
            Side::Success,
            n,
            config.seed,
            outcomes.iter().map(|o| o.success),
        )?,
        failure: NullSampleSet::from_experiments(
            Side::Failure,
            n,
            config.seed,
            outcomes.iter().map(|o| o.failure),
        )?,
    };
    let exact = ExactDistribution::new(n, ExactConfig::default()).ok();
    let critical_values = FIT_STUDY_ALPHAS
        .iter()
        .map(|&alpha| {
            Ok(FitCriticalValue {
                alpha,
                success: mc_critical_value(alpha, &samples.success)?,
                failure: mc_critical_value(alpha, &samples.failure)?,
                no_fit_exact: exact.as_ref().map(|d| d.critical_value(alpha)).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FitStudyResult {
        samples,
        critical_values,
    })
}
