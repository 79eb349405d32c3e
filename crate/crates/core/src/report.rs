//! End-to-end test of one observation series, producing a serializable
//! report.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{ExactConfig, ExactDistribution};
use crate::mc::{simulate_null, McConfig, SidePolicy};
use crate::runs::{decompose_runs, statistic_from_decomposition, ObservationSeries, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Auto,
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOptions {
    pub method: MethodChoice,
    pub sides: SidePolicy,
    pub mc_experiments: usize,
    pub seed: u64,
    pub alpha: f64,
    pub exact: ExactConfig,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self {
            method: MethodChoice::Auto,
            sides: SidePolicy::Both,
            mc_experiments: crate::mc::QUICK_EXPERIMENTS,
            seed: 0,
            alpha: 0.05,
            exact: ExactConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideReport {
    pub side: Side,
    /// Absent when the series has no run on this side.
    pub t_obs: Option<f64>,
    /// Half-open index range `[start, end)` of the maximizing run.
    pub argmax_run: Option<[usize; 2]>,
    pub run_count: usize,
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beyond_mc_support: Option<bool>,
    pub reject: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    /// Number of successes `r`.
    pub successes: usize,
    pub success_runs: usize,
    pub failure_runs: usize,
    /// Success-run counts by length, trailing zeros dropped.
    pub run_length_vector: Vec<u32>,
    pub chi_square: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub n: usize,
    pub method: Method,
    pub exact_cutover: usize,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_experiments: Option<usize>,
    pub sides: Vec<SideReport>,
    pub runs: RunSummary,
}

pub fn run_test(series: &ObservationSeries, opts: &TestOptions) -> Result<TestReport> {
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", opts.alpha)));
    }
    let n = series.len();
    let cutover = opts.exact.max_exact_n;
    let method = match opts.method {
        MethodChoice::Exact => {
            if n > cutover {
                return Err(Error::Capability(format!(
                    "exact method requested for N = {n}, above the exact cutover of {cutover}"
                )));
            }
            Method::Exact
        }
        MethodChoice::Mc => Method::Mc,
        MethodChoice::Auto if n <= cutover => Method::Exact,
        MethodChoice::Auto => Method::Mc,
    };

    let decomposition = decompose_runs(series);
    let sides = opts.sides.sides();
    let statistics: Vec<_> = sides
        .iter()
        .map(|&side| statistic_from_decomposition(series, &decomposition, side))
        .collect();

    let needs_null = statistics.iter().any(Option::is_some);
    let exact = match method {
        Method::Exact if needs_null => Some(ExactDistribution::new(n, opts.exact)?),
        _ => None,
    };
    let null_sets = match method {
        Method::Mc if needs_null => Some(simulate_null(&McConfig {
            experiments: opts.mc_experiments,
            n,
            seed: opts.seed,
            sides: opts.sides,
        })?),
        _ => None,
    };

    let mut reports = Vec::with_capacity(sides.len());
    for (i, (&side, stat)) in sides.iter().zip(&statistics).enumerate() {
        let run_count = decomposition.runs(side).len();
        let Some(stat) = stat else {
            reports.push(SideReport {
                side,
                t_obs: None,
                argmax_run: None,
                run_count,
                p_value: None,
                standard_error: None,
                beyond_mc_support: None,
                reject: None,
                note: Some(format!("no {side} runs; no p-value computable")),
            });
            continue;
        };
        let (p, se, beyond) = match (&exact, &null_sets) {
            (Some(d), _) => (d.pvalue(stat.t_obs)?, None, None),
            (_, Some(sets)) => {
                let r = sets[i].pvalue(stat.t_obs);
                (r.p, Some(r.standard_error), Some(r.beyond_support))
            }
            _ => unreachable!("null distribution prepared whenever a statistic exists"),
        };
        reports.push(SideReport {
            side,
            t_obs: Some(stat.t_obs),
            argmax_run: Some([stat.argmax.start, stat.argmax.end]),
            run_count,
            p_value: Some(p),
            standard_error: se,
            beyond_mc_support: beyond,
            reject: Some(p <= opts.alpha),
            note: None,
        });
    }

    let is_mc = method == Method::Mc;
    Ok(TestReport {
        tool: "runstat",
        version: env!("CARGO_PKG_VERSION"),
        n,
        method,
        exact_cutover: cutover,
        alpha: opts.alpha,
        seed: is_mc.then_some(opts.seed),
        mc_experiments: is_mc.then_some(opts.mc_experiments),
        sides: reports,
        runs: RunSummary {
            successes: decomposition.successes(),
            success_runs: decomposition.runs(Side::Success).len(),
            failure_runs: decomposition.runs(Side::Failure).len(),
            run_length_vector: decomposition.run_lengths().counts().to_vec(),
            chi_square: series.chi_square(),
        },
    })
}
