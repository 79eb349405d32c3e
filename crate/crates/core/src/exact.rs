//! Exact null distribution of the weighted-runs statistic.
//!
//! Under the null every success/failure pattern of length `N` is equally
//! likely. Patterns are grouped by their success-run length vector `n`; the
//! classes with `r` successes in `M` runs are in bijection with the integer
//! partitions of `r` into `M` parts. A class contributes
//!
//! ```text
//! Π_l F_l(t)^{n_l} · W(n) / (2^N - 1),   W(n) = (N - r + 2 - M)_M / Π_l n_l!
//! ```
//!
//! where `F_l` is the χ² distribution function with `l` degrees of freedom.
//! The number of classes visited equals ν(N) = p(N + 1) - 1.
//!
//! Up to `N = 30` multiplicities are exact big integers. Above that the sum
//! is accumulated in log space with a running-maximum shift and compensated
//! summation. The `(r, M)` cells are evaluated in parallel and reduced in a
//! fixed order, so results do not depend on the thread count.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partitions::{PartitionView, Partitions, RunLengthVector};
use crate::special::chi2_cdf;

pub const DEFAULT_MAX_EXACT_N: usize = 80;
/// Largest `N` evaluated with exact integer multiplicities by default.
pub const LOG_SPACE_ABOVE: usize = 30;
/// Largest `N` accepted by [`brute_force_cdf`].
pub const BRUTE_FORCE_MAX_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arithmetic {
    /// Big-integer multiplicities, converted to floating point per term.
    Exact,
    /// Log-space accumulation.
    LogSpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactConfig {
    pub max_exact_n: usize,
    /// `None` picks exact arithmetic up to [`LOG_SPACE_ABOVE`].
    pub arithmetic: Option<Arithmetic>,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            max_exact_n: DEFAULT_MAX_EXACT_N,
            arithmetic: None,
        }
    }
}

impl ExactConfig {
    pub fn arithmetic_for(&self, n: usize) -> Arithmetic {
        self.arithmetic.unwrap_or(if n > LOG_SPACE_ABOVE {
            Arithmetic::LogSpace
        } else {
            Arithmetic::Exact
        })
    }
}

/// Number of arrangements of `n` success runs of the given lengths in a
/// sequence of length `big_n`: `M!/Π n_l! · C(N - r + 1, M)`.
pub fn multiplicity(n: &RunLengthVector, big_n: usize) -> Result<BigUint> {
    let r = n.successes();
    let m = n.runs();
    if r > big_n || m > big_n - r + 1 {
        return Err(Error::invalid(format!(
            "run-length vector with r = {r}, M = {m} does not fit in N = {big_n}"
        )));
    }
    let numerator = falling_factorial(big_n - r + 1, m);
    let denominator: BigUint = n.counts().iter().map(|&c| factorial(c as usize)).product();
    Ok(numerator / denominator)
}

/// `R(M | r, N)`: sequences of length `N` with `r` successes in exactly `M`
/// runs, `C(r - 1, M - 1) · C(N - r + 1, M)`. Zero outside the valid range.
pub fn run_count_sequences(m: usize, r: usize, big_n: usize) -> BigUint {
    if m == 0 || r == 0 || r > big_n || m > r.min(big_n - r + 1) {
        return BigUint::zero();
    }
    binomial(r - 1, m - 1) * binomial(big_n - r + 1, m)
}

fn factorial(k: usize) -> BigUint {
    (1..=k as u64).map(BigUint::from).product()
}

/// `n (n - 1) ... (n - k + 1)`, which equals the rising factorial
/// `(n - k + 1)_k`.
fn falling_factorial(n: usize, k: usize) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= (n - i) as u64;
    }
    acc
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    falling_factorial(n, k) / factorial(k)
}

/// One equivalence class of sequences with at least one success.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceClassTerm {
    pub partition: PartitionView,
    pub run_lengths: RunLengthVector,
    pub successes: usize,
    pub runs: usize,
    pub multiplicity: BigUint,
    /// `W / (2^N - 1)`.
    pub probability: f64,
}

/// All classes for sequences of length `n`, ordered by `r`, then `M`, then
/// descending-lexicographic partition.
pub fn sequence_classes(n: usize) -> impl Iterator<Item = SequenceClassTerm> {
    let total = ((BigUint::one() << n) - BigUint::one()).to_f64().unwrap_or(f64::INFINITY);
    (1..=n).flat_map(move |r| {
        (1..=r.min(n - r + 1)).flat_map(move |m| {
            Partitions::new(r, m).map(move |partition| {
                let run_lengths = partition.run_lengths();
                let multiplicity =
                    multiplicity(&run_lengths, n).expect("enumerated classes are consistent");
                let probability = multiplicity.to_f64().unwrap_or(f64::INFINITY) / total;
                SequenceClassTerm {
                    partition,
                    run_lengths,
                    successes: r,
                    runs: m,
                    multiplicity,
                    probability,
                }
            })
        })
    })
}

/// Result of one CDF evaluation with instrumentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfEvaluation {
    pub cdf: f64,
    /// Partition terms visited.
    pub terms: u64,
}

#[derive(Debug, Clone)]
struct Cell {
    successes: usize,
    runs: usize,
    pochhammer: BigUint,
    ln_pochhammer: f64,
}

/// The exact distribution of `T` for one sequence length.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    n: usize,
    arithmetic: Arithmetic,
    cells: Vec<Cell>,
    ln_factorial: Vec<f64>,
    factorial: Vec<BigUint>,
}

impl ExactDistribution {
    pub fn new(n: usize, config: ExactConfig) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("number of observations must be at least 1"));
        }
        if n > config.max_exact_n {
            return Err(Error::Capability(format!(
                "exact distribution limited to N <= {} (requested N = {n}); use the Monte Carlo method",
                config.max_exact_n
            )));
        }
        let mut ln_factorial = vec![0.0; n + 2];
        for k in 1..ln_factorial.len() {
            ln_factorial[k] = ln_factorial[k - 1] + (k as f64).ln();
        }
        let factorial: Vec<BigUint> = (0..=n).map(factorial).collect();
        let mut cells = Vec::new();
        for r in 1..=n {
            for m in 1..=r.min(n - r + 1) {
                let free = n - r + 1;
                cells.push(Cell {
                    successes: r,
                    runs: m,
                    pochhammer: falling_factorial(free, m),
                    ln_pochhammer: ln_factorial[free] - ln_factorial[free - m],
                });
            }
        }
        Ok(Self {
            n,
            arithmetic: config.arithmetic_for(n),
            cells,
            ln_factorial,
            factorial,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arithmetic(&self) -> Arithmetic {
        self.arithmetic
    }

    /// `P(T < t | N)`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        self.cdf_with_stats(t).map(|e| e.cdf)
    }

    /// `P(T >= t | N)`.
    pub fn pvalue(&self, t_obs: f64) -> Result<f64> {
        Ok((1.0 - self.cdf(t_obs)?).clamp(0.0, 1.0))
    }

    pub fn cdf_with_stats(&self, t: f64) -> Result<CdfEvaluation> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("statistic must be nonnegative, got {t}")));
        }
        // F[l] for l = 1..=N; index 0 unused
        let mut factors = vec![0.0; self.n + 1];
        for (l, f) in factors.iter_mut().enumerate().skip(1) {
            *f = chi2_cdf(t, l)?;
        }
        match self.arithmetic {
            Arithmetic::Exact => Ok(self.cdf_exact(&factors)),
            Arithmetic::LogSpace => Ok(self.cdf_log(&factors)),
        }
    }

    fn cdf_exact(&self, factors: &[f64]) -> CdfEvaluation {
        let per_cell: Vec<(f64, f64, u64)> = self
            .cells
            .par_iter()
            .map(|cell| {
                let mut sum = Compensated::default();
                let mut terms = 0u64;
                let mut parts = Partitions::new(cell.successes, cell.runs);
                while let Some(p) = parts.advance() {
                    terms += 1;
                    let mut product = 1.0;
                    let mut denominator = BigUint::one();
                    for_each_group(p, |len, count| {
                        product *= factors[len].powi(count as i32);
                        denominator *= &self.factorial[count];
                    });
                    let w = &cell.pochhammer / denominator;
                    sum.add(w.to_f64().unwrap_or(f64::INFINITY) * product);
                }
                let (s, c) = sum.parts();
                (s, c, terms)
            })
            .collect();
        let mut total = Compensated::default();
        let mut terms = 0;
        for (s, c, k) in per_cell {
            total.add(s);
            total.add(c);
            terms += k;
        }
        let norm = ((BigUint::one() << self.n) - BigUint::one())
            .to_f64()
            .unwrap_or(f64::INFINITY);
        CdfEvaluation {
            cdf: (total.value() / norm).clamp(0.0, 1.0),
            terms,
        }
    }

    fn cdf_log(&self, factors: &[f64]) -> CdfEvaluation {
        let ln_factors: Vec<f64> = factors.iter().map(|f| f.ln()).collect();
        let per_cell: Vec<(LogSum, u64)> = self
            .cells
            .par_iter()
            .map(|cell| {
                let mut acc = LogSum::default();
                let mut terms = 0u64;
                let mut parts = Partitions::new(cell.successes, cell.runs);
                while let Some(p) = parts.advance() {
                    terms += 1;
                    let mut ln_term = cell.ln_pochhammer;
                    for_each_group(p, |len, count| {
                        ln_term += count as f64 * ln_factors[len] - self.ln_factorial[count];
                    });
                    acc.add(ln_term);
                }
                (acc, terms)
            })
            .collect();
        let mut total = LogSum::default();
        let mut terms = 0;
        for (cell, k) in per_cell {
            total.merge(&cell);
            terms += k;
        }
        let n = self.n as f64;
        let ln_norm = n * std::f64::consts::LN_2 + (-(2f64.powi(-(self.n as i32)))).ln_1p();
        CdfEvaluation {
            cdf: (total.ln_value() - ln_norm).exp().clamp(0.0, 1.0),
            terms,
        }
    }

    /// Smallest `t` with `P(T >= t) = alpha`, by bracketing and bisection.
    pub fn critical_value(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.pvalue(hi)? > alpha {
            lo = hi;
            hi *= 2.0;
            if hi > 1e4 {
                return Err(Error::Numerical(format!(
                    "could not bracket the critical value for alpha = {alpha}"
                )));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.pvalue(mid)? > alpha {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-9 {
                break;
            }
        }
        let t = 0.5 * (lo + hi);
        let p = self.pvalue(t)?;
        if (p - alpha).abs() >= 1e-6 {
            return Err(Error::Numerical(format!(
                "bisection ended at p = {p}, target alpha = {alpha}"
            )));
        }
        Ok(t)
    }
}

/// Calls `f(length, count)` for each group of equal parts of a
/// non-increasing partition.
#[inline]
fn for_each_group(parts: &[u32], mut f: impl FnMut(usize, usize)) {
    let mut i = 0;
    while i < parts.len() {
        let len = parts[i];
        let mut j = i + 1;
        while j < parts.len() && parts[j] == len {
            j += 1;
        }
        f(len as usize, j - i);
        i = j;
    }
}

/// Neumaier summation.
#[derive(Debug, Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn parts(&self) -> (f64, f64) {
        (self.sum, self.carry)
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Streaming `ln Σ exp(x_i)`, shifted by the running maximum.
#[derive(Debug, Default, Clone, Copy)]
struct LogSum {
    max: Option<f64>,
    scaled: Compensated,
}

impl LogSum {
    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        match self.max {
            None => {
                self.max = Some(x);
                self.scaled = Compensated::default();
                self.scaled.add(1.0);
            }
            Some(m) if x <= m => self.scaled.add((x - m).exp()),
            Some(m) => {
                let shrink = (m - x).exp();
                let (s, c) = self.scaled.parts();
                self.scaled = Compensated::default();
                self.scaled.add(s * shrink);
                self.scaled.add(c * shrink);
                self.scaled.add(1.0);
                self.max = Some(x);
            }
        }
    }

    fn merge(&mut self, other: &LogSum) {
        let Some(om) = other.max else { return };
        let (s, c) = other.scaled.parts();
        match self.max {
            None => *self = *other,
            Some(m) if om <= m => {
                let k = (om - m).exp();
                self.scaled.add(s * k);
                self.scaled.add(c * k);
            }
            Some(m) => {
                let k = (m - om).exp();
                let (ms, mc) = self.scaled.parts();
                self.scaled = other.scaled;
                self.scaled.add(ms * k);
                self.scaled.add(mc * k);
                self.max = Some(om);
            }
        }
    }

    fn ln_value(&self) -> f64 {
        match self.max {
            None => f64::NEG_INFINITY,
            Some(m) => m + self.scaled.value().ln(),
        }
    }
}

/// `P(T < t | N)` with the default configuration.
pub fn exact_cdf(t: f64, n: usize) -> Result<f64> {
    ExactDistribution::new(n, ExactConfig::default())?.cdf(t)
}

/// `P(T >= t_obs | N)` with the default configuration.
pub fn exact_pvalue(t_obs: f64, n: usize) -> Result<f64> {
    ExactDistribution::new(n, ExactConfig::default())?.pvalue(t_obs)
}

pub fn exact_critical_value(alpha: f64, n: usize) -> Result<f64> {
    ExactDistribution::new(n, ExactConfig::default())?.critical_value(alpha)
}

/// Independent oracle: averages `Π_runs F_len(t)` over all `2^N - 1`
/// sequences with at least one success.
pub fn brute_force_cdf(t: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("number of observations must be at least 1"));
    }
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Capability(format!(
            "brute-force enumeration limited to N <= {BRUTE_FORCE_MAX_N}"
        )));
    }
    let mut factors = vec![0.0; n + 1];
    for (l, f) in factors.iter_mut().enumerate().skip(1) {
        *f = chi2_cdf(t, l)?;
    }
    let mut sum = 0.0;
    for bits in 1u32..(1u32 << n) {
        let mut product = 1.0;
        let mut run = 0;
        for i in 0..n {
            if bits >> i & 1 == 1 {
                run += 1;
            } else if run > 0 {
                product *= factors[run];
                run = 0;
            }
        }
        if run > 0 {
            product *= factors[run];
        }
        sum += product;
    }
    Ok(sum / ((1u64 << n) - 1) as f64)
}
