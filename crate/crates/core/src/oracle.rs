//! Ground truth independent of the coupling machinery: truncated series
//! sampling, closed-form moments, the two-sample KS statistic, and the
//! validation report that ties them to the sampler.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::mean_and_se;
use crate::chain::VervaatParams;
use crate::engine::{run_ciaftp, SampleResult};
use crate::error::{Error, Result};
use crate::rng::{StreamFactory, UniformSource, UniformStream};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_533;

/// `sum_{k=1..depth} prod_{j<=k} W_j` with independent `W_j = U_j^(1/beta)`.
pub fn truncated_sum_sample<S: UniformSource + ?Sized>(
    params: &VervaatParams,
    depth: usize,
    src: &mut S,
) -> f64 {
    truncated_sum_with(depth, || params.sample_w(src))
}

fn truncated_sum_with(depth: usize, mut next_w: impl FnMut() -> f64) -> f64 {
    let mut product = 1.0;
    let mut sum = 0.0;
    for _ in 0..depth {
        product *= next_w();
        sum += product;
    }
    sum
}

/// Mean error of the depth-`depth` truncation: `(E W)^(depth+1) / (1 - E W)`.
pub fn truncation_error(beta: f64, depth: usize) -> f64 {
    let mean_w = beta / (beta + 1.0);
    mean_w.powi(depth as i32 + 1) / (1.0 - mean_w)
}

/// Smallest depth with mean truncation error below `tol`.
pub fn oracle_depth(beta: f64, tol: f64) -> usize {
    (0..)
        .find(|&d| truncation_error(beta, d) < tol)
        .expect("truncation error decays geometrically")
}

/// `E Y = beta` and `E Y^2 = beta (1 + 2 beta) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub second_moment: f64,
}

impl Moments {
    pub fn variance(&self) -> f64 {
        self.second_moment - self.mean * self.mean
    }
}

pub fn exact_moments(beta: f64) -> Result<Moments> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    Ok(Moments {
        mean: beta,
        second_moment: beta * (1.0 + 2.0 * beta) / 2.0,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("KS test needs two non-empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // Step past every copy of the smaller value in both samples so ties
        // are compared only after both CDFs have jumped.
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample KS critical value `c(alpha) sqrt((m + n) / (m n))`
/// with `c(alpha) = sqrt(-ln(alpha / 2) / 2)`.
pub fn ks_critical_value(alpha: f64, m: usize, n: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (m, n) = (m as f64, n as f64);
    c * ((m + n) / (m * n)).sqrt()
}

/// Max over the retained states of `|(pi P)(x) - pi(x)|` for the
/// shifted-geometric law under the dominating kernel. Mass beyond the last
/// retained state is dropped, so small supports report the leak.
pub fn stationarity_check(params: &VervaatParams, support_size: usize) -> Result<f64> {
    if support_size < 2 {
        return Err(Error::InvalidParameter("support must have at least 2 states".into()));
    }
    // The kernel is the same on every shifted support; `params` only sets the floor.
    let _ = params.floor();
    let pi: Vec<f64> = (0..support_size).map(|k| 0.5f64.powi(k as i32 + 1)).collect();
    let mut pushed = vec![0.0; support_size];
    for (k, &mass) in pi.iter().enumerate() {
        let down = k.saturating_sub(1);
        pushed[down] += mass * (2.0 / 3.0);
        if k + 1 < support_size {
            pushed[k + 1] += mass / 3.0;
        }
    }
    Ok(pi
        .iter()
        .zip(&pushed)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max))
}

/// One named check of a [`TestReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub sample_sizes: Vec<usize>,
    pub pass: bool,
}

impl Check {
    /// Passes when `|statistic| <= threshold`.
    pub fn within(name: impl Into<String>, statistic: f64, threshold: f64, sizes: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            sample_sizes: sizes,
            pass: statistic.abs() <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub beta: f64,
    pub n: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl TestReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Minimum sample count accepted by [`validate_run`].
pub const MIN_VALIDATION_SAMPLES: usize = 10_000;

/// Mean backward steps for beta = 1, `E T = 6.0791269033146782...`.
pub const DICKMAN_MEAN_STEPS: f64 = 6.079_126_903_314_681;

/// Step-count tail targets for beta = 1: `(label, k, P(T > k) or P(T = 1), tolerance)`.
const DICKMAN_TAILS: [(&str, u64, f64, f64); 4] = [
    ("p_steps_eq_1", 1, 0.174, 0.003),
    ("p_steps_gt_4", 4, 0.476, 0.004),
    ("p_steps_gt_8", 8, 0.234, 0.004),
    ("p_steps_gt_27", 27, 0.010, 0.002),
];

/// Runs the sampler and the truncated-series oracle `n` times each and
/// compares them.
///
/// The oracle depth is chosen so the mean truncation error is below 1e-9.
pub fn validate_run(params: &VervaatParams, n: usize, seed: u64) -> Result<TestReport> {
    let depth = oracle_depth(params.beta(), 1e-9);
    validate_with(params, n, seed, depth, run_ciaftp)
}

/// [`validate_run`] with an explicit oracle depth.
pub fn validate_with_depth(
    params: &VervaatParams,
    n: usize,
    seed: u64,
    depth: usize,
) -> Result<TestReport> {
    validate_with(params, n, seed, depth, run_ciaftp)
}

/// [`validate_run`] with a caller-supplied sampler in place of the engine.
pub fn validate_with<F>(
    params: &VervaatParams,
    n: usize,
    seed: u64,
    depth: usize,
    sampler: F,
) -> Result<TestReport>
where
    F: Fn(&VervaatParams, &mut UniformStream) -> Result<SampleResult> + Sync,
{
    if n < MIN_VALIDATION_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "validation needs n >= {MIN_VALIDATION_SAMPLES}, got {n}"
        )));
    }
    let beta = params.beta();
    let engine_streams = StreamFactory::new(seed);
    // The oracle reads from a disjoint key.
    let oracle_streams = StreamFactory::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let results: Vec<SampleResult> = (0..n as u64)
        .into_par_iter()
        .map(|i| sampler(params, &mut engine_streams.substream(i)))
        .collect::<Result<_>>()?;
    let oracle: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| truncated_sum_sample(params, depth, &mut oracle_streams.substream(i)))
        .collect();
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();

    let moments = exact_moments(beta)?;
    let mut checks = Vec::new();

    let ks = ks_two_sample(&values, &oracle)?;
    checks.push(Check::within("ks_engine_vs_oracle", ks, ks_critical_value(0.01, n, n), vec![n, n]));

    let (mean, se) = mean_and_se(&values);
    checks.push(Check::within("mean_z", (mean - moments.mean) / se, 4.0, vec![n]));

    let (var, var_se) = variance_and_se(&values);
    checks.push(Check::within("variance_z", (var - moments.variance()) / var_se, 5.0, vec![n]));

    if beta == 1.0 {
        let steps: Vec<f64> = results.iter().map(|r| r.steps as f64).collect();
        let (mean_steps, _) = mean_and_se(&steps);
        checks.push(Check::within("mean_steps_dev", mean_steps - DICKMAN_MEAN_STEPS, 0.03, vec![n]));
        for (label, k, target, tol) in DICKMAN_TAILS {
            let hits = if k == 1 {
                results.iter().filter(|r| r.steps == 1).count()
            } else {
                results.iter().filter(|r| r.steps > k).count()
            };
            checks.push(Check::within(label, hits as f64 / n as f64 - target, tol, vec![n]));
        }
        let unit = values.iter().filter(|&&y| y > 0.0 && y <= 1.0).count() as f64 / n as f64;
        checks.push(Check::within("unit_mass_dev", unit - (-EULER_GAMMA).exp(), 0.005, vec![n]));
    }

    Ok(TestReport {
        beta,
        n,
        seed,
        checks,
    })
}

/// Unbiased sample variance and its large-sample standard error
/// `sqrt((m4 - s^4) / n)`.
pub fn variance_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(m2, m4), x| {
        let d2 = (x - mean).powi(2);
        (m2 + d2, m4 + d2 * d2)
    });
    let var = m2 / (n - 1.0);
    let m4 = m4 / n;
    (var, ((m4 - var * var) / n).sqrt())
}
