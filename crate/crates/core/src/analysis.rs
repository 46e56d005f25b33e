//! Running-time analysis of the sampler.
//!
//! The number of backward steps `T` has the law of the absorption time of
//! the dominating walk run forward from stationarity, where from state `d`
//! a step absorbs with probability `q(d) = (d + 1)^(-beta)`. Truncating the
//! walk and closing it with either `h = 0` or the potential cap gives a
//! rigorous two-sided bracket on `E T`.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{beta_zero, VervaatParams};
use crate::error::{Error, Result};
use crate::rng::StreamFactory;
use crate::engine::run_ciaftp;

/// Closed-form bounds `x0^beta <= E T <= 2 (x0 + 1)^beta + 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuntimeBounds {
    pub lower: f64,
    pub upper: f64,
}

pub fn theorem_bounds(params: &VervaatParams) -> RuntimeBounds {
    let x0 = params.x0() as f64;
    RuntimeBounds {
        lower: x0.powf(params.beta()),
        upper: 2.0 * (x0 + 1.0).powf(params.beta()) + 3.0,
    }
}

/// Upper bound on the mean absorption time from the deterministic state `d`:
/// three times the potential `d - (x0 - 1) + (2/3)(x0 + 1)^beta`.
pub fn supermartingale_cap(params: &VervaatParams, d: u64) -> Result<f64> {
    if d < params.floor() {
        return Err(Error::Domain(format!(
            "state {d} is below the floor {}",
            params.floor()
        )));
    }
    Ok(cap(params, d))
}

fn cap(params: &VervaatParams, d: u64) -> f64 {
    let x0 = params.x0() as f64;
    3.0 * ((d - params.floor()) as f64 + 2.0 / 3.0 * (x0 + 1.0).powf(params.beta()))
}

/// One-step law of the stopped walk from state `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepLaw {
    pub absorb: f64,
    pub up: f64,
    pub down: f64,
}

/// `q(d)`, `min(1 - q(d), 1/3)` and `max(2/3 - q(d), 0)`.
pub fn step_law(params: &VervaatParams, d: u64) -> StepLaw {
    let absorb = params.coalescence_probability(d);
    StepLaw {
        absorb,
        up: (1.0 - absorb).min(1.0 / 3.0),
        down: (2.0 / 3.0 - absorb).max(0.0),
    }
}

const ROUNDING_ALLOWANCE: f64 = 256.0 * f64::EPSILON;

/// Two-sided bound on `E T` from the truncated absorbing chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsorptionBracket {
    pub lower: f64,
    pub upper: f64,
    pub truncation: usize,
}

impl AbsorptionBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Brackets `E T` by solving the stopped walk on the states
/// `x0 - 1, ..., x0 - 1 + truncation` with boundary `h(top + 1) = 0` (lower)
/// and `h(top + 1) = cap(top + 1)` (upper), then averaging over the
/// shifted-geometric start.
pub fn absorption_bracket(params: &VervaatParams, truncation: usize) -> Result<AbsorptionBracket> {
    if truncation < 2 {
        return Err(Error::InvalidParameter(format!(
            "truncation must be at least 2, got {truncation}"
        )));
    }
    let top = params.floor() + truncation as u64;
    let laws: Vec<StepLaw> = (params.floor()..=top).map(|d| step_law(params, d)).collect();

    let h_low = solve_absorption(&laws, 0.0)?;
    let cap_top = cap(params, top + 1);
    let h_high = solve_absorption(&laws, cap_top)?;

    // Stationary weights 2^-(k+1); the tail beyond `top` has mass
    // 2^-(truncation+1) and, given it is reached, mean overshoot 1 above top+1.
    let tail_mass = 0.5f64.powi(truncation as i32 + 1);
    let average = |h: &[f64]| -> f64 {
        h.iter()
            .enumerate()
            .map(|(k, v)| 0.5f64.powi(k as i32 + 1) * v)
            .sum()
    };
    // Outward allowance for rounding in the elimination and the averaging;
    // observed error is a few ulps since the system contracts strongly.
    let slack = |v: f64| ROUNDING_ALLOWANCE * v.abs();
    let lower = average(&h_low);
    let lower = lower - slack(lower);
    let upper = average(&h_high) + tail_mass * (cap_top + 3.0);
    let upper = upper + slack(upper);
    if !(lower.is_finite() && upper.is_finite()) {
        return Err(Error::Internal("absorption solve produced a non-finite value".into()));
    }
    Ok(AbsorptionBracket {
        lower,
        upper,
        truncation,
    })
}

/// Solves `h(k) = 1 + up(k) h(k+1) + down(k) h(max(k-1, 0))` for
/// `k = 0..=n-1` with `h(n) = boundary`, using the Thomas algorithm.
fn solve_absorption(laws: &[StepLaw], boundary: f64) -> Result<Vec<f64>> {
    let n = laws.len();
    // Row k: -down(k) h(k-1) + diag(k) h(k) - up(k) h(k+1) = rhs(k).
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for (k, law) in laws.iter().enumerate() {
        let (sub, mut diag) = if k == 0 { (0.0, 1.0 - law.down) } else { (-law.down, 1.0) };
        let mut rhs = 1.0;
        let sup = -law.up;
        if k + 1 == n {
            rhs += law.up * boundary;
        }
        if k > 0 {
            diag -= sub * c_prime[k - 1];
            rhs -= sub * d_prime[k - 1];
        }
        if diag.abs() < f64::MIN_POSITIVE || !diag.is_finite() {
            return Err(Error::Internal(format!("singular absorption system at row {k}")));
        }
        c_prime[k] = if k + 1 == n { 0.0 } else { sup / diag };
        d_prime[k] = rhs / diag;
    }
    let mut h = d_prime;
    for k in (0..n - 1).rev() {
        h[k] -= c_prime[k] * h[k + 1];
    }
    Ok(h)
}

/// `c = sum_{i >= 1} 2^-i ln(i + 1)`, summed until the tail bound
/// `2^-n (ln(n + 2) + 1/(n + 2))` drops below `tol`.
pub fn small_beta_constant(tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut sum = 0.0;
    let mut weight = 1.0;
    for i in 1u32.. {
        weight *= 0.5;
        sum += weight * ((i + 1) as f64).ln();
        let n = i as f64;
        if weight * ((n + 2.0).ln() + 1.0 / (n + 2.0)) < tol {
            break;
        }
    }
    Ok(sum)
}

/// Empirical mean step count against the small-beta prediction `1 + c beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub beta: f64,
    pub n: usize,
    pub c: f64,
    pub predicted: f64,
    pub empirical_mean: f64,
    pub standard_error: f64,
}

pub fn expansion_check(beta: f64, n: usize, seed: u64) -> Result<ExpansionReport> {
    if !(beta > 0.0 && beta <= beta_zero()) {
        return Err(Error::InvalidParameter(format!(
            "expansion check needs 0 < beta <= {}, got {beta}",
            beta_zero()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("expansion check needs n >= 2".into()));
    }
    let params = VervaatParams::new(beta)?;
    let c = small_beta_constant(1e-12)?;
    let factory = StreamFactory::new(seed);
    let steps: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| run_ciaftp(&params, &mut factory.substream(i)).map(|r| r.steps as f64))
        .collect::<Result<_>>()?;
    let (mean, se) = mean_and_se(&steps);
    Ok(ExpansionReport {
        beta,
        n,
        c,
        predicted: 1.0 + c * beta,
        empirical_mean: mean,
        standard_error: se,
    })
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
