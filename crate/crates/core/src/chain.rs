//! The Vervaat chain: parameters, the multigamma coupler and the
//! dominating random walk.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::UniformSource;

/// Default per-sample limit on backward steps.
pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// Largest exponent for which the dominating floor is `x0 = 2`, `ln(3/2) / ln 3`.
pub fn beta_zero() -> f64 {
    1.5f64.ln() / 3.0f64.ln()
}

/// Relative slack allowed when testing `(x0 - 1)/(x0 + 1) >= (2/3)^(1/beta)`,
/// so that exact ties such as beta = 1, x0 = 5 survive rounding.
const X0_TIE_SLACK: f64 = 1e-12;

/// Parameters of the Vervaat perpetuity with `W = U^(1/beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VervaatParams {
    beta: f64,
    w_threshold: f64,
    x0: u64,
    step_budget: u64,
}

impl VervaatParams {
    pub fn new(beta: f64) -> Result<Self> {
        Self::with_step_budget(beta, DEFAULT_STEP_BUDGET)
    }

    pub fn with_step_budget(beta: f64, step_budget: u64) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if step_budget == 0 {
            return Err(Error::InvalidParameter("step budget must be positive".into()));
        }
        let params = Self {
            beta,
            w_threshold: (TWO_THIRDS_LN / beta).exp(),
            x0: dominating_x0(beta),
            step_budget,
        };
        let lower = params.expected_steps_lower_bound();
        if lower.is_nan() || lower > step_budget as f64 {
            log::warn!(
                "beta = {beta}: expected backward steps are at least x0^beta = {lower:.3e}, \
                 above the step budget of {step_budget}; sampling will likely abort"
            );
        }
        Ok(params)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `(2/3)^(1/beta)`: the dominating walk moves up iff `W(1)` exceeds this.
    pub fn w_threshold(&self) -> f64 {
        self.w_threshold
    }

    pub fn x0(&self) -> u64 {
        self.x0
    }

    /// Lowest state of the dominating walk, `x0 - 1`.
    pub fn floor(&self) -> u64 {
        self.x0 - 1
    }

    pub fn step_budget(&self) -> u64 {
        self.step_budget
    }

    /// `x0^beta`, the lower bound on the mean number of backward steps.
    pub fn expected_steps_lower_bound(&self) -> f64 {
        (self.x0 as f64).powf(self.beta)
    }

    /// `W = U^(1/beta)` for a fresh uniform.
    pub fn sample_w<S: UniformSource + ?Sized>(&self, src: &mut S) -> f64 {
        self.w_from_uniform(src.next_uniform())
    }

    pub fn w_from_uniform(&self, u: f64) -> f64 {
        if u == 0.0 {
            0.0
        } else {
            (u.ln() / self.beta).exp()
        }
    }

    /// Probability that a fresh `W` satisfies `W <= 1/(d + 1)`, i.e. `(d + 1)^(-beta)`.
    pub fn coalescence_probability(&self, d: u64) -> f64 {
        (-self.beta * ((d + 1) as f64).ln()).exp()
    }

    /// Whether `U^(1/beta) <= 1/(d + 1)`, evaluated in log space.
    pub fn coalesces(&self, u: f64, d: u64) -> bool {
        u == 0.0 || u.ln() <= -self.beta * ((d + 1) as f64).ln()
    }

    /// The dominating rule: up one if `w1` exceeds the threshold, otherwise
    /// down one, holding at `x0 - 1`.
    pub fn dominating_update(&self, d: u64, w1: f64) -> Result<u64> {
        if d < self.floor() {
            return Err(Error::Domain(format!(
                "dominating state {d} is below the floor {}",
                self.floor()
            )));
        }
        Ok(if w1 > self.w_threshold {
            d + 1
        } else {
            (d - 1).max(self.floor())
        })
    }
}

const TWO_THIRDS_LN: f64 = -0.405_465_108_108_164_4; // ln(2/3)

/// Whether `(x - 1)/(x + 1) >= (2/3)^(1/beta)`, i.e. `beta * ln((x+1)/(x-1)) <= ln(3/2)`.
fn floor_dominates(beta: f64, x: u64) -> bool {
    let x = x as f64;
    beta * ((x + 1.0) / (x - 1.0)).ln() <= -TWO_THIRDS_LN * (1.0 + X0_TIE_SLACK)
}

/// `ceil(2 / (1 - (2/3)^(1/beta))) - 1`, the smallest `x >= 2` with
/// `(x - 1)/(x + 1) >= (2/3)^(1/beta)`.
fn dominating_x0(beta: f64) -> u64 {
    if beta <= beta_zero() {
        return 2;
    }
    let one_minus_r = -(TWO_THIRDS_LN / beta).exp_m1();
    let mut x0 = ((2.0 / one_minus_r).ceil() - 1.0).max(2.0) as u64;
    while x0 > 2 && floor_dominates(beta, x0 - 1) {
        x0 -= 1;
    }
    while !floor_dominates(beta, x0) {
        x0 += 1;
    }
    x0
}

/// Driving variables `(W(1), W(2))` of one coupler step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivingPair {
    pub w1: f64,
    pub w2: f64,
}

impl DrivingPair {
    pub fn new(w1: f64, w2: f64) -> Result<Self> {
        let unit = 0.0..1.0;
        if !unit.contains(&w1) || !unit.contains(&w2) {
            return Err(Error::Domain(format!(
                "driving pair ({w1}, {w2}) must lie in [0, 1)^2"
            )));
        }
        Ok(Self { w1, w2 })
    }
}

fn check_state(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("state must be finite and non-negative, got {x}")))
    }
}

/// One step of the kernel `x -> W (1 + x)`.
pub fn natural_update(x: f64, w: f64) -> Result<f64> {
    check_state(x)?;
    Ok(w * (1.0 + x))
}

/// Monotone multigamma coupler: returns `w2` when `w1 <= 1/(1 + x)`,
/// otherwise `w1 (1 + x)`.
pub fn multigamma_update(x: f64, pair: DrivingPair) -> Result<f64> {
    check_state(x)?;
    Ok(multigamma_step(x, pair.w1, || pair.w2))
}

/// Coupler step drawing `w2` only when the collapsing branch is taken.
pub(crate) fn multigamma_step(x: f64, w1: f64, w2: impl FnOnce() -> f64) -> f64 {
    if w1 * (1.0 + x) <= 1.0 {
        w2()
    } else {
        w1 * (1.0 + x)
    }
}
