//! Perfect sampling by coupling into and from the past.
//!
//! One sample proceeds as follows:
//!
//! 1. `D_0 = x0 - 2 + G` with `G ~ Geom(1/2)`, a stationary draw of the
//!    dominating walk.
//! 2. The walk is extended backwards one step at a time. For each new state
//!    `D_{-t}` the forward move `D_{-t} -> D_{-t+1}` is read off and a driving
//!    uniform `U_{-t}` is imputed conditionally on that move.
//! 3. As soon as `U_{-t}^(1/beta) <= 1/(D_{-t} + 1)`, every trajectory started
//!    in `[0, D_{-t}]` collapses to the same point at time `-t + 1`.
//! 4. The underlying chain is then run forward to time 0 with the imputed
//!    first coordinates and lazily drawn second coordinates.
//!
//! # Consumption order
//!
//! All randomness for one sample is read from a single [`UniformSource`] in
//! this order: one (nonzero) uniform for `G`; then per backward step one
//! uniform for the direction (up iff `< 1/3`) followed by one nonzero uniform
//! `u'` for the imputation; then, during the forward pass, one uniform per
//! `W(2)` that is actually needed.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{multigamma_step, VervaatParams};
use crate::error::{Error, Result};
use crate::rng::{geometric_half, StreamFactory, UniformSource};

const ONE_THIRD: f64 = 1.0 / 3.0;
const TWO_THIRDS: f64 = 2.0 / 3.0;

/// The dominating walk grown backwards from time 0, with the imputed
/// driving uniforms.
///
/// `d_states[s]` is `D_{-s}` and `imputed_u[s - 1]` is `U_{-s}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackwardPath {
    d_states: Vec<u64>,
    imputed_u: Vec<f64>,
    coalesce_index: Option<usize>,
}

impl BackwardPath {
    pub fn new(params: &VervaatParams, d0: u64) -> Result<Self> {
        if d0 < params.floor() {
            return Err(Error::Domain(format!(
                "initial dominating state {d0} is below the floor {}",
                params.floor()
            )));
        }
        Ok(Self {
            d_states: vec![d0],
            imputed_u: Vec::new(),
            coalesce_index: None,
        })
    }

    pub fn d0(&self) -> u64 {
        self.d_states[0]
    }

    /// `D_0, D_{-1}, ..., D_{-t}`.
    pub fn d_states(&self) -> &[u64] {
        &self.d_states
    }

    /// `U_{-1}, ..., U_{-t}`.
    pub fn imputed_u(&self) -> &[f64] {
        &self.imputed_u
    }

    /// Number of backward steps taken so far.
    pub fn len(&self) -> usize {
        self.imputed_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.imputed_u.is_empty()
    }

    /// The coalescence time `T`, once detected.
    pub fn coalesce_index(&self) -> Option<usize> {
        self.coalesce_index
    }

    /// `D_{-s}` for `0 <= s <= len()`.
    pub fn state(&self, s: usize) -> u64 {
        self.d_states[s]
    }

    /// Whether the forward transition `D_{-s} -> D_{-s+1}` was an up-move.
    pub fn forward_up(&self, s: usize) -> bool {
        self.d_states[s - 1] > self.d_states[s]
    }
}

/// Stationary draw of the dominating walk: `x0 - 2 + G`.
pub fn draw_initial_dominating<S: UniformSource + ?Sized>(
    params: &VervaatParams,
    src: &mut S,
) -> u64 {
    params.x0() - 2 + geometric_half(src)
}

/// Adds one backward step `D_{-t}` with its imputed uniform and checks for
/// coalescence.
pub fn backward_extend<S: UniformSource + ?Sized>(
    params: &VervaatParams,
    path: &mut BackwardPath,
    src: &mut S,
) -> Result<()> {
    if path.coalesce_index.is_some() {
        return Err(Error::State("path has already coalesced".into()));
    }
    let prev = *path.d_states.last().expect("path always holds D_0");
    let up = src.next_uniform() < ONE_THIRD;
    let d = if up {
        prev + 1
    } else {
        prev.saturating_sub(1).max(params.floor())
    };
    // Forward in time this is d -> prev.
    let u_prime = src.next_positive_uniform();
    let u = if prev > d {
        TWO_THIRDS + u_prime * ONE_THIRD
    } else {
        TWO_THIRDS * u_prime
    };
    path.d_states.push(d);
    path.imputed_u.push(u);
    if params.coalesces(u, d) {
        path.coalesce_index = Some(path.imputed_u.len());
    }
    Ok(())
}

/// Grows a backward path from a fresh stationary start until coalescence.
pub fn build_path<S: UniformSource + ?Sized>(
    params: &VervaatParams,
    src: &mut S,
) -> Result<BackwardPath> {
    let d0 = draw_initial_dominating(params, src);
    let mut path = BackwardPath::new(params, d0)?;
    while path.coalesce_index.is_none() {
        if path.len() as u64 >= params.step_budget() {
            return Err(Error::Budget {
                beta: params.beta(),
                lower_bound: params.expected_steps_lower_bound(),
                budget: params.step_budget(),
            });
        }
        backward_extend(params, &mut path, src)?;
    }
    Ok(path)
}

/// Runs the underlying chain forward from `start` at time `-T` to time 0 and
/// returns the whole trajectory `X_{-T}, X_{-T+1}, ..., X_0`.
///
/// `W(2)` values are read from `src` only when the coupler needs them, so two
/// calls replaying the same source from the same position see the same draws.
pub fn forward_trajectory<S: UniformSource + ?Sized>(
    params: &VervaatParams,
    path: &BackwardPath,
    src: &mut S,
    start: f64,
) -> Result<Vec<f64>> {
    let t = path
        .coalesce_index
        .ok_or_else(|| Error::State("path has not coalesced".into()))?;
    let top = path.state(t) as f64;
    if !(0.0..=top).contains(&start) {
        return Err(Error::Domain(format!(
            "start {start} outside [0, D_-T] = [0, {top}]"
        )));
    }
    let mut xs = Vec::with_capacity(t + 1);
    xs.push(start);
    // Coalesced at -T: every start in [0, D_-T] maps to W_-T(2).
    let mut x = params.sample_w(src);
    xs.push(x);
    for s in (1..t).rev() {
        let w1 = params.w_from_uniform(path.imputed_u[s - 1]);
        x = multigamma_step(x, w1, || params.sample_w(src));
        xs.push(x);
    }
    Ok(xs)
}

/// `X_0` obtained by running the coupler forward from `start` at time `-T`.
pub fn forward_reconstruct<S: UniformSource + ?Sized>(
    params: &VervaatParams,
    path: &BackwardPath,
    src: &mut S,
    start: f64,
) -> Result<f64> {
    let xs = forward_trajectory(params, path, src, start)?;
    Ok(*xs.last().expect("trajectory is never empty"))
}

/// One perfect draw together with its backward step count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleResult {
    pub value: f64,
    pub steps: u64,
    pub d0: u64,
}

/// Draws one exact sample from the perpetuity law.
pub fn run_ciaftp<S: UniformSource + ?Sized>(
    params: &VervaatParams,
    src: &mut S,
) -> Result<SampleResult> {
    let path = build_path(params, src)?;
    let value = forward_reconstruct(params, &path, src, 0.0)?;
    Ok(SampleResult {
        value,
        steps: path.len() as u64,
        d0: path.d0(),
    })
}

/// Draws `n` samples in parallel; sample `i` uses substream `i` of `seed`, so
/// the result does not depend on the thread layout.
pub fn sample_many(params: &VervaatParams, n: usize, seed: u64) -> Result<Vec<SampleResult>> {
    let factory = StreamFactory::new(seed);
    (0..n as u64)
        .into_par_iter()
        .map(|i| run_ciaftp(params, &mut factory.substream(i)))
        .collect()
}
