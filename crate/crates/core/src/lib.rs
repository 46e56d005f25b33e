//! Exact sampling of Vervaat perpetuities.
//!
//! A Vervaat perpetuity is `Y = W_1 + W_1 W_2 + W_1 W_2 W_3 + ...` with
//! i.i.d. `W = U^(1/beta)`, `U` uniform on `[0, 1)`; `beta = 1` gives the
//! Dickman distribution. [`run_ciaftp`] returns draws whose law is exactly
//! that of `Y`, using a monotone multigamma coupler for the chain
//! `x -> W (1 + x)` dominated by a reflected random walk.
//!
//! ```
//! use vervaat::{run_ciaftp, UniformStream, VervaatParams};
//!
//! let params = VervaatParams::new(1.0).unwrap();
//! let draw = run_ciaftp(&params, &mut UniformStream::new(7)).unwrap();
//! assert!(draw.value >= 0.0 && draw.steps >= 1);
//! ```

pub mod analysis;
pub mod chain;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod rng;

pub use analysis::{
    absorption_bracket, expansion_check, small_beta_constant, supermartingale_cap, theorem_bounds,
    AbsorptionBracket, ExpansionReport, RuntimeBounds,
};
pub use chain::{
    beta_zero, multigamma_update, natural_update, DrivingPair, VervaatParams, DEFAULT_STEP_BUDGET,
};
pub use engine::{
    backward_extend, build_path, draw_initial_dominating, forward_reconstruct, forward_trajectory,
    run_ciaftp, sample_many, BackwardPath, SampleResult,
};
pub use error::{Error, Result};
pub use oracle::{
    exact_moments, ks_critical_value, ks_two_sample, stationarity_check, truncated_sum_sample,
    validate_run, validate_with, validate_with_depth, Check, Moments, TestReport,
};
pub use rng::{geometric_half, ScriptedSource, StreamFactory, UniformSource, UniformStream};
