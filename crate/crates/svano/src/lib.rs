//! Self-correcting variable-metric minimization of nonsmooth functions.
//!
//! This crate minimizes locally Lipschitz functions `f: R^n -> R` given only
//! a value-and-subgradient oracle. The outer loop maintains a positive
//! definite metric `W` (the inverse form of a quasi-Newton Hessian
//! approximation) and a trust-region radius `delta`, and delegates the actual
//! step computation to one of three interchangeable strategies:
//!
//! * a full-step quasi-Newton strategy with a weak Wolfe line search,
//! * a bundle strategy that solves a piecewise-linear trust-region model,
//! * a gradient-sampling strategy that builds the model from subgradients
//!   drawn randomly inside the trust ball.
//!
//! Every serious step certifies the same sufficient reduction
//!
//! ```text
//! f(x+) <= f(x) - alpha/2 (G omega + gamma)^T W (G omega + gamma),
//! ```
//!
//! where `G omega` is a convex combination of model subgradients and `gamma`
//! absorbs trust-region activity and stepsize rescaling. The metric is kept
//! healthy by construction rather than by monitoring: each update damps the
//! difference vector `y` toward the current step image `H_bar s` just enough
//! that the damped pair `v` satisfies the two curvature bounds
//!
//! ```text
//! s^T v / |s|^2 >= eta      and      |v|^2 / s^T v <= theta,
//! ```
//!
//! which bound the BFGS update's growth of `psi(H) = trace(H) - ln det(H)`
//! per step and therefore keep the eigenvalues of `H` (and `W = H^{-1}`)
//! under uniform control for the whole run. The damping coefficient is chosen
//! minimally: `beta = 0` (the undamped BFGS pair) whenever the raw `y`
//! already satisfies both bounds.
//!
//! Module map: [`metric`] owns damping and the paired BFGS updates,
//! [`subproblem`] the dual quadratic program behind the model strategies,
//! [`strategies`] the three step engines, [`problems`] the benchmark
//! objectives, and [`harness`] the outer loop, grid runner, and reports.

pub mod harness;
pub mod metric;
pub mod oracle;
pub mod problems;
pub mod strategies;
pub mod subproblem;

pub use harness::{run, ExitStatus, FrameworkParams, RunLimits, RunRecord};
pub use oracle::{CountingOracle, FnOracle, ObjectiveOracle};
pub use strategies::{
    BfgsStrategy, BundleConfig, BundleStrategy, GsStrategy, RadiusPolicy, SamplingConfig,
    StepStrategy,
};
