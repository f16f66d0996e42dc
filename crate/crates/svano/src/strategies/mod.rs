//! Step strategies: three interchangeable ways to produce a candidate step.
//!
//! All three strategies speak the same [`StepOutcome`] language to the outer
//! loop. A serious step moves the iterate and hands back the point, value, and
//! a subgradient at the new point together with the aggregate pair
//! `(G omega, gamma)` realizing the sufficient reduction
//!
//! ```text
//! f(x+) <= f(x) - alpha/2 (G omega + gamma)^T W (G omega + gamma);
//! ```
//!
//! a null step leaves the iterate in place (and never touches the metric); a
//! breakdown tells the loop to stop with the stepsize exit. The trust-region
//! radius lives in [`RadiusPolicy`]: it halves (factor `tau`) exactly when the
//! scaled stationarity measure `max{u1 |G omega + gamma|, u2 |s|, u3 |G omega|}`
//! drops to the current radius, so the radius doubles as the stationarity
//! tolerance in the termination test.

mod bfgs;
mod bundle;
mod line_search;
mod sampling;

pub use bfgs::BfgsStrategy;
pub use bundle::{BundleConfig, BundleStrategy};
pub use line_search::{weak_wolfe_search, AcceptedStep, LineSearchParams, WolfeOutcome};
pub use sampling::{GsStrategy, SamplingConfig};

use nalgebra::DVector;
use thiserror::Error;

use crate::metric::SymmetricMatrix;
use crate::oracle::CountingOracle;
use crate::subproblem::SubproblemError;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("inner loop exceeded {cap} model solves without an accepted or null step")]
    InnerLoopLimit { cap: usize },
    #[error("sampling produced no usable subgradient after {tries} attempts")]
    SamplingFailed { tries: usize },
    #[error(transparent)]
    Subproblem(#[from] SubproblemError),
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Serious,
    Null,
    Breakdown,
}

/// Oracle work performed while computing one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CountersDelta {
    pub func_evals: usize,
    pub grad_evals: usize,
    pub subproblem_solves: usize,
}

/// Everything a strategy may look at when computing a step.
pub struct StepContext<'a> {
    pub oracle: &'a CountingOracle<'a>,
    pub x: &'a DVector<f64>,
    pub f_x: f64,
    /// A subgradient at `x` (the strategies reuse it as the center plane).
    pub g_x: &'a DVector<f64>,
    pub w: &'a SymmetricMatrix,
    pub delta: f64,
    /// Sufficient-reduction constant of the acceptance tests.
    pub alpha: f64,
    pub radius: &'a RadiusPolicy,
}

/// Result of one step computation.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub kind: StepKind,
    pub s: DVector<f64>,
    pub x_plus: DVector<f64>,
    /// `f(x_plus)`; equals `f(x)` for null steps and breakdowns.
    pub f_plus: f64,
    /// Subgradient at `x_plus`, present on serious steps.
    pub g_plus: Option<DVector<f64>>,
    /// Convex combination `G omega` of the model's subgradients.
    pub g_omega: DVector<f64>,
    pub gamma: DVector<f64>,
    /// Set on steps after which the metric must not be updated.
    pub skip_update: bool,
    /// Set when the radius must shrink even though the norm test cannot see
    /// why (gradient sampling's failed backtracking search).
    pub request_shrink: bool,
    /// Set when the model optimum matched the center value, certifying the
    /// center as stationary for the current model and radius.
    pub stationary_signal: bool,
    pub counters: CountersDelta,
}

impl StepOutcome {
    /// A null step: stay at `x`, keep the metric, report the aggregates.
    pub fn null(
        ctx: &StepContext<'_>,
        g_omega: DVector<f64>,
        gamma: DVector<f64>,
        counters: CountersDelta,
    ) -> Self {
        let n = ctx.x.len();
        Self {
            kind: StepKind::Null,
            s: DVector::zeros(n),
            x_plus: ctx.x.clone(),
            f_plus: ctx.f_x,
            g_plus: None,
            g_omega,
            gamma,
            skip_update: true,
            request_shrink: false,
            stationary_signal: false,
            counters,
        }
    }

    pub fn breakdown(ctx: &StepContext<'_>, counters: CountersDelta) -> Self {
        let n = ctx.x.len();
        Self {
            kind: StepKind::Breakdown,
            s: DVector::zeros(n),
            x_plus: ctx.x.clone(),
            f_plus: ctx.f_x,
            g_plus: None,
            g_omega: DVector::zeros(n),
            gamma: DVector::zeros(n),
            skip_update: true,
            request_shrink: false,
            stationary_signal: false,
            counters,
        }
    }
}

/// A strategy holds its cross-iteration state (carried bundles, sampler RNG).
pub trait StepStrategy {
    fn name(&self) -> &'static str;
    fn compute_step(&mut self, ctx: &StepContext<'_>) -> Result<StepOutcome, StrategyError>;
}

/// Trust-region radius schedule: start at `delta1`, multiply by `tau` when the
/// scaled stationarity measure falls to the radius, hold otherwise.
#[derive(Debug, Clone)]
pub struct RadiusPolicy {
    pub delta1: f64,
    pub tau: f64,
    /// Scales of the three norms in the stationarity measure.
    pub upsilon: [f64; 3],
}

impl Default for RadiusPolicy {
    fn default() -> Self {
        Self {
            delta1: 0.1,
            tau: 0.5,
            upsilon: [1.0, 1.0, 1.0],
        }
    }
}

impl RadiusPolicy {
    /// `max{u1 |G omega + gamma|, u2 |s|, u3 |G omega|}` (Euclidean norms).
    pub fn stationarity_measure(&self, u_norm: f64, s_norm: f64, g_omega_norm: f64) -> f64 {
        (self.upsilon[0] * u_norm)
            .max(self.upsilon[1] * s_norm)
            .max(self.upsilon[2] * g_omega_norm)
    }

    /// The next radius given the measure of the step just taken.
    pub fn update(&self, delta: f64, u_norm: f64, s_norm: f64, g_omega_norm: f64) -> f64 {
        if self.stationarity_measure(u_norm, s_norm, g_omega_norm) <= delta {
            self.tau * delta
        } else {
            delta
        }
    }
}

/// Snapshot helper for attributing oracle work to a step.
pub(crate) fn counters_since(oracle: &CountingOracle<'_>, start: (usize, usize), subs: usize) -> CountersDelta {
    let (f_now, g_now) = oracle.counts();
    CountersDelta {
        func_evals: f_now - start.0,
        grad_evals: g_now - start.1,
        subproblem_solves: subs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_halves_exactly_when_the_measure_reaches_it() {
        let policy = RadiusPolicy::default();
        assert_eq!(policy.update(0.1, 0.05, 0.01, 0.1), 0.05);
        assert_eq!(policy.update(0.1, 0.2, 0.0, 0.0), 0.1, "u norm above the radius holds it");
        assert_eq!(policy.update(0.1, 0.0, 0.0, 0.11), 0.1, "G omega norm above the radius holds it");
    }

    #[test]
    fn upsilon_scales_enter_the_measure() {
        let policy = RadiusPolicy {
            upsilon: [2.0, 1.0, 1.0],
            ..RadiusPolicy::default()
        };
        assert_eq!(policy.stationarity_measure(0.3, 0.1, 0.1), 0.6);
    }
}
