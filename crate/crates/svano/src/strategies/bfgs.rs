//! Full-step quasi-Newton strategy: scale the negative metric-gradient
//! direction with a weak Wolfe line search.
//!
//! The model here is the single plane through the current iterate, so the
//! subproblem solution is available in closed form: `s = -W g` with aggregate
//! weight 1 on the only subgradient. A stepsize `t` from the line search turns
//! the pair into `G omega = g`, `gamma = (t - 1) g`, which keeps the
//! sufficient-reduction identity exact: `u = G omega + gamma = t g` and the
//! decrease test of the search is precisely `f(x + t s) <= f(x) - alpha/2
//! u^T W u`. A failed search is a breakdown; the outer loop exits with the
//! stepsize status.

use super::line_search::{weak_wolfe_search, LineSearchParams, WolfeOutcome};
use super::{counters_since, StepContext, StepKind, StepOutcome, StepStrategy, StrategyError};

#[derive(Debug, Clone)]
pub struct BfgsStrategy {
    line_search: LineSearchParams,
}

impl BfgsStrategy {
    pub fn new(alpha: f64) -> Self {
        Self {
            line_search: LineSearchParams::from_alpha(alpha),
        }
    }

    pub fn with_line_search(line_search: LineSearchParams) -> Self {
        Self { line_search }
    }
}

impl StepStrategy for BfgsStrategy {
    fn name(&self) -> &'static str {
        "bfgs"
    }

    fn compute_step(&mut self, ctx: &StepContext<'_>) -> Result<StepOutcome, StrategyError> {
        let start = ctx.oracle.counts();
        let g = ctx.g_x;
        let direction = -ctx.w.mul_vec(g);
        let slope = g.dot(&direction);
        if !slope.is_finite() {
            return Err(StrategyError::NonFinite { context: "line search slope" });
        }
        if slope >= 0.0 {
            // W is positive definite, so slope = -g^T W g >= 0 means g = 0 up
            // to rounding: the smooth-model stationary case. Emit a degenerate
            // serious step with zero aggregates so the radius test shrinks.
            if g.norm() == 0.0 {
                return Ok(StepOutcome {
                    kind: StepKind::Serious,
                    s: nalgebra::DVector::zeros(ctx.x.len()),
                    x_plus: ctx.x.clone(),
                    f_plus: ctx.f_x,
                    g_plus: Some(g.clone()),
                    g_omega: g.clone(),
                    gamma: g.clone(),
                    skip_update: true,
                    request_shrink: false,
                    stationary_signal: true,
                    counters: counters_since(ctx.oracle, start, 1),
                });
            }
            return Ok(StepOutcome::breakdown(
                ctx,
                counters_since(ctx.oracle, start, 1),
            ));
        }
        match weak_wolfe_search(ctx.oracle, ctx.x, ctx.f_x, &direction, slope, &self.line_search) {
            WolfeOutcome::Accepted(step) => {
                let s = &step.x_new - ctx.x;
                let gamma = g * (step.t - 1.0);
                Ok(StepOutcome {
                    kind: StepKind::Serious,
                    s,
                    x_plus: step.x_new,
                    f_plus: step.f_new,
                    g_plus: Some(step.g_new),
                    g_omega: g.clone(),
                    gamma,
                    skip_update: false,
                    request_shrink: false,
                    stationary_signal: false,
                    counters: counters_since(ctx.oracle, start, 1),
                })
            }
            WolfeOutcome::Failed => Ok(StepOutcome::breakdown(
                ctx,
                counters_since(ctx.oracle, start, 1),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::SymmetricMatrix;
    use crate::oracle::{CountingOracle, FnOracle};
    use crate::strategies::RadiusPolicy;
    use nalgebra::DVector;

    fn context_fixture<'a>(
        oracle: &'a CountingOracle<'a>,
        x: &'a DVector<f64>,
        f_x: f64,
        g_x: &'a DVector<f64>,
        w: &'a SymmetricMatrix,
        radius: &'a RadiusPolicy,
    ) -> StepContext<'a> {
        StepContext {
            oracle,
            x,
            f_x,
            g_x,
            w,
            delta: 0.1,
            alpha: 1e-15,
            radius,
        }
    }

    #[test]
    fn quadratic_step_lands_on_the_minimizer_with_unit_stepsize() {
        let inner = FnOracle::new(
            2,
            |x: &DVector<f64>| 0.5 * (x[0] * x[0] + x[1] * x[1]),
            |x: &DVector<f64>| x.clone(),
        );
        let oracle = CountingOracle::new(&inner);
        let x = DVector::from_vec(vec![3.0, -4.0]);
        let f_x = oracle.value(&x);
        let g_x = oracle.subgradient(&x);
        let w = SymmetricMatrix::identity(2);
        let radius = RadiusPolicy::default();
        let ctx = context_fixture(&oracle, &x, f_x, &g_x, &w, &radius);
        let mut strategy = BfgsStrategy::new(1e-15);
        let out = strategy.compute_step(&ctx).expect("step succeeds");
        assert_eq!(out.kind, StepKind::Serious);
        assert_eq!(out.x_plus.as_slice(), &[0.0, 0.0], "W = I sends x to x - g");
        assert_eq!(out.gamma.norm(), 0.0, "unit stepsize leaves gamma at zero");
        assert_eq!(out.counters.subproblem_solves, 1);
    }

    #[test]
    fn zero_gradient_produces_a_stationary_serious_step() {
        let inner = FnOracle::new(1, |_| 0.0, |_| DVector::zeros(1));
        let oracle = CountingOracle::new(&inner);
        let x = DVector::zeros(1);
        let g_x = DVector::zeros(1);
        let w = SymmetricMatrix::identity(1);
        let radius = RadiusPolicy::default();
        let ctx = context_fixture(&oracle, &x, 0.0, &g_x, &w, &radius);
        let mut strategy = BfgsStrategy::new(1e-15);
        let out = strategy.compute_step(&ctx).expect("step succeeds");
        assert_eq!(out.kind, StepKind::Serious);
        assert!(out.skip_update, "zero displacement must not reach the metric update");
        assert!(out.stationary_signal);
    }
}
