//! Bundle trust-region strategy.
//!
//! At each outer iteration the strategy keeps a bundle of cutting planes
//! anchored at the current center, solves the trust-region model subproblem,
//! and evaluates the candidate. An accepted candidate (descent at least
//! `alpha` times the model decrease) becomes a serious step; a rejected one is
//! appended to the bundle and the model is solved again. Between outer
//! iterations the planes whose points still lie in the new trust ball
//! (infinity norm) are carried over.
//!
//! The nonconvex variant downshifts the plane offsets so the model never
//! exceeds the center value, exits early (as a null step) when the computed
//! step already passes the radius-shrink test, runs a weak Wolfe rescaling
//! along accepted steps, and after a budget of consecutive rejected
//! candidates falls back to a plain line search along the last model
//! direction. The convex variant transports exact planes, never rescales, and
//! reports a stationarity signal when the model optimum reaches the center
//! value, which for convex objectives certifies the center as optimal within
//! the trust ball.

use nalgebra::DVector;

use super::line_search::{weak_wolfe_search, LineSearchParams, WolfeOutcome};
use super::{counters_since, StepContext, StepKind, StepOutcome, StepStrategy, StrategyError};
use crate::subproblem::{
    recover_primal, solve_dual_lenient, warm_start, BundleSet, DualSolution, OffsetMode, TrustRegion,
};

#[derive(Debug, Clone)]
pub struct BundleConfig {
    /// Downshift coefficient of the nonconvex offset rule.
    pub r: f64,
    /// Consecutive rejected candidates before the line-search fallback.
    pub null_budget: usize,
    /// Hard cap on model solves within one outer iteration.
    pub inner_cap: usize,
    /// Bundle size cap; reaching it evicts the oldest inactive plane.
    pub max_planes: usize,
    /// Relative tolerance of the stationarity signal `f(x) - l(x+) <= tol`.
    pub stationarity_rel_tol: f64,
}

impl Default for BundleConfig {
    fn default() -> Self {
        Self {
            r: 1e-15,
            null_budget: 50,
            inner_cap: 1000,
            max_planes: 500,
            stationarity_rel_tol: 1e-12,
        }
    }
}

type Plane = (DVector<f64>, f64, DVector<f64>);

#[derive(Debug, Clone)]
pub struct BundleStrategy {
    convex: bool,
    cfg: BundleConfig,
    line_search: LineSearchParams,
    carried: Vec<Plane>,
}

impl BundleStrategy {
    /// Variant for general locally Lipschitz objectives.
    pub fn nonconvex(alpha: f64, cfg: BundleConfig) -> Self {
        Self {
            convex: false,
            cfg,
            line_search: LineSearchParams::from_alpha(alpha),
            carried: Vec::new(),
        }
    }

    /// Variant for convex objectives: exact plane transport, no rescaling, no
    /// fallback, and the stationarity signal is meaningful globally.
    pub fn convex(alpha: f64, cfg: BundleConfig) -> Self {
        Self {
            convex: true,
            cfg,
            line_search: LineSearchParams::from_alpha(alpha),
            carried: Vec::new(),
        }
    }

    pub fn is_convex_variant(&self) -> bool {
        self.convex
    }

    /// Number of planes waiting to be carried into the next iteration.
    pub fn carried_len(&self) -> usize {
        self.carried.len()
    }

    fn offset_mode(&self) -> OffsetMode {
        if self.convex {
            OffsetMode::Convex
        } else {
            OffsetMode::Downshift { r: self.cfg.r }
        }
    }

    /// Appends a plane, evicting first when the bundle is full. Eviction
    /// targets the oldest plane the last solution left inactive and never the
    /// center; removing a plane shifts indices, so the warm start is dropped.
    fn push_plane(
        &self,
        bundle: &mut BundleSet,
        prev_sol: &mut Option<DualSolution>,
        point: DVector<f64>,
        value: f64,
        subgradient: DVector<f64>,
    ) {
        if bundle.len() >= self.cfg.max_planes {
            let victim = prev_sol
                .as_ref()
                .and_then(|sol| {
                    (1..bundle.len()).find(|&j| sol.omega.as_slice().get(j).is_none_or(|&w| w <= 1e-12))
                })
                .unwrap_or(1);
            bundle.remove(victim);
            *prev_sol = None;
        }
        bundle.push(point, value, subgradient);
    }

    fn store_carry(&mut self, bundle: &BundleSet) {
        self.carried = bundle
            .points()
            .iter()
            .zip(bundle.values().iter().zip(bundle.subgradients()))
            .map(|(p, (&f, g))| (p.clone(), f, g.clone()))
            .collect();
    }
}

impl StepStrategy for BundleStrategy {
    fn name(&self) -> &'static str {
        if self.convex {
            "bundle-convex"
        } else {
            "bundle"
        }
    }

    fn compute_step(&mut self, ctx: &StepContext<'_>) -> Result<StepOutcome, StrategyError> {
        let start = ctx.oracle.counts();
        let mut subs = 0usize;
        let tr = TrustRegion::new(ctx.delta)
            .ok_or(StrategyError::NonFinite { context: "trust-region radius" })?;

        // Rebuild the bundle around the current center, carrying over planes
        // whose points still lie in the trust ball.
        let mut bundle = BundleSet::new(ctx.x.clone(), ctx.f_x, ctx.g_x.clone());
        for (point, value, subgradient) in self.carried.drain(..) {
            if bundle.len() >= self.cfg.max_planes {
                break;
            }
            if (&point - ctx.x).amax() <= ctx.delta {
                bundle.push(point, value, subgradient);
            }
        }

        let mut prev_sol: Option<DualSolution> = None;
        let mut null_steps = 0usize;
        for _ in 0..self.cfg.inner_cap {
            bundle.assemble_offsets(self.offset_mode());
            let warm = prev_sol.as_ref().and_then(|p| warm_start(p, &bundle));
            let sol = solve_dual_lenient(&bundle, ctx.w, &tr, warm.as_ref())?;
            subs += 1;
            let step = recover_primal(&bundle, ctx.w, &sol, &tr);
            let g_omega = bundle.g_omega(&sol.omega);
            let u = &g_omega + &sol.gamma;
            let u_w_u = ctx.w.quadratic_form(&u);

            if !self.convex {
                // The computed step already certifies the radius-shrink test:
                // skip the evaluation, report a null step, and let the outer
                // loop shrink the ball.
                let measure =
                    ctx.radius.stationarity_measure(u.norm(), step.s.norm(), g_omega.norm());
                if measure <= ctx.delta {
                    self.store_carry(&bundle);
                    return Ok(StepOutcome::null(
                        ctx,
                        g_omega,
                        sol.gamma.clone(),
                        counters_since(ctx.oracle, start, subs),
                    ));
                }
            }

            // The model cannot improve on the center value: the center is
            // model-stationary within the current radius, so no amount of
            // further enrichment will produce a descent candidate here. Ask
            // the outer loop to contract the ball; repeating the certificate
            // at ever smaller radii is what drives the run into the
            // termination test at a genuine stationary point. The model
            // optimum still gets evaluated and kept: on a kink its
            // subgradient comes from the piece the bundle is missing, and
            // without it the carried hull would freeze while the radius
            // collapses.
            // Convex objectives only: with exact planes, a model optimum at
            // the center value certifies the center as optimal over the whole
            // ball, so report the signal and have the ball contract. The
            // downshifted nonconvex model earns no such certificate (and the
            // recovered model value carries enough rounding that the gap can
            // even read negative), so the nonconvex loop relies on the norm
            // certificate, the null budget, and the fallback search instead.
            if self.convex
                && ctx.f_x - step.l_value <= self.cfg.stationarity_rel_tol * ctx.f_x.abs().max(1.0)
            {
                self.store_carry(&bundle);
                let mut out = StepOutcome::null(
                    ctx,
                    g_omega,
                    sol.gamma.clone(),
                    counters_since(ctx.oracle, start, subs),
                );
                out.stationary_signal = true;
                out.request_shrink = true;
                return Ok(out);
            }

            // A candidate identical to the center carries no new plane; skip
            // the oracle and let the null budget drive the loop into the
            // fallback search.
            if !self.convex && step.x_plus == *ctx.x {
                null_steps += 1;
                if null_steps >= self.cfg.null_budget {
                    let out = match weak_wolfe_search(
                        ctx.oracle,
                        ctx.x,
                        ctx.f_x,
                        &step.s,
                        -u_w_u,
                        &self.line_search,
                    ) {
                        WolfeOutcome::Accepted(acc) => {
                            let gamma = &sol.gamma + &u * (acc.t - 1.0);
                            let s_final = &acc.x_new - ctx.x;
                            self.store_carry(&bundle);
                            StepOutcome {
                                kind: StepKind::Serious,
                                s: s_final,
                                x_plus: acc.x_new,
                                f_plus: acc.f_new,
                                g_plus: Some(acc.g_new),
                                g_omega,
                                gamma,
                                skip_update: false,
                                request_shrink: false,
                                stationary_signal: false,
                                counters: counters_since(ctx.oracle, start, subs),
                            }
                        }
                        WolfeOutcome::Failed => {
                            StepOutcome::breakdown(ctx, counters_since(ctx.oracle, start, subs))
                        }
                    };
                    return Ok(out);
                }
                prev_sol = Some(sol);
                continue;
            }

            let f_cand = ctx.oracle.value(&step.x_plus);
            let g_cand = ctx.oracle.subgradient(&step.x_plus);
            let plane_ok = f_cand.is_finite() && g_cand.iter().all(|v| v.is_finite());

            if plane_ok && ctx.f_x - f_cand >= ctx.alpha * (ctx.f_x - step.l_value) {
                // Serious step. Keep the candidate plane for the next bundle,
                // then (nonconvex variant) try to improve the stepsize with a
                // weak Wolfe rescaling along the model direction; its decrease
                // condition is the sufficient-reduction inequality for the
                // rescaled aggregate t*u, so any accepted t preserves it.
                self.push_plane(
                    &mut bundle,
                    &mut prev_sol,
                    step.x_plus.clone(),
                    f_cand,
                    g_cand.clone(),
                );
                let mut t = 1.0;
                let mut x_final = step.x_plus;
                let mut f_final = f_cand;
                let mut g_final = g_cand;
                if !self.convex && u_w_u > 0.0 {
                    match weak_wolfe_search(
                        ctx.oracle,
                        ctx.x,
                        ctx.f_x,
                        &step.s,
                        -u_w_u,
                        &self.line_search,
                    ) {
                        WolfeOutcome::Accepted(acc) => {
                            t = acc.t;
                            x_final = acc.x_new;
                            f_final = acc.f_new;
                            g_final = acc.g_new;
                        }
                        WolfeOutcome::Failed => {} // keep the unit step
                    }
                }
                let gamma = &sol.gamma + &u * (t - 1.0);
                let s_final = &x_final - ctx.x;
                self.store_carry(&bundle);
                return Ok(StepOutcome {
                    kind: StepKind::Serious,
                    s: s_final,
                    x_plus: x_final,
                    f_plus: f_final,
                    g_plus: Some(g_final),
                    g_omega,
                    gamma,
                    skip_update: false,
                    request_shrink: false,
                    stationary_signal: false,
                    counters: counters_since(ctx.oracle, start, subs),
                });
            }

            // Rejected candidate: a null step inside the inner loop.
            null_steps += 1;
            if !self.convex && null_steps >= self.cfg.null_budget {
                // The model keeps proposing non-descent candidates; search f
                // itself along the last direction before giving up.
                let out = match weak_wolfe_search(
                    ctx.oracle,
                    ctx.x,
                    ctx.f_x,
                    &step.s,
                    -u_w_u,
                    &self.line_search,
                ) {
                    WolfeOutcome::Accepted(acc) => {
                        let gamma = &sol.gamma + &u * (acc.t - 1.0);
                        let s_final = &acc.x_new - ctx.x;
                        if plane_ok {
                            self.push_plane(&mut bundle, &mut prev_sol, step.x_plus, f_cand, g_cand);
                        }
                        self.store_carry(&bundle);
                        StepOutcome {
                            kind: StepKind::Serious,
                            s: s_final,
                            x_plus: acc.x_new,
                            f_plus: acc.f_new,
                            g_plus: Some(acc.g_new),
                            g_omega,
                            gamma,
                            skip_update: false,
                            request_shrink: false,
                            stationary_signal: false,
                            counters: counters_since(ctx.oracle, start, subs),
                        }
                    }
                    WolfeOutcome::Failed => {
                        StepOutcome::breakdown(ctx, counters_since(ctx.oracle, start, subs))
                    }
                };
                return Ok(out);
            }
            prev_sol = Some(sol);
            if plane_ok {
                self.push_plane(&mut bundle, &mut prev_sol, step.x_plus, f_cand, g_cand);
            }
        }
        Err(StrategyError::InnerLoopLimit { cap: self.cfg.inner_cap })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::SymmetricMatrix;
    use crate::oracle::{CountingOracle, FnOracle};
    use crate::strategies::RadiusPolicy;
    use approx::assert_relative_eq;

    fn abs_oracle() -> FnOracle<impl Fn(&DVector<f64>) -> f64, impl Fn(&DVector<f64>) -> DVector<f64>>
    {
        FnOracle::new(
            1,
            |x: &DVector<f64>| x[0].abs(),
            |x: &DVector<f64>| DVector::from_vec(vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }]),
        )
    }

    #[test]
    fn convex_variant_takes_the_trust_region_step_on_abs() {
        let inner = abs_oracle();
        let oracle = CountingOracle::new(&inner);
        let x = DVector::from_vec(vec![1.0]);
        let g_x = oracle.subgradient(&x);
        let w = SymmetricMatrix::identity(1);
        let radius = RadiusPolicy::default();
        let ctx = StepContext {
            oracle: &oracle,
            x: &x,
            f_x: 1.0,
            g_x: &g_x,
            w: &w,
            delta: 0.5,
            alpha: 1e-15,
            radius: &radius,
        };
        let mut strategy = BundleStrategy::convex(1e-15, BundleConfig::default());
        let out = strategy.compute_step(&ctx).expect("step succeeds");
        assert_eq!(out.kind, StepKind::Serious);
        assert_relative_eq!(out.x_plus[0], 0.5, max_relative = 1e-12);
        assert_relative_eq!(out.gamma[0], -0.5, max_relative = 1e-12, epsilon = 1e-12);
        assert_eq!(out.counters.subproblem_solves, 1);
        assert!(strategy.carried_len() >= 2, "center and candidate planes are carried");
    }

    #[test]
    fn convex_variant_signals_stationarity_at_the_kink() {
        let inner = abs_oracle();
        let oracle = CountingOracle::new(&inner);
        let x = DVector::zeros(1);
        let g_x = oracle.subgradient(&x);
        let w = SymmetricMatrix::identity(1);
        let radius = RadiusPolicy::default();
        let ctx = StepContext {
            oracle: &oracle,
            x: &x,
            f_x: 0.0,
            g_x: &g_x,
            w: &w,
            delta: 0.1,
            alpha: 1e-15,
            radius: &radius,
        };
        let mut strategy = BundleStrategy::convex(1e-15, BundleConfig::default());
        let out = strategy.compute_step(&ctx).expect("step succeeds");
        assert_eq!(out.kind, StepKind::Null);
        assert!(out.stationary_signal, "model optimum must reach the center value at a minimizer");
        assert_eq!(out.s.norm(), 0.0);
        assert!(out.skip_update);
    }

    #[test]
    fn nonconvex_variant_exits_early_at_the_kink_without_evaluating() {
        let inner = abs_oracle();
        let oracle = CountingOracle::new(&inner);
        let x = DVector::zeros(1);
        let g_x = oracle.subgradient(&x);
        let w = SymmetricMatrix::identity(1);
        let radius = RadiusPolicy::default();
        let ctx = StepContext {
            oracle: &oracle,
            x: &x,
            f_x: 0.0,
            g_x: &g_x,
            w: &w,
            delta: 0.1,
            alpha: 1e-15,
            radius: &radius,
        };
        let mut strategy = BundleStrategy::nonconvex(1e-15, BundleConfig::default());
        let out = strategy.compute_step(&ctx).expect("step succeeds");
        assert_eq!(out.kind, StepKind::Null);
        let (fc, _) = oracle.counts();
        // One evaluation happened per rejected candidate before the exit but
        // none after the shrink test passes; at the kink with opposing
        // subgradients the second solve already balances the bundle.
        assert!(fc <= 1, "early exit must not keep evaluating, saw {fc} value calls");
        assert!(!out.stationary_signal, "the early exit precedes the stationarity check");
    }

    #[test]
    fn nonconvex_refinement_extends_an_accepted_trust_region_step() {
        // Quadratic from x = 3 with radius 1: the model step is s = -1 with
        // gamma = -2 (trust region active), the candidate x = 2 is accepted,
        // and the Wolfe rescaling doubles out to t = 4, landing at x = -1
        // where the curvature condition first holds. The aggregate is rescaled
        // to t*u, so gamma becomes -2 + 3 = 1.
        let inner = FnOracle::new(
            1,
            |x: &DVector<f64>| 0.5 * x[0] * x[0],
            |x: &DVector<f64>| x.clone(),
        );
        let oracle = CountingOracle::new(&inner);
        let x = DVector::from_vec(vec![3.0]);
        let f_x = oracle.value(&x);
        let g_x = oracle.subgradient(&x);
        let w = SymmetricMatrix::identity(1);
        let radius = RadiusPolicy::default();
        let ctx = StepContext {
            oracle: &oracle,
            x: &x,
            f_x,
            g_x: &g_x,
            w: &w,
            delta: 1.0,
            alpha: 1e-15,
            radius: &radius,
        };
        let mut strategy = BundleStrategy::nonconvex(1e-15, BundleConfig::default());
        let out = strategy.compute_step(&ctx).expect("step succeeds");
        assert_eq!(out.kind, StepKind::Serious);
        assert_relative_eq!(out.x_plus[0], -1.0, max_relative = 1e-12);
        assert_relative_eq!(out.f_plus, 0.5, max_relative = 1e-12);
        assert_relative_eq!(out.gamma[0], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn refinement_failure_keeps_the_unit_step() {
        // f(x) = -x descends forever: the model step is accepted but the weak
        // Wolfe curvature condition never holds, so the rescaling gives up and
        // the unit step must survive.
        let inner = FnOracle::new(
            1,
            |x: &DVector<f64>| -x[0],
            |_| DVector::from_vec(vec![-1.0]),
        );
        let oracle = CountingOracle::new(&inner);
        let x = DVector::zeros(1);
        let g_x = oracle.subgradient(&x);
        let w = SymmetricMatrix::identity(1);
        let radius = RadiusPolicy::default();
        let ctx = StepContext {
            oracle: &oracle,
            x: &x,
            f_x: 0.0,
            g_x: &g_x,
            w: &w,
            delta: 0.5,
            alpha: 1e-15,
            radius: &radius,
        };
        let mut strategy = BundleStrategy::nonconvex(1e-15, BundleConfig::default());
        let out = strategy.compute_step(&ctx).expect("step succeeds");
        assert_eq!(out.kind, StepKind::Serious);
        assert_eq!(out.x_plus[0], 0.5, "unit step along s = delta from the origin");
        assert_eq!(out.f_plus, -0.5);
    }
}
