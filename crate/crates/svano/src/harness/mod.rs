//! Outer loop: drive a step strategy, maintain the metric, schedule the
//! radius, and record everything a benchmark row needs.
//!
//! One iteration asks the strategy for a step, certifies the sufficient
//! reduction on serious steps, updates the metric pair `(W, H)` from the
//! damped curvature pair when the displacement is large enough, moves the
//! iterate, updates the trust-region radius, and finally checks termination
//!
//! ```text
//! |G omega|_2 <= factor * delta   and   delta <= delta_term
//! ```
//!
//! against the freshly updated radius. The ordering matters: the radius
//! shrinks in the same iteration whose step certified the shrink test, so a
//! run that terminates stationary reports the post-shrink radius.

pub mod bench;

use std::time::{Duration, Instant};

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::metric::{
    compute_damping, correction_diagnostics, psi, update_hessian, update_inverse, DampingParams,
    HBar, MetricError, SymmetricMatrix,
};
use crate::oracle::{CountingOracle, ObjectiveOracle};
use crate::strategies::{RadiusPolicy, StepContext, StepKind, StepStrategy, StrategyError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("metric update failed at iteration {iter}: {source}")]
    Metric {
        iter: usize,
        #[source]
        source: MetricError,
    },
    #[error("step computation failed at iteration {iter}: {source}")]
    Strategy {
        iter: usize,
        #[source]
        source: StrategyError,
    },
    #[error("invariant violated at iteration {iter}: {what}")]
    Invariant { iter: usize, what: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Which difference vector feeds the metric update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum YRule {
    /// `y = g(x+) - g(x)`, the classical quasi-Newton pair.
    SubgradientDifference,
    /// `y = g(x+) - G omega`, differencing against the model aggregate.
    AggregateDifference,
}

/// Base metric of the damping bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HBarChoice {
    Identity,
    Scaled(f64),
    /// Rescale once, after the first curvature pair, to the Barzilai-Borwein
    /// quotient `s^T y / s^T s` clamped into `[eta, theta]`.
    BarzilaiBorwein,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameworkParams {
    /// Sufficient-reduction constant `alpha` in `(0, 1)`.
    pub alpha: f64,
    /// Damping floor: `s^T v / |s|^2 >= eta` after damping.
    pub eta: f64,
    /// Damping cap: `|v|^2 / s^T v <= theta`; `inf` disables the cap.
    pub theta: f64,
    pub h_bar: HBarChoice,
    pub y_rule: YRule,
    /// Maintain the direct Hessian form alongside `W` and check the pair
    /// against each other every update (testing aid, costs O(n^3) per step).
    pub verification: bool,
}

impl Default for FrameworkParams {
    fn default() -> Self {
        Self {
            alpha: 1e-15,
            eta: 1e-12,
            theta: 20.0,
            h_bar: HBarChoice::Identity,
            y_rule: YRule::SubgradientDifference,
            verification: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunLimits {
    pub max_iters: usize,
    pub wall_clock_secs: f64,
    /// Stationarity factor: terminate when `|G omega| <= factor * delta`.
    pub termination_factor: f64,
    /// Radius threshold of the termination test.
    pub termination_delta: f64,
}

impl Default for RunLimits {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            wall_clock_secs: 600.0,
            termination_factor: 10.0,
            termination_delta: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExitStatus {
    /// Both termination tests held: the final radius certifies stationarity.
    Stationary,
    /// Iteration or wall-clock budget exhausted.
    Iteration,
    /// A strategy breakdown: no admissible stepsize was found.
    Stepsize,
}

impl ExitStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExitStatus::Stationary => "Stationary",
            ExitStatus::Iteration => "Iteration",
            ExitStatus::Stepsize => "Stepsize",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub k: usize,
    pub kind: StepKind,
    /// Objective value after this iteration.
    pub f: f64,
    /// Radius after this iteration's update.
    pub delta: f64,
    pub s_norm: f64,
    pub g_omega_norm: f64,
    pub u_norm: f64,
    /// Damping coefficient of this iteration's metric update, if one ran.
    pub beta: Option<f64>,
    pub psi: Option<f64>,
    pub cos_phi: Option<f64>,
    pub iota: Option<f64>,
    /// Hash of the W entries; stable across iterations that skip the update.
    pub w_fingerprint: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub problem: String,
    pub algorithm: String,
    pub n: usize,
    pub exit: ExitStatus,
    pub delta_end: f64,
    pub f_end: f64,
    pub iters: usize,
    pub func_evals: usize,
    pub grad_evals: usize,
    pub subproblem_solves: usize,
    pub serious_steps: usize,
    pub null_steps: usize,
    pub metric_updates: usize,
    pub time_limit_hit: bool,
    pub wall_secs: f64,
    pub x_end: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<IterationTrace>>,
}

fn validate(params: &FrameworkParams, radius: &RadiusPolicy, limits: &RunLimits) -> Result<(), HarnessError> {
    let bad = |what: &str| Err(HarnessError::Config(what.to_string()));
    if !(params.alpha > 0.0 && params.alpha < 1.0) {
        return bad("alpha must lie in (0, 1)");
    }
    if !(params.eta > 0.0 && params.eta.is_finite()) {
        return bad("eta must be positive and finite");
    }
    if !(params.theta > 0.0) {
        return bad("theta must be positive (infinity disables the cap)");
    }
    if !(radius.delta1 > 0.0 && radius.delta1.is_finite()) {
        return bad("delta1 must be positive and finite");
    }
    if !(radius.tau > 0.0 && radius.tau < 1.0) {
        return bad("tau must lie in (0, 1)");
    }
    if radius.upsilon.iter().any(|u| !(*u > 0.0)) {
        return bad("all three upsilon scales must be positive");
    }
    if limits.max_iters == 0 {
        return bad("max_iters must be at least 1");
    }
    if !(limits.wall_clock_secs > 0.0) {
        return bad("wall_clock_secs must be positive");
    }
    if !(limits.termination_factor > 0.0 && limits.termination_delta > 0.0) {
        return bad("termination thresholds must be positive");
    }
    Ok(())
}

fn build_damping(params: &FrameworkParams) -> Result<DampingParams, HarnessError> {
    let h_bar = match params.h_bar {
        HBarChoice::Identity | HBarChoice::BarzilaiBorwein => HBar::identity(),
        HBarChoice::Scaled(c) => HBar::ScaledIdentity(c),
    };
    DampingParams::new(params.eta, params.theta, h_bar)
        .map_err(|e| HarnessError::Config(format!("damping parameters rejected: {e}")))
}

fn fingerprint(w: &SymmetricMatrix) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    for v in w.as_matrix().iter() {
        v.to_bits().hash(&mut hasher);
    }
    hasher.finish()
}

/// Termination test applied to the post-update radius.
pub fn check_termination(g_omega_norm: f64, delta: f64, limits: &RunLimits) -> bool {
    g_omega_norm <= limits.termination_factor * delta && delta <= limits.termination_delta
}

/// Minimize starting from `x0`, driving `strategy` under the given
/// parameters. The record collects the exit status, final point, and counters;
/// with `with_trace` it also keeps one row per iteration.
#[allow(clippy::too_many_arguments)]
pub fn run(
    oracle: &dyn ObjectiveOracle,
    problem_name: &str,
    x0: DVector<f64>,
    strategy: &mut dyn StepStrategy,
    params: &FrameworkParams,
    radius: &RadiusPolicy,
    limits: &RunLimits,
    with_trace: bool,
) -> Result<RunRecord, HarnessError> {
    validate(params, radius, limits)?;
    let n = x0.len();
    if oracle.dim() != n {
        return Err(HarnessError::Config(format!(
            "starting point has dimension {n} but the oracle expects {}",
            oracle.dim()
        )));
    }
    let counting = CountingOracle::new(oracle);
    let mut x = x0;
    let mut f = counting.value(&x);
    let mut g = counting.subgradient(&x);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(HarnessError::Config(
            "objective or subgradient is not finite at the starting point".to_string(),
        ));
    }

    let mut w = SymmetricMatrix::identity(n);
    let mut h = params.verification.then(|| SymmetricMatrix::identity(n));
    let mut damping = build_damping(params)?;
    let mut bb_pending = matches!(params.h_bar, HBarChoice::BarzilaiBorwein);

    let mut delta = radius.delta1;
    let start = Instant::now();
    let wall_limit = Duration::from_secs_f64(limits.wall_clock_secs);

    let mut exit = ExitStatus::Iteration;
    let mut iters = limits.max_iters;
    let mut time_limit_hit = false;
    let mut serious_steps = 0usize;
    let mut null_steps = 0usize;
    let mut metric_updates = 0usize;
    let mut subproblem_solves = 0usize;
    let mut trace: Option<Vec<IterationTrace>> = with_trace.then(Vec::new);

    for k in 1..=limits.max_iters {
        if start.elapsed() >= wall_limit {
            time_limit_hit = true;
            iters = k - 1;
            break;
        }
        let ctx = StepContext {
            oracle: &counting,
            x: &x,
            f_x: f,
            g_x: &g,
            w: &w,
            delta,
            alpha: params.alpha,
            radius,
        };
        let outcome = strategy
            .compute_step(&ctx)
            .map_err(|source| HarnessError::Strategy { iter: k, source })?;
        subproblem_solves += outcome.counters.subproblem_solves;

        let u = &outcome.g_omega + &outcome.gamma;
        let u_norm = u.norm();
        let s_norm = outcome.s.norm();
        let g_omega_norm = outcome.g_omega.norm();

        match outcome.kind {
            StepKind::Breakdown => {
                if let Some(rows) = trace.as_mut() {
                    rows.push(IterationTrace {
                        k,
                        kind: StepKind::Breakdown,
                        f,
                        delta,
                        s_norm,
                        g_omega_norm,
                        u_norm,
                        beta: None,
                        psi: None,
                        cos_phi: None,
                        iota: None,
                        w_fingerprint: Some(fingerprint(&w)),
                    });
                }
                // A strategy that cannot move any further from an iterate
                // that already satisfies the success test has simply arrived;
                // otherwise the collapsed search is the stepsize failure.
                exit = if check_termination(g_omega_norm, delta, limits) {
                    ExitStatus::Stationary
                } else {
                    ExitStatus::Stepsize
                };
                iters = k;
                break;
            }
            StepKind::Null => {
                if outcome.s.iter().any(|v| *v != 0.0) || !outcome.skip_update {
                    return Err(HarnessError::Invariant {
                        iter: k,
                        what: "a null step must keep s = 0 and skip the metric update".to_string(),
                    });
                }
                null_steps += 1;
            }
            StepKind::Serious => {
                let u_w_u = w.quadratic_form(&u);
                let bound = f - 0.5 * params.alpha * u_w_u;
                let tol = 1e-9 * (1.0 + f.abs().max(u_w_u.abs()));
                if !(outcome.f_plus <= bound + tol) {
                    return Err(HarnessError::Invariant {
                        iter: k,
                        what: format!(
                            "serious step missed the sufficient reduction: f+ = {} > {}",
                            outcome.f_plus, bound
                        ),
                    });
                }
                serious_steps += 1;
            }
        }

        let mut beta = None;
        let mut psi_val = None;
        let mut cos_phi = None;
        let mut iota = None;
        if outcome.kind == StepKind::Serious && !outcome.skip_update && s_norm >= 1e-15 {
            let g_plus = outcome.g_plus.as_ref().ok_or_else(|| HarnessError::Invariant {
                iter: k,
                what: "a serious step must carry a subgradient at the new point".to_string(),
            })?;
            let y = match params.y_rule {
                YRule::SubgradientDifference => g_plus - &g,
                YRule::AggregateDifference => g_plus - &outcome.g_omega,
            };
            if bb_pending {
                let quotient = outcome.s.dot(&y) / outcome.s.norm_squared();
                let factor = if quotient.is_finite() {
                    quotient.clamp(params.eta, params.theta.min(f64::MAX))
                } else {
                    1.0
                };
                damping = DampingParams::new(params.eta, params.theta, HBar::ScaledIdentity(factor))
                    .map_err(|e| HarnessError::Config(format!("Barzilai-Borwein rescale rejected: {e}")))?;
                bb_pending = false;
            }
            let pair = compute_damping(&outcome.s, &y, &damping)
                .map_err(|source| HarnessError::Metric { iter: k, source })?;
            w = update_inverse(&w, &pair).map_err(|source| HarnessError::Metric { iter: k, source })?;
            if let Some(h_mat) = h.as_mut() {
                *h_mat = update_hessian(h_mat, &pair)
                    .map_err(|source| HarnessError::Metric { iter: k, source })?;
                let product = h_mat.as_matrix() * w.as_matrix();
                let drift = (&product - nalgebra::DMatrix::<f64>::identity(n, n)).norm();
                let scale = 1.0 + h_mat.as_matrix().norm() * w.as_matrix().norm();
                if drift > 1e-6 * scale {
                    return Err(HarnessError::Invariant {
                        iter: k,
                        what: format!("inverse pair drifted apart: |HW - I| = {drift:.3e}"),
                    });
                }
                let record = correction_diagnostics(h_mat, &outcome.s)
                    .map_err(|source| HarnessError::Metric { iter: k, source })?;
                psi_val = Some(psi(h_mat).map_err(|source| HarnessError::Metric { iter: k, source })?);
                cos_phi = Some(record.cos_phi);
                iota = Some(record.iota);
            }
            metric_updates += 1;
            beta = Some(pair.beta);
        }

        if outcome.kind == StepKind::Serious {
            x = outcome.x_plus;
            f = outcome.f_plus;
            g = outcome.g_plus.expect("serious step carries a subgradient");
        }

        // The success test pairs this iteration's aggregate with the radius
        // the subproblem was actually solved under; the radius update only
        // applies when the run continues.
        let terminal = check_termination(g_omega_norm, delta, limits);
        if !terminal {
            let mut new_delta = radius.update(delta, u_norm, s_norm, g_omega_norm);
            if outcome.request_shrink && new_delta == delta {
                new_delta = radius.tau * delta;
            }
            delta = new_delta;
        }

        if let Some(rows) = trace.as_mut() {
            rows.push(IterationTrace {
                k,
                kind: outcome.kind,
                f,
                delta,
                s_norm,
                g_omega_norm,
                u_norm,
                beta,
                psi: psi_val,
                cos_phi,
                iota,
                w_fingerprint: Some(fingerprint(&w)),
            });
        }

        if terminal {
            exit = ExitStatus::Stationary;
            iters = k;
            break;
        }
        if delta == 0.0 {
            // tau * delta underflowed: no positive radius is representable,
            // so no further stepsize is either.
            exit = ExitStatus::Stepsize;
            iters = k;
            break;
        }
    }

    let (func_evals, grad_evals) = counting.counts();
    Ok(RunRecord {
        problem: problem_name.to_string(),
        algorithm: strategy.name().to_string(),
        n,
        exit,
        delta_end: delta,
        f_end: f,
        iters,
        func_evals,
        grad_evals,
        subproblem_solves,
        serious_steps,
        null_steps,
        metric_updates,
        time_limit_hit,
        wall_secs: start.elapsed().as_secs_f64(),
        x_end: x.iter().copied().collect(),
        trace,
    })
}

/// Condensed view of a traced run: step mix, damping activity, and the
/// metric-quality series the verification mode collects.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub serious_steps: usize,
    pub null_steps: usize,
    pub metric_updates: usize,
    /// Fraction of metric updates that needed no damping at all.
    pub beta_zero_fraction: Option<f64>,
    pub beta_max: Option<f64>,
    pub psi_final: Option<f64>,
    /// Worst slack in the per-update growth budget
    /// `psi(H_k) <= psi(H_1) + updates * (theta - 1 - ln eta)`;
    /// negative slack means the budget was violated.
    pub psi_budget_slack: Option<f64>,
    pub cos_phi_min: Option<f64>,
    pub iota_min: Option<f64>,
    pub iota_max: Option<f64>,
}

pub fn diagnostics_report(record: &RunRecord, params: &FrameworkParams) -> DiagnosticsReport {
    let rows: &[IterationTrace] = record.trace.as_deref().unwrap_or(&[]);
    let betas: Vec<f64> = rows.iter().filter_map(|r| r.beta).collect();
    let beta_zero_fraction = (!betas.is_empty())
        .then(|| betas.iter().filter(|b| **b == 0.0).count() as f64 / betas.len() as f64);
    let beta_max = betas.iter().copied().fold(None, |acc: Option<f64>, b| {
        Some(acc.map_or(b, |m| m.max(b)))
    });
    let psi_rows: Vec<(usize, f64)> = rows
        .iter()
        .scan(0usize, |updates, r| {
            if r.beta.is_some() {
                *updates += 1;
            }
            Some((*updates, r.psi))
        })
        .filter_map(|(m, p)| p.map(|p| (m, p)))
        .collect();
    let psi_final = psi_rows.last().map(|(_, p)| *p);
    let psi_budget_slack = if params.theta.is_finite() && !psi_rows.is_empty() {
        let budget = params.theta - 1.0 - params.eta.ln();
        let psi_start = record.n as f64; // psi(I) = n
        psi_rows
            .iter()
            .map(|(m, p)| psi_start + *m as f64 * budget - p)
            .fold(None, |acc: Option<f64>, slack| {
                Some(acc.map_or(slack, |m| m.min(slack)))
            })
    } else {
        None
    };
    let fold_min = |it: &mut dyn Iterator<Item = f64>| {
        it.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |m| m.min(v))))
    };
    let fold_max = |it: &mut dyn Iterator<Item = f64>| {
        it.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |m| m.max(v))))
    };
    DiagnosticsReport {
        serious_steps: record.serious_steps,
        null_steps: record.null_steps,
        metric_updates: record.metric_updates,
        beta_zero_fraction,
        beta_max,
        psi_final,
        psi_budget_slack,
        cos_phi_min: fold_min(&mut rows.iter().filter_map(|r| r.cos_phi)),
        iota_min: fold_min(&mut rows.iter().filter_map(|r| r.iota)),
        iota_max: fold_max(&mut rows.iter().filter_map(|r| r.iota)),
    }
}
