//! Primal active-set engine for the dual subproblem.
//!
//! The dual is solved as a minimization over the sign-split variables
//! `xi = (omega, gamma+, gamma-) >= 0` with the single equality
//! `sum(omega) = 1`:
//!
//! ```text
//! minimize  xi^T M^T W M xi / 2 + c^T xi,     M = [G, I, -I],
//! ```
//!
//! where `c = (-b, delta 1, delta 1)`. The working set is the set of
//! variables allowed off their bound; each iteration solves the
//! equality-constrained KKT system on the working set *in step form* (the
//! unknown is the displacement from the current iterate, the right-hand side
//! the current reduced gradient), walks along that direction until a bound
//! blocks (dropping the blocker), and prices the fixed variables once the
//! direction vanishes. The Hessian `M^T W M` is rank-deficient whenever
//! working columns are linearly dependent, which duplicate subgradients make
//! routine for piecewise-linear objectives. Step form makes that harmless: a
//! direction is accepted only when it points downhill (`r^T d <= 0`), and the
//! escalating Tikhonov retries produce guaranteed descent directions on
//! singular systems, so every walk strictly decreases the objective and the
//! iteration cannot cycle. A degenerate walk that blocks immediately at the
//! entering variable falls back to an explicit exchange pivot (shift simplex
//! mass from the largest working weight onto the entering plane, or grow an
//! entering trust-region variable along its own curvature), which again makes
//! strict progress. Pricing picks the most violated fixed variable with
//! lowest-index tie-breaking, and a pivot limit of `50 (m + 2n)` turns
//! numerically stalled instances into a reported error carrying the best
//! iterate.

use nalgebra::{DMatrix, DVector};

use crate::metric::SymmetricMatrix;

use super::{BundleSet, DualSolution, SubproblemError, TrustRegion};

/// Pricing tolerance on reduced costs, scaled by the local magnitudes.
const KKT_TOL: f64 = 1e-10;

/// A working-set iterate stops moving at this relative displacement.
const STEP_TOL: f64 = 1e-12;

pub fn solve_dual(
    bundle: &BundleSet,
    w: &SymmetricMatrix,
    tr: &TrustRegion,
    start: Option<&DualSolution>,
) -> Result<DualSolution, SubproblemError> {
    let n = bundle.dim();
    let m = bundle.len();
    if w.dim() != n {
        return Err(SubproblemError::DimensionMismatch {
            bundle: n,
            metric: w.dim(),
        });
    }
    if !bundle.offsets_assembled() {
        return Err(SubproblemError::MissingOffsets);
    }
    if !w.is_positive_definite() {
        return Err(SubproblemError::MetricNotPositiveDefinite);
    }
    let finite = tr.is_finite();
    let delta = tr.delta();
    let total = if finite { m + 2 * n } else { m };
    let offsets = bundle.offsets();

    let mut xi = DVector::<f64>::zeros(total);
    let mut free = vec![false; total];
    init_iterate(&mut xi, &mut free, bundle, finite, start);

    let pivot_limit = 50 * (m + 2 * n);
    let mut pivots = 0usize;
    loop {
        let idx: Vec<usize> = (0..total).filter(|&v| free[v]).collect();
        let k = idx.len();
        debug_assert!(k >= 1, "the working set always keeps one simplex weight free");
        // Columns of M for the working set: subgradients for simplex weights,
        // +-e_i for the split trust-region variables.
        let mut m_cols = DMatrix::<f64>::zeros(n, k);
        for (col, &var) in idx.iter().enumerate() {
            if var < m {
                m_cols.column_mut(col).copy_from(&bundle.subgradients()[var]);
            } else if var < m + n {
                m_cols[(var - m, col)] = 1.0;
            } else {
                m_cols[(var - m - n, col)] = -1.0;
            }
        }
        let wm = w.as_matrix() * &m_cols;
        let q = m_cols.transpose() * &wm;

        // Reduced gradient of F(xi) = xi^T Q xi / 2 + c^T xi at the current
        // iterate: r_v = col_v^T W u + c_v with u = M xi.
        let xi_free = DVector::from_fn(k, |c, _| xi[idx[c]]);
        let mut u = &m_cols * &xi_free;
        let mut wu = w.mul_vec(&u);
        let r = DVector::from_fn(k, |col, _| {
            let var = idx[col];
            let lin = if var < m { -offsets[var] } else { delta };
            m_cols.column(col).dot(&wu) + lin
        });

        // Equality-constrained step: minimize the quadratic from the current
        // point subject to sum(d_omega) = 0, so feasibility is preserved.
        let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
        kkt.view_mut((0, 0), (k, k)).copy_from(&q);
        let mut rhs = DVector::<f64>::zeros(k + 1);
        for (col, &var) in idx.iter().enumerate() {
            if var < m {
                kkt[(col, k)] = 1.0;
                kkt[(k, col)] = 1.0;
            }
            rhs[col] = -r[col];
        }
        // Directions are capped before certification: a blocked ray reaches
        // the same bound whatever its length, while on an unbounded ray the
        // cap bounds the walked displacement, so the descent certificate is
        // judged at the scale actually traveled and small ascent components
        // cannot hide inside a magnitude-proportional noise floor.
        let cap = 100.0 * (1.0 + xi.amax());
        let zero_tol = STEP_TOL * (1.0 + xi.amax());
        let sol = match solve_step(&kkt, &rhs, &q, &r, cap, zero_tol) {
            Some(sol) => sol,
            None => return Err(SubproblemError::NonFinite),
        };
        let d = sol.rows(0, k).into_owned();
        let mu = sol[k];

        // A full unblocked walk ends at this working set's stationary point,
        // so pricing can run right away with the multiplier of the solve; a
        // vanishing direction means the iterate already sits there. Insisting
        // on a fresh confirming solve instead would stall on ill-conditioned
        // metrics, whose solve-to-solve jitter never drops below any fixed
        // step tolerance.
        let mut price_now = d.amax() <= zero_tol;
        let capped = !price_now && d.amax() >= cap * (1.0 - 1e-12);

        if !price_now {
            // Walk along the direction until a bound blocks.
            let mut alpha = 1.0f64;
            let mut blocker = None;
            for (col, &var) in idx.iter().enumerate() {
                if d[col] < -1e-14 {
                    let ratio = xi[var] / -d[col];
                    if ratio < alpha - 1e-14 {
                        alpha = ratio;
                        blocker = Some(var);
                    }
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            if alpha * d.amax() <= 1e-15 * (1.0 + xi.amax()) {
                // Degenerate block: a variable sitting on its bound refuses
                // the model direction. Walking would make no progress, so
                // pivot by hand instead; the exchange strictly decreases the
                // objective whenever the blocked variable carries a genuine
                // violation, and drops it otherwise.
                let var = blocker.expect("a zero-length walk always has a blocker");
                let col = idx.iter().position(|&v| v == var).expect("blocker is free");
                exchange_pivot(&mut xi, &mut free, var, col, &idx, &r, &q, bundle);
            } else {
                for (col, &var) in idx.iter().enumerate() {
                    xi[var] += alpha * d[col];
                    // Drop every walking variable pinched against its bound,
                    // not just the first blocker: stragglers left free at
                    // zero would force degenerate follow-up pivots.
                    if xi[var] <= 0.0 && d[col] < -1e-14 {
                        xi[var] = 0.0;
                        free[var] = false;
                    } else if xi[var] < 0.0 {
                        xi[var] = 0.0;
                    }
                }
                price_now = blocker.is_none() && alpha == 1.0 && !capped;
                if price_now {
                    // Refresh the aggregate at the walked-to point.
                    u += &m_cols * &d;
                    wu = w.mul_vec(&u);
                }
            }
        }

        if price_now {
            // Price the fixed variables against the working-set multiplier.
            let s = -&wu;
            let scale = 1.0 + mu.abs() + if finite { delta } else { 0.0 };
            let viol_floor = KKT_TOL * scale;
            let mut cands: Vec<(f64, usize)> = Vec::new();
            for j in 0..m {
                if !free[j] {
                    let viol = offsets[j] + bundle.subgradients()[j].dot(&s) - mu;
                    if viol > viol_floor {
                        cands.push((viol, j));
                    }
                }
            }
            if finite {
                for i in 0..n {
                    if !free[m + i] {
                        let viol = s[i] - delta;
                        if viol > viol_floor {
                            cands.push((viol, m + i));
                        }
                    }
                }
                for i in 0..n {
                    if !free[m + n + i] {
                        let viol = -s[i] - delta;
                        if viol > viol_floor {
                            cands.push((viol, m + n + i));
                        }
                    }
                }
            }
            // A violated reduced cost only matters if acting on it can move
            // the objective by a representable amount. The one-variable gain
            // bound viol^2 / (2 curv) (curvature of the entering column, or
            // of the donor-exchange direction for a simplex weight) measures
            // that: on badly scaled metrics a microscopic violation over a
            // huge curvature asks for a correction below the iterate's
            // resolution, and entering it just cycles enter/drop forever.
            cands.sort_by(|a, b| b.0.total_cmp(&a.0));
            let mut cx = 0.0;
            for j in 0..m {
                cx -= offsets[j] * xi[j];
            }
            if finite {
                for v in m..total {
                    cx += delta * xi[v];
                }
            }
            let f_now = 0.5 * u.dot(&wu) + cx;
            let gain_floor = 1e-14 * (1.0 + f_now.abs());
            let mut entering = None;
            for &(viol, var) in &cands {
                if entry_gain(viol, var, bundle, w, &xi, &free) > gain_floor {
                    entering = Some((viol, var));
                    break;
                }
            }
            match entering {
                None => return Ok(assemble(bundle, w, finite, delta, &xi, pivots)),
                Some((_, var)) => {
                    free[var] = true;
                }
            }
        }

        pivots += 1;
        if pivots > pivot_limit {
            return Err(SubproblemError::PivotLimitExceeded {
                limit: pivot_limit,
                best: Box::new(assemble(bundle, w, finite, delta, &xi, pivots)),
            });
        }
    }
}

/// Best objective decrease available from entering `var` alone: the violated
/// reduced cost `viol` relaxed along the cheapest feasible one-dimensional
/// move. A trust-region variable grows from zero against its own curvature
/// `W_ii`; a simplex weight takes mass from the largest working weight, so
/// the move runs along the difference of their subgradient columns and is
/// capped by the donor's mass. Zero curvature means a linear ray, which is
/// unbounded gain for a trust-region variable and donor-limited for a weight.
fn entry_gain(
    viol: f64,
    var: usize,
    bundle: &BundleSet,
    w: &SymmetricMatrix,
    xi: &DVector<f64>,
    free: &[bool],
) -> f64 {
    let m = bundle.len();
    let n = bundle.dim();
    let (curv, t_max) = if var < m {
        let donor = (0..m)
            .filter(|&j| free[j] && j != var)
            .max_by(|&a, &b| xi[a].total_cmp(&xi[b]));
        let Some(d) = donor else {
            return f64::INFINITY;
        };
        let diff = &bundle.subgradients()[var] - &bundle.subgradients()[d];
        (w.quadratic_form(&diff), xi[d])
    } else {
        let i = if var < m + n { var - m } else { var - m - n };
        (w.as_matrix()[(i, i)], f64::INFINITY)
    };
    if curv > 0.0 {
        let t = (viol / curv).min(t_max);
        viol * t - 0.5 * curv * t * t
    } else if t_max.is_finite() {
        viol * t_max
    } else {
        f64::INFINITY
    }
}

/// Hand pivot for a degenerate block at variable `var` (free, sitting at
/// zero, pushed negative by the model direction). For a simplex weight the
/// exchange moves mass from the largest working weight onto `var`; for a
/// trust-region variable it grows `var` along its own curvature. Either move
/// strictly decreases the objective when `var`'s reduced cost is genuinely
/// favorable; otherwise the variable is returned to its bound.
#[allow(clippy::too_many_arguments)]
fn exchange_pivot(
    xi: &mut DVector<f64>,
    free: &mut [bool],
    var: usize,
    col: usize,
    idx: &[usize],
    r: &DVector<f64>,
    q: &DMatrix<f64>,
    bundle: &BundleSet,
) {
    let m = bundle.len();
    let descent_tol = -1e-14 * (1.0 + r.amax());
    if var < m {
        // Donor: the working simplex weight with the most mass to give.
        let donor = idx
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v < m && v != var)
            .max_by(|a, b| xi[*a.1].total_cmp(&xi[*b.1]));
        let Some((donor_col, &donor_var)) = donor else {
            // No other weight to trade with; keep the variable at its bound.
            xi[var] = 0.0;
            free[var] = false;
            return;
        };
        let slope = r[col] - r[donor_col];
        if slope < descent_tol && xi[donor_var] > 0.0 {
            let curv = q[(col, col)] - 2.0 * q[(col, donor_col)] + q[(donor_col, donor_col)];
            let t = if curv > 0.0 {
                (-slope / curv).min(xi[donor_var])
            } else {
                xi[donor_var]
            };
            xi[var] += t;
            xi[donor_var] -= t;
            if xi[donor_var] <= 0.0 {
                xi[donor_var] = 0.0;
                free[donor_var] = false;
            }
        } else {
            xi[var] = 0.0;
            free[var] = false;
        }
    } else {
        let slope = r[col];
        let curv = q[(col, col)];
        if slope < descent_tol && curv > 0.0 {
            xi[var] += -slope / curv;
        } else {
            xi[var] = 0.0;
            free[var] = false;
        }
    }
}

/// LU solve of the step system with a residual check, retrying with
/// escalating Tikhonov terms on the Hessian block when the factorization is
/// singular or badly inconsistent. Directions longer than `cap` are rescaled
/// onto it first, then accepted only with a descent certificate on the true
/// objective: the predicted change `r^T d + d^T Q d / 2` must be nonpositive
/// up to a cancellation-aware noise floor, which also certifies every
/// ratio-clipped partial step since `Q` is positive semidefinite. Exact
/// solves satisfy `r^T d = -d^T Q d` and the regularized retries are strict
/// descent by construction (both survive the rescaling), so what gets
/// rejected here is garbage from a singular factorization and genuinely
/// uphill rays, such as an inflating `gamma+/gamma-` pair whose `l1` cost
/// grows linearly while `u` stays fixed.
fn solve_step(
    kkt: &DMatrix<f64>,
    rhs: &DVector<f64>,
    q: &DMatrix<f64>,
    r: &DVector<f64>,
    cap: f64,
    zero_tol: f64,
) -> Option<DVector<f64>> {
    let k = q.nrows();
    let certify = |sol: &DVector<f64>| -> Option<DVector<f64>> {
        let mut out = sol.clone();
        let dmax = out.rows(0, k).amax();
        if dmax > cap {
            let shrink = cap / dmax;
            for i in 0..k {
                out[i] *= shrink;
            }
        }
        let d = out.rows(0, k).into_owned();
        // A numerically zero direction means the iterate already sits at this
        // working set's stationary point; its predicted change is rounding
        // noise of either sign, so it is accepted outright and the caller
        // moves straight to pricing.
        if d.amax() <= zero_tol {
            return Some(out);
        }
        let qd = q * &d;
        let predicted = r.dot(&d) + 0.5 * qd.dot(&d);
        let cancellation: f64 = (0..k)
            .map(|i| (r[i].abs() + 0.5 * qd[i].abs()) * d[i].abs())
            .sum();
        (predicted <= 1e-12 * (1.0 + cancellation)).then_some(out)
    };
    let residual_ok = |mat: &DMatrix<f64>, sol: &DVector<f64>| -> bool {
        let resid = (mat * sol - rhs).amax();
        let scale = 1.0 + rhs.amax() + mat.amax() * sol.amax();
        sol.iter().all(|v| v.is_finite()) && resid <= 1e-8 * scale
    };
    let trace = std::env::var_os("SVANO_QP_TRACE").is_some();
    let diag = |tag: &str, sol: &DVector<f64>, mat: &DMatrix<f64>| {
        if !trace {
            return;
        }
        let resid = (mat * sol - rhs).amax();
        let scale = 1.0 + rhs.amax() + mat.amax() * sol.amax();
        let mut out = sol.clone();
        let dmax = out.rows(0, k).amax();
        if dmax > cap {
            let shrink = cap / dmax;
            for i in 0..k {
                out[i] *= shrink;
            }
        }
        let d = out.rows(0, k).into_owned();
        let qd = q * &d;
        let predicted = r.dot(&d) + 0.5 * qd.dot(&d);
        let cancellation: f64 = (0..k)
            .map(|i| (r[i].abs() + 0.5 * qd[i].abs()) * d[i].abs())
            .sum();
        eprintln!(
            "STEP {tag}: resid={resid:.3e} lim={:.3e} dmax={dmax:.3e} cap={cap:.3e} pred={predicted:.6e} floor={:.3e}",
            1e-8 * scale,
            1e-12 * (1.0 + cancellation)
        );
    };
    if let Some(sol) = kkt.clone().lu().solve(rhs) {
        diag("raw", &sol, kkt);
        if residual_ok(kkt, &sol) {
            if let Some(out) = certify(&sol) {
                return Some(out);
            }
        }
    }
    let mut eps = 1e-10 * (1.0 + q.trace() / k as f64);
    for _ in 0..3 {
        let mut reg = kkt.clone();
        for i in 0..k {
            reg[(i, i)] += eps;
        }
        if let Some(sol) = reg.clone().lu().solve(rhs) {
            diag("reg", &sol, &reg);
            if residual_ok(&reg, &sol) {
                if let Some(out) = certify(&sol) {
                    return Some(out);
                }
            }
        }
        eps *= 100.0;
    }
    None
}

/// Scrubs a warm start into exact feasibility, or places all simplex mass on
/// the first plane (cold start).
fn init_iterate(
    xi: &mut DVector<f64>,
    free: &mut [bool],
    bundle: &BundleSet,
    finite: bool,
    start: Option<&DualSolution>,
) {
    let m = bundle.len();
    let n = bundle.dim();
    if let Some(s0) = start {
        if s0.omega.len() == m && s0.gamma.len() == n {
            let mut sum = 0.0;
            for j in 0..m {
                let v = s0.omega[j].max(0.0);
                xi[j] = v;
                sum += v;
            }
            if sum > 1e-12 {
                for j in 0..m {
                    xi[j] /= sum;
                    free[j] = xi[j] > 0.0;
                }
                if finite {
                    for i in 0..n {
                        let pos = s0.gamma[i].max(0.0);
                        let neg = (-s0.gamma[i]).max(0.0);
                        if pos > 0.0 {
                            xi[m + i] = pos;
                            free[m + i] = true;
                        }
                        if neg > 0.0 {
                            xi[m + n + i] = neg;
                            free[m + n + i] = true;
                        }
                    }
                }
                return;
            }
        }
    }
    xi.fill(0.0);
    xi[0] = 1.0;
    free[0] = true;
}

fn assemble(
    bundle: &BundleSet,
    w: &SymmetricMatrix,
    finite: bool,
    delta: f64,
    xi: &DVector<f64>,
    pivots: usize,
) -> DualSolution {
    let m = bundle.len();
    let n = bundle.dim();
    let mut omega = DVector::from_fn(m, |j, _| xi[j].max(0.0));
    let sum = omega.sum();
    if sum > 0.0 {
        omega /= sum;
    }
    let gamma = if finite {
        DVector::from_fn(n, |i, _| xi[m + i] - xi[m + n + i])
    } else {
        DVector::zeros(n)
    };
    let u = bundle.g_omega(&omega) + &gamma;
    let wu = w.mul_vec(&u);
    let mut s = -&wu;
    if finite {
        // Complementary slackness pins every coordinate with a nonzero bound
        // multiplier to the boundary exactly. Recomputing those coordinates
        // as -W u instead would scale the rounding error left in gamma by
        // the metric's condition number, which can push the step far outside
        // the box. Inactive coordinates are merely projected back in.
        for i in 0..n {
            if gamma[i] != 0.0 {
                s[i] = delta * gamma[i].signum();
            } else {
                s[i] = s[i].clamp(-delta, delta);
            }
        }
    }
    let z = bundle
        .offsets()
        .iter()
        .zip(bundle.subgradients())
        .map(|(&b, g)| b + g.dot(&s))
        .fold(f64::NEG_INFINITY, f64::max);
    let t = if finite { &s / delta } else { DVector::zeros(n) };
    let gamma_l1: f64 = gamma.iter().map(|v| v.abs()).sum();
    let penalty = if finite { delta * gamma_l1 } else { 0.0 };
    let objective = -0.5 * u.dot(&wu) + omega.dot(&DVector::from_column_slice(bundle.offsets())) - penalty;
    DualSolution {
        omega,
        gamma,
        z,
        t,
        objective,
        pivots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subproblem::{kkt_residual, recover_primal, OffsetMode};

    fn identity_metric(n: usize) -> SymmetricMatrix {
        SymmetricMatrix::identity(n)
    }

    #[test]
    fn single_plane_unconstrained_is_a_gradient_step() {
        // One plane g = (2, -1), W = I, no trust region: omega = 1, s = -g.
        let mut bundle = BundleSet::new(
            DVector::from_vec(vec![0.0, 0.0]),
            3.0,
            DVector::from_vec(vec![2.0, -1.0]),
        );
        bundle.assemble_offsets(OffsetMode::Convex);
        let w = identity_metric(2);
        let tr = TrustRegion::unbounded();
        let sol = solve_dual(&bundle, &w, &tr, None).unwrap();
        assert_eq!(sol.omega.len(), 1);
        assert!((sol.omega[0] - 1.0).abs() <= 1e-14);
        assert_eq!(sol.gamma.amax(), 0.0, "gamma is identically zero when delta = inf");
        let step = recover_primal(&bundle, &w, &sol, &tr);
        assert!((step.s - DVector::from_vec(vec![-2.0, 1.0])).amax() <= 1e-12);
        // l(x+) = 3 - |g|^2 = -2, q(x+) = 3 - |g|^2 / 2 = 0.5.
        assert!((step.l_value + 2.0).abs() <= 1e-12);
        assert!((step.q_value - 0.5).abs() <= 1e-12);
        assert!(kkt_residual(&bundle, &w, &tr, &sol) <= 1e-12);
    }

    #[test]
    fn symmetric_two_plane_split_weights_evenly() {
        // Planes +-1 through the origin of |x| in one dimension: the dual
        // optimum is omega = (1/2, 1/2) with u = 0 and objective 0.
        let mut bundle = BundleSet::new(DVector::from_vec(vec![0.0]), 0.0, DVector::from_vec(vec![1.0]));
        bundle.push(DVector::from_vec(vec![0.1]), 0.1, DVector::from_vec(vec![-1.0]));
        // Both planes pass through zero at the center.
        bundle.set_offsets(vec![0.0, 0.0]);
        let w = identity_metric(1);
        let tr = TrustRegion::new(0.5).unwrap();
        let sol = solve_dual(&bundle, &w, &tr, None).unwrap();
        assert!((sol.omega[0] - 0.5).abs() <= 1e-10, "omega = {}", sol.omega);
        assert!(sol.objective.abs() <= 1e-12);
        assert!(kkt_residual(&bundle, &w, &tr, &sol) <= 1e-10);
    }

    #[test]
    fn tight_trust_region_activates_gamma() {
        // Single plane g = 1 in 1-d with delta = 0.1: unconstrained step
        // would be -1, so gamma = -(1 - 0.1) and s = -0.1 on the boundary.
        let mut bundle = BundleSet::new(DVector::from_vec(vec![0.0]), 0.0, DVector::from_vec(vec![1.0]));
        bundle.assemble_offsets(OffsetMode::Convex);
        let w = identity_metric(1);
        let tr = TrustRegion::new(0.1).unwrap();
        let sol = solve_dual(&bundle, &w, &tr, None).unwrap();
        let step = recover_primal(&bundle, &w, &sol, &tr);
        assert!((step.s[0] + 0.1).abs() <= 1e-12, "s = {}", step.s[0]);
        assert!((sol.gamma[0] + 0.9).abs() <= 1e-10, "gamma = {}", sol.gamma[0]);
        assert!((sol.t[0] + 1.0).abs() <= 1e-12, "certificate t = s / delta");
        assert!(kkt_residual(&bundle, &w, &tr, &sol) <= 1e-10);
    }

    #[test]
    fn duplicate_subgradients_do_not_stall_the_solver() {
        // Two identical planes with different offsets: the Hessian block is
        // singular the moment both are free; the better offset must win.
        let mut bundle = BundleSet::new(DVector::from_vec(vec![0.5, 0.5]), 1.0, DVector::from_vec(vec![1.0, 0.0]));
        bundle.push(
            DVector::from_vec(vec![0.4, 0.5]),
            0.6,
            DVector::from_vec(vec![1.0, 0.0]),
        );
        bundle.set_offsets(vec![0.5, 1.5]);
        let w = identity_metric(2);
        let tr = TrustRegion::unbounded();
        let sol = solve_dual(&bundle, &w, &tr, None).unwrap();
        assert!(
            sol.omega[1] > 1.0 - 1e-8,
            "all weight should move to the higher plane, got {}",
            sol.omega
        );
        assert!(kkt_residual(&bundle, &w, &tr, &sol) <= 1e-8);
    }
}
