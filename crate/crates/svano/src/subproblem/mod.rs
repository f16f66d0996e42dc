//! Cutting-plane model, trust region, and the dual quadratic subproblem.
//!
//! Each step of the trust-region strategies minimizes the piecewise-linear
//! model `l(x) = max_j (b_j + g_j^T (x - x_k))` plus the metric quadratic
//! `(x - x_k)^T H (x - x_k) / 2` over an l-infinity ball of radius `delta`.
//! Only the inverse metric `W = H^-1` is ever needed: the dual of that primal
//! problem, over a simplex weight `omega` per cutting plane and a free vector
//! `gamma` charged at `delta * |gamma|_1` (the dual norm of l-infinity), reads
//!
//! ```text
//! maximize  -(G omega + gamma)^T W (G omega + gamma) / 2 + b^T omega - delta |gamma|_1.
//! ```
//!
//! The primal step is recovered as `s = -W (G omega + gamma)`, and the
//! unconstrained case `delta = inf` simply drops `gamma`. [`solve_dual`] is a
//! primal active-set method over the sign-split variables written for this
//! structure; see [`solver`] for the engine.
//!
//! Offsets `b_j` come in two assemblies: the convex transport
//! `b_j = f_j + g_j^T (x_k - x_j)`, exact for convex objectives, and the
//! downshifted variant that additionally caps each plane at
//! `f(x_k) - r |x_k - x_j|^2` so the model never sits above the center value
//! on nonconvex objectives.

mod solver;

pub use solver::solve_dual;

/// Like [`solve_dual`], but a walk that exhausts its pivot budget yields the
/// best dual-feasible iterate reached instead of an error.
///
/// The active-set method keeps every iterate feasible, so the carried
/// solution is a valid (merely suboptimal) hull combination. Step strategies
/// can safely continue from it: a worse dual only weakens the step and the
/// stationarity certificates, and every acceptance decision downstream is
/// guarded by its own explicit test.
pub fn solve_dual_lenient(
    bundle: &BundleSet,
    w: &SymmetricMatrix,
    tr: &TrustRegion,
    start: Option<&DualSolution>,
) -> Result<DualSolution, SubproblemError> {
    match solve_dual(bundle, w, tr, start) {
        Err(SubproblemError::PivotLimitExceeded { best, .. }) => Ok(*best),
        other => other,
    }
}

use nalgebra::DVector;
use thiserror::Error;

use crate::metric::SymmetricMatrix;

#[derive(Debug, Error)]
pub enum SubproblemError {
    #[error("bundle offsets were not assembled before solving")]
    MissingOffsets,
    #[error("dimension mismatch between bundle ({bundle}) and metric ({metric})")]
    DimensionMismatch { bundle: usize, metric: usize },
    #[error("inverse metric is not positive definite")]
    MetricNotPositiveDefinite,
    #[error("active-set pivot limit {limit} exceeded; returning the best iterate found")]
    PivotLimitExceeded {
        limit: usize,
        best: Box<DualSolution>,
    },
    #[error("non-finite value encountered while solving the dual subproblem")]
    NonFinite,
}

/// How plane offsets `b_j` are assembled from the bundle's values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetMode {
    /// `b_j = f_j + g_j^T (x_k - x_j)`: exact linearizations, convex case.
    Convex,
    /// `b_j = min{ f(x_k) - r |x_k - x_j|^2, convex value }`: downshifted
    /// planes that keep the model at or below the center value.
    Downshift { r: f64 },
}

/// An l-infinity trust region; `delta = inf` means unconstrained.
#[derive(Debug, Clone, Copy)]
pub struct TrustRegion {
    delta: f64,
}

impl TrustRegion {
    /// A finite radius must be strictly positive.
    pub fn new(delta: f64) -> Option<Self> {
        (delta > 0.0).then_some(Self { delta })
    }

    pub fn unbounded() -> Self {
        Self { delta: f64::INFINITY }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_finite(&self) -> bool {
        self.delta.is_finite()
    }
}

/// A set of cutting planes anchored at a center point `x_k`.
///
/// The first plane always belongs to the center itself, so the model
/// interpolates `f` there (up to downshifting). Offsets are assembled
/// explicitly (or set directly, as gradient sampling does with its
/// center-anchored planes) before the dual solve.
#[derive(Debug, Clone)]
pub struct BundleSet {
    center: DVector<f64>,
    points: Vec<DVector<f64>>,
    values: Vec<f64>,
    subgradients: Vec<DVector<f64>>,
    offsets: Vec<f64>,
}

impl BundleSet {
    pub fn new(center: DVector<f64>, f_center: f64, g_center: DVector<f64>) -> Self {
        assert_eq!(center.len(), g_center.len(), "center and subgradient dimensions differ");
        Self {
            points: vec![center.clone()],
            values: vec![f_center],
            subgradients: vec![g_center],
            offsets: Vec::new(),
            center,
        }
    }

    /// Adds a plane unless an identical point is already present.
    /// Returns whether the plane was added. Invalidates assembled offsets.
    pub fn push(&mut self, point: DVector<f64>, value: f64, subgradient: DVector<f64>) -> bool {
        assert_eq!(point.len(), self.center.len(), "point dimension differs from center");
        if self.points.iter().any(|p| p == &point) {
            return false;
        }
        self.points.push(point);
        self.values.push(value);
        self.subgradients.push(subgradient);
        self.offsets.clear();
        true
    }

    /// Removes plane `j` (never the center plane at index 0).
    pub fn remove(&mut self, j: usize) {
        assert!(j > 0 && j < self.len(), "cannot remove plane {j} of {}", self.len());
        self.points.remove(j);
        self.values.remove(j);
        self.subgradients.remove(j);
        self.offsets.clear();
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a bundle always contains its center plane
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    /// Objective value at the center, `f(x_k)`, held by the first plane.
    pub fn center_value(&self) -> f64 {
        self.values[0]
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn subgradients(&self) -> &[DVector<f64>] {
        &self.subgradients
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn offsets_assembled(&self) -> bool {
        self.offsets.len() == self.points.len()
    }

    /// Computes and stores the offsets `b_j` for the given mode.
    pub fn assemble_offsets(&mut self, mode: OffsetMode) -> &[f64] {
        let f_center = self.center_value();
        self.offsets = self
            .points
            .iter()
            .zip(self.values.iter().zip(&self.subgradients))
            .map(|(p, (&f_j, g_j))| {
                let shift = &self.center - p;
                let convex = f_j + g_j.dot(&shift);
                match mode {
                    OffsetMode::Convex => convex,
                    OffsetMode::Downshift { r } => {
                        convex.min(f_center - r * shift.norm_squared())
                    }
                }
            })
            .collect();
        &self.offsets
    }

    /// Overrides the offsets directly (gradient sampling anchors every plane
    /// at the center value so that `l(x_k) = f(x_k)` holds by construction).
    pub fn set_offsets(&mut self, offsets: Vec<f64>) {
        assert_eq!(offsets.len(), self.points.len(), "one offset per plane required");
        self.offsets = offsets;
    }

    /// Convex combination `G omega` of the stored subgradients.
    pub fn g_omega(&self, omega: &DVector<f64>) -> DVector<f64> {
        assert_eq!(omega.len(), self.len(), "one weight per plane required");
        let mut out = DVector::zeros(self.dim());
        for (g, &w) in self.subgradients.iter().zip(omega.iter()) {
            out.axpy(w, g, 1.0);
        }
        out
    }

    /// Model value `l(x) = max_j (b_j + g_j^T (x - x_k))` at a point.
    pub fn model_value(&self, point: &DVector<f64>) -> f64 {
        assert!(self.offsets_assembled(), "assemble offsets before evaluating the model");
        let s = point - &self.center;
        self.offsets
            .iter()
            .zip(&self.subgradients)
            .map(|(&b, g)| b + g.dot(&s))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Optimal dual variables of the subproblem, with the trust-region
/// certificate `t` and the multiplier `z` of the simplex constraint (which
/// equals the optimal model value).
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub omega: DVector<f64>,
    pub gamma: DVector<f64>,
    pub z: f64,
    pub t: DVector<f64>,
    pub objective: f64,
    /// Pivots the active-set solver spent producing this solution.
    pub pivots: usize,
}

/// The primal quantities recovered from a dual solution.
#[derive(Debug, Clone)]
pub struct PrimalStep {
    pub s: DVector<f64>,
    pub x_plus: DVector<f64>,
    /// Model value `l(x_plus)`.
    pub l_value: f64,
    /// Model-plus-quadratic value `q(x_plus) = l(x_plus) + u^T W u / 2`.
    pub q_value: f64,
}

/// Recovers the primal step `s = -W (G omega + gamma)` and model values.
/// Inside a finite trust region the step is read off the certificate
/// (`s = t delta`), which keeps it exactly feasible even when the metric is
/// badly conditioned and `-W (G omega + gamma)` would amplify rounding noise.
pub fn recover_primal(
    bundle: &BundleSet,
    w: &SymmetricMatrix,
    sol: &DualSolution,
    tr: &TrustRegion,
) -> PrimalStep {
    let u = bundle.g_omega(&sol.omega) + &sol.gamma;
    let wu = w.mul_vec(&u);
    let s = if tr.is_finite() { &sol.t * tr.delta() } else { -&wu };
    let x_plus = bundle.center() + &s;
    let l_value = bundle.model_value(&x_plus);
    let u_w_u = u.dot(&wu).max(0.0);
    PrimalStep {
        s,
        x_plus,
        l_value,
        q_value: l_value + 0.5 * u_w_u,
    }
}

/// Prepares a warm start for a grown bundle by padding the previous optimal
/// weights with zeros. Returns `None` when the bundle shrank or changed
/// dimension (the support mapping would be wrong, so a cold start is safer).
pub fn warm_start(prev: &DualSolution, bundle: &BundleSet) -> Option<DualSolution> {
    if prev.omega.len() > bundle.len() || prev.gamma.len() != bundle.dim() {
        return None;
    }
    let mut omega = DVector::zeros(bundle.len());
    omega.rows_mut(0, prev.omega.len()).copy_from(&prev.omega);
    Some(DualSolution {
        omega,
        gamma: prev.gamma.clone(),
        z: prev.z,
        t: prev.t.clone(),
        objective: prev.objective,
        pivots: 0,
    })
}

/// Scale-free KKT residual of a (claimed) dual solution.
///
/// Maximum of: simplex feasibility violations, stationarity residual of the
/// planes carrying weight (their values `b_j + g_j^T s` must attain the model
/// optimum `z`), trust-region primal feasibility, the certificate equation
/// `delta t = s` with `|t|_inf <= 1`, and the alignment `t^T gamma = |gamma|_1`.
/// For `delta = inf` the certificate terms are replaced by `|gamma| = 0`.
/// An exact optimum scores at machine-precision level; perturbing the weights
/// of a nondegenerate instance by 1e-3 moves the residual above 1e-4.
pub fn kkt_residual(
    bundle: &BundleSet,
    w: &SymmetricMatrix,
    tr: &TrustRegion,
    sol: &DualSolution,
) -> f64 {
    let u = bundle.g_omega(&sol.omega) + &sol.gamma;
    let s = -w.mul_vec(&u);
    let plane_values: Vec<f64> = bundle
        .offsets()
        .iter()
        .zip(bundle.subgradients())
        .map(|(&b, g)| b + g.dot(&s))
        .collect();
    let z_hat = plane_values.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));

    let mut resid: f64 = (sol.omega.iter().sum::<f64>() - 1.0).abs();
    resid = resid.max(-sol.omega.min());
    resid = resid.max((sol.z - z_hat).abs() / (1.0 + z_hat.abs()));
    for (j, &v) in plane_values.iter().enumerate() {
        if sol.omega[j] > 1e-12 {
            resid = resid.max((z_hat - v).abs() / (1.0 + z_hat.abs()));
        }
    }
    if tr.is_finite() {
        let delta = tr.delta();
        resid = resid.max((s.amax() - delta).max(0.0));
        resid = resid.max((&s - &sol.t * delta).amax() / (1.0 + delta));
        resid = resid.max((sol.t.amax() - 1.0).max(0.0));
        let gamma_l1 = sol.gamma.iter().map(|v| v.abs()).sum::<f64>();
        resid = resid.max((sol.t.dot(&sol.gamma) - gamma_l1).abs() / (1.0 + gamma_l1));
    } else {
        resid = resid.max(sol.gamma.amax());
    }
    resid
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    #[test]
    fn push_dedupes_identical_points() {
        let mut bundle = BundleSet::new(vec2(0.0, 0.0), 1.0, vec2(1.0, 0.0));
        assert!(bundle.push(vec2(1.0, 0.0), 2.0, vec2(0.0, 1.0)));
        assert!(!bundle.push(vec2(1.0, 0.0), 2.5, vec2(0.5, 0.5)));
        assert_eq!(bundle.len(), 2);
    }

    #[test]
    fn convex_offsets_transport_plane_values() {
        // Plane from x_j = (1, 0) with f_j = 2, g_j = (1, 1), center (0, 0):
        // b = 2 + (1,1).((0,0) - (1,0)) = 1.
        let mut bundle = BundleSet::new(vec2(0.0, 0.0), 0.5, vec2(0.0, 0.0));
        bundle.push(vec2(1.0, 0.0), 2.0, vec2(1.0, 1.0));
        let b = bundle.assemble_offsets(OffsetMode::Convex).to_vec();
        assert_eq!(b, vec![0.5, 1.0]);
    }

    #[test]
    fn downshift_caps_at_center_value() {
        // Same plane, but the center value is 0.5 and r |x_k - x_j|^2 = 0.25,
        // so the downshifted offset is min{0.5 - 0.25, 1.0} = 0.25.
        let mut bundle = BundleSet::new(vec2(0.0, 0.0), 0.5, vec2(0.0, 0.0));
        bundle.push(vec2(1.0, 0.0), 2.0, vec2(1.0, 1.0));
        let b = bundle.assemble_offsets(OffsetMode::Downshift { r: 0.25 }).to_vec();
        assert_eq!(b, vec![0.5, 0.25]);
    }

    #[test]
    fn model_value_is_the_max_plane() {
        let mut bundle = BundleSet::new(vec2(0.0, 0.0), 1.0, vec2(1.0, 0.0));
        bundle.push(vec2(0.5, 0.0), 0.0, vec2(-1.0, 0.0));
        bundle.assemble_offsets(OffsetMode::Convex);
        // Planes: 1 + x1 and 0.5 - x1 (offset 0 + (-1)(0 - 0.5) = 0.5).
        assert_eq!(bundle.model_value(&vec2(0.0, 0.0)), 1.0);
        assert_eq!(bundle.model_value(&vec2(-1.0, 0.0)), 1.5);
        assert_eq!(bundle.model_value(&vec2(2.0, 0.0)), 3.0);
    }

    #[test]
    fn warm_start_pads_with_zeros_and_rejects_shrinkage() {
        let mut bundle = BundleSet::new(vec2(0.0, 0.0), 1.0, vec2(1.0, 0.0));
        bundle.push(vec2(0.5, 0.0), 0.0, vec2(-1.0, 0.0));
        let prev = DualSolution {
            omega: DVector::from_vec(vec![1.0]),
            gamma: DVector::zeros(2),
            z: 0.0,
            t: DVector::zeros(2),
            objective: 0.0,
            pivots: 0,
        };
        let padded = warm_start(&prev, &bundle).unwrap();
        assert_eq!(padded.omega.as_slice(), &[1.0, 0.0]);

        let big = DualSolution {
            omega: DVector::from_vec(vec![0.5, 0.25, 0.25]),
            ..padded.clone()
        };
        assert!(warm_start(&big, &bundle).is_none());
    }
}
