//! Damped variable-metric updates with self-correction guarantees.
//!
//! The framework maintains an inverse metric `W` (and, in verification mode, its
//! inverse `H = W^-1`) that is revised after every accepted step by a BFGS-form
//! update. Raw difference pairs `(s, y)` from a nonsmooth objective can have
//! `s^T y <= 0`, so before updating, `y` is replaced by the damped vector
//!
//! ```text
//! v = beta * Hbar s + (1 - beta) * y,
//! ```
//!
//! where `beta` is the smallest value in `[0, 1]` such that
//!
//! ```text
//! s^T v / |s|^2 >= eta      and      |v|^2 / s^T v <= theta.
//! ```
//!
//! Feasibility at `beta = 1` is guaranteed by `0 < eta <= lambda_min(Hbar)` and
//! `theta >= lambda_max(Hbar)`, so the damping problem always has a solution.
//! The first bound is linear in `beta` and the second is a convex quadratic, so
//! the minimal `beta` has a closed form; [`compute_damping`] uses it and falls
//! back to a bisection on the floating-point feasibility predicate in the rare
//! case where rounding makes the closed-form value infeasible as written.
//!
//! The update of `W` by the damped pair keeps every `W_k` positive definite and
//! bounds the growth of the potential `psi(H) = trace(H) - ln det(H)` by
//! `theta - 1 - ln eta` per accepted step, which is what makes long runs with
//! occasional bad pairs self-correcting: the potential budget forces the metric
//! to stay well conditioned along the directions actually used.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

/// Relative tolerance for accepting a matrix as symmetric on construction.
const SYMMETRY_TOL: f64 = 1e-12;

/// Tolerance of the bisection fallback for the minimal damping coefficient.
const BETA_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |A - A^T| exceeds {SYMMETRY_TOL} relative")]
    NotSymmetric,
    #[error("matrix is not positive definite (Cholesky factorization failed)")]
    NotPositiveDefinite,
    #[error("dimension mismatch: vector has length {got}, metric has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("displacement s is zero; no curvature pair can be formed")]
    ZeroDisplacement,
    #[error("curvature s^T v = {s_dot_v:e} is not positive; the pair violates the damping bounds")]
    NonPositiveCurvature { s_dot_v: f64 },
    #[error("damping parameters invalid: require 0 < eta <= lambda_min(Hbar) and theta >= lambda_max(Hbar), got eta = {eta:e}, theta = {theta:e}, spectrum [{lambda_min:e}, {lambda_max:e}]")]
    InvalidDampingParams {
        eta: f64,
        theta: f64,
        lambda_min: f64,
        lambda_max: f64,
    },
    #[error("no beta in [0, 1] satisfies the damping bounds in floating point")]
    DampingInfeasible,
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },
}

/// Dense symmetric matrix wrapper used for the metric `W` and its inverse `H`.
///
/// Construction symmetrizes the input after checking that the asymmetry is
/// within rounding (relative Frobenius tolerance 1e-12), so downstream code can
/// rely on exact symmetry. Positive definiteness is not enforced here; the
/// update routines check it where the algebra requires it.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    mat: DMatrix<f64>,
}

impl SymmetricMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n, n),
        }
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self {
            mat: DMatrix::identity(n, n) * c,
        }
    }

    /// Wraps a square matrix, verifying symmetry and symmetrizing exactly.
    pub fn from_matrix(mat: DMatrix<f64>) -> Result<Self, MetricError> {
        if mat.nrows() != mat.ncols() {
            return Err(MetricError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let scale = mat.norm().max(1.0);
        let asym = (&mat - mat.transpose()).norm();
        if !asym.is_finite() {
            return Err(MetricError::NonFinite { context: "matrix entries" });
        }
        if asym > SYMMETRY_TOL * scale {
            return Err(MetricError::NotSymmetric);
        }
        let sym = (&mat + mat.transpose()) * 0.5;
        Ok(Self { mat: sym })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.mat * v
    }

    /// Quadratic form `v^T M v`.
    pub fn quadratic_form(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.mat * v))
    }

    pub fn cholesky(&self) -> Option<Cholesky<f64, Dyn>> {
        Cholesky::new(self.mat.clone())
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }

    fn check_dim(&self, v: &DVector<f64>) -> Result<(), MetricError> {
        if v.len() != self.dim() {
            return Err(MetricError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }
}

/// The fixed reference metric `Hbar` appearing in the damped vector.
///
/// A scalar multiple of the identity covers the default (`Hbar = I`) and the
/// Barzilai-Borwein variant without storing a dense matrix.
#[derive(Debug, Clone)]
pub enum HBar {
    ScaledIdentity(f64),
    Matrix(SymmetricMatrix),
}

impl HBar {
    pub fn identity() -> Self {
        HBar::ScaledIdentity(1.0)
    }

    pub fn mul_vec(&self, s: &DVector<f64>) -> DVector<f64> {
        match self {
            HBar::ScaledIdentity(c) => s * *c,
            HBar::Matrix(m) => m.mul_vec(s),
        }
    }

    /// Extreme eigenvalues, used to validate `eta` and `theta` against `Hbar`.
    pub fn spectrum_bounds(&self) -> (f64, f64) {
        match self {
            HBar::ScaledIdentity(c) => (*c, *c),
            HBar::Matrix(m) => {
                let eigs = m.as_matrix().clone().symmetric_eigenvalues();
                (eigs.min(), eigs.max())
            }
        }
    }
}

/// Parameters of the damping subproblem.
///
/// `theta` may be `f64::INFINITY`, which disables the second bound entirely
/// (the ablation mode); `eta` must stay strictly positive.
#[derive(Debug, Clone)]
pub struct DampingParams {
    eta: f64,
    theta: f64,
    h_bar: HBar,
}

impl DampingParams {
    pub fn new(eta: f64, theta: f64, h_bar: HBar) -> Result<Self, MetricError> {
        let (lambda_min, lambda_max) = h_bar.spectrum_bounds();
        let ok = eta > 0.0 && eta <= lambda_min && theta >= lambda_max && lambda_min > 0.0;
        if !ok {
            return Err(MetricError::InvalidDampingParams {
                eta,
                theta,
                lambda_min,
                lambda_max,
            });
        }
        Ok(Self { eta, theta, h_bar })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn h_bar(&self) -> &HBar {
        &self.h_bar
    }
}

impl Default for DampingParams {
    /// `eta = 1e-12`, `theta = 20`, `Hbar = I`.
    fn default() -> Self {
        Self {
            eta: 1e-12,
            theta: 20.0,
            h_bar: HBar::identity(),
        }
    }
}

/// An accepted step's displacement `s`, raw difference `y`, damped vector `v`,
/// and the damping coefficient that produced it.
#[derive(Debug, Clone)]
pub struct CurvaturePair {
    pub s: DVector<f64>,
    pub y: DVector<f64>,
    pub v: DVector<f64>,
    pub beta: f64,
}

/// Potential and alignment diagnostics of the current metric at a step `s`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PsiRecord {
    /// `psi(H) = trace(H) - ln det(H)`; minimized (value `n`) at `H = I`.
    pub psi: f64,
    /// `cos(phi) = s^T H s / (|s| |H s|)`, alignment of `s` with its image.
    pub cos_phi: f64,
    /// Rayleigh quotient `iota = s^T H s / |s|^2`.
    pub iota: f64,
}

/// Floating-point feasibility of the damping bounds at a given `beta`.
fn damping_feasible(s: &DVector<f64>, v: &DVector<f64>, s_norm_sq: f64, params: &DampingParams) -> bool {
    let s_dot_v = s.dot(v);
    if !(s_dot_v / s_norm_sq >= params.eta) {
        return false;
    }
    // With theta infinite the second bound is vacuous (s_dot_v > 0 from above).
    params.theta.is_infinite() || v.norm_squared() / s_dot_v <= params.theta
}

fn damped_vector(s_bar: &DVector<f64>, y: &DVector<f64>, beta: f64) -> DVector<f64> {
    s_bar * beta + y * (1.0 - beta)
}

/// Computes the damped curvature pair for a displacement `s` and raw
/// difference `y`.
///
/// Returns the pair with the smallest `beta` in `[0, 1]` (to tolerance 1e-12)
/// whose damped vector satisfies both bounds in floating point. `beta = 0`
/// leaves `y` untouched; `beta = 1` replaces it by `Hbar s` and is always
/// feasible under the parameter validity conditions.
pub fn compute_damping(
    s: &DVector<f64>,
    y: &DVector<f64>,
    params: &DampingParams,
) -> Result<CurvaturePair, MetricError> {
    if s.len() != y.len() {
        return Err(MetricError::DimensionMismatch {
            expected: s.len(),
            got: y.len(),
        });
    }
    if !s.iter().all(|x| x.is_finite()) || !y.iter().all(|x| x.is_finite()) {
        return Err(MetricError::NonFinite { context: "damping inputs" });
    }
    let s_norm_sq = s.norm_squared();
    if s_norm_sq == 0.0 {
        return Err(MetricError::ZeroDisplacement);
    }

    let s_bar = params.h_bar.mul_vec(s); // Hbar s, the beta = 1 endpoint
    let eta_target = params.eta * s_norm_sq;

    // Bound 1: p(beta) = s^T v(beta) >= eta |s|^2, linear in beta.
    let p0 = s.dot(y);
    let p1 = s.dot(&s_bar);
    let beta_lower_1 = if p0 >= eta_target {
        0.0
    } else {
        // p(1) >= eta |s|^2 > p(0) forces a positive slope.
        ((eta_target - p0) / (p1 - p0)).clamp(0.0, 1.0)
    };

    // Bound 2: |v(beta)|^2 <= theta * p(beta), a convex quadratic q(beta) <= 0
    // with q(1) <= 0 guaranteed. Written v(beta) = y + beta w, w = Hbar s - y:
    //   q(beta) = |w|^2 beta^2 + (2 y^T w - theta (p1 - p0)) beta + |y|^2 - theta p0.
    let beta_lower_2 = if params.theta.is_infinite() {
        0.0
    } else {
        let w = &s_bar - y;
        let a = w.norm_squared();
        let b = 2.0 * y.dot(&w) - params.theta * (p1 - p0);
        let c = y.norm_squared() - params.theta * p0;
        if c <= 0.0 {
            // q(0) <= 0 and q(1) <= 0: convexity gives q <= 0 on all of [0, 1].
            0.0
        } else if a <= 0.0 {
            // Degenerate linear case; q(1) <= 0 < q(0) forces b < 0.
            (c / -b).clamp(0.0, 1.0)
        } else {
            // Smaller root of the upward parabola, via the cancellation-safe
            // product form: roots are q/a and c/q with q = -(b + sign(b) sqrt(D)).
            let disc = (b * b - 4.0 * a * c).max(0.0);
            let sq = disc.sqrt();
            let q = -0.5 * (b + b.signum() * sq);
            let (r1, r2) = (q / a, if q != 0.0 { c / q } else { f64::INFINITY });
            let lo = r1.min(r2);
            let hi = r1.max(r2);
            // q(0) > 0 puts the smaller root in (0, 1]; take whichever root
            // actually lies there in case rounding flipped their order.
            if lo > 0.0 { lo.clamp(0.0, 1.0) } else { hi.clamp(0.0, 1.0) }
        }
    };

    let mut beta = beta_lower_1.max(beta_lower_2);
    let mut v = damped_vector(&s_bar, y, beta);

    if !damping_feasible(s, &v, s_norm_sq, params) {
        // Rounding pushed the closed-form minimizer just outside the feasible
        // set. Nudge upward a few ulps first, then bisect on the predicate.
        let mut nudged = beta;
        let mut fixed = false;
        for _ in 0..4 {
            nudged = f64::from_bits(nudged.to_bits() + 1).min(1.0);
            v = damped_vector(&s_bar, y, nudged);
            if damping_feasible(s, &v, s_norm_sq, params) {
                beta = nudged;
                fixed = true;
                break;
            }
        }
        if !fixed {
            let mut lo = beta;
            let mut hi = 1.0;
            v = damped_vector(&s_bar, y, hi);
            if !damping_feasible(s, &v, s_norm_sq, params) {
                return Err(MetricError::DampingInfeasible);
            }
            while hi - lo > BETA_TOL {
                let mid = 0.5 * (lo + hi);
                let vm = damped_vector(&s_bar, y, mid);
                if damping_feasible(s, &vm, s_norm_sq, params) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            beta = hi;
            v = damped_vector(&s_bar, y, beta);
        }
    }

    Ok(CurvaturePair {
        s: s.clone(),
        y: y.clone(),
        v,
        beta,
    })
}

/// BFGS-form update of the inverse metric by a damped pair:
///
/// ```text
/// W+ = (I - v s^T / s^T v)^T W (I - v s^T / s^T v) + s s^T / s^T v,
/// ```
///
/// equivalently `W+ = W - (s w^T + w s^T) rho + (rho^2 v^T w + rho) s s^T`
/// with `w = W v` and `rho = 1 / s^T v`. Satisfies the secant equation
/// `W+ v = s` and preserves positive definiteness whenever `s^T v > 0`.
pub fn update_inverse(w: &SymmetricMatrix, pair: &CurvaturePair) -> Result<SymmetricMatrix, MetricError> {
    w.check_dim(&pair.s)?;
    w.check_dim(&pair.v)?;
    let s_dot_v = pair.s.dot(&pair.v);
    if s_dot_v <= 0.0 {
        return Err(MetricError::NonPositiveCurvature { s_dot_v });
    }
    let rho = 1.0 / s_dot_v;
    // Product (congruence) form
    //
    //   W+ = (I - rho s v^T) W (I - rho v s^T) + rho s s^T,
    //
    // which stays positive semidefinite under rounding for any factor,
    // unlike the expanded rank-two form whose large intermediate terms
    // cancel catastrophically when rho is big (heavily damped pairs).
    let n = w.dim();
    let mut a = DMatrix::<f64>::identity(n, n);
    a.ger(-rho, &pair.s, &pair.v, 1.0);
    let mut next = &a * w.as_matrix() * a.transpose();
    next.ger(rho, &pair.s, &pair.s, 1.0);
    let sym = (&next + next.transpose()) * 0.5;
    if !sym.iter().all(|x| x.is_finite()) {
        return Err(MetricError::NonFinite { context: "inverse metric update" });
    }
    Ok(SymmetricMatrix { mat: restore_definiteness(sym) })
}

/// Rounding can still leave a freshly updated matrix with eigenvalues a hair
/// below zero when its condition number approaches 1/eps. A diagonal lift of
/// a few ulps of the trace scale restores a usable factorization while
/// perturbing the secant identity far below its verification tolerance.
fn restore_definiteness(mat: DMatrix<f64>) -> DMatrix<f64> {
    if Cholesky::new(mat.clone()).is_some() {
        return mat;
    }
    let n = mat.nrows();
    let scale = mat.trace().abs() / n as f64 + f64::MIN_POSITIVE;
    let mut eps = 1e-15;
    for _ in 0..6 {
        let lifted = &mat + DMatrix::<f64>::identity(n, n) * (eps * scale);
        if Cholesky::new(lifted.clone()).is_some() {
            return lifted;
        }
        eps *= 100.0;
    }
    mat
}

/// BFGS-form update of the metric itself by a damped pair:
///
/// ```text
/// H+ = (I - s s^T H / s^T H s)^T H (I - s s^T H / s^T H s) + v v^T / s^T v,
/// ```
///
/// which collapses to the familiar `H+ = H - h h^T / s^T H s + v v^T / s^T v`
/// with `h = H s`. Satisfies `H+ s = v` and is the exact inverse of
/// [`update_inverse`] applied to the same pair.
pub fn update_hessian(h: &SymmetricMatrix, pair: &CurvaturePair) -> Result<SymmetricMatrix, MetricError> {
    h.check_dim(&pair.s)?;
    h.check_dim(&pair.v)?;
    let s_dot_v = pair.s.dot(&pair.v);
    if s_dot_v <= 0.0 {
        return Err(MetricError::NonPositiveCurvature { s_dot_v });
    }
    let hs = h.mul_vec(&pair.s);
    let shs = pair.s.dot(&hs);
    if shs <= 0.0 {
        return Err(MetricError::NotPositiveDefinite);
    }
    // Same congruence form as [`update_inverse`]: with `h = H s`,
    // (I - h s^T / shs) H (I - s h^T / shs) = H - h h^T / shs exactly, but
    // the left side resists cancellation when the pair is heavily damped.
    let n = h.dim();
    let mut a = DMatrix::<f64>::identity(n, n);
    a.ger(-1.0 / shs, &hs, &pair.s, 1.0);
    let mut next = &a * h.as_matrix() * a.transpose();
    next.ger(1.0 / s_dot_v, &pair.v, &pair.v, 1.0);
    let sym = (&next + next.transpose()) * 0.5;
    if !sym.iter().all(|x| x.is_finite()) {
        return Err(MetricError::NonFinite { context: "metric update" });
    }
    Ok(SymmetricMatrix { mat: restore_definiteness(sym) })
}

/// The potential `psi(H) = trace(H) - ln det(H)`.
///
/// Finite only for positive definite `H` (the determinant is computed from a
/// Cholesky factor, whose failure reports the matrix as not positive definite).
pub fn psi(h: &SymmetricMatrix) -> Result<f64, MetricError> {
    let chol = h.cholesky().ok_or(MetricError::NotPositiveDefinite)?;
    let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    Ok(h.as_matrix().trace() - log_det)
}

/// Potential value plus the alignment diagnostics of `H` at a step `s`.
pub fn correction_diagnostics(h: &SymmetricMatrix, s: &DVector<f64>) -> Result<PsiRecord, MetricError> {
    h.check_dim(s)?;
    if s.norm_squared() == 0.0 {
        return Err(MetricError::ZeroDisplacement);
    }
    let hs = h.mul_vec(s);
    let shs = s.dot(&hs);
    Ok(PsiRecord {
        psi: psi(h)?,
        cos_phi: shs / (s.norm() * hs.norm()),
        iota: shs / s.norm_squared(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(n, |j, _| if j == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn from_matrix_rejects_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.3, 1.0]);
        assert!(matches!(
            SymmetricMatrix::from_matrix(m),
            Err(MetricError::NotSymmetric)
        ));
    }

    #[test]
    fn healthy_pair_needs_no_damping() {
        let params = DampingParams::default();
        let s = e(3, 0);
        let pair = compute_damping(&s, &s, &params).unwrap();
        assert_eq!(pair.beta, 0.0, "s = y = e1 satisfies both bounds at beta = 0");
        assert_eq!(pair.v, s);
    }

    #[test]
    fn opposed_pair_hits_the_first_bound() {
        let params = DampingParams::default();
        let s = e(2, 0);
        let y = -e(2, 0);
        let pair = compute_damping(&s, &y, &params).unwrap();
        // v = (2 beta - 1) e1 and the bound s^T v >= eta gives beta = (1 + eta) / 2.
        let expected = (1.0 + params.eta()) / 2.0;
        assert!(
            (pair.beta - expected).abs() <= 1e-9,
            "beta = {}, expected {}",
            pair.beta,
            expected
        );
        assert!((pair.v[0] - params.eta()).abs() <= 1e-9);
    }

    #[test]
    fn oversized_pair_hits_the_second_bound() {
        let params = DampingParams::default();
        let theta = params.theta();
        let s = e(2, 0);
        let y = e(2, 0) * (3.0 * theta);
        let pair = compute_damping(&s, &y, &params).unwrap();
        // v = (beta + (1 - beta) 3 theta) e1; |v|^2 / s^T v = v1 <= theta gives
        // beta = (3 theta - theta) / (3 theta - 1) = 40/59 for theta = 20.
        let expected = (3.0 * theta - theta) / (3.0 * theta - 1.0);
        assert!(
            (pair.beta - expected).abs() <= 1e-9,
            "beta = {}, expected {}",
            pair.beta,
            expected
        );
        assert!((pair.v[0] - theta).abs() <= 1e-6);
    }

    #[test]
    fn infinite_theta_disables_the_second_bound() {
        let params = DampingParams::new(1e-12, f64::INFINITY, HBar::identity()).unwrap();
        let s = e(2, 0);
        let y = e(2, 0) * 1e9;
        let pair = compute_damping(&s, &y, &params).unwrap();
        assert_eq!(pair.beta, 0.0, "huge curvature is fine when theta is infinite");
    }

    #[test]
    fn identity_update_by_aligned_pair_is_identity() {
        let w = SymmetricMatrix::identity(3);
        let s = e(3, 1);
        let pair = CurvaturePair {
            s: s.clone(),
            y: s.clone(),
            v: s.clone(),
            beta: 0.0,
        };
        let next = update_inverse(&w, &pair).unwrap();
        assert!((next.as_matrix() - w.as_matrix()).norm() <= 1e-15);
    }

    #[test]
    fn secant_equations_hold() {
        let params = DampingParams::default();
        let s = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let y = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let pair = compute_damping(&s, &y, &params).unwrap();
        let w = SymmetricMatrix::from_matrix(DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.1, 0.0, 0.1, 1.5, -0.2, 0.0, -0.2, 3.0],
        ))
        .unwrap();
        let w_next = update_inverse(&w, &pair).unwrap();
        let resid = (w_next.mul_vec(&pair.v) - &pair.s).norm() / pair.s.norm();
        assert!(resid <= 1e-12, "W+ v = s residual {resid:e}");

        let h = SymmetricMatrix::from_matrix(w.as_matrix().clone().try_inverse().unwrap()).unwrap();
        let h_next = update_hessian(&h, &pair).unwrap();
        let resid = (h_next.mul_vec(&pair.s) - &pair.v).norm() / pair.v.norm();
        assert!(resid <= 1e-12, "H+ s = v residual {resid:e}");
    }

    #[test]
    fn psi_of_identity_is_dimension() {
        let h = SymmetricMatrix::identity(7);
        assert!((psi(&h).unwrap() - 7.0).abs() <= 1e-12);
    }

    #[test]
    fn psi_rejects_indefinite_matrices() {
        let m = SymmetricMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]))
            .unwrap();
        assert!(matches!(psi(&m), Err(MetricError::NotPositiveDefinite)));
    }

    #[test]
    fn diagnostics_on_a_diagonal_example() {
        // H = diag(1, 4), s = (1, 1): s^T H s = 5, |s| = sqrt 2, |H s| = sqrt 17.
        let h = SymmetricMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]))
            .unwrap();
        let s = DVector::from_vec(vec![1.0, 1.0]);
        let rec = correction_diagnostics(&h, &s).unwrap();
        assert!((rec.cos_phi - 5.0 / (2.0_f64.sqrt() * 17.0_f64.sqrt())).abs() <= 1e-14);
        assert!((rec.iota - 2.5).abs() <= 1e-14);
        assert!((rec.psi - (5.0 - 4.0_f64.ln())).abs() <= 1e-12);
    }

    #[test]
    fn damping_params_validate_the_spectrum() {
        assert!(DampingParams::new(2.0, 20.0, HBar::identity()).is_err());
        assert!(DampingParams::new(1e-12, 0.5, HBar::identity()).is_err());
        assert!(DampingParams::new(0.0, 20.0, HBar::identity()).is_err());
        assert!(DampingParams::new(1e-12, 20.0, HBar::ScaledIdentity(2.0)).is_ok());
    }
}
