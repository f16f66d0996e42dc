//! The ten nonsmooth test problems used by the benchmark harness.
//!
//! All are dimension-parametric (any `n >= 2`) piecewise-smooth functions with
//! standard starting points; five are convex. Subgradient selection at kinks
//! follows one fixed rule everywhere: among the pieces attaining a max, the
//! lowest-index piece supplies the (sub)gradient, and `|t|` is read as
//! `max{t, -t}` so ties at `t = 0` pick the `+t` branch. This makes every
//! oracle total and deterministic, which the seeded-run reproducibility of the
//! harness relies on.
//!
//! Reference values at the starting point for `n = 50`: maxq 2500, mxhilb
//! ~4.50 (the 50th harmonic number), chained lq 49, both chained cb3 forms
//! 980, active faces ln(51) ~ 3.93, brown function 2 and the cb3 optima 98,
//! chained mifflin 2 232.75, both chained crescents 292.25.

use nalgebra::DVector;
use rand::Rng;
use thiserror::Error;

use crate::oracle::ObjectiveOracle;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown problem '{0}'")]
    UnknownProblem(String),
    #[error("dimension {0} is too small; every problem needs n >= 2")]
    InvalidDimension(usize),
    #[error("dimension mismatch: point has length {got}, problem has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("could not find enough kink-free directions for the finite-difference check")]
    NondifferentiablePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    MaxQ,
    MxHilb,
    ChainedLq,
    ChainedCb3One,
    ChainedCb3Two,
    ActiveFaces,
    BrownTwo,
    ChainedMifflinTwo,
    ChainedCrescentOne,
    ChainedCrescentTwo,
}

const ALL_KINDS: [Kind; 10] = [
    Kind::MaxQ,
    Kind::MxHilb,
    Kind::ChainedLq,
    Kind::ChainedCb3One,
    Kind::ChainedCb3Two,
    Kind::ActiveFaces,
    Kind::BrownTwo,
    Kind::ChainedMifflinTwo,
    Kind::ChainedCrescentOne,
    Kind::ChainedCrescentTwo,
];

/// One benchmark problem at a fixed dimension.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    kind: Kind,
    n: usize,
}

/// The ten problems, in benchmark order, at dimension `n`.
pub fn registry(n: usize) -> Result<Vec<ProblemSpec>, ProblemError> {
    if n < 2 {
        return Err(ProblemError::InvalidDimension(n));
    }
    Ok(ALL_KINDS.iter().map(|&kind| ProblemSpec { kind, n }).collect())
}

/// Looks a problem up by its lowercase name ("chained lq", "maxq", ...).
/// Underscores and hyphens are accepted in place of spaces.
pub fn by_name(name: &str, n: usize) -> Result<ProblemSpec, ProblemError> {
    if n < 2 {
        return Err(ProblemError::InvalidDimension(n));
    }
    let normalized = name
        .to_lowercase()
        .replace(['_', '-'], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    for &kind in &ALL_KINDS {
        if kind_name(kind) == normalized {
            return Ok(ProblemSpec { kind, n });
        }
    }
    Err(ProblemError::UnknownProblem(name.to_string()))
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::MaxQ => "maxq",
        Kind::MxHilb => "mxhilb",
        Kind::ChainedLq => "chained lq",
        Kind::ChainedCb3One => "chained cb3 1",
        Kind::ChainedCb3Two => "chained cb3 2",
        Kind::ActiveFaces => "active faces",
        Kind::BrownTwo => "brown function 2",
        Kind::ChainedMifflinTwo => "chained mifflin 2",
        Kind::ChainedCrescentOne => "chained crescent 1",
        Kind::ChainedCrescentTwo => "chained crescent 2",
    }
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        kind_name(self.kind)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_convex(&self) -> bool {
        matches!(
            self.kind,
            Kind::MaxQ | Kind::MxHilb | Kind::ChainedLq | Kind::ChainedCb3One | Kind::ChainedCb3Two
        )
    }

    /// Optimal value when known in closed form (or, for chained mifflin 2,
    /// from the standard reported value at `n = 50`).
    pub fn f_star(&self) -> Option<f64> {
        let n = self.n as f64;
        match self.kind {
            Kind::MaxQ | Kind::MxHilb | Kind::ActiveFaces | Kind::BrownTwo => Some(0.0),
            Kind::ChainedLq => Some(-(n - 1.0) * 2.0_f64.sqrt()),
            Kind::ChainedCb3One | Kind::ChainedCb3Two => Some(2.0 * (n - 1.0)),
            Kind::ChainedMifflinTwo => (self.n == 50).then_some(-34.795),
            Kind::ChainedCrescentOne | Kind::ChainedCrescentTwo => Some(0.0),
        }
    }

    pub fn starting_point(&self) -> DVector<f64> {
        let n = self.n;
        match self.kind {
            Kind::MaxQ => DVector::from_fn(n, |i, _| {
                let v = (i + 1) as f64;
                if i < n / 2 {
                    v
                } else {
                    -v
                }
            }),
            Kind::MxHilb | Kind::ActiveFaces => DVector::from_element(n, 1.0),
            Kind::ChainedLq => DVector::from_element(n, -0.5),
            Kind::ChainedCb3One | Kind::ChainedCb3Two => DVector::from_element(n, 2.0),
            Kind::BrownTwo => DVector::from_fn(n, |i, _| if i % 2 == 0 { -1.0 } else { 1.0 }),
            Kind::ChainedMifflinTwo => DVector::from_element(n, -1.0),
            Kind::ChainedCrescentOne | Kind::ChainedCrescentTwo => {
                DVector::from_fn(n, |i, _| if i % 2 == 0 { -1.5 } else { 2.0 })
            }
        }
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<(), ProblemError> {
        if x.len() != self.n {
            return Err(ProblemError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> Result<f64, ProblemError> {
        self.check_dim(x)?;
        Ok(match self.kind {
            Kind::MaxQ => maxq_value(x),
            Kind::MxHilb => mxhilb_value(x),
            Kind::ChainedLq => chained_lq_value(x),
            Kind::ChainedCb3One => cb3_one_value(x),
            Kind::ChainedCb3Two => cb3_two_value(x),
            Kind::ActiveFaces => active_faces_value(x),
            Kind::BrownTwo => brown_two_value(x),
            Kind::ChainedMifflinTwo => mifflin_two_value(x),
            Kind::ChainedCrescentOne => crescent_one_value(x),
            Kind::ChainedCrescentTwo => crescent_two_value(x),
        })
    }

    pub fn subgradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, ProblemError> {
        self.check_dim(x)?;
        Ok(match self.kind {
            Kind::MaxQ => maxq_subgradient(x),
            Kind::MxHilb => mxhilb_subgradient(x),
            Kind::ChainedLq => chained_lq_subgradient(x),
            Kind::ChainedCb3One => cb3_one_subgradient(x),
            Kind::ChainedCb3Two => cb3_two_subgradient(x),
            Kind::ActiveFaces => active_faces_subgradient(x),
            Kind::BrownTwo => brown_two_subgradient(x),
            Kind::ChainedMifflinTwo => mifflin_two_subgradient(x),
            Kind::ChainedCrescentOne => crescent_one_subgradient(x),
            Kind::ChainedCrescentTwo => crescent_two_subgradient(x),
        })
    }

    /// Validates the analytic subgradient against central differences along
    /// random directions at a differentiable point.
    ///
    /// Returns the maximum of `|(f(x + h d) - f(x - h d)) / 2h - g^T d|` over
    /// `directions` accepted unit directions. A direction is rejected when the
    /// stencil is unusable for validation: either the subgradient jumps across
    /// it (a kink inside the stencil) or the difference quotient fails a
    /// step-halving consistency check (the local expansion does not hold at
    /// scale `h`, as happens near the fractional-power singularities of brown
    /// function 2). Rejection is bounded; a point too close to a kink yields
    /// [`ProblemError::NondifferentiablePoint`].
    pub fn finite_difference_check<R: Rng>(
        &self,
        x: &DVector<f64>,
        h: f64,
        directions: usize,
        rng: &mut R,
    ) -> Result<f64, ProblemError> {
        self.check_dim(x)?;
        let g = self.subgradient(x)?;
        let g_scale = 1.0 + g.norm();
        let mut worst: f64 = 0.0;
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < directions {
            attempts += 1;
            if attempts > 20 * directions {
                return Err(ProblemError::NondifferentiablePoint);
            }
            let mut d = DVector::from_fn(self.n, |_, _| rng.random_range(-1.0..1.0));
            let norm = d.norm();
            if norm < 1e-8 {
                continue;
            }
            d /= norm;
            let jump = (self.subgradient(&(x + &d * h))? - self.subgradient(&(x - &d * h))?).norm();
            if jump > 1e-3 * g_scale {
                continue;
            }
            let quotient = |step: f64| -> Result<f64, ProblemError> {
                let f_plus = self.evaluate(&(x + &d * step))?;
                let f_minus = self.evaluate(&(x - &d * step))?;
                Ok((f_plus - f_minus) / (2.0 * step))
            };
            let fd_h = quotient(h)?;
            let fd_half = quotient(0.5 * h)?;
            if (fd_h - fd_half).abs() > 1e-6 * g_scale {
                continue;
            }
            worst = worst.max((fd_h - g.dot(&d)).abs());
            accepted += 1;
        }
        Ok(worst)
    }
}

impl ObjectiveOracle for ProblemSpec {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.evaluate(x).expect("dimension verified by the caller")
    }

    fn subgradient(&self, x: &DVector<f64>) -> DVector<f64> {
        ProblemSpec::subgradient(self, x).expect("dimension verified by the caller")
    }
}

/// Index of the strictly largest entry, lowest index on ties.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 0;
    for (i, v) in values.enumerate() {
        if v > best {
            best = v;
            best_i = i;
        }
    }
    best_i
}

/// Sign with the tie convention `|t| = max{t, -t}`: zero goes to the `+t` branch.
fn tie_sign(t: f64) -> f64 {
    if t >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

// maxq: f(x) = max_i x_i^2.
fn maxq_value(x: &DVector<f64>) -> f64 {
    x.iter().map(|v| v * v).fold(f64::NEG_INFINITY, f64::max)
}

fn maxq_subgradient(x: &DVector<f64>) -> DVector<f64> {
    let i = argmax(x.iter().map(|v| v * v));
    let mut g = DVector::zeros(x.len());
    g[i] = 2.0 * x[i];
    g
}

// mxhilb: f(x) = max_i |sum_j x_j / (i + j - 1)| (1-based indices).
fn mxhilb_inner(x: &DVector<f64>, i: usize) -> f64 {
    x.iter()
        .enumerate()
        .map(|(j, v)| v / (i + j + 1) as f64)
        .sum()
}

fn mxhilb_value(x: &DVector<f64>) -> f64 {
    (0..x.len())
        .map(|i| mxhilb_inner(x, i).abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn mxhilb_subgradient(x: &DVector<f64>) -> DVector<f64> {
    let i = argmax((0..x.len()).map(|i| mxhilb_inner(x, i).abs()));
    let sigma = tie_sign(mxhilb_inner(x, i));
    DVector::from_fn(x.len(), |j, _| sigma / (i + j + 1) as f64)
}

// chained lq: sum of max{-x_i - x_{i+1}, -x_i - x_{i+1} + x_i^2 + x_{i+1}^2 - 1}.
fn chained_lq_value(x: &DVector<f64>) -> f64 {
    (0..x.len() - 1)
        .map(|i| {
            let linear = -x[i] - x[i + 1];
            linear.max(linear + x[i] * x[i] + x[i + 1] * x[i + 1] - 1.0)
        })
        .sum()
}

fn chained_lq_subgradient(x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() - 1 {
        let quad = x[i] * x[i] + x[i + 1] * x[i + 1] - 1.0;
        if quad > 0.0 {
            g[i] += -1.0 + 2.0 * x[i];
            g[i + 1] += -1.0 + 2.0 * x[i + 1];
        } else {
            g[i] += -1.0;
            g[i + 1] += -1.0;
        }
    }
    g
}

// chained cb3, pairwise pieces: x_i^4 + x_{i+1}^2, (2-x_i)^2 + (2-x_{i+1})^2,
// and 2 exp(x_{i+1} - x_i).
fn cb3_pieces(a: f64, b: f64) -> [f64; 3] {
    [
        a.powi(4) + b * b,
        (2.0 - a).powi(2) + (2.0 - b).powi(2),
        2.0 * (b - a).exp(),
    ]
}

fn cb3_piece_gradient(a: f64, b: f64, piece: usize) -> (f64, f64) {
    match piece {
        0 => (4.0 * a.powi(3), 2.0 * b),
        1 => (-2.0 * (2.0 - a), -2.0 * (2.0 - b)),
        _ => {
            let e = 2.0 * (b - a).exp();
            (-e, e)
        }
    }
}

// chained cb3 1: the max is taken per pair, then summed.
fn cb3_one_value(x: &DVector<f64>) -> f64 {
    (0..x.len() - 1)
        .map(|i| {
            let p = cb3_pieces(x[i], x[i + 1]);
            p[0].max(p[1]).max(p[2])
        })
        .sum()
}

fn cb3_one_subgradient(x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() - 1 {
        let p = cb3_pieces(x[i], x[i + 1]);
        let piece = argmax(p.iter().copied());
        let (da, db) = cb3_piece_gradient(x[i], x[i + 1], piece);
        g[i] += da;
        g[i + 1] += db;
    }
    g
}

// chained cb3 2: the three sums are formed first, then the max is taken once.
fn cb3_two_sums(x: &DVector<f64>) -> [f64; 3] {
    let mut sums = [0.0; 3];
    for i in 0..x.len() - 1 {
        let p = cb3_pieces(x[i], x[i + 1]);
        for (acc, v) in sums.iter_mut().zip(p) {
            *acc += v;
        }
    }
    sums
}

fn cb3_two_value(x: &DVector<f64>) -> f64 {
    let s = cb3_two_sums(x);
    s[0].max(s[1]).max(s[2])
}

fn cb3_two_subgradient(x: &DVector<f64>) -> DVector<f64> {
    let piece = argmax(cb3_two_sums(x).iter().copied());
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() - 1 {
        let (da, db) = cb3_piece_gradient(x[i], x[i + 1], piece);
        g[i] += da;
        g[i + 1] += db;
    }
    g
}

// active faces: f(x) = max{ phi(-sum_j x_j), max_i phi(x_i) } with
// phi(y) = ln(|y| + 1). Nonconvex because phi is concave in |y|. Several
// variants of this name circulate; this is the logarithmic-composition form,
// whose all-ones starting point gives f = ln(n + 1), about 3.93 at n = 50.
fn active_faces_phi(y: f64) -> f64 {
    (y.abs() + 1.0).ln()
}

fn active_faces_value(x: &DVector<f64>) -> f64 {
    let sum: f64 = x.iter().sum();
    x.iter()
        .map(|&v| active_faces_phi(v))
        .fold(active_faces_phi(-sum), f64::max)
}

fn active_faces_subgradient(x: &DVector<f64>) -> DVector<f64> {
    let sum: f64 = x.iter().sum();
    // Piece 0 is phi(-sum), pieces 1..=n are phi(x_i); lowest index wins ties.
    let pieces = std::iter::once(-sum).chain(x.iter().copied());
    let i = argmax(pieces.map(active_faces_phi));
    if i == 0 {
        let u = -sum;
        let c = tie_sign(u) / (u.abs() + 1.0);
        DVector::from_element(x.len(), -c)
    } else {
        let mut g = DVector::zeros(x.len());
        g[i - 1] = tie_sign(x[i - 1]) / (x[i - 1].abs() + 1.0);
        g
    }
}

// brown function 2: sum of |x_i|^(x_{i+1}^2 + 1) + |x_{i+1}|^(x_i^2 + 1).
fn brown_two_value(x: &DVector<f64>) -> f64 {
    (0..x.len() - 1)
        .map(|i| {
            let (a, b) = (x[i], x[i + 1]);
            a.abs().powf(b * b + 1.0) + b.abs().powf(a * a + 1.0)
        })
        .sum()
}

fn brown_two_subgradient(x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() - 1 {
        let (a, b) = (x[i], x[i + 1]);
        // d/da |a|^p: p |a|^(p-1) sign(a) for a != 0. At a = 0 the term is
        // differentiable with derivative 0 for p > 1; for p = 1 it is |a|,
        // whose subdifferential at 0 contains 0. Either way 0 is a valid pick.
        if a != 0.0 {
            let p = b * b + 1.0;
            g[i] += p * a.abs().powf(p - 1.0) * a.signum();
            // a also sits in the exponent of |b|^(a^2 + 1).
            if b != 0.0 {
                g[i] += b.abs().powf(a * a + 1.0) * b.abs().ln() * 2.0 * a;
            }
        }
        if b != 0.0 {
            let q = a * a + 1.0;
            g[i + 1] += q * b.abs().powf(q - 1.0) * b.signum();
            if a != 0.0 {
                g[i + 1] += a.abs().powf(b * b + 1.0) * a.abs().ln() * 2.0 * b;
            }
        }
    }
    g
}

// chained mifflin 2: sum of -x_i + 2 (x_i^2 + x_{i+1}^2 - 1) + 1.75 |...|.
fn mifflin_two_value(x: &DVector<f64>) -> f64 {
    (0..x.len() - 1)
        .map(|i| {
            let t = x[i] * x[i] + x[i + 1] * x[i + 1] - 1.0;
            -x[i] + 2.0 * t + 1.75 * t.abs()
        })
        .sum()
}

fn mifflin_two_subgradient(x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() - 1 {
        let t = x[i] * x[i] + x[i + 1] * x[i + 1] - 1.0;
        let slope = 4.0 + 3.5 * tie_sign(t);
        g[i] += -1.0 + slope * x[i];
        g[i + 1] += slope * x[i + 1];
    }
    g
}

// chained crescent, pairwise pieces: a = x_i^2 + (x_{i+1} - 1)^2 + x_{i+1} - 1
// and b = -x_i^2 - (x_{i+1} - 1)^2 + x_{i+1} + 1.
fn crescent_pieces(a: f64, b: f64) -> (f64, f64) {
    let round = a * a + (b - 1.0) * (b - 1.0);
    (round + b - 1.0, -round + b + 1.0)
}

// chained crescent 1: max of the two sums.
fn crescent_one_value(x: &DVector<f64>) -> f64 {
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    for i in 0..x.len() - 1 {
        let (pa, pb) = crescent_pieces(x[i], x[i + 1]);
        sum_a += pa;
        sum_b += pb;
    }
    sum_a.max(sum_b)
}

fn crescent_one_subgradient(x: &DVector<f64>) -> DVector<f64> {
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    for i in 0..x.len() - 1 {
        let (pa, pb) = crescent_pieces(x[i], x[i + 1]);
        sum_a += pa;
        sum_b += pb;
    }
    let first_branch = sum_a >= sum_b;
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() - 1 {
        accumulate_crescent(&mut g, x, i, first_branch);
    }
    g
}

// chained crescent 2: the max is taken per pair, then summed.
fn crescent_two_value(x: &DVector<f64>) -> f64 {
    (0..x.len() - 1)
        .map(|i| {
            let (pa, pb) = crescent_pieces(x[i], x[i + 1]);
            pa.max(pb)
        })
        .sum()
}

fn crescent_two_subgradient(x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() - 1 {
        let (pa, pb) = crescent_pieces(x[i], x[i + 1]);
        accumulate_crescent(&mut g, x, i, pa >= pb);
    }
    g
}

fn accumulate_crescent(g: &mut DVector<f64>, x: &DVector<f64>, i: usize, first_branch: bool) {
    if first_branch {
        g[i] += 2.0 * x[i];
        g[i + 1] += 2.0 * (x[i + 1] - 1.0) + 1.0;
    } else {
        g[i] += -2.0 * x[i];
        g[i + 1] += -2.0 * (x[i + 1] - 1.0) + 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_ten_problems_in_order() {
        let names: Vec<_> = registry(50).unwrap().iter().map(|p| p.name()).collect();
        assert_eq!(
            names,
            vec![
                "maxq",
                "mxhilb",
                "chained lq",
                "chained cb3 1",
                "chained cb3 2",
                "active faces",
                "brown function 2",
                "chained mifflin 2",
                "chained crescent 1",
                "chained crescent 2",
            ]
        );
    }

    #[test]
    fn lookup_normalizes_separators() {
        assert_eq!(by_name("Chained_LQ", 10).unwrap().name(), "chained lq");
        assert_eq!(by_name("chained-cb3-2", 10).unwrap().name(), "chained cb3 2");
        assert!(by_name("no such problem", 10).is_err());
        assert!(matches!(by_name("maxq", 1), Err(ProblemError::InvalidDimension(1))));
    }

    #[test]
    fn convexity_flags() {
        let convex: Vec<_> = registry(50)
            .unwrap()
            .iter()
            .map(|p| p.is_convex())
            .collect();
        assert_eq!(
            convex,
            vec![true, true, true, true, true, false, false, false, false, false]
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = by_name("maxq", 5).unwrap();
        let x = DVector::zeros(4);
        assert!(matches!(
            p.evaluate(&x),
            Err(ProblemError::DimensionMismatch { expected: 5, got: 4 })
        ));
    }

    #[test]
    fn subgradient_at_origin_ties_are_valid() {
        // Every oracle must return a finite vector at kinks.
        for p in registry(6).unwrap() {
            let g = p.subgradient(&DVector::zeros(6)).unwrap();
            assert!(g.iter().all(|v| v.is_finite()), "{}", p.name());
        }
    }
}
