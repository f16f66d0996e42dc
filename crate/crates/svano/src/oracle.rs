//! First-order oracle abstraction and the counting wrapper.
//!
//! Every step strategy consumes the objective exclusively through
//! [`CountingOracle`], so the evaluation counts reported in run records are the
//! oracle's own call counts rather than per-strategy bookkeeping. The
//! [`ObjectiveOracle`] trait is the minimal interface: a value and one
//! subgradient per point. Subgradient selection at kinks is the oracle's
//! responsibility; the bundled test problems use a fixed lowest-index rule so
//! runs are deterministic.

use std::cell::Cell;

use nalgebra::DVector;

/// A locally Lipschitz objective together with a subgradient selection.
pub trait ObjectiveOracle {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    /// One element of the Clarke subdifferential at `x`.
    fn subgradient(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// Wraps an oracle and counts calls. Counters use interior mutability so the
/// wrapper can be shared immutably across a whole run.
pub struct CountingOracle<'a> {
    inner: &'a dyn ObjectiveOracle,
    value_calls: Cell<usize>,
    subgradient_calls: Cell<usize>,
}

impl<'a> CountingOracle<'a> {
    pub fn new(inner: &'a dyn ObjectiveOracle) -> Self {
        Self {
            inner,
            value_calls: Cell::new(0),
            subgradient_calls: Cell::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.value_calls.set(self.value_calls.get() + 1);
        self.inner.value(x)
    }

    pub fn subgradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.subgradient_calls.set(self.subgradient_calls.get() + 1);
        self.inner.subgradient(x)
    }

    /// `(value calls, subgradient calls)` so far.
    pub fn counts(&self) -> (usize, usize) {
        (self.value_calls.get(), self.subgradient_calls.get())
    }
}

/// Adapter turning a pair of closures into an oracle, mainly for tests and
/// for driving the framework on objectives outside the built-in set.
pub struct FnOracle<F, G>
where
    F: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    dim: usize,
    f: F,
    g: G,
}

impl<F, G> FnOracle<F, G>
where
    F: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    pub fn new(dim: usize, f: F, g: G) -> Self {
        Self { dim, f, g }
    }
}

impl<F, G> ObjectiveOracle for FnOracle<F, G>
where
    F: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.f)(x)
    }

    fn subgradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.g)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_tracks_each_kind_separately() {
        let oracle = FnOracle::new(2, |x: &DVector<f64>| x.norm_squared(), |x: &DVector<f64>| x * 2.0);
        let counter = CountingOracle::new(&oracle);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        counter.value(&x);
        counter.value(&x);
        counter.subgradient(&x);
        assert_eq!(counter.counts(), (2, 1));
    }
}
