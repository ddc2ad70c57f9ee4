//! State space, stochastic matrices, probability vectors and observables.

use nalgebra::DMatrix;

use crate::error::{ErgoError, Result};
use crate::linalg;

/// Tolerance applied to raw row sums before exact renormalization.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Tolerance on the total mass of a [`Distribution`].
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-12;

/// A validated row-stochastic transition matrix over a labelled finite state space.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticChain {
    labels: Vec<String>,
    matrix: DMatrix<f64>,
}

impl StochasticChain {
    /// Validates `rows` as a transition matrix and renormalizes every row to sum to one.
    pub fn new(rows: &[Vec<f64>], labels: Vec<String>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(ErgoError::EmptyStateSpace);
        }
        if labels.len() != n {
            return Err(ErgoError::DimensionMismatch { expected: n, found: labels.len() });
        }
        let mut matrix = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ErgoError::DimensionMismatch { expected: n, found: row.len() });
            }
            for (j, &p) in row.iter().enumerate() {
                if !p.is_finite() {
                    return Err(ErgoError::NonFinite { index: i * n + j });
                }
                if p < 0.0 {
                    return Err(ErgoError::NegativeEntry { row: i, col: j, value: p });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(ErgoError::RowSumOutOfTolerance { row: i, sum });
            }
            for (j, &p) in row.iter().enumerate() {
                matrix[(i, j)] = p / sum;
            }
        }
        Ok(StochasticChain { labels, matrix })
    }

    /// Builds a chain whose states are labelled `"0"`, `"1"`, ...
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let labels = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(rows, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i)).collect()
    }

    /// `P^n`, with `P^0` the identity.
    pub fn n_step(&self, n: usize) -> DMatrix<f64> {
        let size = self.len();
        let mut acc = DMatrix::identity(size, size);
        for _ in 0..n {
            acc = &acc * &self.matrix;
        }
        acc
    }

    /// `(P u)(x) = E_x u(X_1)`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.matrix, u)
    }

    /// `(mu P)(y) = P_mu(X_1 = y)`.
    pub fn push_forward(&self, mu: &[f64]) -> Vec<f64> {
        linalg::vec_mat(mu, &self.matrix)
    }

    /// Smallest transition probability.
    pub fn min_entry(&self) -> f64 {
        self.matrix.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_state(&self, state: usize) -> Result<()> {
        if state >= self.len() {
            return Err(ErgoError::InvalidArgument(format!(
                "state index {state} out of range for {} states",
                self.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.len() {
            return Err(ErgoError::DimensionMismatch { expected: self.len(), found });
        }
        Ok(())
    }
}

/// A probability vector over the states of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(weights, DISTRIBUTION_TOLERANCE)
    }

    /// Accepts weights whose total is within `tol` of one and renormalizes them.
    pub fn with_tolerance(weights: Vec<f64>, tol: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(ErgoError::EmptyStateSpace);
        }
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(ErgoError::NonFinite { index: i });
            }
            if *w < 0.0 {
                return Err(ErgoError::InvalidDistribution(format!(
                    "negative weight {w} at index {i}"
                )));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(ErgoError::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Distribution(weights.into_iter().map(|w| w / total).collect()))
    }

    /// Point mass at `state`.
    pub fn point(len: usize, state: usize) -> Self {
        let mut w = vec![0.0; len];
        w[state] = 1.0;
        Distribution(w)
    }

    pub fn uniform(len: usize) -> Self {
        Distribution(vec![1.0 / len as f64; len])
    }

    /// Normalizes arbitrary non-negative mass; used internally for residual laws.
    pub(crate) fn from_mass(mass: Vec<f64>) -> Self {
        let total: f64 = mass.iter().sum();
        Distribution(mass.into_iter().map(|w| w / total).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `E_mu f`.
    pub fn expect(&self, f: &Observable) -> Result<f64> {
        check_same(self.len(), f.len())?;
        Ok(linalg::dot(&self.0, f.values()))
    }
}

/// A real-valued function on the states.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable(Vec<f64>);

impl Observable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ErgoError::NonFinite { index });
        }
        Ok(Observable(values))
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Observable(vec![value; len])
    }

    pub fn zeros(len: usize) -> Self {
        Observable(vec![0.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        linalg::sup_norm(&self.0)
    }

    /// `max f - min f`.
    pub fn oscillation(&self) -> f64 {
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.0.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

impl std::ops::Index<usize> for Observable {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn check_same(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(ErgoError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Total variation in the factor-two convention: `sum_i |mu_i - nu_i|`, in `[0, 2]`.
pub fn total_variation(mu: &Distribution, nu: &Distribution) -> Result<f64> {
    check_same(mu.len(), nu.len())?;
    Ok(linalg::l1_distance(mu.weights(), nu.weights()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> StochasticChain {
        StochasticChain::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
    }

    #[test]
    fn validates_reference_chains() {
        assert!(StochasticChain::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).is_ok());
        assert_eq!(p2().p(1, 0), 0.2);
    }

    #[test]
    fn rejects_bad_row_sum() {
        let err = StochasticChain::from_rows(&[vec![0.9, 0.2], vec![0.2, 0.8]]).unwrap_err();
        match err {
            ErgoError::RowSumOutOfTolerance { row, sum } => {
                assert_eq!(row, 0);
                assert!((sum - 1.1).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_and_ragged_input() {
        let err = StochasticChain::from_rows(&[vec![1.1, -0.1], vec![0.5, 0.5]]).unwrap_err();
        assert!(matches!(err, ErgoError::NegativeEntry { row: 0, col: 1, .. }));
        let err = StochasticChain::from_rows(&[vec![1.0], vec![0.5, 0.5]]).unwrap_err();
        assert!(matches!(err, ErgoError::DimensionMismatch { .. }));
        let err = StochasticChain::new(&[vec![1.0]], vec![]).unwrap_err();
        assert!(matches!(err, ErgoError::DimensionMismatch { expected: 1, found: 0 }));
        assert_eq!(StochasticChain::from_rows(&[]), Err(ErgoError::EmptyStateSpace));
    }

    #[test]
    fn rows_are_renormalized_exactly() {
        let c = StochasticChain::from_rows(&[vec![0.3333333333, 0.6666666667], vec![0.5, 0.5]])
            .unwrap();
        let s: f64 = c.row(0).iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn n_step_conventions() {
        let c = p2();
        assert_eq!(c.n_step(0), DMatrix::identity(2, 2));
        assert_eq!(c.n_step(1), *c.matrix());
        let swap = StochasticChain::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(swap.n_step(2), DMatrix::identity(2, 2));
    }

    #[test]
    fn total_variation_examples() {
        let a = Distribution::point(2, 0);
        let b = Distribution::point(2, 1);
        assert_eq!(total_variation(&a, &a).unwrap(), 0.0);
        assert_eq!(total_variation(&a, &b).unwrap(), 2.0);
        let h = Distribution::new(vec![0.5, 0.5]).unwrap();
        assert!((total_variation(&h, &a).unwrap() - 1.0).abs() < 1e-15);
        let c = Distribution::uniform(3);
        assert!(matches!(
            total_variation(&a, &c),
            Err(ErgoError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        assert!(Observable::new(vec![1.0, f64::NAN]).is_err());
    }
}
