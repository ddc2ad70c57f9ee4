//! Small dense helpers shared by the analysis modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{ErgoError, Result};

/// `M v` for a column vector `v`.
pub fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let n = m.nrows();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, vj) in v.iter().enumerate() {
            acc += m[(i, j)] * vj;
        }
        *o = acc;
    }
    out
}

/// `v M` for a row vector `v`.
pub fn vec_mat(v: &[f64], m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.ncols();
    let mut out = vec![0.0; n];
    for (i, vi) in v.iter().enumerate() {
        if *vi == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += vi * m[(i, j)];
        }
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Solves the square system `a x = b` by LU with partial pivoting, followed by
/// one step of iterative refinement.
pub fn solve_square(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let lu = a.clone().lu();
    let rhs = DVector::from_column_slice(b);
    let mut x = lu.solve(&rhs).ok_or(ErgoError::SingularSystem)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ErgoError::SingularSystem);
    }
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let pivots_ok = (0..a.nrows()).all(|i| lu.u()[(i, i)].abs() > 1e-14 * scale);
    if !pivots_ok {
        return Err(ErgoError::SingularSystem);
    }
    let r = &rhs - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x.iter().copied().collect())
}

/// Minimum-norm least-squares solution of a (possibly rectangular) system.
pub fn solve_least_squares(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let svd = a.clone().svd(true, true);
    let rhs = DVector::from_column_slice(b);
    let x = svd
        .solve(&rhs, 1e-12)
        .map_err(|_| ErgoError::SingularSystem)?;
    Ok(x.iter().copied().collect())
}

/// Bound on `sum_{j >= k} ||M^j||_inf` for a non-negative matrix, given the
/// norms `theta[i] = ||M^i||_inf` for `i = 0..=k` (with `theta[0] = 1`).
///
/// Uses submultiplicativity: once some `theta[m] < 1`, the full series is at
/// most `sum_{i<m} theta[i] / (1 - theta[m])`, and the tail from `k` is at most
/// `theta[k]` times that. Returns `None` while no such `m` has been observed.
pub fn neumann_tail_bound(theta: &[f64]) -> Option<f64> {
    let k = theta.len() - 1;
    let (m, theta_m) = theta
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, t)| **t < 1.0)
        .map(|(i, t)| (i, *t))?;
    let head: f64 = theta[..m].iter().sum();
    Some(theta[k] * head / (1.0 - theta_m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_solve_matches_hand_solution() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let x = solve_square(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn singular_system_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(solve_square(&a, &[1.0, 2.0]), Err(ErgoError::SingularSystem));
    }

    #[test]
    fn neumann_tail_of_scalar_geometric_series() {
        // M = 0.5: tail from k is 0.5^k / 0.5 = 2 * 0.5^k.
        let theta: Vec<f64> = (0..=6).map(|i| 0.5_f64.powi(i)).collect();
        let bound = neumann_tail_bound(&theta).unwrap();
        assert!((bound - 2.0 * 0.5_f64.powi(6)).abs() < 1e-15);
        assert!(neumann_tail_bound(&[1.0]).is_none());
    }
}
