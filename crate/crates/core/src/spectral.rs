//! Perron root of non-negative matrices by power iteration.

use nalgebra::DMatrix;

use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    /// Relative tolerance on the eigenvalue estimate.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Iterate on `M + shift * I`. A positive shift removes peripheral
    /// eigenvalues other than the Perron root, which otherwise stall the
    /// iteration on periodic matrices.
    pub shift: f64,
    /// Only accept convergence when the Collatz-Wielandt bracket closes.
    /// Appropriate for primitive matrices, where it certifies the error.
    pub require_bracket: bool,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration { rel_tol: 1e-10, max_iter: 100_000, shift: 0.0, require_bracket: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    pub radius: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Last normalized iterate (sup-norm one). For primitive matrices this is
    /// the Perron eigenvector.
    pub vector: Vec<f64>,
    /// Collatz-Wielandt bracket `[lower, upper]` on the radius, when the
    /// iterate is strictly positive.
    pub bracket: Option<(f64, f64)>,
}

impl PowerIteration {
    pub fn primitive(rel_tol: f64) -> Self {
        PowerIteration { rel_tol, require_bracket: true, ..Default::default() }
    }

    /// Estimates the spectral radius of the non-negative matrix `m`.
    pub fn run(&self, m: &DMatrix<f64>) -> SpectralEstimate {
        let dim = m.nrows();
        debug_assert!(m.iter().all(|x| *x >= 0.0));

        // Nilpotent (in particular zero) matrices: the iterate from 1 dies out
        // within `dim` steps.
        let mut probe = vec![1.0; dim];
        for k in 0..=dim {
            if probe.iter().all(|x| *x == 0.0) {
                return SpectralEstimate {
                    radius: 0.0,
                    iterations: k,
                    converged: true,
                    vector: vec![0.0; dim],
                    bracket: Some((0.0, 0.0)),
                };
            }
            probe = linalg::mat_vec(m, &probe);
            let s = linalg::sup_norm(&probe);
            if s > 0.0 {
                probe.iter_mut().for_each(|x| *x /= s);
            }
        }

        let shift = self.shift;
        let mut v = vec![1.0; dim];
        let mut previous = f64::NAN;
        let mut stagnant = 0usize;
        let mut lambda = 0.0;
        let mut bracket = None;
        for it in 1..=self.max_iter {
            let mut w = linalg::mat_vec(m, &v);
            for (wi, vi) in w.iter_mut().zip(&v) {
                *wi += shift * vi;
            }
            let norm = linalg::sup_norm(&w);
            if norm == 0.0 {
                return SpectralEstimate {
                    radius: 0.0,
                    iterations: it,
                    converged: true,
                    vector: w,
                    bracket: Some((0.0, 0.0)),
                };
            }
            lambda = norm / linalg::sup_norm(&v);
            bracket = if v.iter().all(|x| *x > 0.0) {
                let (lo, hi) = w.iter().zip(&v).fold((f64::INFINITY, 0.0_f64), |(lo, hi), (a, b)| {
                    let r = a / b;
                    (lo.min(r), hi.max(r))
                });
                Some((lo, hi))
            } else {
                None
            };
            for x in w.iter_mut() {
                *x /= norm;
            }
            v = w;

            if let Some((lo, hi)) = bracket {
                if hi - lo <= self.rel_tol * hi {
                    return self.finish(0.5 * (lo + hi), it, true, v, bracket);
                }
            }
            if !self.require_bracket {
                if (lambda - previous).abs() <= self.rel_tol * lambda {
                    stagnant += 1;
                    if stagnant >= 3 {
                        return self.finish(lambda, it, true, v, bracket);
                    }
                } else {
                    stagnant = 0;
                }
            }
            previous = lambda;
        }
        self.finish(lambda, self.max_iter, false, v, bracket)
    }

    fn finish(
        &self,
        shifted: f64,
        iterations: usize,
        converged: bool,
        vector: Vec<f64>,
        bracket: Option<(f64, f64)>,
    ) -> SpectralEstimate {
        let mut radius = shifted;
        if let Some((_, hi)) = bracket {
            radius = radius.min(hi);
        }
        let radius = (radius - self.shift).max(0.0);
        let bracket = bracket.map(|(lo, hi)| ((lo - self.shift).max(0.0), (hi - self.shift).max(0.0)));
        SpectralEstimate { radius, iterations, converged, vector, bracket }
    }
}

/// Largest row sum, i.e. the sup-norm of a non-negative matrix.
pub fn max_row_sum(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().sum::<f64>())
        .fold(0.0, f64::max)
}
