//! Markov-Dobrushin coefficients, invariant measures and the geometric
//! convergence envelope.

use nalgebra::DMatrix;

use crate::chain::{Distribution, StochasticChain};
use crate::error::{ErgoError, Result, Warning};
use crate::linalg;

/// Ergodic-theorem bound may be exceeded by at most this much through rounding.
pub const ENVELOPE_SLACK: f64 = 1e-12;

/// Overlap `sum_j min(a_j, b_j)` of two rows.
pub(crate) fn row_overlap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.min(*y)).sum()
}

fn md_of_matrix(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut kappa: f64 = 1.0;
    for i in 0..n {
        for k in (i + 1)..n {
            let s: f64 = (0..n).map(|j| m[(i, j)].min(m[(k, j)])).sum();
            kappa = kappa.min(s);
        }
    }
    kappa.clamp(0.0, 1.0)
}

/// `kappa_{n0} = min_{i,i'} sum_j min(p^(n0)_ij, p^(n0)_i'j)`.
pub fn md_coefficient(chain: &StochasticChain, n0: usize) -> Result<f64> {
    if n0 == 0 {
        return Err(ErgoError::InvalidArgument("n0 must be at least 1".into()));
    }
    Ok(md_of_matrix(&chain.n_step(n0)))
}

/// One-step coefficient `kappa`.
pub fn kappa(chain: &StochasticChain) -> f64 {
    md_of_matrix(chain.matrix())
}

/// Symmetric matrix of pairwise overlaps `kappa(i, i')`, unit diagonal.
pub fn pairwise_md(chain: &StochasticChain) -> DMatrix<f64> {
    let n = chain.len();
    let m = chain.matrix();
    let mut out = DMatrix::identity(n, n);
    for i in 0..n {
        for k in (i + 1)..n {
            let s: f64 = (0..n).map(|j| m[(i, j)].min(m[(k, j)])).sum::<f64>().min(1.0);
            out[(i, k)] = s;
            out[(k, i)] = s;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub n0: usize,
    pub kappa_n0: f64,
    pub kappa: f64,
    /// Smallest transition probability.
    pub kappa0: f64,
    pub pairwise: DMatrix<f64>,
}

pub fn contraction_report(chain: &StochasticChain, n0: usize) -> Result<ContractionReport> {
    Ok(ContractionReport {
        n0,
        kappa_n0: md_coefficient(chain, n0)?,
        kappa: kappa(chain),
        kappa0: chain.min_entry(),
        pairwise: pairwise_md(chain),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantMethod {
    /// Solve `mu (P - I) = 0`, `sum mu = 1` directly.
    LinearSolve,
    /// Cesaro averages of the rows of `P^k` started from state 0.
    Cesaro,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantMeasure {
    pub measure: Distribution,
    /// `|| mu P - mu ||_1` of the returned measure.
    pub defect: f64,
    pub warning: Option<Warning>,
}

/// Cesaro averages stop once consecutive doublings differ by less than this in l1.
pub const CESARO_TOLERANCE: f64 = 1e-10;
/// Averages over at most `2^CESARO_MAX_DOUBLINGS` powers.
pub const CESARO_MAX_DOUBLINGS: u32 = 60;

pub fn invariant_measure(chain: &StochasticChain, method: InvariantMethod) -> Result<InvariantMeasure> {
    let warning = if possibly_non_unique(chain) {
        Some(Warning::NonUnique { start_state: 0 })
    } else {
        None
    };
    let raw = match method {
        InvariantMethod::LinearSolve => linear_invariant(chain)?,
        InvariantMethod::Cesaro => cesaro_invariant(chain, 0)?,
    };
    let measure = clean_distribution(raw);
    let defect = linalg::l1_distance(&chain.push_forward(measure.weights()), measure.weights());
    Ok(InvariantMeasure { measure, defect, warning })
}

/// Stationary law by direct solve; convenience for modules that assume `kappa > 0`.
pub fn stationary(chain: &StochasticChain) -> Result<Distribution> {
    Ok(clean_distribution(linear_invariant(chain)?))
}

/// True when `kappa_{n0} = 0` for every `n0 <= N`.
fn possibly_non_unique(chain: &StochasticChain) -> bool {
    let n = chain.len();
    let mut power = chain.matrix().clone();
    for n0 in 1..=n {
        if md_of_matrix(&power) > 0.0 {
            return false;
        }
        if n0 < n {
            power = &power * chain.matrix();
        }
    }
    n > 1
}

fn clean_distribution(mut w: Vec<f64>) -> Distribution {
    for x in w.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    Distribution::from_mass(w)
}

fn linear_invariant(chain: &StochasticChain) -> Result<Vec<f64>> {
    let n = chain.len();
    // (P - I)^T mu = 0 with the last equation replaced by sum mu = 1
    let mut a = chain.matrix().transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    match linalg::solve_square(&a, &b) {
        Ok(mu) => Ok(mu),
        Err(ErgoError::SingularSystem) => {
            // several closed classes: minimum-norm solution of the bordered system
            let mut bordered = DMatrix::zeros(n + 1, n);
            let pt = chain.matrix().transpose() - DMatrix::identity(n, n);
            bordered.view_mut((0, 0), (n, n)).copy_from(&pt);
            for j in 0..n {
                bordered[(n, j)] = 1.0;
            }
            let mut rhs = vec![0.0; n + 1];
            rhs[n] = 1.0;
            linalg::solve_least_squares(&bordered, &rhs)
        }
        Err(e) => Err(e),
    }
}

/// Krylov-Bogoliubov averages `n^{-1} sum_{k<n} delta_start P^k`, with `n`
/// doubled each round via `A_{2n} = (A_n + P^n A_n) / 2`.
fn cesaro_invariant(chain: &StochasticChain, start: usize) -> Result<Vec<f64>> {
    let n = chain.len();
    let mut power = chain.matrix().clone(); // P^count
    let mut average = DMatrix::identity(n, n); // S_count / count
    let mut previous: Vec<f64> = average.row(start).iter().copied().collect();
    for _ in 0..CESARO_MAX_DOUBLINGS {
        average = (&average + &power * &average) * 0.5;
        power = &power * &power;
        // repeated squaring amplifies row-sum drift
        for mut row in power.row_iter_mut() {
            let s: f64 = row.sum();
            row /= s;
        }
        let current: Vec<f64> = average.row(start).iter().copied().collect();
        let change = linalg::l1_distance(&current, &previous);
        previous = current;
        if change < CESARO_TOLERANCE {
            return Ok(previous);
        }
    }
    Err(ErgoError::CesaroNotSettled { cap: 1u64 << CESARO_MAX_DOUBLINGS.min(63) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceEnvelope {
    pub kappa: f64,
    pub invariant: Distribution,
    /// `max_x || P_x(n, .) - mu ||_TV` for `n = 0..=n_max`.
    pub worst_tv: Vec<f64>,
    /// `2 (1 - kappa)^n`, or the trivial value 2 when `kappa = 0`.
    pub bound: Vec<f64>,
    pub vacuous: bool,
}

impl ConvergenceEnvelope {
    /// True when `worst_tv(n) <= bound(n) + ENVELOPE_SLACK` for every `n`.
    pub fn holds(&self) -> bool {
        self.worst_tv
            .iter()
            .zip(&self.bound)
            .all(|(tv, b)| *tv <= b + ENVELOPE_SLACK)
    }
}

pub fn convergence_envelope(chain: &StochasticChain, n_max: usize) -> Result<ConvergenceEnvelope> {
    let k = kappa(chain);
    let mu = stationary(chain)?;
    let n = chain.len();
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut worst_tv = Vec::with_capacity(n_max + 1);
    let mut bound = Vec::with_capacity(n_max + 1);
    let vacuous = k <= 0.0;
    for step in 0..=n_max {
        let worst = (0..n)
            .map(|x| (0..n).map(|j| (power[(x, j)] - mu.weights()[j]).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        worst_tv.push(worst);
        bound.push(if vacuous { 2.0 } else { 2.0 * (1.0 - k).powi(step as i32) });
        power = &power * chain.matrix();
    }
    Ok(ConvergenceEnvelope { kappa: k, invariant: mu, worst_tv, bound, vacuous })
}
