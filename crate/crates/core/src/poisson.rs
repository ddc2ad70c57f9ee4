//! Generators, Dynkin's formulae, and solvers for the discrete Poisson
//! equation `e^{-c} P u - u = -f`, with or without a Dirichlet boundary.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::chain::{Observable, StochasticChain};
use crate::ergodicity::{kappa, stationary};
use crate::error::{ErgoError, Result, Warning};
use crate::limits::center;
use crate::linalg;
use crate::mc::{Sampler, SeedSpec};
use crate::spectral::{max_row_sum, PowerIteration};

/// `P u - u`, or `e^{-c} (P u) - u` with a potential.
pub fn apply_generator(
    chain: &StochasticChain,
    u: &Observable,
    potential: Option<&Observable>,
) -> Result<Observable> {
    chain.check_dim(u.len())?;
    let pu = chain.apply(u.values());
    let values = match potential {
        None => pu.iter().zip(u.values()).map(|(a, b)| a - b).collect(),
        Some(c) => {
            chain.check_dim(c.len())?;
            pu.iter()
                .zip(u.values())
                .zip(c.values())
                .map(|((a, b), ci)| (-ci).exp() * a - b)
                .collect()
        }
    };
    Observable::new(values)
}

/// `diag(e^{-c}) P`, or `P` itself without a potential.
fn weighted_matrix(chain: &StochasticChain, potential: Option<&Observable>) -> DMatrix<f64> {
    let mut m = chain.matrix().clone();
    if let Some(c) = potential {
        for i in 0..chain.len() {
            let w = (-c[i]).exp();
            m.row_mut(i).iter_mut().for_each(|x| *x *= w);
        }
    }
    m
}

/// Largest defect over `m = 0..=n` between `E_x e^{-phi_{m-1}} h(X_m)` and
/// `h(x) + sum_{k<m} E_x e^{-phi_{k-1}} L^c h(X_k)`, both evaluated exactly
/// through powers of `diag(e^{-c}) P` (plain `P` without a potential).
pub fn dynkin_verify(
    chain: &StochasticChain,
    h: &Observable,
    x: usize,
    n: usize,
    potential: Option<&Observable>,
) -> Result<f64> {
    chain.check_state(x)?;
    let lh = apply_generator(chain, h, potential)?;
    let a = weighted_matrix(chain, potential);
    // row_k = delta_x A^k carries the weighted law of X_k
    let mut row = vec![0.0; chain.len()];
    row[x] = 1.0;
    let mut compensator = 0.0;
    let mut defect: f64 = 0.0;
    for _ in 0..=n {
        let lhs = linalg::dot(&row, h.values());
        let rhs = h[x] + compensator;
        defect = defect.max((lhs - rhs).abs());
        compensator += linalg::dot(&row, lh.values());
        row = linalg::vec_mat(&row, &a);
    }
    Ok(defect)
}

/// A Dirichlet problem: boundary set, source on the interior, data on the
/// boundary, optional potential.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryProblem {
    pub chain: StochasticChain,
    boundary: Vec<usize>,
    interior: Vec<usize>,
    pub source: Observable,
    pub boundary_data: Observable,
    pub potential: Option<Observable>,
}

impl BoundaryProblem {
    /// `source` and `boundary_data` are full-length vectors; only their
    /// interior (resp. boundary) entries are used.
    pub fn new(
        chain: &StochasticChain,
        boundary: &[usize],
        source: Observable,
        boundary_data: Observable,
        potential: Option<Observable>,
    ) -> Result<Self> {
        let n = chain.len();
        chain.check_dim(source.len())?;
        chain.check_dim(boundary_data.len())?;
        if let Some(c) = &potential {
            chain.check_dim(c.len())?;
        }
        let mut is_boundary = vec![false; n];
        for &b in boundary {
            chain.check_state(b)?;
            is_boundary[b] = true;
        }
        let boundary: Vec<usize> = (0..n).filter(|i| is_boundary[*i]).collect();
        let interior: Vec<usize> = (0..n).filter(|i| !is_boundary[*i]).collect();
        if boundary.is_empty() || interior.is_empty() {
            return Err(ErgoError::InvalidArgument(
                "boundary must be a non-empty proper subset of the states".into(),
            ));
        }
        Ok(BoundaryProblem {
            chain: chain.clone(),
            boundary,
            interior,
            source,
            boundary_data,
            potential,
        })
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn is_boundary(&self, state: usize) -> bool {
        self.boundary.binary_search(&state).is_ok()
    }

    fn weight(&self, state: usize) -> f64 {
        self.potential.as_ref().map_or(1.0, |c| (-c[state]).exp())
    }

    /// Every interior state reaches the boundary with positive probability.
    pub fn check_reachable(&self) -> Result<()> {
        let n = self.chain.len();
        let mut reaches = vec![false; n];
        let mut queue: VecDeque<usize> = self.boundary.iter().copied().collect();
        for &b in &self.boundary {
            reaches[b] = true;
        }
        while let Some(y) = queue.pop_front() {
            for x in 0..n {
                if !reaches[x] && self.chain.p(x, y) > 0.0 {
                    reaches[x] = true;
                    queue.push_back(x);
                }
            }
        }
        match self.interior.iter().find(|x| !reaches[**x]) {
            Some(&state) => Err(ErgoError::UnreachableBoundary { state }),
            None => Ok(()),
        }
    }

    /// Interior block `W = diag(e^{-c}) Q` and right-hand side `f + diag(e^{-c}) R g`.
    fn interior_system(&self) -> (DMatrix<f64>, Vec<f64>) {
        let k = self.interior.len();
        let mut w = DMatrix::zeros(k, k);
        let mut rhs = vec![0.0; k];
        for (a, &x) in self.interior.iter().enumerate() {
            let weight = self.weight(x);
            for (b, &y) in self.interior.iter().enumerate() {
                w[(a, b)] = weight * self.chain.p(x, y);
            }
            let boundary_term: f64 = self
                .boundary
                .iter()
                .map(|&y| self.chain.p(x, y) * self.boundary_data[y])
                .sum();
            rhs[a] = self.source[x] + weight * boundary_term;
        }
        (w, rhs)
    }

    fn assemble(&self, interior_values: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.chain.len()];
        for &b in &self.boundary {
            u[b] = self.boundary_data[b];
        }
        for (a, &x) in self.interior.iter().enumerate() {
            u[x] = interior_values[a];
        }
        u
    }

    /// Sup-norm defect of the equation on the interior.
    pub fn residual(&self, u: &[f64]) -> f64 {
        let pu = self.chain.apply(u);
        self.interior
            .iter()
            .map(|&x| (self.weight(x) * pu[x] - u[x] + self.source[x]).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloOptions {
    pub paths: usize,
    pub seed: SeedSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Linear,
    Series,
    MonteCarlo(MonteCarloOptions),
}

impl SolveMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SolveMethod::Linear => "linear",
            SolveMethod::Series => "series",
            SolveMethod::MonteCarlo(_) => "monte_carlo",
        }
    }
}

/// Diagnostics backing the claim that the problem is well posed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WellPosedness {
    /// Spectral radius of the weighted operator whose Neumann series is summed.
    pub spectral_radius: Option<f64>,
    /// `ln` of that radius; for whole-space problems with a potential this is
    /// the tilted log-moment function of `c` at `beta = -1`.
    pub log_spectral_radius: Option<f64>,
    /// Minimal one-step probability of entering the boundary from the interior.
    pub hitting_probability: Option<f64>,
    /// Terms summed by the series method.
    pub series_terms: Option<usize>,
    /// Sup-distance between the series and the independent direct solve.
    pub cross_check: Option<f64>,
    /// Step cap used for Monte Carlo paths.
    pub horizon_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    pub values: Observable,
    pub residual: f64,
    pub method: SolveMethod,
    pub wellposedness: WellPosedness,
    /// Per-state standard errors (Monte Carlo only).
    pub std_errors: Option<Vec<f64>>,
    pub warnings: Vec<Warning>,
}

/// Relative accuracy target for the truncated Neumann series.
pub const SERIES_TOLERANCE: f64 = 1e-14;
const SERIES_MAX_TERMS: usize = 10_000_000;

/// `sum_k M^k b` for non-negative `M` with spectral radius below one, cut
/// once the submultiplicative tail bound drops below tolerance.
fn neumann_series(m: &DMatrix<f64>, b: &[f64]) -> Result<(Vec<f64>, usize)> {
    let dim = m.nrows();
    let b_norm = linalg::sup_norm(b);
    let mut sum = b.to_vec();
    let mut term = b.to_vec();
    let mut ones = vec![1.0; dim];
    let mut theta = vec![1.0];
    for k in 1..SERIES_MAX_TERMS {
        term = linalg::mat_vec(m, &term);
        ones = linalg::mat_vec(m, &ones);
        theta.push(linalg::sup_norm(&ones));
        sum.iter_mut().zip(&term).for_each(|(s, t)| *s += t);
        if let Some(tail) = linalg::neumann_tail_bound(&theta) {
            let scale = linalg::sup_norm(&sum).max(1.0);
            if b_norm * tail <= SERIES_TOLERANCE * scale {
                return Ok((sum, k + 1));
            }
        }
        if theta[k] == 0.0 {
            return Ok((sum, k + 1));
        }
    }
    Err(ErgoError::NoConvergence { iterations: SERIES_MAX_TERMS, estimate: f64::NAN })
}

fn radius_of(m: &DMatrix<f64>) -> f64 {
    PowerIteration { shift: max_row_sum(m), ..Default::default() }.run(m).radius
}

/// Dirichlet problem without a potential.
pub fn solve_dirichlet(problem: &BoundaryProblem, method: SolveMethod) -> Result<PoissonSolution> {
    if problem.potential.is_some() {
        return Err(ErgoError::InvalidArgument(
            "problem carries a potential; use solve_dirichlet_potential".into(),
        ));
    }
    solve_boundary(problem, method)
}

/// Dirichlet problem with a potential; requires `r(diag(e^{-c}) Q) < 1`.
pub fn solve_dirichlet_potential(
    problem: &BoundaryProblem,
    method: SolveMethod,
) -> Result<PoissonSolution> {
    solve_boundary(problem, method)
}

fn solve_boundary(problem: &BoundaryProblem, method: SolveMethod) -> Result<PoissonSolution> {
    problem.check_reachable()?;
    let (w, rhs) = problem.interior_system();
    let radius = radius_of(&w);
    if radius >= 1.0 {
        return Err(ErgoError::IllPosed { spectral_radius: radius });
    }
    let hitting = problem
        .interior
        .iter()
        .map(|&x| problem.boundary.iter().map(|&y| problem.chain.p(x, y)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let mut wp = WellPosedness {
        spectral_radius: Some(radius),
        log_spectral_radius: Some(radius.ln()),
        hitting_probability: Some(hitting),
        ..Default::default()
    };
    let k = problem.interior.len();
    let direct = || {
        let a = DMatrix::identity(k, k) - &w;
        linalg::solve_square(&a, &rhs)
    };
    let (values, std_errors) = match method {
        SolveMethod::Linear => (problem.assemble(&direct()?), None),
        SolveMethod::Series => {
            let (v, terms) = neumann_series(&w, &rhs)?;
            wp.series_terms = Some(terms);
            let d = direct()?;
            wp.cross_check = Some(linalg::l1_distance(&v, &d).min(linalg::sup_norm(
                &v.iter().zip(&d).map(|(a, b)| a - b).collect::<Vec<_>>(),
            )));
            (problem.assemble(&v), None)
        }
        SolveMethod::MonteCarlo(opts) => {
            let cap = horizon_cap(problem)?;
            wp.horizon_cap = Some(cap);
            let (means, errors) = monte_carlo_boundary(problem, opts, cap)?;
            (means, Some(errors))
        }
    };
    let residual = problem.residual(&values);
    Ok(PoissonSolution {
        values: Observable::new(values)?,
        residual,
        method,
        wellposedness: wp,
        std_errors,
        warnings: vec![],
    })
}

/// `m * ceil(ln(1e-9) / ln(1 - h_m))`, with `h_m` the smallest probability of
/// reaching the boundary within `m` steps and `m` the first horizon where it is positive.
fn horizon_cap(problem: &BoundaryProblem) -> Result<usize> {
    let n = problem.chain.len();
    // not_hit[x] = P_x(tau > m)
    let mut not_hit: Vec<f64> = (0..n).map(|x| if problem.is_boundary(x) { 0.0 } else { 1.0 }).collect();
    for m in 1..=n {
        let mut next = problem.chain.apply(&not_hit);
        for &b in &problem.boundary {
            next[b] = 0.0;
        }
        not_hit = next;
        let worst = problem.interior.iter().map(|&x| not_hit[x]).fold(0.0, f64::max);
        if worst < 1.0 {
            let hit = 1.0 - worst;
            let rounds = if hit >= 1.0 { 1.0 } else { ((1e-9_f64).ln() / (1.0 - hit).ln()).ceil() };
            return Ok(m * rounds.max(1.0) as usize);
        }
    }
    Err(ErgoError::UnreachableBoundary { state: problem.interior[0] })
}

/// One path of `sum_{n<tau} e^{-phi_{n-1}} f(X_n) + e^{-phi_{tau-1}} g(X_tau)`.
fn boundary_functional(
    problem: &BoundaryProblem,
    sampler: &Sampler,
    start: usize,
    cap: usize,
    rng: &mut crate::mc::StreamRng,
) -> Result<f64> {
    let mut x = start;
    let mut discount = 1.0;
    let mut total = 0.0;
    for _ in 0..cap {
        if problem.is_boundary(x) {
            return Ok(total + discount * problem.boundary_data[x]);
        }
        total += discount * problem.source[x];
        discount *= problem.weight(x);
        x = sampler.step(x, rng);
    }
    if problem.is_boundary(x) {
        return Ok(total + discount * problem.boundary_data[x]);
    }
    Err(ErgoError::HorizonExceeded { cap })
}

fn monte_carlo_boundary(
    problem: &BoundaryProblem,
    opts: MonteCarloOptions,
    cap: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if opts.paths == 0 {
        return Err(ErgoError::EmptyBatch);
    }
    let n = problem.chain.len();
    let sampler = Sampler::new(&problem.chain);
    let mut means = problem.assemble(&vec![0.0; problem.interior.len()]);
    let mut errors = vec![0.0; n];
    for &x in &problem.interior {
        let stream = opts.seed.substream(x as u64);
        let samples: Vec<f64> = (0..opts.paths as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.substream(i).rng();
                boundary_functional(problem, &sampler, x, cap, &mut rng)
            })
            .collect::<Result<_>>()?;
        let est = crate::mc::Estimate::from_samples(&samples)?;
        means[x] = est.mean;
        errors[x] = est.std_error;
    }
    Ok((means, errors))
}

/// Monte Carlo check of the stopped Dynkin formula at the boundary hitting
/// time: the sample mean of
/// `e^{-phi_{tau-1}} h(X_tau) - h(x) - sum_{k<tau} e^{-phi_{k-1}} L^c h(X_k)`.
pub fn stopped_dynkin_defect(
    problem: &BoundaryProblem,
    h: &Observable,
    x: usize,
    opts: MonteCarloOptions,
) -> Result<crate::mc::Estimate> {
    problem.chain.check_state(x)?;
    let lh = apply_generator(&problem.chain, h, problem.potential.as_ref())?;
    let cap = horizon_cap(problem)?;
    let sampler = Sampler::new(&problem.chain);
    let samples: Vec<f64> = (0..opts.paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = opts.seed.substream(i).rng();
            let mut state = x;
            let mut discount = 1.0;
            let mut compensator = 0.0;
            for _ in 0..=cap {
                if problem.is_boundary(state) {
                    return Ok(discount * h[state] - h[x] - compensator);
                }
                compensator += discount * lh[state];
                discount *= problem.weight(state);
                state = sampler.step(state, &mut rng);
            }
            Err(ErgoError::HorizonExceeded { cap })
        })
        .collect::<Result<_>>()?;
    crate::mc::Estimate::from_samples(&samples)
}

/// Whole-space equation without a potential; returns the centered solution
/// `u = sum_k P^k f_c`.
pub fn solve_whole(chain: &StochasticChain, f: &Observable) -> Result<PoissonSolution> {
    chain.check_dim(f.len())?;
    let k = kappa(chain);
    if k <= 0.0 {
        return Err(ErgoError::VacuousBound);
    }
    let mu = stationary(chain)?;
    let mean = mu.expect(f)?;
    let mut warnings = vec![];
    if mean.abs() > crate::limits::CENTERING_TOLERANCE {
        warnings.push(Warning::AutoCentered { mean });
    }
    let fc = center(f, &mu)?;
    // ||P^k f_c||_inf <= osc(f_c) (1 - kappa)^k; sum the tail past K below 1e-12
    let osc = fc.oscillation();
    let mut terms = 0usize;
    let mut u = vec![0.0; chain.len()];
    let mut term = fc.values().to_vec();
    loop {
        u.iter_mut().zip(&term).for_each(|(a, b)| *a += b);
        terms += 1;
        let tail = osc * (1.0 - k).powi(terms as i32) / k;
        if tail < 1e-12 || osc == 0.0 {
            break;
        }
        term = chain.apply(&term);
    }
    // re-center against rounding drift
    let drift = linalg::dot(mu.weights(), &u);
    u.iter_mut().for_each(|a| *a -= drift);

    // independent route: bordered system [(P - I); mu^T] u = [-f_c; 0]
    let n = chain.len();
    let mut bordered = DMatrix::zeros(n + 1, n);
    let pi = chain.matrix() - DMatrix::identity(n, n);
    bordered.view_mut((0, 0), (n, n)).copy_from(&pi);
    for j in 0..n {
        bordered[(n, j)] = mu.weights()[j];
    }
    let mut rhs: Vec<f64> = fc.values().iter().map(|v| -v).collect();
    rhs.push(0.0);
    let direct = linalg::solve_least_squares(&bordered, &rhs)?;
    let cross = u.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let pu = chain.apply(&u);
    let residual = pu
        .iter()
        .zip(&u)
        .zip(fc.values())
        .map(|((p, a), b)| (p - a + b).abs())
        .fold(0.0, f64::max);
    Ok(PoissonSolution {
        values: Observable::new(u)?,
        residual,
        method: SolveMethod::Series,
        wellposedness: WellPosedness {
            spectral_radius: None,
            series_terms: Some(terms),
            cross_check: Some(cross),
            ..Default::default()
        },
        std_errors: None,
        warnings,
    })
}

/// Whole-space equation with a potential; requires `r(diag(e^{-c}) P) < 1`.
pub fn solve_whole_potential(
    chain: &StochasticChain,
    c: &Observable,
    f: &Observable,
) -> Result<PoissonSolution> {
    chain.check_dim(c.len())?;
    chain.check_dim(f.len())?;
    let a = weighted_matrix(chain, Some(c));
    let radius = radius_of(&a);
    if radius >= 1.0 {
        return Err(ErgoError::IllPosed { spectral_radius: radius });
    }
    let (u, terms) = neumann_series(&a, f.values())?;
    let n = chain.len();
    let direct = linalg::solve_square(&(DMatrix::identity(n, n) - &a), f.values())?;
    let cross = u.iter().zip(&direct).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let values = Observable::new(u)?;
    let lu = apply_generator(chain, &values, Some(c))?;
    let residual = lu
        .values()
        .iter()
        .zip(f.values())
        .map(|(l, fi)| (l + fi).abs())
        .fold(0.0, f64::max);
    Ok(PoissonSolution {
        values,
        residual,
        method: SolveMethod::Series,
        wellposedness: WellPosedness {
            spectral_radius: Some(radius),
            log_spectral_radius: Some(radius.ln()),
            series_terms: Some(terms),
            cross_check: Some(cross),
            ..Default::default()
        },
        std_errors: None,
        warnings: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> StochasticChain {
        StochasticChain::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
    }

    fn uniform3() -> StochasticChain {
        StochasticChain::from_rows(&vec![vec![1.0 / 3.0; 3]; 3]).unwrap()
    }

    fn obs(v: &[f64]) -> Observable {
        Observable::new(v.to_vec()).unwrap()
    }

    #[test]
    fn generator_examples() {
        let g = apply_generator(&p2(), &obs(&[4.0, 4.0]), None).unwrap();
        assert!(g.sup_norm() < 1e-15);
        let u = obs(&[10.0 / 3.0, -20.0 / 3.0]);
        let g = apply_generator(&p2(), &u, None).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-14 && (g[1] - 2.0).abs() < 1e-14);
        let g0 = apply_generator(&p2(), &u, Some(&obs(&[0.0, 0.0]))).unwrap();
        assert_eq!(g, g0);
    }

    #[test]
    fn dynkin_examples() {
        let h = obs(&[1.0, -2.0]);
        assert_eq!(dynkin_verify(&p2(), &h, 0, 0, None).unwrap(), 0.0);
        assert!(dynkin_verify(&p2(), &obs(&[3.0, 3.0]), 1, 30, None).unwrap() < 1e-13);
        assert!(dynkin_verify(&p2(), &h, 0, 10, None).unwrap() <= 1e-12);
        assert!(dynkin_verify(&p2(), &h, 1, 10, Some(&obs(&[0.3, -0.1]))).unwrap() <= 1e-12);
    }

    #[test]
    fn dirichlet_examples() {
        let chain = uniform3();
        let p = BoundaryProblem::new(&chain, &[2], obs(&[0.0; 3]), obs(&[5.0; 3]), None).unwrap();
        for method in [SolveMethod::Linear, SolveMethod::Series] {
            let s = solve_dirichlet(&p, method).unwrap();
            assert!(s.values.values().iter().all(|v| (v - 5.0).abs() < 1e-12));
        }
        let p = BoundaryProblem::new(&chain, &[2], obs(&[1.0; 3]), obs(&[0.0; 3]), None).unwrap();
        let s = solve_dirichlet(&p, SolveMethod::Linear).unwrap();
        assert!((s.values[0] - 3.0).abs() < 1e-12 && (s.values[1] - 3.0).abs() < 1e-12);
        assert_eq!(s.values[2], 0.0);
        assert!(s.residual <= 1e-12);
    }

    #[test]
    fn unreachable_boundary_is_reported() {
        let chain = StochasticChain::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![0.0, 0.5, 0.5],
        ])
        .unwrap();
        let p = BoundaryProblem::new(&chain, &[2], obs(&[1.0; 3]), obs(&[0.0; 3]), None).unwrap();
        assert_eq!(
            solve_dirichlet(&p, SolveMethod::Linear).unwrap_err(),
            ErgoError::UnreachableBoundary { state: 0 }
        );
        assert!(BoundaryProblem::new(&chain, &[], obs(&[1.0; 3]), obs(&[0.0; 3]), None).is_err());
        assert!(BoundaryProblem::new(&chain, &[0, 1, 2], obs(&[1.0; 3]), obs(&[0.0; 3]), None).is_err());
    }

    #[test]
    fn potential_dirichlet_examples() {
        let chain = uniform3();
        let f = obs(&[0.7, -0.2, 0.0]);
        let g = obs(&[0.0, 0.0, 1.5]);
        let plain = BoundaryProblem::new(&chain, &[2], f.clone(), g.clone(), None).unwrap();
        let zero = BoundaryProblem::new(&chain, &[2], f, g, Some(obs(&[0.0; 3]))).unwrap();
        let a = solve_dirichlet(&plain, SolveMethod::Linear).unwrap();
        let b = solve_dirichlet_potential(&zero, SolveMethod::Linear).unwrap();
        for i in 0..3 {
            assert!((a.values[i] - b.values[i]).abs() < 1e-12);
        }

        // u = E 2^{-tau}: u_i = (1/2)(1/3) (u_0 + u_1) + (1/2)(1/3) on the interior
        let c = obs(&[2f64.ln(); 3]);
        let p = BoundaryProblem::new(&chain, &[2], obs(&[0.0; 3]), obs(&[1.0; 3]), Some(c)).unwrap();
        let s = solve_dirichlet_potential(&p, SolveMethod::Linear).unwrap();
        // symmetric: u = u/3 + 1/6  =>  u = 1/4
        assert!((s.values[0] - 0.25).abs() < 1e-14 && (s.values[1] - 0.25).abs() < 1e-14);

        let strong = obs(&[-3.0; 3]);
        let p = BoundaryProblem::new(&chain, &[2], obs(&[1.0; 3]), obs(&[0.0; 3]), Some(strong)).unwrap();
        assert!(matches!(
            solve_dirichlet_potential(&p, SolveMethod::Linear),
            Err(ErgoError::IllPosed { .. })
        ));
    }

    #[test]
    fn whole_space_examples() {
        let s = solve_whole(&p2(), &obs(&[0.0, 0.0])).unwrap();
        assert!(s.values.sup_norm() == 0.0);
        let s = solve_whole(&p2(), &obs(&[1.0, -2.0])).unwrap();
        assert!((s.values[0] - 10.0 / 3.0).abs() < 1e-10);
        assert!((s.values[1] + 20.0 / 3.0).abs() < 1e-10);
        assert!(s.residual <= 1e-10);
        assert!(s.wellposedness.cross_check.unwrap() < 1e-10);
        assert!(s.warnings.is_empty());

        let s = solve_whole(&p2(), &obs(&[2.0, -1.0])).unwrap();
        assert!(matches!(s.warnings[0], Warning::AutoCentered { .. }));
    }

    #[test]
    fn whole_space_potential_examples() {
        let c = obs(&[2f64.ln(), 2f64.ln()]);
        let s = solve_whole_potential(&p2(), &c, &obs(&[0.0, 0.0])).unwrap();
        assert_eq!(s.values.sup_norm(), 0.0);
        let s = solve_whole_potential(&p2(), &c, &obs(&[1.0, -2.0])).unwrap();
        assert!((s.values[0] - 1.0 / 0.65).abs() < 1e-10);
        assert!((s.values[1] + 2.0 / 0.65).abs() < 1e-10);
        assert!((s.wellposedness.spectral_radius.unwrap() - 0.5).abs() < 1e-10);
        let bad = obs(&[-0.1, 0.0]);
        assert!(matches!(
            solve_whole_potential(&p2(), &bad, &obs(&[1.0, 0.0])),
            Err(ErgoError::IllPosed { .. })
        ));
    }
}
