//! Coupling constructions: maximal couplings of two laws, the independent
//! product coupling, the four-component coupled chain and its operator `V`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::chain::{Distribution, StochasticChain};
use crate::ergodicity::{kappa, pairwise_md};
use crate::error::{ErgoError, Result};
use crate::mc::{sample_index, SeedSpec};
use crate::spectral::{max_row_sum, PowerIteration};

/// Overlaps within this distance of one are treated as identical laws.
const IDENTICAL_TOL: f64 = 1e-14;

/// `sum_i min(p_i, q_i)`.
pub fn overlap(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(ErgoError::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    Ok(crate::ergodicity::row_overlap(p.weights(), q.weights()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoupledPairSample {
    pub first: usize,
    pub second: usize,
    /// Set only when the construction forced `first == second`.
    pub coupled: bool,
}

/// The ingredients of a maximal coupling of two laws `p1`, `p2`: their common
/// part `p1 ^ p2` and the two normalized residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCoupling {
    p1: Vec<f64>,
    p2: Vec<f64>,
    kappa: f64,
    common: Option<Vec<f64>>,
    residual1: Vec<f64>,
    residual2: Vec<f64>,
}

/// Independent draws behind the two-variable construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoVariableDraw {
    /// `gamma = 0`, probability `kappa`.
    pub coupled: bool,
    pub common: Option<usize>,
    pub residual1: usize,
    pub residual2: usize,
}

impl PairCoupling {
    /// Accepts any pair of laws, including the degenerate overlaps 0 and 1.
    pub fn new(p1: &Distribution, p2: &Distribution) -> Result<Self> {
        let kappa = overlap(p1, p2)?;
        Ok(Self::from_weights(p1.weights(), p2.weights(), kappa))
    }

    fn from_weights(p1: &[f64], p2: &[f64], kappa: f64) -> Self {
        let n = p1.len();
        let common_mass: Vec<f64> = p1.iter().zip(p2).map(|(a, b)| a.min(*b)).collect();
        let common = (kappa > 0.0).then(|| normalize(common_mass));
        let (residual1, residual2) = if kappa >= 1.0 - IDENTICAL_TOL {
            (vec![1.0 / n as f64; n], vec![1.0 / n as f64; n])
        } else {
            // ties belong to {p1 >= p2}, where the second residual vanishes
            let r1 = p1.iter().zip(p2).map(|(a, b)| (a - b).max(0.0)).collect();
            let r2 = p1.iter().zip(p2).map(|(a, b)| (b - a).max(0.0)).collect();
            (normalize(r1), normalize(r2))
        };
        PairCoupling { p1: p1.to_vec(), p2: p2.to_vec(), kappa, common, residual1, residual2 }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn is_identical(&self) -> bool {
        self.kappa >= 1.0 - IDENTICAL_TOL
    }

    pub fn common(&self) -> Option<&[f64]> {
        self.common.as_deref()
    }

    pub fn residual1(&self) -> &[f64] {
        &self.residual1
    }

    pub fn residual2(&self) -> &[f64] {
        &self.residual2
    }

    fn require_overlap(&self) -> Result<()> {
        if self.kappa <= 0.0 {
            Err(ErgoError::SingularPair)
        } else {
            Ok(())
        }
    }

    /// Three-variable coupling: `second ~ p2`, `first ~ p1`, equal with
    /// probability exactly `kappa`.
    pub fn sample_three<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CoupledPairSample> {
        self.require_overlap()?;
        let second = sample_index(&self.p2, rng);
        if self.is_identical() {
            return Ok(CoupledPairSample { first: second, second, coupled: true });
        }
        let a = self.p1[second];
        let b = self.p2[second];
        let ratio = a / a.max(b);
        let z: f64 = rng.gen();
        if ratio >= z {
            Ok(CoupledPairSample { first: second, second, coupled: true })
        } else {
            let first = sample_index(&self.residual1, rng);
            Ok(CoupledPairSample { first, second, coupled: false })
        }
    }

    /// All independent variables of the two-variable construction. Always
    /// defined: the common part is absent when `kappa = 0`, and the residuals
    /// fall back to uniform when `kappa = 1`.
    pub fn draw_parts<R: Rng + ?Sized>(&self, rng: &mut R) -> TwoVariableDraw {
        let coupled = if self.is_identical() {
            true
        } else if self.kappa <= 0.0 {
            false
        } else {
            rng.gen::<f64>() < self.kappa
        };
        let common = self.common.as_ref().map(|c| sample_index(c, rng));
        let residual1 = sample_index(&self.residual1, rng);
        let residual2 = sample_index(&self.residual2, rng);
        TwoVariableDraw { coupled, common, residual1, residual2 }
    }

    /// Two-variable coupling: `first ~ p1`, `second ~ p2`, equal with
    /// probability exactly `kappa`.
    pub fn sample_two<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CoupledPairSample> {
        self.require_overlap()?;
        let d = self.draw_parts(rng);
        Ok(match (d.coupled, d.common) {
            (true, Some(c)) => CoupledPairSample { first: c, second: c, coupled: true },
            _ => CoupledPairSample { first: d.residual1, second: d.residual2, coupled: false },
        })
    }
}

fn normalize(mass: Vec<f64>) -> Vec<f64> {
    let total: f64 = mass.iter().sum();
    mass.into_iter().map(|m| m / total).collect()
}

pub fn couple_three<R: Rng + ?Sized>(
    p1: &Distribution,
    p2: &Distribution,
    rng: &mut R,
) -> Result<CoupledPairSample> {
    PairCoupling::new(p1, p2)?.sample_three(rng)
}

pub fn couple_two<R: Rng + ?Sized>(
    p1: &Distribution,
    p2: &Distribution,
    rng: &mut R,
) -> Result<CoupledPairSample> {
    PairCoupling::new(p1, p2)?.sample_two(rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleCouplingTail {
    pub kappa0: f64,
    /// `P(tau > n)` for `n = 0..=n_max`, two independent copies.
    pub tail: Vec<f64>,
    /// `(1 - kappa0)^n`.
    pub bound: Vec<f64>,
    pub vacuous: bool,
}

impl SimpleCouplingTail {
    pub fn holds(&self) -> bool {
        self.vacuous || self.tail.iter().zip(&self.bound).all(|(t, b)| *t <= b + 1e-12)
    }
}

/// Exact tail of the meeting time of two independent copies started at
/// `x1 != x2`, by propagating the product-chain law on off-diagonal pairs.
pub fn simple_coupling_tail(
    chain: &StochasticChain,
    x1: usize,
    x2: usize,
    n_max: usize,
) -> Result<SimpleCouplingTail> {
    chain.check_state(x1)?;
    chain.check_state(x2)?;
    if x1 == x2 {
        return Err(ErgoError::InvalidArgument("starting states must differ".into()));
    }
    let n = chain.len();
    let p = chain.matrix();
    let pt = p.transpose();
    let kappa0 = chain.min_entry();
    let vacuous = kappa0 <= 0.0;
    let mut mass = DMatrix::<f64>::zeros(n, n);
    mass[(x1, x2)] = 1.0;
    let mut tail = Vec::with_capacity(n_max + 1);
    let mut bound = Vec::with_capacity(n_max + 1);
    for step in 0..=n_max {
        tail.push(mass.sum());
        bound.push((1.0 - kappa0).powi(step as i32));
        mass = &pt * &mass * p;
        for i in 0..n {
            mass[(i, i)] = 0.0;
        }
    }
    Ok(SimpleCouplingTail { kappa0, tail, bound, vacuous })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoupledState {
    pub eta1: usize,
    pub eta2: usize,
    pub xi: usize,
    /// 1 while not yet coupled, 0 afterwards.
    pub zeta: u8,
}

impl CoupledState {
    pub fn first(&self) -> usize {
        if self.zeta == 1 {
            self.eta1
        } else {
            self.xi
        }
    }

    pub fn second(&self) -> usize {
        if self.zeta == 1 {
            self.eta2
        } else {
            self.xi
        }
    }
}

/// Pre-computed transition laws of the four-component coupled chain.
#[derive(Debug, Clone)]
pub struct VasersteinCoupling {
    rows: Vec<Vec<f64>>,
    pairs: Vec<PairCoupling>,
    uniform: Vec<f64>,
}

impl VasersteinCoupling {
    pub fn new(chain: &StochasticChain) -> Self {
        let n = chain.len();
        let rows = chain.rows();
        let kap = pairwise_md(chain);
        let mut pairs = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                pairs.push(PairCoupling::from_weights(&rows[a], &rows[b], kap[(a, b)]));
            }
        }
        VasersteinCoupling { rows, pairs, uniform: vec![1.0 / n as f64; n] }
    }

    fn pair(&self, a: usize, b: usize) -> &PairCoupling {
        &self.pairs[a * self.rows.len() + b]
    }

    /// Initial state from two initial laws.
    pub fn start<R: Rng + ?Sized>(&self, mu1: &Distribution, mu2: &Distribution, rng: &mut R) -> Result<CoupledState> {
        let init = PairCoupling::new(mu1, mu2)?;
        let d = init.draw_parts(rng);
        Ok(CoupledState {
            eta1: d.residual1,
            eta2: d.residual2,
            xi: d.common.unwrap_or(0),
            zeta: if d.coupled { 0 } else { 1 },
        })
    }

    /// One transition; the four components are drawn independently given `x`.
    pub fn step<R: Rng + ?Sized>(&self, x: CoupledState, rng: &mut R) -> CoupledState {
        let pair = self.pair(x.eta1, x.eta2);
        let k = pair.kappa();
        let eta1 = sample_index(pair.residual1(), rng);
        let eta2 = sample_index(pair.residual2(), rng);
        let xi = if x.zeta == 1 {
            match pair.common() {
                Some(c) => sample_index(c, rng),
                None => sample_index(&self.uniform, rng),
            }
        } else {
            sample_index(&self.rows[x.xi], rng)
        };
        let zeta = if x.zeta == 1 {
            if pair.is_identical() || rng.gen::<f64>() < k {
                0
            } else {
                1
            }
        } else {
            0
        };
        CoupledState { eta1, eta2, xi, zeta }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VasersteinPath {
    pub states: Vec<CoupledState>,
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

pub fn vaserstein_simulate<R: Rng + ?Sized>(
    chain: &StochasticChain,
    mu1: &Distribution,
    mu2: &Distribution,
    horizon: usize,
    rng: &mut R,
) -> Result<VasersteinPath> {
    chain.check_dim(mu1.len())?;
    chain.check_dim(mu2.len())?;
    let coupling = VasersteinCoupling::new(chain);
    simulate_with(&coupling, mu1, mu2, horizon, rng)
}

fn simulate_with<R: Rng + ?Sized>(
    coupling: &VasersteinCoupling,
    mu1: &Distribution,
    mu2: &Distribution,
    horizon: usize,
    rng: &mut R,
) -> Result<VasersteinPath> {
    let mut x = coupling.start(mu1, mu2, rng)?;
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(x);
    for _ in 0..horizon {
        x = coupling.step(x, rng);
        states.push(x);
    }
    let first = states.iter().map(CoupledState::first).collect();
    let second = states.iter().map(CoupledState::second).collect();
    Ok(VasersteinPath { states, first, second })
}

/// Summary of many coupled paths.
#[derive(Debug, Clone, PartialEq)]
pub struct VasersteinSummary {
    pub paths: usize,
    /// Fraction of paths with `first_n != second_n`.
    pub decoupled: Vec<f64>,
    pub marginal1: Vec<Vec<f64>>,
    pub marginal2: Vec<Vec<f64>>,
    /// Paths on which `zeta` returned to 1 or the reconstructed copies split
    /// after coupling. Zero for a correct construction.
    pub violations: usize,
}

pub fn vaserstein_batch(
    chain: &StochasticChain,
    mu1: &Distribution,
    mu2: &Distribution,
    horizon: usize,
    paths: usize,
    seed: SeedSpec,
) -> Result<VasersteinSummary> {
    chain.check_dim(mu1.len())?;
    chain.check_dim(mu2.len())?;
    let n = chain.len();
    let coupling = VasersteinCoupling::new(chain);
    let runs: Vec<VasersteinPath> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.substream(i).rng();
            simulate_with(&coupling, mu1, mu2, horizon, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut decoupled = vec![0.0; horizon + 1];
    let mut marginal1 = vec![vec![0.0; n]; horizon + 1];
    let mut marginal2 = vec![vec![0.0; n]; horizon + 1];
    let mut violations = 0;
    for run in &runs {
        let mut coupled_at = None;
        let mut bad = false;
        for t in 0..=horizon {
            let (a, b) = (run.first[t], run.second[t]);
            if a != b {
                decoupled[t] += 1.0;
            }
            marginal1[t][a] += 1.0;
            marginal2[t][b] += 1.0;
            if run.states[t].zeta == 0 && coupled_at.is_none() {
                coupled_at = Some(t);
            }
            if coupled_at.is_some() && (run.states[t].zeta != 0 || a != b) {
                bad = true;
            }
        }
        if bad {
            violations += 1;
        }
    }
    let m = paths.max(1) as f64;
    decoupled.iter_mut().for_each(|d| *d /= m);
    for row in marginal1.iter_mut().chain(marginal2.iter_mut()) {
        row.iter_mut().for_each(|x| *x /= m);
    }
    Ok(VasersteinSummary { paths, decoupled, marginal1, marginal2, violations })
}

/// The sub-stochastic operator `V h(a, b) = (1 - kappa(a, b)) E h(eta')` on
/// pair states `a * N + b`, where `eta'` is the next residual pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOperator {
    pub states: usize,
    pub matrix: DMatrix<f64>,
}

impl CouplingOperator {
    pub fn new(chain: &StochasticChain) -> Self {
        let n = chain.len();
        let coupling = VasersteinCoupling::new(chain);
        let mut matrix = DMatrix::zeros(n * n, n * n);
        for a in 0..n {
            for b in 0..n {
                let pair = coupling.pair(a, b);
                if pair.is_identical() {
                    continue;
                }
                let weight = 1.0 - pair.kappa();
                for (c, r1) in pair.residual1().iter().enumerate() {
                    if *r1 == 0.0 {
                        continue;
                    }
                    for (d, r2) in pair.residual2().iter().enumerate() {
                        matrix[(a * n + b, c * n + d)] = weight * r1 * r2;
                    }
                }
            }
        }
        CouplingOperator { states: n, matrix }
    }

    /// `V^k 1` for `k = 0..=n`.
    pub fn iterate_ones(&self, n: usize) -> Vec<Vec<f64>> {
        let dim = self.matrix.nrows();
        let mut out = Vec::with_capacity(n + 1);
        let mut v = vec![1.0; dim];
        out.push(v.clone());
        for _ in 0..n {
            v = crate::linalg::mat_vec(&self.matrix, &v);
            out.push(v.clone());
        }
        out
    }
}

/// `(1 - kappa(0)) E prod_{i<n} (1 - kappa(eta_i))` for `n = 0..=n_max`,
/// evaluated exactly as `(1 - kappa(0)) <r1 (x) r2, V^n 1>`.
pub fn coupling_bound_curve(
    chain: &StochasticChain,
    mu1: &Distribution,
    mu2: &Distribution,
    n_max: usize,
) -> Result<Vec<f64>> {
    chain.check_dim(mu1.len())?;
    chain.check_dim(mu2.len())?;
    let init = PairCoupling::new(mu1, mu2)?;
    if init.is_identical() {
        return Ok(vec![0.0; n_max + 1]);
    }
    let n = chain.len();
    let op = CouplingOperator::new(chain);
    let prefactor = 1.0 - init.kappa();
    Ok(op
        .iterate_ones(n_max)
        .into_iter()
        .map(|v| {
            let mut acc = 0.0;
            for (a, r1) in init.residual1().iter().enumerate() {
                for (b, r2) in init.residual2().iter().enumerate() {
                    acc += r1 * r2 * v[a * n + b];
                }
            }
            prefactor * acc
        })
        .collect())
}

pub fn coupling_bound_exact(
    chain: &StochasticChain,
    mu1: &Distribution,
    mu2: &Distribution,
    n: usize,
) -> Result<f64> {
    Ok(coupling_bound_curve(chain, mu1, mu2, n)?[n])
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpectrum {
    /// Spectral radius `r(V)`.
    pub radius: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `||V|| = 1 - kappa`.
    pub norm: f64,
}

impl OperatorSpectrum {
    pub fn within_norm(&self) -> bool {
        self.radius <= self.norm + 1e-10
    }
}

pub const V_TOLERANCE: f64 = 1e-10;
pub const V_MAX_ITER: usize = 100_000;

/// Spectral radius of the coupling operator by shifted power iteration.
pub fn operator_v_spectral(chain: &StochasticChain) -> OperatorSpectrum {
    let op = CouplingOperator::new(chain);
    let norm = max_row_sum(&op.matrix).min(1.0 - kappa(chain)).max(0.0);
    let n = chain.len();
    // rows of diagonal pairs vanish; only the off-diagonal block carries spectrum
    let off: Vec<usize> = (0..n * n).filter(|s| s / n != s % n).collect();
    if off.is_empty() {
        return OperatorSpectrum { radius: 0.0, iterations: 0, converged: true, norm };
    }
    let block = op.matrix.select_rows(&off).select_columns(&off);
    let est = PowerIteration {
        rel_tol: V_TOLERANCE,
        max_iter: V_MAX_ITER,
        shift: max_row_sum(&block),
        require_bracket: false,
    }
    .run(&block);
    OperatorSpectrum {
        radius: est.radius,
        iterations: est.iterations,
        converged: est.converged,
        norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::SeedSpec;

    fn p2() -> StochasticChain {
        StochasticChain::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
    }

    fn d(w: &[f64]) -> Distribution {
        Distribution::new(w.to_vec()).unwrap()
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(overlap(&d(&[0.3, 0.7]), &d(&[0.3, 0.7])).unwrap(), 1.0);
        assert_eq!(overlap(&Distribution::point(2, 0), &Distribution::point(2, 1)).unwrap(), 0.0);
        assert!((overlap(&d(&[0.7, 0.3]), &d(&[0.4, 0.6])).unwrap() - 0.7).abs() < 1e-15);
        assert!(overlap(&d(&[1.0]), &d(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn singular_pairs_are_rejected() {
        let mut rng = SeedSpec::new(0, 0).rng();
        let a = d(&[1.0, 0.0]);
        let b = d(&[0.0, 1.0]);
        assert_eq!(couple_three(&a, &b, &mut rng), Err(ErgoError::SingularPair));
        assert_eq!(couple_two(&a, &b, &mut rng), Err(ErgoError::SingularPair));
    }

    #[test]
    fn identical_laws_always_couple() {
        let mut rng = SeedSpec::new(1, 0).rng();
        let p = d(&[0.5, 0.5]);
        for _ in 0..100 {
            let s = couple_three(&p, &p, &mut rng).unwrap();
            assert!(s.coupled && s.first == s.second);
            let s = couple_two(&p, &p, &mut rng).unwrap();
            assert!(s.coupled && s.first == s.second);
        }
    }

    #[test]
    fn residual_densities_by_hand() {
        let c = PairCoupling::new(&d(&[0.7, 0.3]), &d(&[0.4, 0.6])).unwrap();
        assert_eq!(c.residual1(), &[1.0, 0.0]);
        assert_eq!(c.residual2(), &[0.0, 1.0]);
        let common = c.common().unwrap();
        assert!((common[0] - 0.4 / 0.7).abs() < 1e-15 && (common[1] - 0.3 / 0.7).abs() < 1e-15);
    }

    #[test]
    fn simple_tail_examples() {
        let t = simple_coupling_tail(&p2(), 0, 1, 100).unwrap();
        assert_eq!(t.tail[0], 1.0);
        assert!((t.tail[1] - 0.74).abs() < 1e-15);
        assert!((t.bound[1] - 0.9).abs() < 1e-15);
        assert!(t.holds());
        assert!(simple_coupling_tail(&p2(), 1, 1, 3).is_err());

        let row = vec![0.2, 0.3, 0.5];
        let iid = StochasticChain::from_rows(&[row.clone(), row.clone(), row.clone()]).unwrap();
        let meet: f64 = row.iter().map(|p| p * p).sum();
        let t = simple_coupling_tail(&iid, 0, 2, 30).unwrap();
        for (n, v) in t.tail.iter().enumerate() {
            assert!((v - (1.0 - meet).powi(n as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn vaserstein_degenerate_starts() {
        let chain = p2();
        let coupling = VasersteinCoupling::new(&chain);
        let mut rng = SeedSpec::new(3, 0).rng();
        let s = coupling.start(&Distribution::point(2, 0), &Distribution::point(2, 1), &mut rng).unwrap();
        assert_eq!((s.eta1, s.eta2, s.xi, s.zeta), (0, 1, 0, 1));

        let mu = d(&[0.25, 0.75]);
        let path = vaserstein_simulate(&chain, &mu, &mu, 10, &mut rng).unwrap();
        assert_eq!(path.states[0].zeta, 0);
        assert_eq!(path.first, path.second);
    }

    #[test]
    fn exact_bound_examples() {
        let chain = p2();
        let a = Distribution::point(2, 0);
        let b = Distribution::point(2, 1);
        let curve = coupling_bound_curve(&chain, &a, &b, 30).unwrap();
        for (n, v) in curve.iter().enumerate() {
            assert!((v - 0.7_f64.powi(n as i32)).abs() < 1e-12);
        }
        let mu = d(&[0.4, 0.6]);
        let nu = d(&[0.7, 0.3]);
        assert!((coupling_bound_exact(&chain, &mu, &nu, 0).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(coupling_bound_exact(&chain, &mu, &mu, 5).unwrap(), 0.0);
    }

    #[test]
    fn operator_spectrum_examples() {
        let s = operator_v_spectral(&p2());
        assert!((s.radius - 0.7).abs() < 1e-10, "{s:?}");
        assert!(s.within_norm());

        let row = vec![0.1, 0.6, 0.3];
        let iid = StochasticChain::from_rows(&[row.clone(), row.clone(), row]).unwrap();
        let s = operator_v_spectral(&iid);
        assert!(s.radius < 1e-12);
    }

    #[test]
    fn operator_rows_are_substochastic() {
        let chain = StochasticChain::from_rows(&[
            vec![0.5, 0.3, 0.2],
            vec![0.1, 0.1, 0.8],
            vec![0.3, 0.3, 0.4],
        ])
        .unwrap();
        let op = CouplingOperator::new(&chain);
        let kap = pairwise_md(&chain);
        for a in 0..3 {
            for b in 0..3 {
                let s: f64 = op.matrix.row(a * 3 + b).iter().sum();
                assert!((s - (1.0 - kap[(a, b)])).abs() < 1e-14);
                if a == b {
                    assert_eq!(s, 0.0);
                }
            }
        }
    }
}
