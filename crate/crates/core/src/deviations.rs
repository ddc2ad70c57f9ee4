//! Tilted transfer operators, the limit log-moment function `H(beta)`, its
//! Legendre transform, and exact large-deviation tails.

use nalgebra::DMatrix;

use crate::chain::{Observable, StochasticChain};
use crate::error::{ErgoError, Result};
use crate::linalg;
use crate::spectral::PowerIteration;

/// `diag(exp(beta f)) P`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedOperator {
    pub beta: f64,
    pub matrix: DMatrix<f64>,
}

pub fn tilted_operator(chain: &StochasticChain, f: &Observable, beta: f64) -> Result<TiltedOperator> {
    chain.check_dim(f.len())?;
    let mut matrix = chain.matrix().clone();
    for i in 0..chain.len() {
        let w = (beta * f[i]).exp();
        matrix.row_mut(i).iter_mut().for_each(|x| *x *= w);
    }
    Ok(TiltedOperator { beta, matrix })
}

impl TiltedOperator {
    /// `(T^beta)^n 1`.
    pub fn power_on_ones(&self, n: usize) -> Vec<f64> {
        let mut v = vec![1.0; self.matrix.nrows()];
        for _ in 0..n {
            v = linalg::mat_vec(&self.matrix, &v);
        }
        v
    }
}

/// Some power `P^k`, `k <= N^2`, is strictly positive.
pub fn is_primitive(chain: &StochasticChain) -> bool {
    let n = chain.len();
    let target = (n - 1) * (n - 1) + 1;
    let mut pattern: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| chain.p(i, j) > 0.0).collect())
        .collect();
    // primitive patterns stay positive past the exponent; square up to it
    let mut power = 1usize;
    while power < target {
        let mut next = vec![vec![false; n]; n];
        for i in 0..n {
            for k in 0..n {
                if pattern[i][k] {
                    for j in 0..n {
                        next[i][j] |= pattern[k][j];
                    }
                }
            }
        }
        pattern = next;
        power *= 2;
    }
    pattern.iter().all(|row| row.iter().all(|b| *b))
}

pub const CGF_TOLERANCE: f64 = 1e-12;

/// Evaluates `H(beta) = ln r(T^beta)` for a fixed chain and observable.
#[derive(Debug, Clone)]
pub struct CgfEvaluator {
    chain: StochasticChain,
    f: Observable,
    f_max: f64,
    f_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgfValue {
    pub h: f64,
    /// Perron eigenvector of `T^beta`, sup-normalized.
    pub eigenvector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl CgfEvaluator {
    pub fn new(chain: &StochasticChain, f: &Observable) -> Result<Self> {
        chain.check_dim(f.len())?;
        if !is_primitive(chain) {
            let n = chain.len();
            return Err(ErgoError::NotPrimitive { max_power: n * n });
        }
        let f_max = f.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let f_min = f.values().iter().copied().fold(f64::INFINITY, f64::min);
        Ok(CgfEvaluator { chain: chain.clone(), f: f.clone(), f_max, f_min })
    }

    pub fn observable(&self) -> &Observable {
        &self.f
    }

    pub fn chain(&self) -> &StochasticChain {
        &self.chain
    }

    pub fn range(&self) -> (f64, f64) {
        (self.f_min, self.f_max)
    }

    pub fn evaluate(&self, beta: f64) -> CgfValue {
        // factor out exp(beta * f_ref) so the largest row weight is 1
        let reference = if beta >= 0.0 { self.f_max } else { self.f_min };
        let mut m = self.chain.matrix().clone();
        for i in 0..self.chain.len() {
            let w = (beta * (self.f[i] - reference)).exp();
            m.row_mut(i).iter_mut().for_each(|x| *x *= w);
        }
        let est = PowerIteration::primitive(CGF_TOLERANCE).run(&m);
        CgfValue {
            h: est.radius.ln() + beta * reference,
            eigenvector: est.vector,
            iterations: est.iterations,
            converged: est.converged,
        }
    }

    pub fn h(&self, beta: f64) -> f64 {
        self.evaluate(beta).h
    }

    /// `n^{-1} ln E_x exp(beta sum_{k<n} f(X_k))`, computed exactly with rescaling.
    pub fn finite_n(&self, beta: f64, n: usize, x: usize) -> f64 {
        let size = self.chain.len();
        let weights: Vec<f64> = (0..size).map(|i| (beta * self.f[i]).exp()).collect();
        let mut v = vec![1.0; size];
        let mut log_scale = 0.0;
        for _ in 0..n {
            let pv = self.chain.apply(&v);
            v = pv.iter().zip(&weights).map(|(a, w)| a * w).collect();
            let s = linalg::sup_norm(&v);
            v.iter_mut().for_each(|a| *a /= s);
            log_scale += s.ln();
        }
        (log_scale + v[x].ln()) / n as f64
    }
}

pub fn scaled_cgf(chain: &StochasticChain, f: &Observable, beta: f64) -> Result<f64> {
    Ok(CgfEvaluator::new(chain, f)?.h(beta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreValue {
    pub l: f64,
    pub l_tilde: f64,
    /// Maximizing `beta` for `L(alpha)`.
    pub beta_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreOptions {
    pub beta_min: f64,
    pub beta_max: f64,
    pub points: usize,
    /// The grid is extended up to `|beta| <= beta_cap` when the maximizer sits on its edge.
    pub beta_cap: f64,
    pub delta0: f64,
    pub beta_tol: f64,
}

impl Default for LegendreOptions {
    fn default() -> Self {
        LegendreOptions {
            beta_min: -4.0,
            beta_max: 4.0,
            points: 81,
            beta_cap: 256.0,
            delta0: 1e-3,
            beta_tol: 1e-10,
        }
    }
}

/// `L(alpha) = sup_beta (alpha beta - H(beta))` by grid search plus
/// golden-section refinement, together with `L~(alpha)`: `L` evaluated
/// `delta0` closer to the stationary mean `H'(0)`, and never past it.
pub fn legendre(eval: &CgfEvaluator, alpha: f64, opts: &LegendreOptions) -> Result<LegendreValue> {
    let (l, beta_star) = legendre_sup(eval, alpha, opts)?;
    let mean = crate::ergodicity::stationary(eval.chain())?.expect(eval.observable())?;
    let l_tilde = if alpha - opts.delta0 > mean {
        legendre_sup(eval, alpha - opts.delta0, opts)?.0
    } else if alpha + opts.delta0 < mean {
        legendre_sup(eval, alpha + opts.delta0, opts)?.0
    } else {
        0.0
    };
    Ok(LegendreValue { l, l_tilde, beta_star })
}

fn legendre_sup(eval: &CgfEvaluator, alpha: f64, opts: &LegendreOptions) -> Result<(f64, f64)> {
    if opts.points < 3 || opts.beta_min >= opts.beta_max {
        return Err(ErgoError::InvalidArgument("beta grid needs >= 3 increasing points".into()));
    }
    let objective = |b: f64| alpha * b - eval.h(b);
    let (mut lo, mut hi) = (opts.beta_min, opts.beta_max);
    loop {
        let step = (hi - lo) / (opts.points - 1) as f64;
        let grid: Vec<f64> = (0..opts.points).map(|i| lo + step * i as f64).collect();
        let values: Vec<f64> = grid.iter().map(|b| objective(*b)).collect();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tie = 1e-12 * (1.0 + best.abs());
        let last = values.len() - 1;
        let mut idx = values.iter().position(|v| *v == best).unwrap_or(0);
        if idx == 0 || idx == last {
            if let Some(inner) = (1..last).find(|i| values[*i] >= best - tie) {
                idx = inner;
            }
        }
        if idx == 0 || idx == last {
            let width = hi - lo;
            if idx == 0 {
                if lo <= -opts.beta_cap {
                    return Err(ErgoError::BracketFailure { alpha, beta_cap: opts.beta_cap });
                }
                lo = (lo - width).max(-opts.beta_cap);
            } else {
                if hi >= opts.beta_cap {
                    return Err(ErgoError::BracketFailure { alpha, beta_cap: opts.beta_cap });
                }
                hi = (hi + width).min(opts.beta_cap);
            }
            continue;
        }
        let (beta, value) = golden_max(&objective, grid[idx - 1], grid[idx + 1], opts.beta_tol);
        let value = value.max(values[idx]);
        return Ok((value.max(0.0), beta));
    }
}

fn golden_max<F: Fn(f64) -> f64>(g: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    while (b - a).abs() > tol {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, g(x))
}

/// Tabulated `H` and its Legendre transform.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunctionTable {
    pub beta_grid: Vec<f64>,
    pub h_values: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub l_values: Vec<f64>,
}

impl RateFunctionTable {
    /// Minimum discrete second difference of `H` (non-negative up to rounding for convex `H`).
    pub fn min_second_difference(&self) -> f64 {
        self.h_values
            .windows(3)
            .map(|w| w[0] - 2.0 * w[1] + w[2])
            .fold(f64::INFINITY, f64::min)
    }
}

/// `H` on `points` equally spaced values of `beta`; `L` at the slopes
/// `alpha_i = H'(beta_i)` of the interior grid points.
pub fn rate_function_table(
    eval: &CgfEvaluator,
    beta_min: f64,
    beta_max: f64,
    points: usize,
) -> Result<RateFunctionTable> {
    if points < 3 || beta_min >= beta_max {
        return Err(ErgoError::InvalidArgument("beta grid needs >= 3 increasing points".into()));
    }
    let step = (beta_max - beta_min) / (points - 1) as f64;
    let beta_grid: Vec<f64> = (0..points).map(|i| beta_min + step * i as f64).collect();
    let h_values: Vec<f64> = beta_grid.iter().map(|b| eval.h(*b)).collect();
    let alpha_grid: Vec<f64> = (1..points - 1)
        .map(|i| (h_values[i + 1] - h_values[i - 1]) / (2.0 * step))
        .collect();
    let opts = LegendreOptions { beta_min, beta_max, points, ..Default::default() };
    let l_values = alpha_grid
        .iter()
        .map(|a| legendre_sup(eval, *a, &opts).map(|(l, _)| l))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateFunctionTable { beta_grid, h_values, alpha_grid, l_values })
}

/// Cell budget of the exact tail table.
pub const MAX_TABLE_CELLS: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdTailOptions {
    /// Observable values are rounded to multiples of `1 / denominator`.
    pub denominator: f64,
    pub legendre: LegendreOptions,
}

impl Default for LdTailOptions {
    fn default() -> Self {
        LdTailOptions { denominator: 1e3, legendre: LegendreOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdTail {
    /// `P_x(n^{-1} sum_{k<n} f(X_k) >= epsilon)` for the rounded observable.
    pub probability: f64,
    /// `n^{-1} ln probability` (`-inf` when the event is impossible).
    pub log_tail_rate: f64,
    pub l: f64,
    pub l_tilde: f64,
    /// `-L~(epsilon)`.
    pub bound: f64,
    /// `max(0, n^{-1} ln (T^b)^n 1(x) - H(b))` at the maximizer `b` of
    /// `L(epsilon)`: the exact finite-`n` excess of the exponential
    /// Chebyshev bound over its limit.
    pub finite_n_slack: f64,
    pub table_cells: u128,
}

impl LdTail {
    /// `log_tail_rate <= bound + finite_n_slack` (up to rounding).
    pub fn holds(&self) -> bool {
        self.log_tail_rate <= self.bound + self.finite_n_slack + 1e-9
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

pub fn ld_tail_exact(
    chain: &StochasticChain,
    f: &Observable,
    epsilon: f64,
    n: usize,
    init: usize,
    opts: &LdTailOptions,
) -> Result<LdTail> {
    chain.check_dim(f.len())?;
    chain.check_state(init)?;
    if n == 0 {
        return Err(ErgoError::InvalidArgument("n must be positive".into()));
    }
    let d = opts.denominator;
    let scaled: Vec<i64> = f.values().iter().map(|v| (v * d).round() as i64).collect();
    let g = scaled.iter().fold(0i64, |acc, v| gcd(acc, *v)).max(1);
    let reduced: Vec<i64> = scaled.iter().map(|v| v / g).collect();
    let r_min = *reduced.iter().min().unwrap();
    let r_max = *reduced.iter().max().unwrap();
    let nn = n as i64;
    let lo = (nn * r_min).min(0);
    let hi = (nn * r_max).max(0);
    let width = (hi - lo + 1) as usize;
    let size = chain.len();
    let table_cells = size as u128 * width as u128;
    if table_cells > MAX_TABLE_CELLS {
        return Err(ErgoError::TableTooLarge { cells: table_cells, limit: MAX_TABLE_CELLS });
    }

    // sum of scaled values >= n * epsilon * D, rounded up on the integer lattice
    let target = n as f64 * epsilon * d;
    let target_int = (target - 1e-9 * target.abs().max(1.0)).ceil() as i64;
    let threshold = target_int.div_euclid(g) + i64::from(target_int.rem_euclid(g) != 0);

    let probability = if threshold > nn * r_max {
        0.0
    } else if threshold <= nn * r_min {
        1.0
    } else {
        let mut dist = vec![vec![0.0f64; width]; size];
        dist[init][(reduced[init] - lo) as usize] = 1.0;
        for _ in 1..n {
            let mut next = vec![vec![0.0f64; width]; size];
            for (x, row) in dist.iter().enumerate() {
                for (y, target_row) in next.iter_mut().enumerate() {
                    let p = chain.p(x, y);
                    if p == 0.0 {
                        continue;
                    }
                    let shift = reduced[y];
                    for (s, mass) in row.iter().enumerate() {
                        if *mass != 0.0 {
                            target_row[(s as i64 + shift) as usize] += mass * p;
                        }
                    }
                }
            }
            dist = next;
        }
        let start = (threshold - lo).max(0) as usize;
        dist.iter().map(|row| row[start.min(width)..].iter().sum::<f64>()).sum()
    };
    let log_tail_rate = if probability > 0.0 {
        probability.min(1.0).ln() / n as f64
    } else {
        f64::NEG_INFINITY
    };

    // Upper-tail transform: sup over beta >= 0, which is L itself above the
    // stationary mean and zero at or below it.
    let eval = CgfEvaluator::new(chain, f)?;
    let mean = crate::ergodicity::stationary(chain)?.expect(f)?;
    let (l, l_tilde, finite_n_slack) = if probability == 0.0 {
        (f64::INFINITY, f64::INFINITY, 0.0)
    } else if epsilon <= mean {
        (0.0, 0.0, 0.0)
    } else {
        let lv = legendre_sup(&eval, epsilon, &opts.legendre)?;
        let l_tilde = if epsilon - opts.legendre.delta0 <= mean {
            0.0
        } else {
            legendre_sup(&eval, epsilon - opts.legendre.delta0, &opts.legendre)?.0
        };
        let slack = (eval.finite_n(lv.1, n, init) - eval.h(lv.1)).max(0.0);
        (lv.0, l_tilde, slack)
    };
    Ok(LdTail {
        probability,
        log_tail_rate,
        l,
        l_tilde,
        bound: -l_tilde,
        finite_n_slack,
        table_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> StochasticChain {
        StochasticChain::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
    }

    fn obs(v: &[f64]) -> Observable {
        Observable::new(v.to_vec()).unwrap()
    }

    #[test]
    fn tilted_operator_examples() {
        let f = obs(&[1.0, -2.0]);
        assert_eq!(tilted_operator(&p2(), &f, 0.0).unwrap().matrix, *p2().matrix());
        let t = tilted_operator(&p2(), &f, 1.0).unwrap();
        let e = 1.0_f64.exp();
        let expected = [0.9 * e, 0.1 * e, 0.2 / (e * e), 0.8 / (e * e)];
        for (a, b) in t.matrix.transpose().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        let c = tilted_operator(&p2(), &obs(&[0.5, 0.5]), 2.0).unwrap();
        let scaled = p2().matrix() * 1.0_f64.exp();
        assert!((c.matrix - scaled).abs().max() < 1e-14);
    }

    #[test]
    fn cgf_examples() {
        let f = obs(&[1.0, -2.0]);
        assert!(scaled_cgf(&p2(), &f, 0.0).unwrap().abs() < 1e-12);
        let c = obs(&[0.7, 0.7]);
        for beta in [-3.0, -0.5, 0.25, 2.0] {
            assert!((scaled_cgf(&p2(), &c, beta).unwrap() - 0.7 * beta).abs() < 1e-12);
        }
        let h = 1e-3;
        let eval = CgfEvaluator::new(&p2(), &f).unwrap();
        let d1 = (eval.h(h) - eval.h(-h)) / (2.0 * h);
        let d2 = (eval.h(h) - 2.0 * eval.h(0.0) + eval.h(-h)) / (h * h);
        assert!(d1.abs() < 1e-3);
        assert!((d2 - 34.0 / 3.0).abs() < 1e-3, "{d2}");
    }

    #[test]
    fn non_primitive_chains_are_rejected() {
        let swap = StochasticChain::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            scaled_cgf(&swap, &obs(&[1.0, 0.0]), 0.1),
            Err(ErgoError::NotPrimitive { .. })
        ));
        let lazy = StochasticChain::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        assert!(is_primitive(&lazy));
    }

    #[test]
    fn legendre_examples() {
        let eval = CgfEvaluator::new(&p2(), &obs(&[1.0, -2.0])).unwrap();
        let opts = LegendreOptions::default();
        let at_mean = legendre(&eval, 0.0, &opts).unwrap();
        assert!(at_mean.l.abs() < 1e-12 && at_mean.beta_star.abs() < 1e-6, "{at_mean:?}");
        let v = legendre(&eval, 0.3, &opts).unwrap();
        assert!(v.l > 0.0 && v.l_tilde <= v.l);

        let flat = CgfEvaluator::new(&p2(), &obs(&[0.5, 0.5])).unwrap();
        assert!(legendre(&flat, 0.5, &opts).unwrap().l.abs() < 1e-12);
        assert!(matches!(legendre(&flat, 0.7, &opts), Err(ErgoError::BracketFailure { .. })));
    }

    #[test]
    fn tail_edge_cases() {
        let f = obs(&[1.0, -2.0]);
        let opts = LdTailOptions::default();
        let none = ld_tail_exact(&p2(), &f, 1.5, 50, 0, &opts).unwrap();
        assert_eq!(none.probability, 0.0);
        assert_eq!(none.log_tail_rate, f64::NEG_INFINITY);
        assert!(none.holds());
        let sure = ld_tail_exact(&p2(), &f, -2.0, 50, 0, &opts).unwrap();
        assert_eq!(sure.probability, 1.0);
        assert_eq!(sure.log_tail_rate, 0.0);
        assert_eq!(sure.l_tilde, 0.0);
        assert!(sure.holds());
    }

    #[test]
    fn tail_dp_matches_enumeration_for_short_paths() {
        let chain = StochasticChain::from_rows(&[
            vec![0.5, 0.3, 0.2],
            vec![0.1, 0.6, 0.3],
            vec![0.3, 0.3, 0.4],
        ])
        .unwrap();
        let f = obs(&[0.25, -0.5, 1.0]);
        let (n, eps, x0) = (6usize, 0.2, 1usize);
        let mut brute = 0.0;
        let total = 3usize.pow(n as u32 - 1);
        for code in 0..total {
            let mut c = code;
            let mut path = vec![x0];
            for _ in 1..n {
                path.push(c % 3);
                c /= 3;
            }
            let p: f64 = path.windows(2).map(|w| chain.p(w[0], w[1])).product();
            let s: f64 = path.iter().map(|x| f[*x]).sum();
            if s / n as f64 >= eps - 1e-12 {
                brute += p;
            }
        }
        let t = ld_tail_exact(&chain, &f, eps, n, x0, &LdTailOptions::default()).unwrap();
        assert!((t.probability - brute).abs() < 1e-14, "{} vs {brute}", t.probability);
    }
}
