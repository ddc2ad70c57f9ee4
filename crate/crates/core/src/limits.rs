//! Autocovariances, the asymptotic variance of additive functionals, and
//! Monte Carlo LLN/CLT experiments.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::chain::{Distribution, Observable, StochasticChain};
use crate::ergodicity::{kappa, stationary};
use crate::error::{ErgoError, Result};
use crate::linalg;
use crate::mc::{sample_index, Sampler, SeedSpec};

/// `|<f, mu>|` above this is "not centered".
pub const CENTERING_TOLERANCE: f64 = 1e-10;

/// `f - <f, mu>`.
pub fn center(f: &Observable, mu: &Distribution) -> Result<Observable> {
    let mean = mu.expect(f)?;
    let mut values: Vec<f64> = f.values().iter().map(|v| v - mean).collect();
    // a second pass removes the rounding left by the first
    let residual = linalg::dot(mu.weights(), &values);
    values.iter_mut().for_each(|v| *v -= residual);
    Observable::new(values)
}

/// Stationary autocovariance `sum_i mu_i f_i (P^k f)_i` of a centered `f`.
pub fn autocovariance(chain: &StochasticChain, f: &Observable, k: usize) -> Result<f64> {
    chain.check_dim(f.len())?;
    let mu = stationary(chain)?;
    let mean = mu.expect(f)?;
    if mean.abs() > CENTERING_TOLERANCE {
        return Err(ErgoError::NotCentered { mean });
    }
    Ok(autocovariances(chain, &mu, f, k)[k])
}

/// Autocovariances at lags `0..=k_max`.
fn autocovariances(chain: &StochasticChain, mu: &Distribution, f: &Observable, k_max: usize) -> Vec<f64> {
    let weighted: Vec<f64> = mu.weights().iter().zip(f.values()).map(|(m, v)| m * v).collect();
    let mut pk = f.values().to_vec();
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k > 0 {
            pk = chain.apply(&pk);
        }
        out.push(linalg::dot(&weighted, &pk));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub sigma2: f64,
    /// Last lag included in the truncated series.
    pub truncation_n: usize,
    /// Bound on the neglected part of the series.
    pub tail_bound: f64,
    pub stationary_mean: f64,
}

pub const DEFAULT_VARIANCE_TOLERANCE: f64 = 1e-12;

/// `sigma^2 = C(0) + 2 sum_{k>=1} C(k)` for the centered version of `f`.
///
/// The series is cut at the first `K` with
/// `2 ||f||_inf osc(f) (1 - kappa)^{K+1} / kappa < tol`, which bounds the
/// neglected lags through `|C(k)| <= ||f||_inf osc(f) (1 - kappa)^k`.
pub fn asymptotic_variance(chain: &StochasticChain, f: &Observable, tol: f64) -> Result<VarianceReport> {
    chain.check_dim(f.len())?;
    let k = kappa(chain);
    if k <= 0.0 {
        return Err(ErgoError::VacuousBound);
    }
    let mu = stationary(chain)?;
    let stationary_mean = mu.expect(f)?;
    let fc = center(f, &mu)?;
    let scale = fc.sup_norm() * fc.oscillation();
    let tail_after = |last: usize| 2.0 * scale * (1.0 - k).powi(last as i32 + 1) / k;
    let mut truncation_n = 0usize;
    while tail_after(truncation_n) >= tol && scale > 0.0 {
        truncation_n += 1;
    }
    let cov = autocovariances(chain, &mu, &fc, truncation_n);
    let sigma2 = cov[0] + 2.0 * cov[1..].iter().sum::<f64>();
    let sigma2 = if (-1e-10..0.0).contains(&sigma2) { 0.0 } else { sigma2 };
    Ok(VarianceReport {
        sigma2,
        truncation_n,
        tail_bound: if scale > 0.0 { tail_after(truncation_n) } else { 0.0 },
        stationary_mean,
    })
}

/// `n^{-1} E_inv (sum_{r<n} f_c(X_r))^2`, exactly from autocovariances.
pub fn finite_n_variance(chain: &StochasticChain, f: &Observable, n: usize) -> Result<f64> {
    chain.check_dim(f.len())?;
    if n == 0 {
        return Err(ErgoError::InvalidArgument("n must be positive".into()));
    }
    let mu = stationary(chain)?;
    let fc = center(f, &mu)?;
    let cov = autocovariances(chain, &mu, &fc, n - 1);
    let nf = n as f64;
    let cross: f64 = (1..n).map(|r| (nf - r as f64) * cov[r]).sum();
    Ok(cov[0] + 2.0 * cross / nf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentMode {
    /// Samples of `n^{-1} sum_{k<n} f(X_k)`.
    Mean,
    /// Samples of `n^{-1/2} sum_{k<n} (f(X_k) - E_inv f)`.
    Clt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub mode: ExperimentMode,
    pub samples: Vec<f64>,
    pub stationary_mean: f64,
    /// Mean mode: `max |sample - E_inv f|`. CLT mode: Kolmogorov-Smirnov
    /// distance to `N(0, sigma^2)`.
    pub statistic: f64,
    pub sigma2: Option<f64>,
}

/// Runs `m` independent replicas of length `n`, replica `i` on substream `i`.
pub fn lln_clt_experiment(
    chain: &StochasticChain,
    f: &Observable,
    n: usize,
    m: usize,
    mode: ExperimentMode,
    init: &Distribution,
    seed: SeedSpec,
) -> Result<ExperimentResult> {
    chain.check_dim(f.len())?;
    chain.check_dim(init.len())?;
    if n == 0 || m == 0 {
        return Err(ErgoError::InvalidArgument("n and m must be positive".into()));
    }
    let mu = stationary(chain)?;
    let stationary_mean = mu.expect(f)?;
    let sigma2 = match mode {
        ExperimentMode::Mean => None,
        ExperimentMode::Clt => Some(asymptotic_variance(chain, f, DEFAULT_VARIANCE_TOLERANCE)?.sigma2),
    };
    let sampler = Sampler::new(chain);
    let values = f.values();
    let samples: Vec<f64> = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.substream(i).rng();
            let mut x = sample_index(init.weights(), &mut rng);
            let mut sum = 0.0;
            for step in 0..n {
                if step > 0 {
                    x = sampler.step(x, &mut rng);
                }
                sum += match mode {
                    ExperimentMode::Mean => values[x],
                    ExperimentMode::Clt => values[x] - stationary_mean,
                };
            }
            match mode {
                ExperimentMode::Mean => sum / n as f64,
                ExperimentMode::Clt => sum / (n as f64).sqrt(),
            }
        })
        .collect();
    let statistic = match mode {
        ExperimentMode::Mean => samples
            .iter()
            .map(|s| (s - stationary_mean).abs())
            .fold(0.0, f64::max),
        ExperimentMode::Clt => ks_distance_normal(&samples, sigma2.unwrap_or(0.0)),
    };
    Ok(ExperimentResult { mode, samples, stationary_mean, statistic, sigma2 })
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and
/// `N(0, variance)`; a zero variance means the point mass at 0.
pub fn ks_distance_normal(samples: &[f64], variance: f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = sorted.len() as f64;
    let cdf: Box<dyn Fn(f64) -> f64> = if variance > 0.0 {
        let normal = Normal::new(0.0, variance.sqrt()).expect("positive variance");
        Box::new(move |x| normal.cdf(x))
    } else {
        Box::new(|x| if x >= 0.0 { 1.0 } else { 0.0 })
    };
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // ties: step over equal values at once
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        // left limit of the theoretical CDF differs from f only at atoms
        let f_left = if variance > 0.0 { f } else if x > 0.0 { 1.0 } else { 0.0 };
        d = d.max((j as f64 / m - f).abs()).max((f_left - i as f64 / m).abs());
        i = j;
    }
    d
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
    fn centering_examples() {
        let mu = Distribution::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!(center(&obs(&[5.0, 5.0]), &mu).unwrap().sup_norm() < 1e-15);
        let f = center(&obs(&[1.0, -2.0]), &mu).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-15 && (f[1] + 2.0).abs() < 1e-15);
        let half = Distribution::uniform(2);
        assert_eq!(center(&obs(&[1.0, 0.0]), &half).unwrap().values(), &[0.5, -0.5]);
    }

    #[test]
    fn autocovariance_is_geometric_on_p2() {
        let f = obs(&[1.0, -2.0]);
        for k in 0..20 {
            let c = autocovariance(&p2(), &f, k).unwrap();
            assert!((c - 2.0 * 0.7_f64.powi(k as i32)).abs() < 1e-13, "lag {k}");
        }
        assert!(matches!(
            autocovariance(&p2(), &obs(&[1.0, 1.0]), 0),
            Err(ErgoError::NotCentered { .. })
        ));
    }

    #[test]
    fn variance_examples() {
        let rep = asymptotic_variance(&p2(), &obs(&[1.0, -2.0]), 1e-12).unwrap();
        assert!((rep.sigma2 - 34.0 / 3.0).abs() < 1e-9);
        assert!(rep.tail_bound < 1e-12);
        assert_eq!(asymptotic_variance(&p2(), &obs(&[3.0, 3.0]), 1e-12).unwrap().sigma2, 0.0);

        let row = vec![0.2, 0.5, 0.3];
        let iid = StochasticChain::from_rows(&[row.clone(), row.clone(), row.clone()]).unwrap();
        let f = obs(&[1.0, 4.0, -2.0]);
        let mean: f64 = row.iter().zip(f.values()).map(|(p, v)| p * v).sum();
        let var: f64 = row.iter().zip(f.values()).map(|(p, v)| p * (v - mean).powi(2)).sum();
        let rep = asymptotic_variance(&iid, &f, 1e-12).unwrap();
        assert!((rep.sigma2 - var).abs() < 1e-12);

        let swap = StochasticChain::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(asymptotic_variance(&swap, &f.clone(), 1e-12).unwrap_err(), ErgoError::DimensionMismatch { expected: 2, found: 3 });
        assert_eq!(asymptotic_variance(&swap, &obs(&[1.0, 0.0]), 1e-12).unwrap_err(), ErgoError::VacuousBound);
    }

    #[test]
    fn constant_observable_means_are_exact() {
        let r = lln_clt_experiment(
            &p2(),
            &obs(&[2.5, 2.5]),
            50,
            20,
            ExperimentMode::Mean,
            &Distribution::point(2, 0),
            SeedSpec::new(1, 0),
        )
        .unwrap();
        assert!(r.samples.iter().all(|s| (*s - 2.5).abs() < 1e-14));
    }

    #[test]
    fn zero_observable_gives_degenerate_clt() {
        let r = lln_clt_experiment(
            &p2(),
            &obs(&[0.0, 0.0]),
            50,
            20,
            ExperimentMode::Clt,
            &Distribution::point(2, 0),
            SeedSpec::new(1, 0),
        )
        .unwrap();
        assert!(r.samples.iter().all(|s| *s == 0.0));
        assert_eq!(r.sigma2, Some(0.0));
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn ks_against_known_cases() {
        assert_eq!(ks_distance_normal(&[1.0], 0.0), 1.0);
        // a single sample at the median: distance 1/2
        assert!((ks_distance_normal(&[0.0], 1.0) - 0.5).abs() < 1e-15);
    }
}
