//! Seeded trajectory simulation and Monte Carlo estimation.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed, with the
//! stream id selecting the ChaCha stream. Batches derive one stream per path,
//! so results do not depend on how work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{Distribution, StochasticChain};
use crate::error::{ErgoError, Result};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedSpec { master_seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// The `index`-th child stream, used for per-path or per-replica work.
    pub fn substream(&self, index: u64) -> SeedSpec {
        SeedSpec {
            master_seed: self.master_seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Inverse-CDF sampling over the fixed state order.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    inverse_cdf(weights, u)
}

fn inverse_cdf(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Cumulative row tables for fast repeated sampling from a chain.
#[derive(Debug, Clone)]
pub struct Sampler {
    cumulative: Vec<Vec<f64>>,
    last_positive: Vec<usize>,
}

impl Sampler {
    pub fn new(chain: &StochasticChain) -> Self {
        let n = chain.len();
        let mut cumulative = Vec::with_capacity(n);
        let mut last_positive = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = 0.0;
            let mut last = 0;
            let row: Vec<f64> = (0..n)
                .map(|j| {
                    let p = chain.p(i, j);
                    if p > 0.0 {
                        last = j;
                    }
                    acc += p;
                    acc
                })
                .collect();
            cumulative.push(row);
            last_positive.push(last);
        }
        Sampler { cumulative, last_positive }
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let row = &self.cumulative[state];
        // first j with cum_j > u; zero-probability states never win
        let j = row.partition_point(|c| *c <= u);
        if j >= row.len() {
            self.last_positive[state]
        } else {
            j
        }
    }
}

/// Draws `X_0 ~ init` followed by `n` transitions.
pub fn sample_path(
    chain: &StochasticChain,
    init: &Distribution,
    n: usize,
    seed: SeedSpec,
) -> Result<Vec<usize>> {
    chain.check_dim(init.len())?;
    let sampler = Sampler::new(chain);
    let mut rng = seed.rng();
    Ok(path_with(&sampler, init, n, &mut rng))
}

pub(crate) fn path_with<R: Rng + ?Sized>(
    sampler: &Sampler,
    init: &Distribution,
    n: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut path = Vec::with_capacity(n + 1);
    let mut x = sample_index(init.weights(), rng);
    path.push(x);
    for _ in 0..n {
        x = sampler.step(x, rng);
        path.push(x);
    }
    path
}

/// `M` simulated paths of common length, one seeded substream per path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub paths: Vec<Vec<usize>>,
    pub init: Distribution,
}

impl PathBatch {
    pub fn simulate(
        chain: &StochasticChain,
        init: &Distribution,
        n: usize,
        m: usize,
        seed: SeedSpec,
    ) -> Result<Self> {
        chain.check_dim(init.len())?;
        let sampler = Sampler::new(chain);
        let paths = (0..m as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = seed.substream(i).rng();
                path_with(&sampler, init, n, &mut rng)
            })
            .collect();
        Ok(PathBatch { paths, init: init.clone() })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Empirical law of `X_n` across the batch.
    pub fn marginal(&self, n: usize, states: usize) -> Vec<f64> {
        let mut counts = vec![0.0; states];
        for p in &self.paths {
            counts[p[n]] += 1.0;
        }
        let m = self.paths.len() as f64;
        counts.iter_mut().for_each(|c| *c /= m);
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl Estimate {
    /// Sample mean and standard error, accumulated in index order.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(ErgoError::EmptyBatch);
        }
        let count = samples.len();
        let mean = samples.iter().sum::<f64>() / count as f64;
        let std_error = if count > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        Ok(Estimate { mean, std_error, count })
    }
}

/// Evaluates `functional` on every path and summarizes the values.
pub fn estimate<F>(functional: F, batch: &PathBatch) -> Result<Estimate>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    let values: Vec<f64> = batch.paths.par_iter().map(|p| functional(p)).collect();
    Estimate::from_samples(&values)
}
