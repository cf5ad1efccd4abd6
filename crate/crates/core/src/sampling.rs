//! Monte Carlo check of the correlated-displacement preparation.
//!
//! Samples are drawn in fixed-size shards. Shard `k` uses ChaCha8 seeded
//! with `seed` on stream `k`, and shard statistics are merged in shard
//! order, so a batch is bit-for-bit reproducible from `(seed, count)`
//! whatever the number of worker threads.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GaussError, Result};
use crate::phase_space::{rows, CovarianceMatrix};
use crate::protocol::{initial_cm, ProtocolParams};

/// Samples per shard.
pub const SHARD_SIZE: usize = 1 << 16;

/// Draws phase-space points distributed with a given CM (quadrature
/// variance = CM entry / 2).
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    /// Factors `γ/2` by Cholesky, falling back to a symmetric eigendecomposition
    /// (negative eigenvalues clipped) when `γ` is singular or nearly so.
    pub fn new(cm: &DMatrix<f64>) -> Self {
        let half = cm * 0.5;
        let factor = match half.clone().cholesky() {
            Some(chol) => chol.l(),
            None => {
                let eig = half.symmetric_eigen();
                let sqrt = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
                &eig.eigenvectors * DMatrix::from_diagonal(&sqrt)
            }
        };
        Self { factor }
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.factor * z
    }
}

/// Running mean and co-moment matrix.
#[derive(Debug, Clone)]
struct Moments {
    n: usize,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: DVector::zeros(dim),
            m2: DMatrix::zeros(dim, dim),
        }
    }

    fn push(&mut self, x: &DVector<f64>) {
        self.n += 1;
        let delta = x - &self.mean;
        self.mean += &delta / self.n as f64;
        let delta2 = x - &self.mean;
        self.m2 += &delta * delta2.transpose();
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        let n = self.n + other.n;
        let delta = &other.mean - &self.mean;
        let w = (self.n as f64) * (other.n as f64) / n as f64;
        self.m2 += &other.m2 + &delta * delta.transpose() * w;
        self.mean += &delta * (other.n as f64 / n as f64);
        self.n = n;
    }
}

/// Empirical moments of `count` prepared samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub count: usize,
    pub seed: u64,
    /// `2 ×` the unbiased sample covariance; symmetric, not necessarily physical.
    pub empirical_cm: DMatrix<f64>,
    pub empirical_mean: DVector<f64>,
    pub analytic_cm: DMatrix<f64>,
    pub max_abs_dev: f64,
}

#[derive(Serialize)]
struct SampleBatchJson {
    count: usize,
    seed: u64,
    empirical_cm: Vec<Vec<f64>>,
    empirical_mean: Vec<f64>,
    analytic_cm: Vec<Vec<f64>>,
    max_abs_dev: f64,
}

impl SampleBatch {
    pub fn to_json(&self) -> String {
        let view = SampleBatchJson {
            count: self.count,
            seed: self.seed,
            empirical_cm: rows(&self.empirical_cm),
            empirical_mean: self.empirical_mean.iter().copied().collect(),
            analytic_cm: rows(&self.analytic_cm),
            max_abs_dev: self.max_abs_dev,
        };
        serde_json::to_string_pretty(&view).expect("batch serializes")
    }

    /// Root-mean-square entrywise deviation from the analytic CM.
    pub fn rms_dev(&self) -> f64 {
        let diff = &self.empirical_cm - &self.analytic_cm;
        (diff.iter().map(|d| d * d).sum::<f64>() / diff.len() as f64).sqrt()
    }
}

/// Samples the `(A, B)` preparation: a squeezed mode `A` with CM
/// `diag(e^{-2(r-ε)}, e^{2r})` and a vacuum `B`, then `x_A += x̄`, `x_B -= x̄`
/// with `x̄ ~ N(0, (1 - e^{-2r})/2)`.
pub fn sample_preparation(params: ProtocolParams, count: usize, seed: u64) -> Result<SampleBatch> {
    if count < 2 {
        return Err(GaussError::BadCount(count));
    }
    let (r, eps) = (params.r, params.epsilon);
    let input = DMatrix::from_diagonal(&DVector::from_vec(vec![
        (-2.0 * (r - eps)).exp(),
        (2.0 * r).exp(),
        1.0,
        1.0,
    ]));
    // validated once so an unphysical input is reported rather than sampled
    CovarianceMatrix::new(input.clone())?;
    let sampler = GaussianSampler::new(&input);
    let kick_sd = (-(-2.0 * r).exp_m1() / 2.0).sqrt();

    let n_shards = count.div_ceil(SHARD_SIZE);
    let shards: Vec<Moments> = (0..n_shards)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = SHARD_SIZE.min(count - k * SHARD_SIZE);
            let mut acc = Moments::new(4);
            for _ in 0..len {
                let mut x = sampler.sample(&mut rng);
                let kick = kick_sd * rng.sample::<f64, _>(StandardNormal);
                x[0] += kick;
                x[2] -= kick;
                acc.push(&x);
            }
            acc
        })
        .collect();

    let mut total = Moments::new(4);
    for shard in &shards {
        total.merge(shard);
    }
    let cov = &total.m2 * (2.0 / (count - 1) as f64);
    let empirical_cm = (&cov + cov.transpose()) * 0.5;
    let analytic_cm = initial_cm(params).cm().matrix().clone();
    let max_abs_dev = (&empirical_cm - &analytic_cm).amax();
    Ok(SampleBatch {
        count,
        seed,
        empirical_cm,
        empirical_mean: total.mean,
        analytic_cm,
        max_abs_dev,
    })
}
