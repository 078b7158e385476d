//! Random-permanent estimator of `T(R, C; W)`.
//!
//! With `g_ij = w_ij γ_ij` for independent standard exponentials `γ_ij`,
//! `E per A(G; R, C) / (∏ r_i! ∏ c_j!) = T(R, C; W)`. Samples are drawn in
//! fixed-size blocks, each from its own ChaCha stream keyed by the seed and
//! the block index, so results do not depend on how blocks are scheduled.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::permanent::{permanent_block, DEFAULT_PERMANENT_CAP};
use crate::special::ln_factorial;
use crate::{BigCount, Error, MarginPair, Matrix, Result, WeightMatrix};

/// Samples per RNG stream.
pub const BLOCK_SAMPLES: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorConfig {
    pub samples: u64,
    pub seed: u64,
    pub permanent_cap: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            permanent_cap: DEFAULT_PERMANENT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(samples)`.
    pub stderr: f64,
    pub samples_used: u64,
    pub exact_reference: Option<BigCount>,
}

impl EstimateResult {
    /// `stderr / mean`, infinite when the mean is zero but the error is not.
    pub fn relative_stderr(&self) -> f64 {
        if self.stderr == 0.0 {
            0.0
        } else {
            self.stderr / self.mean
        }
    }
}

/// Standard exponential variate by inversion, `-ln U` with `U` in `(0, 1)`.
pub fn standard_exponential(rng: &mut impl RngCore) -> f64 {
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    -libm::log(u)
}

/// `g_ij = w_ij γ_ij`.
pub fn sample_exponential_matrix(weights: &Matrix<f64>, rng: &mut impl RngCore) -> Matrix<f64> {
    weights.map(|w| w * standard_exponential(rng))
}

/// The RNG for one block of samples.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Mean and sum of squared deviations (Welford), mergeable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Self {
            count,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * w,
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        libm::sqrt(self.m2 / (self.count - 1) as f64 / self.count as f64)
    }
}

/// Pairwise merge in index order.
pub fn combine_blocks(mut blocks: Vec<RunningStats>) -> RunningStats {
    if blocks.is_empty() {
        return RunningStats::default();
    }
    while blocks.len() > 1 {
        blocks = blocks
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => a.merge(b),
                [a] => *a,
                _ => unreachable!(),
            })
            .collect();
    }
    blocks[0]
}

/// Prepared estimator for one instance.
#[derive(Debug, Clone)]
pub struct Estimator {
    margins: MarginPair,
    weights: Matrix<f64>,
    ln_norm: f64,
    /// Samples keep the zero pattern of `W`, so without a table on it every
    /// permanent vanishes; skip the cancelling signed sums.
    feasible: bool,
    cfg: EstimatorConfig,
}

impl Estimator {
    pub fn new(margins: &MarginPair, weights: &WeightMatrix, cfg: EstimatorConfig) -> Result<Self> {
        weights.check_dims(margins)?;
        if cfg.samples == 0 {
            return Err(Error::InvalidParameter(alloc::string::String::from(
                "samples must be at least 1",
            )));
        }
        let n = margins.total() as usize;
        if n > cfg.permanent_cap {
            return Err(Error::SizeCapExceeded {
                order: n,
                cap: cfg.permanent_cap,
            });
        }
        let ln_norm = margins
            .rows()
            .entries()
            .iter()
            .chain(margins.cols().entries())
            .map(|&x| ln_factorial(x))
            .sum();
        Ok(Self {
            margins: margins.clone(),
            weights: weights.to_f64(),
            ln_norm,
            feasible: crate::tables::has_table(margins, weights),
            cfg,
        })
    }

    pub fn block_count(&self) -> u64 {
        self.cfg.samples.div_ceil(BLOCK_SAMPLES)
    }

    /// One scaled sample `per A(G) / (∏ r! ∏ c!)`.
    pub fn sample(&self, rng: &mut impl RngCore) -> Result<f64> {
        let g = sample_exponential_matrix(&self.weights, rng);
        if !self.feasible {
            return Ok(0.0);
        }
        let per = permanent_block(&g, &self.margins, self.cfg.permanent_cap)?;
        Ok(per * libm::exp(-self.ln_norm))
    }

    pub fn run_block(&self, block: u64) -> Result<RunningStats> {
        let start = block * BLOCK_SAMPLES;
        let end = (start + BLOCK_SAMPLES).min(self.cfg.samples);
        let mut rng = block_rng(self.cfg.seed, block);
        let mut stats = RunningStats::default();
        for _ in start..end {
            stats.push(self.sample(&mut rng)?);
        }
        Ok(stats)
    }

    pub fn finish(&self, blocks: Vec<RunningStats>) -> EstimateResult {
        let stats = combine_blocks(blocks);
        EstimateResult {
            mean: stats.mean,
            stderr: stats.stderr(),
            samples_used: stats.count,
            exact_reference: None,
        }
    }
}

/// Monte Carlo estimate of `T(R, C; W)`.
pub fn estimate_t(
    margins: &MarginPair,
    weights: &WeightMatrix,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult> {
    let est = Estimator::new(margins, weights, *cfg)?;
    let blocks = (0..est.block_count())
        .map(|b| est.run_block(b))
        .collect::<Result<Vec<_>>>()?;
    Ok(est.finish(blocks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(r: &[u64], c: &[u64]) -> MarginPair {
        MarginPair::new(r.to_vec(), c.to_vec()).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_matrix() {
        let w = Matrix::from_fn(2, 3, |_, _| 0.0);
        let g = sample_exponential_matrix(&w, &mut block_rng(1, 0));
        assert!(g.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn sampling_is_reproducible_and_positive() {
        let w = Matrix::from_fn(3, 3, |_, _| 1.0);
        let a = sample_exponential_matrix(&w, &mut block_rng(42, 7));
        let b = sample_exponential_matrix(&w, &mut block_rng(42, 7));
        let c = sample_exponential_matrix(&w, &mut block_rng(42, 8));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn exponential_mean_scales_with_weight() {
        let w = Matrix::from_fn(1, 1, |_, _| 3.0);
        let mut rng = block_rng(2024, 0);
        let mut stats = RunningStats::default();
        for _ in 0..100_000 {
            stats.push(sample_exponential_matrix(&w, &mut rng)[(0, 0)]);
        }
        // standard deviation of a single draw is 3
        let sigma = 3.0 / libm::sqrt(100_000.0);
        assert!((stats.mean - 3.0).abs() < 3.0 * sigma, "{}", stats.mean);
    }

    #[test]
    fn estimator_small_instances() {
        let cfg = EstimatorConfig {
            samples: 100_000,
            seed: 11,
            permanent_cap: 22,
        };
        let r = estimate_t(&pair(&[1, 1], &[1, 1]), &WeightMatrix::ones(2, 2), &cfg).unwrap();
        assert!((r.mean - 2.0).abs() < 3.0 * r.stderr, "{r:?}");

        let diag = WeightMatrix::from_integers(&[&[1, 0], &[0, 1]]).unwrap();
        let cfg4 = EstimatorConfig {
            samples: 10_000,
            ..cfg
        };
        let r = estimate_t(&pair(&[1, 1], &[1, 1]), &diag, &cfg4).unwrap();
        assert!((r.mean - 1.0).abs() < 3.0 * r.stderr, "{r:?}");

        // per A = 2γ², E γ² = 2, normalizer 2!·2! = 4
        let r = estimate_t(&pair(&[2], &[2]), &WeightMatrix::ones(1, 1), &cfg).unwrap();
        assert!((r.mean - 1.0).abs() < 3.0 * r.stderr, "{r:?}");
    }

    #[test]
    fn estimator_is_deterministic() {
        let cfg = EstimatorConfig {
            samples: 5000,
            seed: 99,
            permanent_cap: 22,
        };
        let p = pair(&[2, 1], &[1, 2]);
        let a = estimate_t(&p, &WeightMatrix::ones(2, 2), &cfg).unwrap();
        let b = estimate_t(&p, &WeightMatrix::ones(2, 2), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples_used, 5000);
    }

    #[test]
    fn estimator_errors() {
        let cfg = EstimatorConfig {
            samples: 10,
            seed: 0,
            permanent_cap: 3,
        };
        let err = estimate_t(&pair(&[2, 2], &[4]), &WeightMatrix::ones(2, 1), &cfg);
        assert_eq!(err.unwrap_err(), Error::SizeCapExceeded { order: 4, cap: 3 });
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|k| libm::sin(k as f64) * 10.0 + k as f64 * 0.01).collect();
        let mut all = RunningStats::default();
        xs.iter().for_each(|x| all.push(*x));
        let blocks: Vec<RunningStats> = xs
            .chunks(37)
            .map(|c| {
                let mut s = RunningStats::default();
                c.iter().for_each(|x| s.push(*x));
                s
            })
            .collect();
        let merged = combine_blocks(blocks);
        assert_eq!(merged.count, all.count);
        assert!((merged.mean - all.mean).abs() < 1e-12);
        assert!((merged.m2 / all.m2 - 1.0).abs() < 1e-12);
    }
}
