//! Monte Carlo summaries, empirical distribution tools and seeded substreams.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Default quantile levels reported with every estimate.
pub const QUANTILE_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub config_fingerprint: Option<String>,
    /// (level, value) pairs, increasing in both coordinates.
    pub quantiles: Vec<(f64, f64)>,
}

impl MCEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let (mean, sd) = mean_sd(samples);
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantiles = if sorted.is_empty() {
            Vec::new()
        } else {
            QUANTILE_LEVELS.iter().map(|&p| (p, quantile_sorted(&sorted, p))).collect()
        };
        MCEstimate {
            mean,
            stderr: sd / (samples.len().max(1) as f64).sqrt(),
            n_samples: samples.len(),
            seed,
            config_fingerprint: None,
            quantiles,
        }
    }

    pub fn with_fingerprint(mut self, fp: impl Into<String>) -> Self {
        self.config_fingerprint = Some(fp.into());
        self
    }

    /// |mean − target| within `k` standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Sample mean and (n−1)-normalized standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    }
}

/// Two-sample Kolmogorov distance sup |F_a − F_b|.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Independent generator for sample `index` of a run seeded with `seed`.
/// Streams do not depend on how samples are scheduled across workers.
pub fn substream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Evaluates `f(i, rng_i)` for i in 0..n, in parallel when `workers > 1`,
/// returning results in index order.
pub fn par_map<T, F>(n: usize, seed: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha20Rng) -> T + Sync,
{
    if workers <= 1 {
        return (0..n).map(|i| f(i, &mut substream(seed, i as u64))).collect();
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| f(i, &mut substream(seed, i as u64)))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn ks_of_identical_is_zero() {
        let a = [0.1, 0.5, 0.3];
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert!((ks_distance(&[0.0, 1.0], &[2.0, 3.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quantiles_monotone() {
        let xs: Vec<f64> = (0..101).map(|i| (i as f64).sqrt()).collect();
        let est = MCEstimate::from_samples(&xs, 0);
        for w in est.quantiles.windows(2) {
            assert!(w[0].1 <= w[1].1);
        }
        assert!((quantile_sorted(&[1.0, 2.0, 3.0], 0.5) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn par_map_is_schedule_independent() {
        let one = par_map(17, 5, 1, |_, r| r.gen::<u64>());
        let three = par_map(17, 5, 3, |_, r| r.gen::<u64>());
        assert_eq!(one, three);
    }
}
