//! Monte Carlo aggregation for integrands that take finitely many values.
//!
//! Each sample is reduced to a class index and only per-class counts are
//! merged, so the aggregate is an exact commutative monoid and the final
//! estimate does not depend on how the samples were split across threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::sampling::{stream_rng, SimRng};

/// Samples per independent random stream.
pub const CHUNK: u64 = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl MonteCarloEstimate {
    /// |mean − target| in units of the standard error (∞ when the error is
    /// zero and the mean misses).
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.mean - target).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }
}

/// Per-class sample counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassTally {
    counts: Vec<u64>,
}

impl ClassTally {
    pub fn new(classes: usize) -> Self {
        Self {
            counts: vec![0; classes],
        }
    }

    pub fn add(&mut self, class: usize) {
        self.counts[class] += 1;
    }

    pub fn merge(mut self, other: &ClassTally) -> Self {
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Sample mean and standard error of `values[class]`.
    pub fn estimate(&self, values: &[f64]) -> MonteCarloEstimate {
        let n = self.total();
        if n == 0 {
            return MonteCarloEstimate {
                mean: f64::NAN,
                std_error: f64::NAN,
                samples: 0,
            };
        }
        let nf = n as f64;
        let mean = self
            .counts
            .iter()
            .zip(values)
            .map(|(&c, v)| c as f64 * v)
            .sum::<f64>()
            / nf;
        let ss: f64 = self
            .counts
            .iter()
            .zip(values)
            .map(|(&c, v)| c as f64 * (v - mean) * (v - mean))
            .sum();
        let var = if n > 1 { ss / (nf - 1.0) } else { 0.0 };
        MonteCarloEstimate {
            mean,
            std_error: (var / nf).sqrt(),
            samples: n,
        }
    }
}

/// Draws `samples` class labels in parallel. Chunk `c` uses stream `c` of
/// `seed`, so the tally is a function of `(seed, samples)` alone.
pub fn tally_parallel<F>(seed: u64, samples: u64, classes: usize, draw: F) -> ClassTally
where
    F: Fn(&mut SimRng) -> usize + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut t = ClassTally::new(classes);
            for _ in 0..n {
                t.add(draw(&mut rng));
            }
            t
        })
        .reduce(|| ClassTally::new(classes), |a, b| a.merge(&b))
}
