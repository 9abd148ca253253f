//! Deterministic random streams and exact discrete sampling.
//!
//! Every randomized routine draws from ChaCha8 seeded with the caller's
//! 64-bit seed; independent work items use distinct ChaCha streams of the
//! same key, so results do not depend on how work is scheduled.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rational::Rational;

pub type SimRng = ChaCha8Rng;

/// Generator for substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WeightError {
    #[error("weights must be nonnegative")]
    Negative,
    #[error("weights must sum to 1")]
    NotNormalized,
    #[error("common denominator of the weights does not fit in 64 bits")]
    TooFine,
}

/// Samples indices with exactly the given rational probabilities: the
/// weights are scaled to integers over their common denominator, so no
/// floating point rounding enters the law.
#[derive(Clone, Debug)]
pub struct ExactWeighted {
    index: WeightedIndex<u64>,
}

impl ExactWeighted {
    pub fn new(weights: &[Rational]) -> Result<Self, WeightError> {
        if weights.iter().any(|w| w.is_negative()) {
            return Err(WeightError::Negative);
        }
        let total: Rational = weights.iter().sum();
        if total != Rational::from_integer(1.into()) {
            return Err(WeightError::NotNormalized);
        }
        let den = weights
            .iter()
            .fold(BigInt::from(1), |acc, w| acc.lcm(w.denom()));
        let ints: Option<Vec<u64>> = weights
            .iter()
            .map(|w| (w.numer() * (&den / w.denom())).to_u64())
            .collect();
        let ints = ints.ok_or(WeightError::TooFine)?;
        if den.to_u64().is_none() || ints.iter().all(|v| v.is_zero()) {
            return Err(WeightError::TooFine);
        }
        let index = WeightedIndex::new(ints).map_err(|_| WeightError::TooFine)?;
        Ok(Self { index })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}

/// Exact Bernoulli(p/q) draw: a uniform integer below `q` compared with `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactBernoulli {
    num: u64,
    den: u64,
}

impl ExactBernoulli {
    pub fn new(p: &Rational) -> Result<Self, WeightError> {
        if p.is_negative() || *p > Rational::from_integer(1.into()) {
            return Err(WeightError::NotNormalized);
        }
        let num = p.numer().to_u64().ok_or(WeightError::TooFine)?;
        let den = p.denom().to_u64().ok_or(WeightError::TooFine)?;
        Ok(Self { num, den })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random_range(0..self.den) < self.num
    }
}
