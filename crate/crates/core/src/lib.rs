//! Exact and Monte Carlo tools for stationary actions of the free group and
//! of SL(2,ℤ):
//!
//! * [`word`]: reduced words in F₂.
//! * [`boundary`]: the boundary of F₂ with its harmonic measure η, the
//!   boundary action and its Radon–Nikodym cocycle.
//! * [`walk`]: seeded simulation of the random walk and its boundary limit.
//! * [`skew`]: the Bernoulli-driven skew product whose stationary measures
//!   ν_t have Furstenberg entropy t·h_max.
//! * [`torus`]: SL(2,ℤ) on the 2-torus and its blow-up along periodic orbits.
//!
//! Entropies are reported as exact rational multiples of log 3.

pub mod boundary;
pub mod montecarlo;
pub mod rational;
pub mod sampling;
pub mod skew;
pub mod torus;
pub mod walk;
pub mod word;

pub use boundary::{Cylinder, EntropyValue, InsufficientDepth, RnExponent, StepDistribution};
pub use rational::Rational;
pub use word::{Letter, ReducedWord};

/// Natural logarithm of 3; entropies here are rational multiples of it.
pub const LN_3: f64 = 1.098_612_288_668_109_8;
