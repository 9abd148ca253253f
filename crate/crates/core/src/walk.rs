//! The random walk on F₂ driven by a step distribution, its convergence to
//! the boundary, and simulation-based checks of the harmonic measure.
//!
//! Steps multiply on the right, w_{k+1} = w_k·g, so that prefixes of w_k
//! settle down as k grows. Positions are kept in a parent-pointer tree:
//! each step either moves to the parent (cancellation) or adds a child, so
//! a path of n steps costs O(n) memory even though the positions
//! themselves can be long.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::boundary::{eta, rn_exponent, Cylinder, StepDistribution};
use crate::montecarlo::{ClassTally, MonteCarloEstimate};
use crate::rational::to_f64;
use crate::sampling::{stream_rng, SimRng};
use crate::word::{Letter, ReducedWord};

const ROOT: u32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Node {
    parent: u32,
    letter: Letter,
    depth: u32,
}

/// A simulated path w_0 = e, w_1, …, w_n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkPath {
    seed: u64,
    steps: Vec<Letter>,
    nodes: Vec<Node>,
    /// node of w_k, for k = 0..=n
    positions: Vec<u32>,
}

impl WalkPath {
    fn new(seed: u64, capacity: usize) -> Self {
        let mut positions = Vec::with_capacity(capacity + 1);
        positions.push(ROOT);
        Self {
            seed,
            steps: Vec::with_capacity(capacity),
            nodes: vec![Node {
                parent: ROOT,
                letter: Letter::A,
                depth: 0,
            }],
            positions,
        }
    }

    /// Builds the path for an explicit step sequence.
    pub fn from_steps<I: IntoIterator<Item = Letter>>(seed: u64, steps: I) -> Self {
        let steps = steps.into_iter();
        let mut path = Self::new(seed, steps.size_hint().0);
        for l in steps {
            path.push(l);
        }
        path
    }

    fn push(&mut self, l: Letter) {
        let cur = *self.positions.last().expect("path is never empty");
        let node = self.nodes[cur as usize];
        let next = if node.depth > 0 && node.letter == l.inverse() {
            node.parent
        } else {
            self.nodes.push(Node {
                parent: cur,
                letter: l,
                depth: node.depth + 1,
            });
            (self.nodes.len() - 1) as u32
        };
        self.steps.push(l);
        self.positions.push(next);
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of steps n.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Letter] {
        &self.steps
    }

    /// |w_k|
    pub fn length_at(&self, k: usize) -> usize {
        self.nodes[self.positions[k] as usize].depth as usize
    }

    /// The reduced word w_k.
    pub fn position(&self, k: usize) -> ReducedWord {
        self.prefix_at(k, self.length_at(k))
    }

    /// First `depth` letters of w_k (all of w_k if it is shorter).
    pub fn prefix_at(&self, k: usize, depth: usize) -> ReducedWord {
        let mut id = self.positions[k];
        while self.nodes[id as usize].depth as usize > depth {
            id = self.nodes[id as usize].parent;
        }
        let mut rev = Vec::with_capacity(self.nodes[id as usize].depth as usize);
        while id != ROOT {
            let n = self.nodes[id as usize];
            rev.push(n.letter);
            id = n.parent;
        }
        rev.reverse();
        ReducedWord::from_iter(rev)
    }
}

/// Path of `n` i.i.d. steps with law `m`, drawn from stream 0 of `seed`.
pub fn sample_walk(seed: u64, n: usize, m: &StepDistribution) -> WalkPath {
    sample_walk_on(&mut stream_rng(seed, 0), seed, n, m)
}

/// As [`sample_walk`] but drawing from a caller-supplied generator.
pub fn sample_walk_on(rng: &mut SimRng, seed: u64, n: usize, m: &StepDistribution) -> WalkPath {
    let sampler = m.sampler();
    let mut path = WalkPath::new(seed, n);
    for _ in 0..n {
        path.push(Letter::from_index(sampler.sample(rng)));
    }
    path
}

/// The walk's depth-`depth` prefix has settled from step `stable_from` on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixStabilization {
    pub depth: usize,
    pub stable_from: usize,
    pub prefix: ReducedWord,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("depth-{depth} prefix not stable over the last {window} of {steps} steps")]
pub struct NotStabilized {
    pub depth: usize,
    pub window: usize,
    pub steps: usize,
}

/// Default stabilization window: 10% of the horizon.
pub fn default_window(n: usize) -> usize {
    n / 10
}

/// Detects a depth-`depth` prefix shared by w_k for every k in the last
/// `stability_window` steps (inclusive of w_{n−window}).
///
/// Right multiplication only ever touches the last letter, so the first
/// `depth` letters are frozen exactly while |w_k| ≥ depth. `stable_from`
/// is the first index after the last visit below that length.
pub fn boundary_limit_prefix(
    path: &WalkPath,
    depth: usize,
    stability_window: usize,
) -> Result<PrefixStabilization, NotStabilized> {
    let n = path.len();
    let fail = NotStabilized {
        depth,
        window: stability_window,
        steps: n,
    };
    if depth == 0 || stability_window > n {
        return Err(fail);
    }
    let stable_from = (0..=n)
        .rev()
        .find(|&k| path.length_at(k) < depth)
        .map_or(0, |k| k + 1);
    if stable_from > n - stability_window {
        return Err(fail);
    }
    Ok(PrefixStabilization {
        depth,
        stable_from,
        prefix: path.prefix_at(n, depth),
    })
}

/// Limit prefixes collected over many independent walks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderFrequencies {
    pub depth: usize,
    pub attempted: u64,
    pub counts: BTreeMap<ReducedWord, u64>,
}

impl CylinderFrequencies {
    pub fn stabilized(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn frequency(&self, prefix: &ReducedWord) -> f64 {
        let total = self.stabilized();
        if total == 0 {
            return 0.0;
        }
        *self.counts.get(prefix).unwrap_or(&0) as f64 / total as f64
    }

    /// One row per cylinder of the depth, in enumeration order, against η.
    pub fn rows(&self) -> Vec<FrequencyRow> {
        let n = self.stabilized() as f64;
        ReducedWord::all_of_length(self.depth)
            .into_iter()
            .map(|prefix| {
                let count = *self.counts.get(&prefix).unwrap_or(&0);
                let target = to_f64(&eta(&Cylinder::new(prefix.clone())));
                let sigma = (target * (1.0 - target) / n).sqrt();
                let frequency = self.frequency(&prefix);
                FrequencyRow {
                    cylinder: prefix,
                    count,
                    frequency,
                    target,
                    sigma,
                    z_score: (frequency - target) / sigma,
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyRow {
    pub cylinder: ReducedWord,
    pub count: u64,
    pub frequency: f64,
    /// η of the cylinder
    pub target: f64,
    /// binomial standard deviation √(p(1−p)/N) at p = target
    pub sigma: f64,
    pub z_score: f64,
}

/// Empirical law of the depth-`depth` limit prefix over `walks` walks of
/// `n` steps. Walk i uses stream i of `seed`; walks that do not stabilize
/// within `window` are dropped (counted in `attempted` only).
pub fn empirical_cylinder_freq(
    seed: u64,
    walks: u64,
    n: usize,
    depth: usize,
    window: usize,
    m: &StepDistribution,
) -> CylinderFrequencies {
    let prefixes: Vec<Option<ReducedWord>> = (0..walks)
        .into_par_iter()
        .map(|i| {
            let path = sample_walk_on(&mut stream_rng(seed, i), seed, n, m);
            boundary_limit_prefix(&path, depth, window)
                .ok()
                .map(|s| s.prefix)
        })
        .collect();
    let mut counts = BTreeMap::new();
    for p in prefixes.into_iter().flatten() {
        *counts.entry(p).or_insert(0) += 1;
    }
    CylinderFrequencies {
        depth,
        attempted: walks,
        counts,
    }
}

/// |w_n| / n.
pub fn drift_estimate(seed: u64, n: usize, m: &StepDistribution) -> f64 {
    assert!(n >= 1, "drift needs at least one step");
    let path = sample_walk(seed, n, m);
    path.length_at(n) as f64 / n as f64
}

/// A depth-`depth` prefix drawn from η directly: uniform first letter, then
/// uniform among the three non-cancelling continuations. This is the exact
/// law of the limit prefix of the default walk.
pub fn sample_harmonic_prefix<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> ReducedWord {
    let mut w = ReducedWord::identity();
    for _ in 0..depth {
        let next = match w.last() {
            None => Letter::from_index(rng.random_range(0..4)),
            Some(last) => last.successors().nth(rng.random_range(0..3)).unwrap(),
        };
        w.push(next);
    }
    w
}

/// Monte Carlo value of the boundary entropy (in nats): limit points ξ come
/// from stabilized walks and each contributes −Σ_g m(g)·k(g,ξ)·log 3.
/// Walks that fail to stabilize are skipped.
pub fn entropy_boundary_mc(
    seed: u64,
    samples: u64,
    n: usize,
    m: &StepDistribution,
) -> MonteCarloEstimate {
    let window = default_window(n);
    let integrand: Vec<f64> = Letter::ALL
        .iter()
        .map(|&x| {
            let xi = ReducedWord::letter(x);
            -m.support()
                .map(|(g, w)| to_f64(w) * rn_exponent(&ReducedWord::letter(g), &xi).unwrap().ln())
                .sum::<f64>()
        })
        .collect();
    let firsts: Vec<Option<Letter>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let path = sample_walk_on(&mut stream_rng(seed, i), seed, n, m);
            boundary_limit_prefix(&path, 1, window)
                .ok()
                .and_then(|s| s.prefix.first())
        })
        .collect();
    let mut tally = ClassTally::new(4);
    for x in firsts.into_iter().flatten() {
        tally.add(x.index());
    }
    tally.estimate(&integrand)
}
