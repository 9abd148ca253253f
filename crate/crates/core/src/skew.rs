//! The skew product X = Y × Z over the two-sided Bernoulli shift.
//!
//! A generator moves the base by the shift and moves the boundary
//! coordinate only when the bit it reads is 1:
//!
//! ```text
//! a(ω, z)  = (σω,  a_ω z)            a_ω = a if ω₀ = 1, else e
//! a⁻¹(ω, z) = (σ⁻¹ω, a⁻¹_{σ⁻¹ω} z)   reads (σ⁻¹ω)₀ = ω₋₁
//! ```
//!
//! and likewise for b. The product measures ν_t = μ_t × η are stationary
//! for the uniform step distribution and have entropy t·h_max, which this
//! module checks exactly and by Monte Carlo.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::boundary::{
    entropy_boundary_exact_for, eta, preimage_cylinder, rn_exponent, Cylinder, EntropyValue,
    InsufficientDepth, ReportBuilder, RnExponent, StationarityReport, StepDistribution,
};
use crate::montecarlo::{tally_parallel, MonteCarloEstimate};
use crate::rational::{in_unit_interval, to_f64, Rational};
use crate::sampling::{stream_rng, ExactBernoulli, SimRng};
use crate::walk::sample_harmonic_prefix;
use crate::word::{Letter, ReducedWord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SkewError {
    #[error("Bernoulli parameter {0} is outside [0, 1]")]
    ParamOutOfRange(Rational),
    #[error("entropy coefficient {target} is outside [0, {max}]")]
    EntropyOutOfRange {
        target: Box<Rational>,
        max: Box<Rational>,
    },
    #[error("numerator or denominator of {0} does not fit in 64 bits")]
    ParamTooFine(Rational),
}

/// Heads probability t of the 1−t, t coin.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BernoulliParam(Rational);

impl BernoulliParam {
    pub fn new(t: Rational) -> Result<Self, SkewError> {
        if in_unit_interval(&t) {
            Ok(Self(t))
        } else {
            Err(SkewError::ParamOutOfRange(t))
        }
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    /// Probability of the given bit.
    pub fn prob(&self, bit: bool) -> Rational {
        if bit {
            self.0.clone()
        } else {
            Rational::one() - &self.0
        }
    }

    fn coin(&self) -> Result<ExactBernoulli, SkewError> {
        ExactBernoulli::new(&self.0).map_err(|_| SkewError::ParamTooFine(self.0.clone()))
    }
}

impl fmt::Display for BernoulliParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Rule for bits outside the stored range: bit j is a Bernoulli(t) draw
/// from stream `zigzag(j)` of `seed`, so it is fixed once the seed is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Extension {
    seed: u64,
    coin: ExactBernoulli,
}

impl Extension {
    fn bit(&self, absolute: i64) -> bool {
        let stream = ((absolute << 1) ^ (absolute >> 63)) as u64;
        self.coin.sample(&mut stream_rng(self.seed, stream))
    }
}

/// A finite view of ω ∈ {0,1}^ℤ.
///
/// Bits are stored at absolute positions `start..start+bits.len()`; the
/// current coordinate i reads absolute position i + `offset`, so shifting
/// only moves `offset`. Coordinates outside the stored range are filled by
/// the extension rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryWindow {
    start: i64,
    bits: Vec<bool>,
    offset: i64,
    extension: Extension,
}

impl BinaryWindow {
    /// Window holding `bits` at coordinates `lo, lo+1, …`, extended with
    /// Bernoulli(t) bits derived from `extension_seed`.
    pub fn new(
        lo: i64,
        bits: Vec<bool>,
        extension_seed: u64,
        t: &BernoulliParam,
    ) -> Result<Self, SkewError> {
        Ok(Self {
            start: lo,
            bits,
            offset: 0,
            extension: Extension {
                seed: extension_seed,
                coin: t.coin()?,
            },
        })
    }

    /// Fair-coin extension with seed 0.
    pub fn from_bits(lo: i64, bits: Vec<bool>) -> Self {
        Self::new(
            lo,
            bits,
            0,
            &BernoulliParam(Rational::new(1.into(), 2.into())),
        )
        .expect("1/2 fits")
    }

    /// Lowest stored coordinate (current indexing).
    pub fn lo(&self) -> i64 {
        self.start - self.offset
    }

    /// Highest stored coordinate (current indexing); below `lo` when empty.
    pub fn hi(&self) -> i64 {
        self.lo() + self.bits.len() as i64 - 1
    }

    pub fn get(&self, i: i64) -> bool {
        let abs = i + self.offset;
        let rel = abs - self.start;
        if rel >= 0 && (rel as usize) < self.bits.len() {
            self.bits[rel as usize]
        } else {
            self.extension.bit(abs)
        }
    }

    /// Stores every coordinate in `lo..=hi` (current indexing).
    pub fn materialize(&mut self, lo: i64, hi: i64) {
        let (new_lo, new_hi) = if self.bits.is_empty() {
            (lo, hi)
        } else {
            (lo.min(self.lo()), hi.max(self.hi()))
        };
        if new_hi < new_lo {
            return;
        }
        let bits = (new_lo..=new_hi).map(|i| self.get(i)).collect();
        self.start = new_lo + self.offset;
        self.bits = bits;
    }

    /// σ: (σω)ᵢ = ωᵢ₊₁.
    pub fn shifted(&self) -> Self {
        Self {
            offset: self.offset + 1,
            ..self.clone()
        }
    }

    /// σ⁻¹: (σ⁻¹ω)ᵢ = ωᵢ₋₁.
    pub fn unshifted(&self) -> Self {
        Self {
            offset: self.offset - 1,
            ..self.clone()
        }
    }
}

/// A point (ω, z) of X, with z known through a finite prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkewPoint {
    pub omega: BinaryWindow,
    pub z: ReducedWord,
}

impl SkewPoint {
    pub fn new(omega: BinaryWindow, z: ReducedWord) -> Self {
        Self { omega, z }
    }
}

fn is_forward(g: Letter) -> bool {
    matches!(g, Letter::A | Letter::B)
}

/// Coordinate of ω read by `g` when it acts: 0 for a, b and −1 for a⁻¹, b⁻¹.
pub fn driving_coordinate(g: Letter) -> i64 {
    if is_forward(g) {
        0
    } else {
        -1
    }
}

/// Coordinate of ω that decides d(gν)/dν at a point: the bit g⁻¹ reads
/// there, i.e. −1 for a, b and 0 for a⁻¹, b⁻¹.
pub fn derivative_coordinate(g: Letter) -> i64 {
    driving_coordinate(g.inverse())
}

/// g·z on a finite prefix. The result is exact as long as the prefix is
/// not swallowed entirely by the cancellation.
fn act_letter_on_prefix(g: Letter, z: &ReducedWord) -> Result<ReducedWord, InsufficientDepth> {
    if z.first() == Some(g.inverse()) && z.len() == 1 || z.is_empty() {
        return Err(InsufficientDepth {
            have: z.len(),
            need: z.len() + 1,
        });
    }
    Ok(ReducedWord::letter(g).multiply(z))
}

/// One generator acting on a point of X.
pub fn act_skew(g: Letter, p: &SkewPoint) -> Result<SkewPoint, InsufficientDepth> {
    let active = p.omega.get(driving_coordinate(g));
    let omega = if is_forward(g) {
        p.omega.shifted()
    } else {
        p.omega.unshifted()
    };
    let z = if active {
        act_letter_on_prefix(g, &p.z)?
    } else {
        p.z.clone()
    };
    Ok(SkewPoint { omega, z })
}

/// Finitely many ω-constraints times a boundary cylinder.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductCylinder {
    pub omega: BTreeMap<i64, bool>,
    pub z: Cylinder,
}

impl ProductCylinder {
    pub fn new(omega: BTreeMap<i64, bool>, z: Cylinder) -> Self {
        Self { omega, z }
    }

    pub fn full() -> Self {
        Self::new(BTreeMap::new(), Cylinder::full())
    }

    /// Whether `p` lies in the set; needs the z-prefix to reach the
    /// cylinder's depth.
    pub fn contains(&self, p: &SkewPoint) -> Result<bool, InsufficientDepth> {
        if p.z.len() < self.z.depth() {
            return Err(InsufficientDepth {
                have: p.z.len(),
                need: self.z.depth(),
            });
        }
        Ok(self.z.contains(&p.z) && self.omega.iter().all(|(&i, &b)| p.omega.get(i) == b))
    }

    fn counts(&self) -> MeasureKey {
        let ones = self.omega.values().filter(|&&b| b).count();
        MeasureKey {
            ones,
            zeros: self.omega.len() - ones,
            z_depth: self.z.depth(),
        }
    }
}

impl fmt::Display for ProductCylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (i, b)) in self.omega.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "ω[{i}]={}", u8::from(*b))?;
        }
        write!(f, "}}×{}", self.z)
    }
}

/// ν_t of a product cylinder depends only on these counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct MeasureKey {
    ones: usize,
    zeros: usize,
    z_depth: usize,
}

/// ν_t = μ_t × η of a product cylinder.
pub fn nu_measure(pc: &ProductCylinder, t: &BernoulliParam) -> Rational {
    let base: Rational = pc.omega.values().map(|&b| t.prob(b)).product();
    base * eta(&pc.z)
}

/// Memoized ν_t, keyed by constraint counts and z-depth.
struct NuCache<'a> {
    t: &'a BernoulliParam,
    values: HashMap<MeasureKey, Rational>,
}

impl<'a> NuCache<'a> {
    fn new(t: &'a BernoulliParam) -> Self {
        Self {
            t,
            values: HashMap::new(),
        }
    }

    fn get(&mut self, pc: &ProductCylinder) -> Rational {
        let t = self.t;
        self.values
            .entry(pc.counts())
            .or_insert_with(|| nu_measure(pc, t))
            .clone()
    }
}

/// Disjoint product cylinders whose union is {p : g·p ∈ pc}.
///
/// The ω-constraints move with the shift, the bit g reads is split into its
/// two values, and on the active branch the z-cylinder is pulled back
/// through the boundary action.
pub fn preimage_product_cylinder(g: Letter, pc: &ProductCylinder) -> Vec<ProductCylinder> {
    let shift = if is_forward(g) { 1 } else { -1 };
    let drive = driving_coordinate(g);
    let moved: BTreeMap<i64, bool> = pc.omega.iter().map(|(&i, &b)| (i + shift, b)).collect();
    let mut out = Vec::new();
    for bit in [false, true] {
        if moved.get(&drive).is_some_and(|&b| b != bit) {
            continue;
        }
        let mut omega = moved.clone();
        omega.insert(drive, bit);
        if bit {
            for z in preimage_cylinder(&ReducedWord::letter(g), &pc.z) {
                out.push(ProductCylinder::new(omega.clone(), z));
            }
        } else {
            out.push(ProductCylinder::new(omega, pc.z.clone()));
        }
    }
    out
}

/// {p : w·p ∈ A} for a word w = g₁⋯gₙ and a disjoint family A.
pub fn preimage_word(word: &[Letter], family: &[ProductCylinder]) -> Vec<ProductCylinder> {
    let mut cur = family.to_vec();
    for &g in word {
        cur = cur
            .iter()
            .flat_map(|pc| preimage_product_cylinder(g, pc))
            .collect();
    }
    cur
}

/// Every assignment of {free, 0, 1} to the coordinates −span..=span.
fn omega_constraint_sets(span: i64) -> Vec<BTreeMap<i64, bool>> {
    let mut sets = vec![BTreeMap::new()];
    for i in -span..=span {
        let mut next = Vec::with_capacity(sets.len() * 3);
        for s in &sets {
            next.push(s.clone());
            for b in [false, true] {
                let mut c = s.clone();
                c.insert(i, b);
                next.push(c);
            }
        }
        sets = next;
    }
    sets
}

/// Exact check of Σ_g m(g)·ν_t(g⁻¹A) = ν_t(A) over every product cylinder
/// with z-depth ≤ `depth` and ω-constraints on coordinates −depth..=depth.
pub fn check_stationarity_skew_for(
    m: &StepDistribution,
    t: &BernoulliParam,
    depth: usize,
) -> StationarityReport {
    let mut cache = NuCache::new(t);
    let mut report = ReportBuilder::new(depth);
    let omegas = omega_constraint_sets(depth as i64);
    for z in Cylinder::all_up_to_depth(depth) {
        for omega in &omegas {
            let a = ProductCylinder::new(omega.clone(), z.clone());
            let mut averaged = Rational::zero();
            for (g, w) in m.support() {
                let mass: Rational = preimage_product_cylinder(g, &a)
                    .iter()
                    .map(|pc| cache.get(pc))
                    .sum();
                averaged += w * mass;
            }
            let measure = cache.get(&a);
            report.record(|| a.to_string(), averaged, measure);
        }
    }
    report.finish()
}

pub fn check_stationarity_skew(t: &BernoulliParam, depth: usize) -> StationarityReport {
    check_stationarity_skew_for(&StepDistribution::default(), t, depth)
}

/// log₃ of d(gν_t)/dν_t at p: zero when the bit at
/// [`derivative_coordinate`] is 0, otherwise the boundary exponent of g at z.
pub fn rn_exponent_skew(g: Letter, p: &SkewPoint) -> Result<RnExponent, InsufficientDepth> {
    if !p.omega.get(derivative_coordinate(g)) {
        return Ok(RnExponent(0));
    }
    if p.z.is_empty() {
        return Err(InsufficientDepth { have: 0, need: 1 });
    }
    rn_exponent(&ReducedWord::letter(g), &p.z)
}

/// Exponent for a word g₁⋯gₙ by the chain rule:
/// k(gh, p) = k(g, p) + k(h, g⁻¹p).
pub fn rn_exponent_skew_word(
    word: &[Letter],
    p: &SkewPoint,
) -> Result<RnExponent, InsufficientDepth> {
    let mut total = 0;
    let mut cur = p.clone();
    for &g in word {
        total += rn_exponent_skew(g, &cur)?.0;
        cur = act_skew(g.inverse(), &cur)?;
    }
    Ok(RnExponent(total))
}

/// A representative point for the cell {bit at `coord` = `bit`} × C(x).
fn cell_point(coord: i64, bit: bool, x: Letter) -> SkewPoint {
    SkewPoint::new(
        BinaryWindow::from_bits(coord, vec![bit]),
        ReducedWord::letter(x),
    )
}

/// The derivative of each generator is constant on the 8 cells
/// {bit at its derivative coordinate} × {first z-letter}, so the entropy
/// integral is a finite exact sum.
pub fn entropy_skew_exact_for(m: &StepDistribution, t: &BernoulliParam) -> EntropyValue {
    let mut q = Rational::zero();
    for (g, w) in m.support() {
        let coord = derivative_coordinate(g);
        for bit in [false, true] {
            for x in Letter::ALL {
                let k = rn_exponent_skew(g, &cell_point(coord, bit, x))
                    .expect("depth 1 suffices")
                    .0;
                let mass = t.prob(bit) * eta(&Cylinder::new(ReducedWord::letter(x)));
                q -= w * mass * Rational::from_integer(k.into());
            }
        }
    }
    EntropyValue::new(q)
}

pub fn entropy_skew_exact(t: &BernoulliParam) -> EntropyValue {
    entropy_skew_exact_for(&StepDistribution::default(), t)
}

/// Class of a sample: bits at coordinates −1 and 0, and the first z-letter.
fn mc_class(bit_minus: bool, bit_zero: bool, x: Letter) -> usize {
    (usize::from(bit_minus) << 3) | (usize::from(bit_zero) << 2) | x.index()
}

/// Monte Carlo estimate (in nats) of the entropy of ν_t. Samples have
/// i.i.d. Bernoulli(t) bits and z drawn from η; each contributes
/// −Σ_g m(g)·k(g,p)·log 3.
pub fn entropy_skew_mc_for(
    m: &StepDistribution,
    t: &BernoulliParam,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate, SkewError> {
    let coin = t.coin()?;
    let mut integrand = vec![0.0; 16];
    for bm in [false, true] {
        for b0 in [false, true] {
            for x in Letter::ALL {
                let p = SkewPoint::new(
                    BinaryWindow::from_bits(-1, vec![bm, b0]),
                    ReducedWord::letter(x),
                );
                integrand[mc_class(bm, b0, x)] = -m
                    .support()
                    .map(|(g, w)| to_f64(w) * rn_exponent_skew(g, &p).expect("depth 1").ln())
                    .sum::<f64>();
            }
        }
    }
    let tally = tally_parallel(seed, samples, 16, |rng: &mut SimRng| {
        let bm = coin.sample(rng);
        let b0 = coin.sample(rng);
        let x = sample_harmonic_prefix(rng, 1).first().expect("depth 1");
        mc_class(bm, b0, x)
    });
    Ok(tally.estimate(&integrand))
}

pub fn entropy_skew_mc(
    t: &BernoulliParam,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate, SkewError> {
    entropy_skew_mc_for(&StepDistribution::default(), t, samples, seed)
}

/// The parameter whose skew product has entropy `q`·log 3, i.e.
/// t = q / q_max. Fails outside [0, q_max].
pub fn realize_entropy(q: &Rational) -> Result<BernoulliParam, SkewError> {
    let max = entropy_boundary_exact_for(&StepDistribution::default()).coefficient;
    if q < &Rational::zero() || q > &max {
        return Err(SkewError::EntropyOutOfRange {
            target: Box::new(q.clone()),
            max: Box::new(max),
        });
    }
    BernoulliParam::new(q / max)
}

/// Frequency of visits to a product cylinder along a random trajectory
/// x_{k+1} = g_{k+1}·x_k started from a ν_t-random point.
#[derive(Clone, Debug, PartialEq)]
pub struct BirkhoffDiagnostic {
    pub steps: u64,
    pub frequency: f64,
    pub expected: f64,
}

/// Ergodicity diagnostic for ν_t: for an ergodic stationary measure the
/// visit frequency of a typical random trajectory converges to ν_t of the
/// set. Statistical only.
pub fn birkhoff_diagnostic(
    t: &BernoulliParam,
    target: &ProductCylinder,
    steps: u64,
    seed: u64,
) -> Result<BirkhoffDiagnostic, SkewError> {
    const Z_DEPTH: usize = 24;
    let m = StepDistribution::default();
    let sampler = m.sampler();
    let mut rng = stream_rng(seed, 0);
    let omega = BinaryWindow::new(0, Vec::new(), rng.random(), t)?;
    let mut p = SkewPoint::new(omega, sample_harmonic_prefix(&mut rng, Z_DEPTH));
    let min_depth = target.z.depth() + 2;
    let mut hits = 0u64;
    for _ in 0..steps {
        let g = Letter::from_index(sampler.sample(&mut rng));
        p = act_skew(g, &p).expect("z is kept deep");
        if p.z.len() < min_depth {
            // continue z with fresh harmonic letters: the conditional law of η
            // beyond a prefix is again uniform non-backtracking
            while p.z.len() < Z_DEPTH {
                let last = p.z.last().expect("nonempty");
                let next = last.successors().nth(rng.random_range(0..3)).unwrap();
                p.z.push(next);
            }
        }
        if target.contains(&p).expect("z is kept deep") {
            hits += 1;
        }
    }
    Ok(BirkhoffDiagnostic {
        steps,
        frequency: hits as f64 / steps as f64,
        expected: to_f64(&nu_measure(target, t)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{check_stationarity, entropy_boundary_exact, eta_of};
    use crate::rational::{int, pow3, ratio};
    use crate::word::w;

    fn param(n: i64, d: i64) -> BernoulliParam {
        BernoulliParam::new(ratio(n, d)).unwrap()
    }

    fn pc(constraints: &[(i64, bool)], z: &str) -> ProductCylinder {
        ProductCylinder::new(constraints.iter().copied().collect(), Cylinder::new(w(z)))
    }

    fn point(lo: i64, bits: &[u8], z: &str) -> SkewPoint {
        SkewPoint::new(
            BinaryWindow::from_bits(lo, bits.iter().map(|&b| b == 1).collect()),
            w(z),
        )
    }

    #[test]
    fn param_validation() {
        assert!(BernoulliParam::new(ratio(3, 2)).is_err());
        assert!(BernoulliParam::new(ratio(-1, 5)).is_err());
        assert!(BernoulliParam::new(int(1)).is_ok());
    }

    #[test]
    fn action_examples() {
        let p = point(-1, &[1, 0, 1], "bab");
        let q = act_skew(Letter::A, &p).unwrap();
        assert_eq!(q.z, w("bab"));
        assert_eq!(q.omega.get(0), p.omega.get(1));
        assert_eq!(q.omega.get(-1), p.omega.get(0));

        let p = point(-1, &[0, 1, 1], "bab");
        let q = act_skew(Letter::A, &p).unwrap();
        assert_eq!(q.z, w("abab"));
        assert_eq!(act_skew(Letter::AInv, &q).unwrap(), p);
    }

    #[test]
    fn action_depth_errors() {
        let p = point(0, &[1], "A");
        assert!(act_skew(Letter::A, &p).is_err());
        let p = point(0, &[1], "");
        assert!(act_skew(Letter::B, &p).is_err());
        // identity branch never needs depth
        let p = point(0, &[0], "");
        assert_eq!(act_skew(Letter::B, &p).unwrap().z, ReducedWord::identity());
    }

    #[test]
    fn window_extension_is_deterministic() {
        let t = param(1, 3);
        let win = BinaryWindow::new(0, vec![true], 42, &t).unwrap();
        let bits: Vec<bool> = (-20..20).map(|i| win.get(i)).collect();
        let again: Vec<bool> = (-20..20).map(|i| win.get(i)).collect();
        assert_eq!(bits, again);
        let mut grown = win.clone();
        grown.materialize(-5, 5);
        assert_eq!((grown.lo(), grown.hi()), (-5, 5));
        assert!((-20..20).all(|i| grown.get(i) == win.get(i)));
        let s = win.shifted();
        assert!((-20..20).all(|i| s.get(i) == win.get(i + 1)));
        assert_eq!(s.unshifted(), win);
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu_measure(&ProductCylinder::full(), &param(1, 2)), int(1));
        assert_eq!(
            nu_measure(&pc(&[(0, true)], "a"), &param(1, 2)),
            ratio(1, 8)
        );
        assert_eq!(
            nu_measure(&pc(&[(0, true), (1, false)], "ab"), &param(1, 3)),
            ratio(1, 54)
        );
    }

    #[test]
    fn preimage_example_and_t_one_bookkeeping() {
        let target = pc(&[], "a");
        let pieces = preimage_product_cylinder(Letter::A, &target);
        let mut expected = vec![pc(&[(0, false)], "a")];
        for z in ["a", "b", "B"] {
            expected.push(pc(&[(0, true)], z));
        }
        assert_eq!(pieces, expected);
        let at_one: Rational = pieces.iter().map(|p| nu_measure(p, &param(1, 1))).sum();
        assert_eq!(at_one, ratio(3, 4));
    }

    /// Membership via act_skew on every point of a finite grid, against the
    /// computed preimage pieces.
    #[test]
    fn preimage_matches_membership_brute_force() {
        let targets = [
            pc(&[], "a"),
            pc(&[(0, true)], "Ab"),
            pc(&[(-1, false), (1, true)], "b"),
            pc(&[(0, false)], ""),
        ];
        for g in Letter::ALL {
            for target in &targets {
                let pieces = preimage_product_cylinder(g, target);
                for code in 0u32..8 {
                    let bits: Vec<bool> = (0..3).map(|i| code >> i & 1 == 1).collect();
                    for z in ReducedWord::all_of_length(3) {
                        let p = SkewPoint::new(BinaryWindow::from_bits(-1, bits.clone()), z);
                        let member = target.contains(&act_skew(g, &p).unwrap()).unwrap();
                        let hits = pieces.iter().filter(|pc| pc.contains(&p).unwrap()).count();
                        assert_eq!(hits, usize::from(member), "{g} {target} {p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn stationarity_at_the_endpoints() {
        assert!(check_stationarity_skew(&param(0, 1), 2).passed);
        assert!(check_stationarity_skew(&param(1, 1), 2).passed);
        assert!(check_stationarity(2).passed);
    }

    /// Given the landing point ω′, a and b move z according to ω′₋₁ while
    /// a⁻¹ and b⁻¹ use ω′₀, so the fiber average is η only where the two
    /// bits agree. Cylinders that tie ω₀ to z expose this for 0 < t < 1.
    #[test]
    fn product_measure_mixes_incorrectly_on_mixed_cylinders() {
        let t = param(1, 2);
        let a = pc(&[(0, false)], "a");
        let averaged: Rational = Letter::ALL
            .iter()
            .map(|&g| {
                ratio(1, 4)
                    * preimage_product_cylinder(g, &a)
                        .iter()
                        .map(|p| nu_measure(p, &t))
                        .sum::<Rational>()
            })
            .sum();
        // a: 1/4, a⁻¹: 1/8, b: 1/12, b⁻¹: 1/8, averaged with weight 1/4
        assert_eq!(averaged, ratio(7, 48));
        assert_eq!(nu_measure(&a, &t), ratio(1, 8));

        let r = check_stationarity_skew(&t, 1);
        assert!(!r.passed);
        assert_eq!(r.worst.unwrap().label, "{ω[0]=0}×C(a)");
    }

    /// Marginals are fine: pure z-cylinders and pure ω-cylinders satisfy
    /// the identity for every t.
    #[test]
    fn marginals_are_stationary() {
        let m = StepDistribution::default();
        for t in [param(1, 4), param(1, 3), param(1, 2)] {
            let mut sets: Vec<ProductCylinder> = Cylinder::all_up_to_depth(3)
                .into_iter()
                .map(|z| ProductCylinder::new(BTreeMap::new(), z))
                .collect();
            sets.extend(
                omega_constraint_sets(2)
                    .into_iter()
                    .map(|o| ProductCylinder::new(o, Cylinder::full())),
            );
            for a in sets {
                let averaged: Rational = m
                    .support()
                    .map(|(g, w)| {
                        w * preimage_product_cylinder(g, &a)
                            .iter()
                            .map(|p| nu_measure(p, &t))
                            .sum::<Rational>()
                    })
                    .sum();
                assert_eq!(averaged, nu_measure(&a, &t), "t={t} {a}");
            }
        }
    }

    #[test]
    fn stationarity_fails_for_a_biased_walk() {
        let m =
            StepDistribution::new([ratio(1, 2), ratio(1, 6), ratio(1, 6), ratio(1, 6)]).unwrap();
        let r = check_stationarity_skew_for(&m, &param(1, 2), 1);
        assert!(!r.passed);
        assert!(r.worst.is_some());
    }

    #[test]
    fn rn_examples() {
        // derivative coordinate of a is −1
        assert_eq!(
            rn_exponent_skew(Letter::A, &point(-1, &[0], "ab")).unwrap(),
            RnExponent(0)
        );
        assert_eq!(
            rn_exponent_skew(Letter::A, &point(-1, &[1], "ab")).unwrap(),
            RnExponent(1)
        );
        assert_eq!(
            rn_exponent_skew(Letter::A, &point(-1, &[1], "ba")).unwrap(),
            RnExponent(-1)
        );
        assert_eq!(
            rn_exponent_skew(Letter::AInv, &point(0, &[1], "ab")).unwrap(),
            RnExponent(-1)
        );
        assert!(rn_exponent_skew(Letter::B, &point(-1, &[1], "")).is_err());
    }

    /// For every generator and every cell of the 8-cell partition, the
    /// ratio ν_t(g⁻¹C)/ν_t(C) over all depth-3 refinements C of the cell is
    /// the same power of 3.
    #[test]
    fn derivative_is_constant_on_cells() {
        let t = param(1, 3);
        for g in Letter::ALL {
            let coord = derivative_coordinate(g);
            for bit in [false, true] {
                for x in Letter::ALL {
                    let k = rn_exponent_skew(g, &cell_point(coord, bit, x)).unwrap();
                    for code in 0u32..(1 << 7) {
                        let mut omega: BTreeMap<i64, bool> =
                            (-3..=3).map(|i| (i, code >> (i + 3) & 1 == 1)).collect();
                        omega.insert(coord, bit);
                        for z in ReducedWord::all_of_length(3)
                            .into_iter()
                            .filter(|z| z.first() == Some(x))
                        {
                            let c = ProductCylinder::new(omega.clone(), Cylinder::new(z));
                            let pre: Rational = preimage_product_cylinder(g, &c)
                                .iter()
                                .map(|p| nu_measure(p, &t))
                                .sum();
                            assert_eq!(pre / nu_measure(&c, &t), pow3(k.0), "{g} {c}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_skew_exact(&param(0, 1)).coefficient, int(0));
        assert_eq!(entropy_skew_exact(&param(1, 1)).coefficient, ratio(1, 2));
        assert_eq!(entropy_skew_exact(&param(1, 1)), entropy_boundary_exact());
        assert_eq!(entropy_skew_exact(&param(1, 2)).coefficient, ratio(1, 4));
    }

    #[test]
    fn realize_examples() {
        assert_eq!(realize_entropy(&int(0)).unwrap(), param(0, 1));
        assert_eq!(realize_entropy(&ratio(1, 2)).unwrap(), param(1, 1));
        let t = realize_entropy(&ratio(1, 8)).unwrap();
        assert_eq!(t, param(1, 4));
        assert_eq!(entropy_skew_exact(&t).coefficient, ratio(1, 8));
        assert!(matches!(
            realize_entropy(&ratio(3, 4)),
            Err(SkewError::EntropyOutOfRange { .. })
        ));
        assert!(realize_entropy(&ratio(-1, 8)).is_err());
    }

    #[test]
    fn mc_at_zero_is_exactly_zero() {
        let e = entropy_skew_mc(&param(0, 1), 10_000, 5).unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn degeneration_at_t_one() {
        let one = param(1, 1);
        for z in ReducedWord::all_of_length(2) {
            let c = Cylinder::new(z.clone());
            assert_eq!(
                nu_measure(&ProductCylinder::new(BTreeMap::new(), c.clone()), &one),
                eta(&c)
            );
            for g in Letter::ALL {
                let pieces =
                    preimage_product_cylinder(g, &ProductCylinder::new(BTreeMap::new(), c.clone()));
                let skew: Rational = pieces.iter().map(|p| nu_measure(p, &one)).sum();
                assert_eq!(
                    skew,
                    eta_of(&preimage_cylinder(&ReducedWord::letter(g), &c))
                );
                let p = SkewPoint::new(BinaryWindow::from_bits(-1, vec![true, true]), z.clone());
                assert_eq!(
                    rn_exponent_skew(g, &p).unwrap(),
                    rn_exponent(&ReducedWord::letter(g), &z).unwrap()
                );
            }
        }
    }

    #[test]
    fn birkhoff_at_t_one_matches_eta() {
        // ν_1 = δ_{1…1} × η is stationary and the trajectory samples η
        let d = birkhoff_diagnostic(&param(1, 1), &pc(&[(0, true)], "a"), 200_000, 3).unwrap();
        assert_eq!(d.expected, 0.25);
        assert!((d.frequency - d.expected).abs() < 0.01, "{d:?}");
        let again = birkhoff_diagnostic(&param(1, 1), &pc(&[(0, true)], "a"), 200_000, 3).unwrap();
        assert_eq!(d, again);
    }
}
