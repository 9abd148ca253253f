//! The boundary of F₂: right-infinite reduced words with the harmonic
//! measure η, the left action by concatenation and reduction, and the
//! Radon–Nikodym cocycle of η.
//!
//! Boundary points never appear as infinite objects. Every operation that
//! needs one takes a finite prefix together with an explicit depth
//! requirement and fails with [`InsufficientDepth`] when the prefix is too
//! short to determine the answer.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::rational::{abs_diff, pow3, ratio, to_f64, Rational};
use crate::sampling::{ExactWeighted, WeightError};
use crate::word::{Letter, ReducedWord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("prefix of length {have} is too short; need at least {need}")]
pub struct InsufficientDepth {
    pub have: usize,
    pub need: usize,
}

/// The cylinder C(u₁,…,uₙ) of boundary words starting with `prefix`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cylinder {
    pub prefix: ReducedWord,
}

impl Cylinder {
    pub fn new(prefix: ReducedWord) -> Self {
        Self { prefix }
    }

    /// The whole boundary.
    pub fn full() -> Self {
        Self::new(ReducedWord::identity())
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }

    pub fn contains(&self, point_prefix: &ReducedWord) -> bool {
        point_prefix.starts_with(&self.prefix)
    }

    /// The three (or, for the full cylinder, four) one-letter refinements.
    pub fn children(&self) -> Vec<Cylinder> {
        match self.prefix.last() {
            None => Letter::ALL
                .iter()
                .map(|&l| Cylinder::new(ReducedWord::letter(l)))
                .collect(),
            Some(last) => last
                .successors()
                .map(|l| Cylinder::new(self.prefix.extended(l)))
                .collect(),
        }
    }

    /// Every cylinder of depth at most `depth`, shallowest first.
    pub fn all_up_to_depth(depth: usize) -> Vec<Cylinder> {
        ReducedWord::all_up_to_length(depth)
            .into_iter()
            .map(Cylinder::new)
            .collect()
    }
}

impl fmt::Display for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C({})", self.prefix)
    }
}

/// η(C(u₁,…,uₙ)) = 1/(4·3ⁿ⁻¹), and η(Z) = 1.
pub fn eta(c: &Cylinder) -> Rational {
    match c.depth() {
        0 => Rational::one(),
        n => ratio(1, 4) * pow3(1 - n as i64),
    }
}

/// A probability measure on the four generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepDistribution {
    weights: [Rational; 4],
}

impl Default for StepDistribution {
    /// m = ¼(δ_a + δ_a⁻¹ + δ_b + δ_b⁻¹).
    fn default() -> Self {
        Self {
            weights: std::array::from_fn(|_| ratio(1, 4)),
        }
    }
}

impl StepDistribution {
    /// Weights in the order a, a⁻¹, b, b⁻¹.
    pub fn new(weights: [Rational; 4]) -> Result<Self, WeightError> {
        if weights.iter().any(|w| w.is_negative()) {
            return Err(WeightError::Negative);
        }
        if weights.iter().sum::<Rational>() != Rational::one() {
            return Err(WeightError::NotNormalized);
        }
        Ok(Self { weights })
    }

    /// All mass on one letter.
    pub fn point_mass(l: Letter) -> Self {
        let mut weights: [Rational; 4] = std::array::from_fn(|_| Rational::zero());
        weights[l.index()] = Rational::one();
        Self { weights }
    }

    pub fn weight(&self, l: Letter) -> &Rational {
        &self.weights[l.index()]
    }

    pub fn weights(&self) -> &[Rational; 4] {
        &self.weights
    }

    /// Letters with positive weight, in enumeration order.
    pub fn support(&self) -> impl Iterator<Item = (Letter, &Rational)> {
        Letter::ALL
            .iter()
            .map(move |&l| (l, &self.weights[l.index()]))
            .filter(|(_, w)| !w.is_zero())
    }

    pub fn sampler(&self) -> ExactWeighted {
        ExactWeighted::new(&self.weights).expect("weights validated at construction")
    }
}

/// Exponent k of a Radon–Nikodym derivative value 3ᵏ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RnExponent(pub i64);

impl RnExponent {
    pub fn derivative(self) -> Rational {
        pow3(self.0)
    }

    /// Natural log of the derivative.
    pub fn ln(self) -> f64 {
        self.0 as f64 * crate::LN_3
    }
}

/// An entropy h = q·log 3 held as the exact coefficient q.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct EntropyValue {
    pub coefficient: Rational,
}

impl EntropyValue {
    pub fn new(coefficient: Rational) -> Self {
        Self { coefficient }
    }

    pub fn value(&self) -> f64 {
        to_f64(&self.coefficient) * crate::LN_3
    }
}

/// First `out_depth` letters of g·ξ, where ξ is known through `prefix`.
///
/// Requires `prefix.len() >= out_depth + g.len()`, which guarantees that
/// cancellation cannot reach into the requested output.
pub fn act_boundary(
    g: &ReducedWord,
    prefix: &ReducedWord,
    out_depth: usize,
) -> Result<ReducedWord, InsufficientDepth> {
    let need = out_depth + g.len();
    if prefix.len() < need {
        return Err(InsufficientDepth {
            have: prefix.len(),
            need,
        });
    }
    Ok(g.multiply(prefix).truncated(out_depth))
}

/// Disjoint cylinders whose union is {z : g·z ∈ c}.
///
/// g·z ∈ C(u) iff z ∈ g⁻¹·C(u). When g⁻¹ does not swallow all of u the image
/// is the single cylinder C(g⁻¹u); otherwise C(u) is split into its children
/// and each is treated the same way. Children are visited in letter order,
/// so the output order is deterministic.
pub fn preimage_cylinder(g: &ReducedWord, c: &Cylinder) -> Vec<Cylinder> {
    let mut out = Vec::new();
    let g_inv = g.inverse();
    let mut stack = vec![c.clone()];
    while let Some(cyl) = stack.pop() {
        if g.common_prefix_len(&cyl.prefix) < cyl.depth() || g.is_empty() {
            out.push(Cylinder::new(g_inv.multiply(&cyl.prefix)));
        } else {
            // reversed so the children come off the stack in letter order
            stack.extend(cyl.children().into_iter().rev());
        }
    }
    out
}

/// Total η-mass of a finite disjoint family of cylinders.
pub fn eta_of(cylinders: &[Cylinder]) -> Rational {
    cylinders.iter().map(eta).sum()
}

/// log₃ of d(gη)/dη at the boundary point with the given prefix:
/// k = 2·|common prefix of g and ξ| − |g|.
pub fn rn_exponent(
    g: &ReducedWord,
    xi_prefix: &ReducedWord,
) -> Result<RnExponent, InsufficientDepth> {
    if xi_prefix.len() < g.len() {
        return Err(InsufficientDepth {
            have: xi_prefix.len(),
            need: g.len(),
        });
    }
    let j = g.common_prefix_len(xi_prefix) as i64;
    Ok(RnExponent(2 * j - g.len() as i64))
}

/// Outcome of an exact stationarity check over all cylinders up to a depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StationarityReport {
    pub depth: usize,
    pub cylinders_checked: usize,
    pub passed: bool,
    /// Largest discrepancy, present only when some identity failed.
    pub worst: Option<Discrepancy>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Discrepancy {
    pub label: String,
    /// Σ_g m(g)·μ(g⁻¹A)
    pub averaged: Rational,
    /// μ(A)
    pub measure: Rational,
}

impl Discrepancy {
    pub fn gap(&self) -> Rational {
        abs_diff(&self.averaged, &self.measure)
    }
}

/// Folds identity checks into a report, tracking the worst failure.
pub(crate) struct ReportBuilder {
    depth: usize,
    checked: usize,
    worst: Option<Discrepancy>,
}

impl ReportBuilder {
    pub(crate) fn new(depth: usize) -> Self {
        Self {
            depth,
            checked: 0,
            worst: None,
        }
    }

    pub(crate) fn record(
        &mut self,
        label: impl FnOnce() -> String,
        averaged: Rational,
        measure: Rational,
    ) {
        self.checked += 1;
        if averaged == measure {
            return;
        }
        let gap = abs_diff(&averaged, &measure);
        if self.worst.as_ref().is_none_or(|w| gap > w.gap()) {
            self.worst = Some(Discrepancy {
                label: label(),
                averaged,
                measure,
            });
        }
    }

    pub(crate) fn finish(self) -> StationarityReport {
        StationarityReport {
            depth: self.depth,
            cylinders_checked: self.checked,
            passed: self.worst.is_none(),
            worst: self.worst,
        }
    }
}

/// Checks m*μ = μ on every cylinder of depth ≤ `depth` for an arbitrary
/// cylinder function μ (exact arithmetic).
pub fn check_stationarity_for<F>(
    m: &StepDistribution,
    depth: usize,
    measure: F,
) -> StationarityReport
where
    F: Fn(&Cylinder) -> Rational,
{
    let mut report = ReportBuilder::new(depth);
    let support: Vec<(ReducedWord, &Rational)> = m
        .support()
        .map(|(l, w)| (ReducedWord::letter(l), w))
        .collect();
    for c in Cylinder::all_up_to_depth(depth) {
        let averaged: Rational = support
            .iter()
            .map(|(g, w)| {
                let mass: Rational = preimage_cylinder(g, &c).iter().map(&measure).sum();
                *w * mass
            })
            .sum();
        report.record(|| c.to_string(), averaged, measure(&c));
    }
    report.finish()
}

/// Exact check that η is stationary for the default step distribution.
pub fn check_stationarity(depth: usize) -> StationarityReport {
    check_stationarity_for(&StepDistribution::default(), depth, eta)
}

/// −Σ_g m(g) Σ_{x} η(C(x))·k(g, x), with `exponent(g, x)` the log₃ derivative
/// of a generator g on the depth-1 cylinder C(x).
pub fn entropy_coefficient<F>(m: &StepDistribution, exponent: F) -> Rational
where
    F: Fn(Letter, Letter) -> i64,
{
    let mut total = Rational::zero();
    for (g, w) in m.support() {
        for x in Letter::ALL {
            let cyl = Cylinder::new(ReducedWord::letter(x));
            total -= w * eta(&cyl) * Rational::from_integer(exponent(g, x).into());
        }
    }
    total
}

/// Furstenberg entropy of (Z, η) under `m`. For length-one steps the
/// derivative is constant on depth-1 cylinders, so the integral is a finite
/// sum.
pub fn entropy_boundary_exact_for(m: &StepDistribution) -> EntropyValue {
    EntropyValue::new(entropy_coefficient(m, |g, x| {
        rn_exponent(&ReducedWord::letter(g), &ReducedWord::letter(x))
            .expect("depth-1 prefix suffices for a single letter")
            .0
    }))
}

/// h_max = ½·log 3 for the default step distribution.
pub fn entropy_boundary_exact() -> EntropyValue {
    entropy_boundary_exact_for(&StepDistribution::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::word::w;

    fn cyl(s: &str) -> Cylinder {
        Cylinder::new(w(s))
    }

    fn labels(cs: &[Cylinder]) -> Vec<String> {
        cs.iter().map(|c| c.prefix.to_string()).collect()
    }

    /// {z : g·z ∈ c} by testing every cylinder at a depth where membership
    /// is decided.
    fn preimage_by_membership(g: &ReducedWord, c: &Cylinder) -> Vec<Cylinder> {
        let depth = g.len() + c.depth();
        ReducedWord::all_of_length(depth)
            .into_iter()
            .filter(|z| {
                let image = act_boundary(g, z, c.depth()).unwrap();
                c.contains(&image)
            })
            .map(Cylinder::new)
            .collect()
    }

    #[test]
    fn eta_values() {
        assert_eq!(eta(&cyl("a")), ratio(1, 4));
        assert_eq!(eta(&cyl("ab")), ratio(1, 12));
        assert_eq!(eta(&Cylinder::full()), int(1));
    }

    #[test]
    fn eta_is_additive_over_children() {
        for c in Cylinder::all_up_to_depth(8) {
            let children: Rational = c.children().iter().map(eta).sum();
            assert_eq!(children, eta(&c), "{c}");
        }
    }

    #[test]
    fn act_boundary_examples() {
        assert_eq!(act_boundary(&w("a"), &w("bab"), 2).unwrap(), w("ab"));
        assert_eq!(act_boundary(&w("A"), &w("abab"), 2).unwrap(), w("ba"));
        let oracle =
            ReducedWord::reduce(w("ab").letters().iter().chain(w("Baba").letters()).copied());
        assert_eq!(oracle.truncated(2), w("aa"));
        assert_eq!(act_boundary(&w("ab"), &w("Baba"), 2).unwrap(), w("aa"));
        assert_eq!(
            act_boundary(&w("ab"), &w("Bab"), 2),
            Err(InsufficientDepth { have: 3, need: 4 })
        );
    }

    #[test]
    fn preimage_examples_match_membership_oracle() {
        let a_inv_case = preimage_cylinder(&w("A"), &cyl("a"));
        assert_eq!(labels(&a_inv_case), ["aa"]);
        assert_eq!(labels(&preimage_by_membership(&w("A"), &cyl("a"))), ["aa"]);

        let a_case = preimage_cylinder(&w("a"), &cyl("a"));
        assert_eq!(labels(&a_case), ["a", "b", "B"]);
        assert_eq!(
            eta_of(&a_case),
            eta_of(&preimage_by_membership(&w("a"), &cyl("a")))
        );

        assert_eq!(
            preimage_cylinder(&ReducedWord::identity(), &cyl("bA")),
            vec![cyl("bA")]
        );
    }

    #[test]
    fn preimage_partition_matches_brute_force() {
        let gs = ReducedWord::all_up_to_length(3);
        for g in &gs {
            for c in Cylinder::all_up_to_depth(2) {
                let pieces = preimage_cylinder(g, &c);
                for (i, p) in pieces.iter().enumerate() {
                    for q in &pieces[i + 1..] {
                        assert!(
                            !p.contains(&q.prefix) && !q.contains(&p.prefix),
                            "{g} {c}: overlap {p} {q}"
                        );
                    }
                }
                let brute = preimage_by_membership(g, &c);
                assert_eq!(eta_of(&pieces), eta_of(&brute), "{g} {c}");
                // same set: compare membership word by word at a common depth
                let depth = 2 * g.len() + c.depth() + 1;
                for z in ReducedWord::all_of_length(depth) {
                    let hits = pieces.iter().filter(|p| p.contains(&z)).count();
                    let member = c.contains(&act_boundary(g, &z, c.depth()).unwrap());
                    assert_eq!(hits, usize::from(member), "{g} {c} {z}");
                }
            }
        }
    }

    #[test]
    fn rn_exponent_examples_match_cylinder_ratio() {
        assert_eq!(rn_exponent(&w("a"), &w("ab")).unwrap(), RnExponent(1));
        assert_eq!(rn_exponent(&w("a"), &w("ba")).unwrap(), RnExponent(-1));
        assert_eq!(
            rn_exponent(&ReducedWord::identity(), &w("Bab")).unwrap(),
            RnExponent(0)
        );
        assert!(rn_exponent(&w("ab"), &w("a")).is_err());

        // d(gη)/dη on a deep cylinder C ∋ ξ is gη(C)/η(C) = η({z : g·z ∈ C})/η(C).
        for g in ReducedWord::all_up_to_length(3) {
            for xi in ReducedWord::all_of_length(g.len() + 2) {
                let c = Cylinder::new(xi.clone());
                let ratio_oracle = eta_of(&preimage_cylinder(&g, &c)) / eta(&c);
                assert_eq!(
                    rn_exponent(&g, &xi).unwrap().derivative(),
                    ratio_oracle,
                    "{g} {xi}"
                );
            }
        }
    }

    #[test]
    fn stationarity_examples() {
        // (1/4)(3/4 + 1/12 + 1/12 + 1/12) = 1/4
        let parts: Vec<Rational> = Letter::ALL
            .iter()
            .map(|&g| eta_of(&preimage_cylinder(&ReducedWord::letter(g), &cyl("a"))))
            .collect();
        assert_eq!(
            parts,
            vec![ratio(3, 4), ratio(1, 12), ratio(1, 12), ratio(1, 12)]
        );
        assert_eq!(ratio(1, 4) * parts.iter().sum::<Rational>(), ratio(1, 4));

        let r0 = check_stationarity(0);
        assert!(r0.passed);
        assert_eq!(r0.cylinders_checked, 1);
        assert!(check_stationarity(1).passed);
        let r6 = check_stationarity(6);
        assert!(r6.passed && r6.worst.is_none());
        assert_eq!(r6.cylinders_checked, 1 + 4 * (3usize.pow(6) - 1) / 2);
    }

    #[test]
    fn stationarity_detects_a_wrong_measure() {
        // additive and normalized, but biased toward a
        let skewed = |c: &Cylinder| match c.prefix.first() {
            None => int(1),
            Some(Letter::A) => ratio(1, 2) * pow3(1 - c.depth() as i64),
            Some(_) => ratio(1, 6) * pow3(1 - c.depth() as i64),
        };
        let r = check_stationarity_for(&StepDistribution::default(), 2, skewed);
        assert!(!r.passed);
        let worst = r.worst.unwrap();
        assert!(worst.gap() > Rational::zero());
    }

    #[test]
    fn boundary_entropy_examples() {
        assert_eq!(entropy_boundary_exact().coefficient, ratio(1, 2));
        assert!((entropy_boundary_exact().value() - 0.5493061443340549).abs() < 1e-12);

        let a_only = StepDistribution::new([ratio(1, 2), ratio(1, 2), int(0), int(0)]).unwrap();
        assert_eq!(entropy_boundary_exact_for(&a_only).coefficient, ratio(1, 2));

        let flat = entropy_coefficient(&StepDistribution::default(), |_, _| 0);
        assert_eq!(flat, int(0));
    }

    #[test]
    fn step_distribution_validation() {
        assert!(
            StepDistribution::new([ratio(1, 2), ratio(1, 2), ratio(1, 2), ratio(-1, 2)]).is_err()
        );
        assert!(StepDistribution::new([ratio(1, 2), int(0), int(0), int(0)]).is_err());
        let pm = StepDistribution::point_mass(Letter::B);
        assert_eq!(
            pm.support().map(|(l, _)| l).collect::<Vec<_>>(),
            vec![Letter::B]
        );
    }
}
