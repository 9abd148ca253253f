//! SL(2,ℤ) acting on 𝕋² = ℝ²/ℤ² by automorphisms, and the blow-up of the
//! torus along finitely many periodic orbits.
//!
//! Each point of a registered orbit is replaced by the projective line of
//! directions through it, with fiber diameter ε_n = 2⁻ⁿ for the n-th
//! orbit. Fiber bundles over a periodic orbit are closed invariant proper
//! subsets, which is what [`nonminimality_witness`] exhibits, while the
//! base torus carries both Lebesgue measure and the uniform measures on
//! periodic orbits as invariant measures.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_integer::Integer;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::rational::Rational;
use crate::sampling::{stream_rng, ExactWeighted, WeightError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("matrix {0:?} does not have determinant 1")]
    NotUnimodular([[i64; 2]; 2]),
    #[error("regular point {0} lies on a blown-up orbit")]
    RegularOnBlownOrbit(TorusPointReal),
    #[error("fiber base {base} is not in registered orbit {orbit}")]
    UnknownFiber {
        orbit: usize,
        base: TorusPointRational,
    },
    #[error("orbit {0} is not registered")]
    UnknownOrbit(usize),
    #[error("registered orbits must be disjoint and closed; {0}")]
    BadRegistry(String),
    #[error("expected a fiber point")]
    NotAFiberPoint,
    #[error("the zero direction does not define a line")]
    ZeroDirection,
    #[error("the trivial character (0,0) is excluded")]
    TrivialCharacter,
    #[error("denominator must be positive")]
    BadDenominator,
    #[error("malformed point {0:?}")]
    MalformedPoint(String),
    #[error("malformed generator word {0:?} (use S, s, T, t)")]
    MalformedWord(String),
    #[error(transparent)]
    Weights(#[from] WeightError),
}

/// A 2×2 integer matrix of determinant 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix([[i64; 2]; 2]);

impl IntMatrix {
    pub const IDENTITY: IntMatrix = IntMatrix([[1, 0], [0, 1]]);
    /// S = [[0, −1], [1, 0]]
    pub const S: IntMatrix = IntMatrix([[0, -1], [1, 0]]);
    /// T = [[1, 1], [0, 1]]
    pub const T: IntMatrix = IntMatrix([[1, 1], [0, 1]]);

    pub fn new(entries: [[i64; 2]; 2]) -> Result<Self, TorusError> {
        if det(&entries) == 1 {
            Ok(Self(entries))
        } else {
            Err(TorusError::NotUnimodular(entries))
        }
    }

    pub fn entries(&self) -> &[[i64; 2]; 2] {
        &self.0
    }

    pub fn det(&self) -> i64 {
        det(&self.0)
    }

    pub fn inverse(&self) -> IntMatrix {
        let [[a, b], [c, d]] = self.0;
        IntMatrix([[d, -b], [-c, a]])
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let [[a, b], [c, d]] = self.0;
        let [[e, f], [g, h]] = other.0;
        IntMatrix([
            [a * e + b * g, a * f + b * h],
            [c * e + d * g, c * f + d * h],
        ])
    }
}

fn det(m: &[[i64; 2]; 2]) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// The generators S, S⁻¹, T, T⁻¹, written `S`, `s`, `T`, `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    S,
    SInv,
    T,
    TInv,
}

impl Generator {
    pub const ALL: [Generator; 4] = [Generator::S, Generator::SInv, Generator::T, Generator::TInv];

    pub fn matrix(self) -> IntMatrix {
        match self {
            Generator::S => IntMatrix::S,
            Generator::SInv => IntMatrix::S.inverse(),
            Generator::T => IntMatrix::T,
            Generator::TInv => IntMatrix::T.inverse(),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Generator::S => 'S',
            Generator::SInv => 's',
            Generator::T => 'T',
            Generator::TInv => 't',
        }
    }

    pub fn from_char(c: char) -> Option<Generator> {
        match c {
            'S' => Some(Generator::S),
            's' => Some(Generator::SInv),
            'T' => Some(Generator::T),
            't' => Some(Generator::TInv),
            _ => None,
        }
    }
}

pub fn parse_generator_word(s: &str) -> Result<Vec<Generator>, TorusError> {
    s.trim()
        .chars()
        .map(|c| Generator::from_char(c).ok_or_else(|| TorusError::MalformedWord(s.to_string())))
        .collect()
}

/// Uniformly random word over the four generators, from stream 0 of `seed`.
pub fn random_word(seed: u64, stream: u64, len: usize) -> Vec<Generator> {
    let mut rng = stream_rng(seed, stream);
    (0..len)
        .map(|_| Generator::ALL[rng.random_range(0..4)])
        .collect()
}

/// A rational torus point (x/q, y/q) with 0 ≤ x, y < q and q minimal.
///
/// The minimal common denominator q is the order of the point in the group
/// 𝕋², which every automorphism preserves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusPointRational {
    x: i64,
    y: i64,
    den: i64,
}

impl TorusPointRational {
    pub fn new(x: i64, y: i64, den: i64) -> Result<Self, TorusError> {
        if den <= 0 {
            return Err(TorusError::BadDenominator);
        }
        let (x, y) = (x.rem_euclid(den), y.rem_euclid(den));
        let g = x.gcd(&y).gcd(&den);
        Ok(Self {
            x: x / g,
            y: y / g,
            den: den / g,
        })
    }

    pub fn origin() -> Self {
        Self { x: 0, y: 0, den: 1 }
    }

    /// (x/q, y/q) as exact rationals.
    pub fn coords(&self) -> (Rational, Rational) {
        (
            Rational::new(self.x.into(), self.den.into()),
            Rational::new(self.y.into(), self.den.into()),
        )
    }

    pub fn numerators(&self) -> (i64, i64) {
        (self.x, self.y)
    }

    pub fn denominator(&self) -> i64 {
        self.den
    }

    pub fn to_real(&self) -> TorusPointReal {
        TorusPointReal::new(
            self.x as f64 / self.den as f64,
            self.y as f64 / self.den as f64,
        )
    }
}

impl fmt::Display for TorusPointRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (x, y) = self.coords();
        write!(f, "{x},{y}")
    }
}

/// Parses `"x,y"` with each coordinate an integer or `p/q`.
impl FromStr for TorusPointRational {
    type Err = TorusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TorusError::MalformedPoint(s.to_string());
        let (xs, ys) = s.split_once(',').ok_or_else(bad)?;
        let x = crate::rational::parse_rational(xs).map_err(|_| bad())?;
        let y = crate::rational::parse_rational(ys).map_err(|_| bad())?;
        let den = x.denom().lcm(y.denom());
        let to_i64 = |v: num_bigint::BigInt| i64::try_from(v).map_err(|_| bad());
        let xn = to_i64(x.numer() * (&den / x.denom()))?;
        let yn = to_i64(y.numer() * (&den / y.denom()))?;
        TorusPointRational::new(xn, yn, to_i64(den)?)
    }
}

/// A torus point in floating point, coordinates in [0, 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TorusPointReal {
    pub x: f64,
    pub y: f64,
}

impl TorusPointReal {
    pub fn new(x: f64, y: f64) -> Self {
        Self {
            x: wrap_unit(x),
            y: wrap_unit(y),
        }
    }
}

impl fmt::Display for TorusPointReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

impl FromStr for TorusPointReal {
    type Err = TorusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TorusError::MalformedPoint(s.to_string());
        let (xs, ys) = s.split_once(',').ok_or_else(bad)?;
        let x: f64 = xs.trim().parse().map_err(|_| bad())?;
        let y: f64 = ys.trim().parse().map_err(|_| bad())?;
        if !x.is_finite() || !y.is_finite() {
            return Err(bad());
        }
        Ok(TorusPointReal::new(x, y))
    }
}

fn wrap_unit(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of v mod 1 in [−½, ½).
fn wrap_centered(v: f64) -> f64 {
    let r = wrap_unit(v + 0.5) - 0.5;
    if r < -0.5 {
        r + 1.0
    } else {
        r
    }
}

/// Points the automorphisms act on.
pub trait TorusPoint: Sized {
    fn transformed(&self, m: &IntMatrix) -> Self;
}

impl TorusPoint for TorusPointRational {
    fn transformed(&self, m: &IntMatrix) -> Self {
        let [[a, b], [c, d]] = m.0.map(|row| row.map(i128::from));
        let (x, y, q) = (self.x as i128, self.y as i128, self.den as i128);
        let nx = (a * x + b * y).rem_euclid(q) as i64;
        let ny = (c * x + d * y).rem_euclid(q) as i64;
        TorusPointRational::new(nx, ny, self.den).expect("positive denominator")
    }
}

impl TorusPoint for TorusPointReal {
    fn transformed(&self, m: &IntMatrix) -> Self {
        let [[a, b], [c, d]] = m.0.map(|row| row.map(|v| v as f64));
        TorusPointReal::new(a * self.x + b * self.y, c * self.x + d * self.y)
    }
}

/// (x, y) ↦ M·(x, y)ᵀ mod 1.
pub fn apply_torus<P: TorusPoint>(m: &IntMatrix, p: &P) -> P {
    p.transformed(m)
}

/// A finite orbit, in breadth-first discovery order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicOrbit {
    points: Vec<TorusPointRational>,
}

impl PeriodicOrbit {
    pub fn points(&self) -> &[TorusPointRational] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn denominator(&self) -> i64 {
        self.points[0].denominator()
    }

    pub fn contains(&self, p: &TorusPointRational) -> bool {
        self.points.contains(p)
    }
}

/// Breadth-first closure of {p} under S, T and their inverses.
pub fn enumerate_orbit(p: &TorusPointRational) -> PeriodicOrbit {
    let mut seen = HashSet::from([*p]);
    let mut points = vec![*p];
    let mut queue = VecDeque::from([*p]);
    while let Some(q) = queue.pop_front() {
        for g in Generator::ALL {
            let r = q.transformed(&g.matrix());
            if seen.insert(r) {
                points.push(r);
                queue.push_back(r);
            }
        }
    }
    PeriodicOrbit { points }
}

/// The first `count` orbits, enumerated by denominator and then by the
/// lexicographically smallest point.
pub fn first_orbits(count: usize) -> Vec<PeriodicOrbit> {
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let mut den = 1;
    while orbits.len() < count {
        for x in 0..den {
            for y in 0..den {
                let p = TorusPointRational::new(x, y, den).expect("positive");
                if p.denominator() != den || orbits.iter().any(|o| o.contains(&p)) {
                    continue;
                }
                orbits.push(enumerate_orbit(&p));
                if orbits.len() == count {
                    return orbits;
                }
            }
        }
        den += 1;
    }
    orbits
}

/// A line through the origin, stored as a unit vector whose first nonzero
/// coordinate is positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjLine {
    dx: f64,
    dy: f64,
}

impl ProjLine {
    pub fn new(x: f64, y: f64) -> Result<Self, TorusError> {
        let n = x.hypot(y);
        if n == 0.0 || !n.is_finite() {
            return Err(TorusError::ZeroDirection);
        }
        let (mut dx, mut dy) = (x / n, y / n);
        if dx < 0.0 || (dx == 0.0 && dy < 0.0) {
            dx = -dx;
            dy = -dy;
        }
        Ok(Self {
            dx: dx + 0.0,
            dy: dy + 0.0,
        })
    }

    pub fn direction(&self) -> (f64, f64) {
        (self.dx, self.dy)
    }

    /// Angle between the lines, in [0, π/2].
    pub fn angle_to(&self, other: &ProjLine) -> f64 {
        let dot = (self.dx * other.dx + self.dy * other.dy).abs().min(1.0);
        dot.acos()
    }

    /// The line as the point (cos 2θ, sin 2θ) of the unit circle.
    fn doubled(&self) -> (f64, f64) {
        doubled_angle(self.dx, self.dy)
    }
}

impl fmt::Display for ProjLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}:{})", self.dx, self.dy)
    }
}

fn doubled_angle(dx: f64, dy: f64) -> (f64, f64) {
    (dx * dx - dy * dy, 2.0 * dx * dy)
}

/// ℓ ↦ M·ℓ.
pub fn apply_proj(m: &IntMatrix, l: &ProjLine) -> ProjLine {
    let [[a, b], [c, d]] = m.0.map(|row| row.map(|v| v as f64));
    ProjLine::new(a * l.dx + b * l.dy, c * l.dx + d * l.dy).expect("invertible matrix")
}

/// A point of the blown-up space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlowupPoint {
    Regular(TorusPointReal),
    Fiber {
        orbit: usize,
        base: TorusPointRational,
        line: ProjLine,
    },
}

/// Torus point under the collapse map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FactorPoint {
    Real(TorusPointReal),
    Rational(TorusPointRational),
}

impl FactorPoint {
    pub fn transformed(&self, m: &IntMatrix) -> FactorPoint {
        match self {
            FactorPoint::Real(p) => FactorPoint::Real(p.transformed(m)),
            FactorPoint::Rational(p) => FactorPoint::Rational(p.transformed(m)),
        }
    }
}

/// The torus with the points of `orbits[n]` blown up to projective lines of
/// diameter ε_n = 2⁻ⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct BlowupSpace {
    orbits: Vec<PeriodicOrbit>,
    /// every registered base point with its orbit index
    bases: Vec<(usize, TorusPointRational)>,
}

impl Default for BlowupSpace {
    /// {(0,0)} and the denominator-2 orbit.
    fn default() -> Self {
        Self::with_first_orbits(2)
    }
}

impl BlowupSpace {
    pub fn new(orbits: Vec<PeriodicOrbit>) -> Result<Self, TorusError> {
        let mut seen = HashSet::new();
        for (n, o) in orbits.iter().enumerate() {
            if !check_orbit_measure_invariance(o.points()).passed {
                return Err(TorusError::BadRegistry(format!("orbit {n} is not closed")));
            }
            for p in o.points() {
                if !seen.insert(*p) {
                    return Err(TorusError::BadRegistry(format!(
                        "point {p} registered twice"
                    )));
                }
            }
        }
        let bases = orbits
            .iter()
            .enumerate()
            .flat_map(|(n, o)| o.points().iter().map(move |&p| (n, p)))
            .collect();
        Ok(Self { orbits, bases })
    }

    pub fn with_first_orbits(count: usize) -> Self {
        Self::new(first_orbits(count)).expect("enumerated orbits are disjoint and closed")
    }

    pub fn orbits(&self) -> &[PeriodicOrbit] {
        &self.orbits
    }

    /// ε_n = 2⁻ⁿ.
    pub fn epsilon(&self, n: usize) -> f64 {
        0.5f64.powi(n as i32)
    }

    pub fn orbit_of(&self, p: &TorusPointRational) -> Option<usize> {
        self.orbits.iter().position(|o| o.contains(p))
    }

    /// Fiber point over `base`, which must lie on a registered orbit.
    pub fn fiber_point(
        &self,
        base: TorusPointRational,
        line: ProjLine,
    ) -> Result<BlowupPoint, TorusError> {
        let orbit = self.orbit_of(&base).ok_or(TorusError::UnknownFiber {
            orbit: usize::MAX,
            base,
        })?;
        Ok(BlowupPoint::Fiber { orbit, base, line })
    }

    /// The registered base point with these real coordinates, if any.
    fn aliased_base(&self, x: &TorusPointReal) -> Option<TorusPointRational> {
        self.bases
            .iter()
            .map(|(_, b)| *b)
            .find(|b| b.to_real() == *x)
    }

    fn validate(&self, p: &BlowupPoint) -> Result<(), TorusError> {
        match p {
            BlowupPoint::Regular(x) => match self.aliased_base(x) {
                Some(_) => Err(TorusError::RegularOnBlownOrbit(*x)),
                None => Ok(()),
            },
            BlowupPoint::Fiber { orbit, base, .. } => {
                let o = self
                    .orbits
                    .get(*orbit)
                    .ok_or(TorusError::UnknownOrbit(*orbit))?;
                if o.contains(base) {
                    Ok(())
                } else {
                    Err(TorusError::UnknownFiber {
                        orbit: *orbit,
                        base: *base,
                    })
                }
            }
        }
    }

    /// Coordinates of the embedding that defines [`blowup_metric`]: the
    /// torus position, plus one plane vector per registered base point.
    fn embedding(&self, p: &BlowupPoint) -> (TorusPointReal, Vec<(f64, f64)>) {
        let pos = match p {
            BlowupPoint::Regular(x) => *x,
            BlowupPoint::Fiber { base, .. } => base.to_real(),
        };
        let charts = self
            .bases
            .iter()
            .map(|&(n, b)| {
                let scale = self.epsilon(n) / 2.0;
                if let BlowupPoint::Fiber { base, line, .. } = p {
                    if *base == b {
                        let (u, v) = line.doubled();
                        return (scale * u, scale * v);
                    }
                }
                let br = b.to_real();
                let (dx, dy) = (wrap_centered(pos.x - br.x), wrap_centered(pos.y - br.y));
                let r = dx.hypot(dy);
                let radius = 0.25 / self.orbits[n].denominator() as f64;
                if r == 0.0 || r >= radius {
                    return (0.0, 0.0);
                }
                let bump = 1.0 - r / radius;
                let (u, v) = doubled_angle(dx / r, dy / r);
                (scale * bump * u, scale * bump * v)
            })
            .collect();
        (pos, charts)
    }
}

/// M acting on the blown-up space: regular points move on the torus and
/// fiber points move their base and their line.
pub fn apply_blowup(
    m: &IntMatrix,
    p: &BlowupPoint,
    space: &BlowupSpace,
) -> Result<BlowupPoint, TorusError> {
    space.validate(p)?;
    Ok(match p {
        BlowupPoint::Regular(x) => BlowupPoint::Regular(x.transformed(m)),
        BlowupPoint::Fiber { orbit, base, line } => BlowupPoint::Fiber {
            orbit: *orbit,
            base: base.transformed(m),
            line: apply_proj(m, line),
        },
    })
}

/// Shortest-displacement Euclidean distance on the torus.
pub fn torus_distance(p: &TorusPointReal, q: &TorusPointReal) -> f64 {
    wrap_centered(p.x - q.x).hypot(wrap_centered(p.y - q.y))
}

/// Distance on the blown-up space.
///
/// Pulled back from an embedding: the torus position together with, for
/// each blown-up base b of orbit n, the plane vector (ε_n/2)·ρ·(cos 2θ,
/// sin 2θ). On the fiber over b, θ is the angle of the line and ρ = 1; for
/// other points θ is the direction of the chord from b and ρ decays
/// linearly to 0 at distance 1/(4q) (q the orbit's denominator). A torus
/// sequence therefore converges to a fiber point exactly when it converges
/// to the base with chord directions converging to the line. Two lines on
/// one fiber at angle Δ are ε_n·sin Δ apart, so the fiber has diameter ε_n.
pub fn blowup_metric(p: &BlowupPoint, q: &BlowupPoint, space: &BlowupSpace) -> f64 {
    let (xp, fp) = space.embedding(p);
    let (xq, fq) = space.embedding(q);
    torus_distance(&xp, &xq)
        + fp.iter()
            .zip(&fq)
            .map(|(a, b)| (a.0 - b.0).hypot(a.1 - b.1))
            .sum::<f64>()
}

/// Collapses every fiber to its base point.
pub fn factor_map(p: &BlowupPoint) -> FactorPoint {
    match p {
        BlowupPoint::Regular(x) => FactorPoint::Real(*x),
        BlowupPoint::Fiber { base, .. } => FactorPoint::Rational(*base),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LebesgueInvarianceReport {
    pub max_freq: i64,
    pub characters_checked: usize,
    pub passed: bool,
    /// a nonzero character index whose pullback is trivial
    pub failure: Option<(i64, i64)>,
}

/// Lebesgue measure is M-invariant iff every nontrivial character
/// e^{2πi(mx+ny)} pulls back to a nontrivial character, i.e. (m, n)·M ≠ 0;
/// then both integrals vanish. Checked for |m|, |n| ≤ `max_freq`. Takes raw
/// entries so that singular matrices can be tested.
pub fn check_lebesgue_invariance(m: &[[i64; 2]; 2], max_freq: i64) -> LebesgueInvarianceReport {
    let mut checked = 0;
    let mut failure = None;
    'outer: for i in -max_freq..=max_freq {
        for j in -max_freq..=max_freq {
            if i == 0 && j == 0 {
                continue;
            }
            checked += 1;
            let pulled = (i * m[0][0] + j * m[1][0], i * m[0][1] + j * m[1][1]);
            if pulled == (0, 0) {
                failure = Some((i, j));
                break 'outer;
            }
        }
    }
    LebesgueInvarianceReport {
        max_freq,
        characters_checked: checked,
        passed: failure.is_none(),
        failure,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitInvarianceReport {
    pub size: usize,
    pub passed: bool,
    pub failure: Option<String>,
}

/// The uniform measure on a finite set is invariant iff every generator
/// maps the set bijectively onto itself.
pub fn check_orbit_measure_invariance(points: &[TorusPointRational]) -> OrbitInvarianceReport {
    let set: BTreeSet<TorusPointRational> = points.iter().copied().collect();
    let mut failure = None;
    if set.len() != points.len() {
        failure = Some("repeated point".to_string());
    }
    for g in Generator::ALL {
        if failure.is_some() {
            break;
        }
        let image: BTreeSet<TorusPointRational> =
            set.iter().map(|p| p.transformed(&g.matrix())).collect();
        if image != set {
            let escaped = image
                .difference(&set)
                .next()
                .map(|p| p.to_string())
                .unwrap_or_default();
            failure = Some(format!(
                "{} maps the set outside itself (to {escaped})",
                g.as_char()
            ));
        }
    }
    OrbitInvarianceReport {
        size: set.len(),
        passed: failure.is_none(),
        failure,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub orbit: usize,
    pub steps: usize,
    pub stayed_in_fiber: bool,
    pub first_escape: Option<usize>,
    /// distinct base points visited, sorted
    pub visited_bases: Vec<String>,
}

/// Follows a fiber point along `word` (applying the letters left to right)
/// and checks that it stays in the fiber bundle over its orbit.
pub fn nonminimality_witness(
    space: &BlowupSpace,
    word: &[Generator],
    start: &BlowupPoint,
) -> Result<WitnessReport, TorusError> {
    let BlowupPoint::Fiber { orbit, base, .. } = start else {
        return Err(TorusError::NotAFiberPoint);
    };
    space.validate(start)?;
    let bundle = &space.orbits[*orbit];
    let mut visited = BTreeSet::from([*base]);
    let mut first_escape = None;
    let mut p = *start;
    for (k, g) in word.iter().enumerate() {
        p = apply_blowup(&g.matrix(), &p, space)?;
        match p {
            BlowupPoint::Fiber {
                orbit: o, base: b, ..
            } if o == *orbit && bundle.contains(&b) => {
                visited.insert(b);
            }
            _ => {
                first_escape = Some(k + 1);
                break;
            }
        }
    }
    Ok(WitnessReport {
        orbit: *orbit,
        steps: word.len(),
        stayed_in_fiber: first_escape.is_none(),
        first_escape,
        visited_bases: visited.iter().map(|b| b.to_string()).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CharacterAverage {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

/// Average of `f(x_k)` over k = 1..=steps along x_k = g_k·x_{k−1}, with the
/// g_k i.i.d. with the given weights on S, S⁻¹, T, T⁻¹.
pub fn trajectory_average<F>(
    seed: u64,
    steps: usize,
    start: TorusPointReal,
    weights: &[Rational; 4],
    f: F,
) -> Result<Complex64, TorusError>
where
    F: Fn(&TorusPointReal) -> Complex64,
{
    let sampler = ExactWeighted::new(weights)?;
    let mut rng = stream_rng(seed, 0);
    let mut x = start;
    let mut sum = Complex64::new(0.0, 0.0);
    for _ in 0..steps {
        x = x.transformed(&Generator::ALL[sampler.sample(&mut rng)].matrix());
        sum += f(&x);
    }
    Ok(sum / steps.max(1) as f64)
}

/// Time average of the character e^{2πi(mx+ny)} along a random trajectory.
/// Lebesgue measure integrates every nontrivial character to 0.
pub fn character_walk_average(
    seed: u64,
    steps: usize,
    start: TorusPointReal,
    char_index: (i64, i64),
    weights: &[Rational; 4],
) -> Result<CharacterAverage, TorusError> {
    if char_index == (0, 0) {
        return Err(TorusError::TrivialCharacter);
    }
    let (m, n) = (char_index.0 as f64, char_index.1 as f64);
    let avg = trajectory_average(seed, steps, start, weights, |p| {
        Complex64::from_polar(1.0, 2.0 * PI * (m * p.x + n * p.y))
    })?;
    Ok(CharacterAverage {
        re: avg.re,
        im: avg.im,
        modulus: avg.norm(),
    })
}

pub fn uniform_walk_weights() -> [Rational; 4] {
    std::array::from_fn(|_| Rational::new(1.into(), 4.into()))
}
