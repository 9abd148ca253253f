//! `skewlab`: command-line runner for the exact checks, estimators and
//! simulations in `skewlab-core`.
//!
//! Exit status is 0 on success, 1 when a checked property fails and 2 on
//! invalid input.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use skewlab::boundary::{check_stationarity, entropy_boundary_exact, StationarityReport};
use skewlab::rational::parse_rational;
use skewlab::skew::{
    check_stationarity_skew, entropy_skew_exact, entropy_skew_mc, realize_entropy, BernoulliParam,
};
use skewlab::torus::{
    character_walk_average, check_lebesgue_invariance, check_orbit_measure_invariance,
    enumerate_orbit, first_orbits, nonminimality_witness, parse_generator_word, random_word,
    uniform_walk_weights, BlowupSpace, IntMatrix, ProjLine, TorusPointRational, TorusPointReal,
};
use skewlab::walk::{default_window, empirical_cylinder_freq, entropy_boundary_mc, sample_walk};
use skewlab::{Rational, StepDistribution};

#[derive(Parser)]
#[command(
    name = "skewlab",
    version,
    about = "Stationary measures and entropy on free-group boundaries"
)]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of standard output
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum System {
    Boundary,
    Skew,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Method {
    Exact,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Furstenberg entropy of the boundary or of the skew product
    Entropy {
        #[arg(value_enum)]
        kind: System,
        /// Coin parameter "p/q" (skew only)
        #[arg(long)]
        t: Option<String>,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Walk length per boundary sample (boundary Monte Carlo only)
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Exact stationarity check over all cylinders up to a depth
    Stationarity {
        #[arg(long, value_enum)]
        system: System,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long)]
        t: Option<String>,
    },
    /// Coin parameter realizing the entropy q·log 3
    Realize {
        #[arg(long)]
        q: String,
    },
    /// One sample path of the random walk
    Walk {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Letters of w_k to print
        #[arg(long, default_value_t = 8)]
        prefix_depth: usize,
    },
    /// Empirical law of the boundary limit prefix against η
    HarmonicFreq {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        walks: u64,
        #[arg(long, default_value_t = 1_000)]
        steps: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Stabilization window (default: a tenth of the steps)
        #[arg(long)]
        window: Option<usize>,
    },
    /// |w_k|/k along one walk, at ten checkpoints
    Drift {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
    },
    /// SL(2,ℤ) on the torus and its blow-up
    Torus {
        #[command(subcommand)]
        sub: TorusCommand,
    },
}

#[derive(Subcommand)]
enum TorusCommand {
    /// Orbit of a rational point, or the first N orbits
    Orbit {
        /// Point "x,y" with rational coordinates
        #[arg(long, conflicts_with = "first", required_unless_present = "first")]
        point: Option<String>,
        #[arg(long)]
        first: Option<usize>,
    },
    /// Invariance of Lebesgue measure and of orbit measures
    Invariance {
        /// Matrix "a,b;c,d" (default: S and T)
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long, default_value_t = 20)]
        max_freq: i64,
        /// Orbit base points "x,y" (default: 0,0 and 1/2,0)
        #[arg(long)]
        point: Vec<String>,
    },
    /// Follow a fiber point along a word and check it stays in its bundle
    Witness {
        /// Base point "x,y" of a blown-up orbit
        #[arg(long)]
        orbit: String,
        /// Direction "dx,dy" of the starting line
        #[arg(long, default_value = "1,0")]
        line: String,
        /// Generator word over S, s, T, t (default: random)
        #[arg(long)]
        word: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of blown-up orbits
        #[arg(long, default_value_t = 2)]
        blown: usize,
    },
    /// Time average of a character along a random trajectory
    CharacterAvg {
        #[arg(long)]
        start: String,
        /// Character index "m,n"
        #[arg(long = "char")]
        character: String,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        #[arg(long)]
        seed: u64,
    },
}

/// A usage or validation error (exit 2).
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> InputError {
    InputError(msg.into())
}

/// Whether every checked property held.
type Verdict = bool;

struct Sink {
    format: Format,
    out: Box<dyn Write>,
}

impl Sink {
    fn open(format: Format, path: Option<&PathBuf>) -> io::Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { format, out })
    }

    fn emit<T: Serialize>(&mut self, records: &[T]) -> Result<(), InputError> {
        match self.format {
            Format::Json => {
                for r in records {
                    serde_json::to_writer(&mut self.out, r)?;
                    writeln!(self.out)?;
                }
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut self.out);
                for r in records {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
        }
        self.out.flush()?;
        Ok(())
    }
}

fn parse_t(t: Option<&str>) -> Result<BernoulliParam, InputError> {
    let t = t.ok_or_else(|| invalid("--t is required for the skew product"))?;
    Ok(BernoulliParam::new(parse_rational(t)?)?)
}

fn parse_pair<T: std::str::FromStr>(s: &str, what: &str) -> Result<(T, T), InputError> {
    let bad = || invalid(format!("malformed {what} {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_matrix(s: &str) -> Result<[[i64; 2]; 2], InputError> {
    let (top, bottom) = s
        .split_once(';')
        .ok_or_else(|| invalid(format!("malformed matrix {s:?}")))?;
    let (a, b) = parse_pair(top, "matrix")?;
    let (c, d) = parse_pair(bottom, "matrix")?;
    Ok([[a, b], [c, d]])
}

/// Decimal or rational coordinates.
fn parse_real_point(s: &str) -> Result<TorusPointReal, InputError> {
    s.parse::<TorusPointReal>()
        .or_else(|_| s.parse::<TorusPointRational>().map(|p| p.to_real()))
        .map_err(|_| invalid(format!("malformed point {s:?}")))
}

fn show(q: &Rational) -> String {
    q.to_string()
}

#[derive(Serialize)]
struct EntropyRecord {
    kind: &'static str,
    method: &'static str,
    t: Option<String>,
    coefficient: Option<String>,
    value: f64,
    std_error: Option<f64>,
    samples: Option<u64>,
    seed: Option<u64>,
    exact_value: f64,
    z_score: Option<f64>,
}

#[derive(Serialize)]
struct StationarityRecord {
    system: &'static str,
    t: Option<String>,
    depth: usize,
    cylinders_checked: usize,
    passed: bool,
    worst_cylinder: Option<String>,
    averaged: Option<String>,
    measure: Option<String>,
}

#[derive(Serialize)]
struct RealizeRecord {
    q: String,
    t: String,
    verified: bool,
}

#[derive(Serialize)]
struct WalkRow {
    step: usize,
    letter: String,
    length: usize,
    prefix: String,
}

#[derive(Serialize)]
struct FreqRow {
    cylinder: String,
    count: u64,
    frequency: f64,
    target: f64,
    sigma: f64,
    z_score: f64,
    stabilized: u64,
    attempted: u64,
}

#[derive(Serialize)]
struct DriftRow {
    step: usize,
    length: usize,
    drift: f64,
    target: f64,
}

#[derive(Serialize)]
struct OrbitRow {
    denominator: i64,
    size: usize,
    points: String,
}

#[derive(Serialize)]
struct InvarianceRecord {
    check: &'static str,
    subject: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct WitnessRecord {
    orbit: usize,
    base: String,
    line: String,
    steps: usize,
    seed: Option<u64>,
    stayed_in_fiber: bool,
    first_escape: Option<usize>,
    visited_bases: String,
}

#[derive(Serialize)]
struct CharacterRecord {
    start: String,
    m: i64,
    n: i64,
    steps: usize,
    seed: u64,
    re: f64,
    im: f64,
    modulus: f64,
}

fn stationarity_record(
    system: &'static str,
    t: Option<String>,
    r: StationarityReport,
) -> StationarityRecord {
    StationarityRecord {
        system,
        t,
        depth: r.depth,
        cylinders_checked: r.cylinders_checked,
        passed: r.passed,
        worst_cylinder: r.worst.as_ref().map(|w| w.label.clone()),
        averaged: r.worst.as_ref().map(|w| show(&w.averaged)),
        measure: r.worst.as_ref().map(|w| show(&w.measure)),
    }
}

fn run(cli: Cli) -> Result<Verdict, InputError> {
    let mut sink = Sink::open(cli.format, cli.output.as_ref())?;
    let m = StepDistribution::default();
    match cli.command {
        Command::Entropy {
            kind,
            t,
            method,
            samples,
            seed,
            steps,
        } => {
            let param = match kind {
                System::Skew => Some(parse_t(t.as_deref())?),
                System::Boundary if t.is_some() => {
                    return Err(invalid("--t applies to the skew product only"))
                }
                System::Boundary => None,
            };
            let exact = match &param {
                Some(p) => entropy_skew_exact(p),
                None => entropy_boundary_exact(),
            };
            let t_text = param.as_ref().map(|p| show(p.value()));
            let record = match method {
                Method::Exact => EntropyRecord {
                    kind: if param.is_some() { "skew" } else { "boundary" },
                    method: "exact",
                    t: t_text,
                    coefficient: Some(show(&exact.coefficient)),
                    value: exact.value(),
                    std_error: None,
                    samples: None,
                    seed: None,
                    exact_value: exact.value(),
                    z_score: None,
                },
                Method::Mc => {
                    let seed =
                        seed.ok_or_else(|| invalid("--seed is required for Monte Carlo runs"))?;
                    if samples == 0 {
                        return Err(invalid("--samples must be positive"));
                    }
                    let est = match &param {
                        Some(p) => entropy_skew_mc(p, samples, seed)?,
                        None => {
                            if steps == 0 {
                                return Err(invalid("--steps must be positive"));
                            }
                            entropy_boundary_mc(seed, samples, steps, &m)
                        }
                    };
                    EntropyRecord {
                        kind: if param.is_some() { "skew" } else { "boundary" },
                        method: "mc",
                        t: t_text,
                        coefficient: None,
                        value: est.mean,
                        std_error: Some(est.std_error),
                        samples: Some(est.samples),
                        seed: Some(seed),
                        exact_value: exact.value(),
                        z_score: Some(est.z_score(exact.value())),
                    }
                }
            };
            sink.emit(&[record])?;
            Ok(true)
        }
        Command::Stationarity { system, depth, t } => {
            if depth == 0 {
                return Err(invalid("--depth must be at least 1"));
            }
            let record = match system {
                System::Boundary => {
                    if t.is_some() {
                        return Err(invalid("--t applies to the skew product only"));
                    }
                    stationarity_record("boundary", None, check_stationarity(depth))
                }
                System::Skew => {
                    let p = parse_t(t.as_deref())?;
                    stationarity_record(
                        "skew",
                        Some(show(p.value())),
                        check_stationarity_skew(&p, depth),
                    )
                }
            };
            let passed = record.passed;
            sink.emit(&[record])?;
            Ok(passed)
        }
        Command::Realize { q } => {
            let q = parse_rational(&q)?;
            let t = realize_entropy(&q)?;
            let verified = entropy_skew_exact(&t).coefficient == q;
            sink.emit(&[RealizeRecord {
                q: show(&q),
                t: show(t.value()),
                verified,
            }])?;
            Ok(verified)
        }
        Command::Walk {
            seed,
            steps,
            prefix_depth,
        } => {
            let path = sample_walk(seed, steps, &m);
            let rows: Vec<WalkRow> = (0..=steps)
                .map(|k| WalkRow {
                    step: k,
                    letter: if k == 0 {
                        String::new()
                    } else {
                        path.steps()[k - 1].to_string()
                    },
                    length: path.length_at(k),
                    prefix: path.prefix_at(k, prefix_depth).to_string(),
                })
                .collect();
            sink.emit(&rows)?;
            Ok(true)
        }
        Command::HarmonicFreq {
            seed,
            walks,
            steps,
            depth,
            window,
        } => {
            if depth == 0 {
                return Err(invalid("--depth must be at least 1"));
            }
            let window = window.unwrap_or_else(|| default_window(steps));
            if window > steps {
                return Err(invalid("--window cannot exceed --steps"));
            }
            let f = empirical_cylinder_freq(seed, walks, steps, depth, window, &m);
            let (stabilized, attempted) = (f.stabilized(), f.attempted);
            let rows: Vec<FreqRow> = f
                .rows()
                .into_iter()
                .map(|r| FreqRow {
                    cylinder: r.cylinder.to_string(),
                    count: r.count,
                    frequency: r.frequency,
                    target: r.target,
                    sigma: r.sigma,
                    z_score: r.z_score,
                    stabilized,
                    attempted,
                })
                .collect();
            sink.emit(&rows)?;
            Ok(true)
        }
        Command::Drift { seed, steps } => {
            if steps == 0 {
                return Err(invalid("--steps must be positive"));
            }
            let path = sample_walk(seed, steps, &m);
            let mut checkpoints: Vec<usize> = (1..=10)
                .map(|i| steps * i / 10)
                .filter(|&k| k > 0)
                .collect();
            checkpoints.dedup();
            let rows: Vec<DriftRow> = checkpoints
                .into_iter()
                .map(|k| DriftRow {
                    step: k,
                    length: path.length_at(k),
                    drift: path.length_at(k) as f64 / k as f64,
                    target: 0.5,
                })
                .collect();
            sink.emit(&rows)?;
            Ok(true)
        }
        Command::Torus { sub } => run_torus(sub, &mut sink),
    }
}

fn run_torus(sub: TorusCommand, sink: &mut Sink) -> Result<Verdict, InputError> {
    match sub {
        TorusCommand::Orbit { point, first } => {
            let orbits = match (point, first) {
                (Some(p), _) => vec![enumerate_orbit(&p.parse::<TorusPointRational>()?)],
                (None, Some(n)) => first_orbits(n),
                (None, None) => return Err(invalid("give --point or --first")),
            };
            let rows: Vec<OrbitRow> = orbits
                .iter()
                .map(|o| OrbitRow {
                    denominator: o.denominator(),
                    size: o.len(),
                    points: o
                        .points()
                        .iter()
                        .map(|p| p.to_string())
                        .collect::<Vec<_>>()
                        .join(";"),
                })
                .collect();
            sink.emit(&rows)?;
            Ok(true)
        }
        TorusCommand::Invariance {
            matrix,
            max_freq,
            point,
        } => {
            if max_freq < 1 {
                return Err(invalid("--max-freq must be at least 1"));
            }
            let matrices = match matrix {
                Some(s) => vec![parse_matrix(&s)?],
                None => vec![*IntMatrix::S.entries(), *IntMatrix::T.entries()],
            };
            let points: Vec<TorusPointRational> = if point.is_empty() {
                vec![
                    TorusPointRational::origin(),
                    TorusPointRational::new(1, 0, 2)?,
                ]
            } else {
                point.iter().map(|p| p.parse()).collect::<Result<_, _>>()?
            };
            let mut records = Vec::new();
            for mat in matrices {
                let r = check_lebesgue_invariance(&mat, max_freq);
                records.push(InvarianceRecord {
                    check: "lebesgue",
                    subject: format!("{},{};{},{}", mat[0][0], mat[0][1], mat[1][0], mat[1][1]),
                    passed: r.passed,
                    detail: match r.failure {
                        Some((i, j)) => {
                            format!("character ({i},{j}) pulls back to the trivial character")
                        }
                        None => format!("{} characters checked", r.characters_checked),
                    },
                });
            }
            for p in points {
                let orbit = enumerate_orbit(&p);
                let r = check_orbit_measure_invariance(orbit.points());
                records.push(InvarianceRecord {
                    check: "orbit",
                    subject: p.to_string(),
                    passed: r.passed,
                    detail: r
                        .failure
                        .unwrap_or_else(|| format!("orbit of size {}", r.size)),
                });
            }
            let passed = records.iter().all(|r| r.passed);
            sink.emit(&records)?;
            Ok(passed)
        }
        TorusCommand::Witness {
            orbit,
            line,
            word,
            steps,
            seed,
            blown,
        } => {
            if blown == 0 {
                return Err(invalid("--blown must be at least 1"));
            }
            let space = BlowupSpace::with_first_orbits(blown);
            let base: TorusPointRational = orbit.parse()?;
            let (dx, dy) = parse_pair::<f64>(&line, "line")?;
            let line = ProjLine::new(dx, dy)?;
            let start = space.fiber_point(base, line).map_err(|_| {
                invalid(format!(
                    "{base} is not on one of the first {blown} blown-up orbits"
                ))
            })?;
            let word = match (word, seed) {
                (Some(w), _) => parse_generator_word(&w)?,
                (None, Some(s)) => random_word(s, 0, steps),
                (None, None) => return Err(invalid("--seed is required for a random word")),
            };
            let r = nonminimality_witness(&space, &word, &start)?;
            let passed = r.stayed_in_fiber;
            sink.emit(&[WitnessRecord {
                orbit: r.orbit,
                base: base.to_string(),
                line: line.to_string(),
                steps: r.steps,
                seed,
                stayed_in_fiber: r.stayed_in_fiber,
                first_escape: r.first_escape,
                visited_bases: r.visited_bases.join(";"),
            }])?;
            Ok(passed)
        }
        TorusCommand::CharacterAvg {
            start,
            character,
            steps,
            seed,
        } => {
            if steps == 0 {
                return Err(invalid("--steps must be positive"));
            }
            let x = parse_real_point(&start)?;
            let (m, n) = parse_pair::<i64>(&character, "character")?;
            let avg = character_walk_average(seed, steps, x, (m, n), &uniform_walk_weights())?;
            sink.emit(&[CharacterRecord {
                start: x.to_string(),
                m,
                n,
                steps,
                seed,
                re: avg.re,
                im: avg.im,
                modulus: avg.modulus,
            }])?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use skewlab::rational::to_f64;

    #[test]
    fn parses_matrices_and_pairs() {
        assert_eq!(parse_matrix("0,-1;1,0").ok(), Some([[0, -1], [1, 0]]));
        assert!(parse_matrix("0,-1,1,0").is_err());
        assert_eq!(parse_pair::<i64>("1, 0", "character").ok(), Some((1, 0)));
        assert!(parse_pair::<i64>("1", "character").is_err());
    }

    #[test]
    fn real_points_accept_rationals() {
        let p = parse_real_point("1/2,1/4").ok().unwrap();
        assert_eq!((p.x, p.y), (0.5, 0.25));
        assert!(parse_real_point("x,1").is_err());
    }

    #[test]
    fn t_validation() {
        assert!(parse_t(Some("1/3")).is_ok());
        assert!(parse_t(Some("2")).is_err());
        assert!(parse_t(Some("1/0")).is_err());
        assert!(parse_t(None).is_err());
    }

    #[test]
    fn realized_parameter_is_verified() {
        let t = realize_entropy(&parse_rational("1/8").ok().unwrap())
            .ok()
            .unwrap();
        assert_eq!(to_f64(t.value()), 0.25);
    }
}
