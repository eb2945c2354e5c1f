//! Command-line front end. Every subcommand builds a JSON value; text and
//! CSV renderings are derived from it where they make sense.

use std::ffi::OsString;
use std::io::Write;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::boundary::{fmt_q, parse_q, ContinuedFraction, Mat2, P1, Z};
use crate::coeff::Poly;
use crate::dedekind::round_trip_check;
use crate::error::{Error, Result};
use crate::farey::{check_chain, primitive_chain, random_loop, randomize_chain, reduce_loop, apply_moves, Segment};
use crate::gauss::{limiting_numeric, limiting_probe, limiting_measure, CosetModule, Side, PROBE_CAP};
use crate::levy::verify_dirichlet_identity;
use crate::modular::{basis_measures, hecke_matrix, seed_dimension_naive, seed_space, FromSeed};
use crate::nc::{iterated_measure, random_step_form, NcPseudoMeasure};
use crate::quadratic::{lyapunov_estimate, PeriodicCF};
use crate::tree::{change_of_variable, current_dump, current_from_measure, current_validate, tessellation_svg, LocallyConstantFunction};

/// Largest accepted truncation.
pub const MAX_TRUNCATION: usize = 10_000;
/// Largest accepted Farey or tree depth.
pub const MAX_DEPTH: usize = 12;
const MAX_ORBIT_STEPS: usize = 10_000_000;

#[derive(Parser, Debug)]
#[command(name = "pmq", version, about = "Exact pseudo-measures on the rational boundary")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Seed for every randomized sample.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Continued fraction and convergents of a rational.
    Cf {
        #[arg(allow_hyphen_values = true)]
        x: String,
    },
    /// Primitive chain between two points, optionally randomized by moves.
    Chain {
        #[arg(allow_hyphen_values = true)]
        from: String,
        #[arg(allow_hyphen_values = true)]
        to: String,
        #[arg(long, default_value_t = 0)]
        randomize: usize,
    },
    /// Reduce a closed chain to the empty loop by elementary moves.
    ReduceLoop {
        /// Loop vertices, e.g. "0,1,inf"; random when omitted.
        #[arg(long)]
        vertices: Option<String>,
        #[arg(long, default_value_t = 12)]
        max_len: usize,
    },
    /// Basis of the seed space in weight w.
    SeedSpace {
        #[arg(long)]
        weight: usize,
    },
    /// Hecke operator on the seed space.
    HeckeMatrix {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        weight: usize,
    },
    /// Lévy–Mellin transform checks.
    Levymellin {
        #[command(subcommand)]
        action: LevyAction,
    },
    /// Dedekind-symbol constructions.
    Dedekind {
        #[command(subcommand)]
        action: DedekindAction,
    },
    /// Tree currents.
    Current {
        #[command(subcommand)]
        action: CurrentAction,
    },
    /// Integrate a locally constant function against a seed measure.
    Integrate {
        #[command(flatten)]
        measure: SeedArgs,
        /// Term "from,to,coefficient"; repeatable.
        #[arg(long = "term", required = true)]
        terms: Vec<String>,
        /// Also check change of variable under "(a,b;c,d)".
        #[arg(long)]
        compose: Option<String>,
    },
    /// Limiting pseudo-measure along a periodic continued fraction.
    Limsym {
        #[arg(long)]
        cf: String,
        /// "gamma0:N:i" (permutation module, seed i) or "seed:wW:i".
        #[arg(long)]
        measure: String,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
    /// Non-commutative layer checks.
    Nc {
        #[command(subcommand)]
        action: NcAction,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Numeric,
}

#[derive(Args, Debug, Clone)]
pub struct SeedArgs {
    #[arg(long, default_value_t = 10)]
    pub weight: usize,
    #[arg(long, default_value_t = 0)]
    pub seed_index: usize,
}

#[derive(Subcommand, Debug)]
pub enum LevyAction {
    /// Compare both sides of the Dirichlet-series identity coefficientwise.
    Verify {
        #[command(flatten)]
        measure: SeedArgs,
        #[arg(long, env = "PMQ_TRUNCATION", default_value_t = 30)]
        trunc: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum DedekindAction {
    /// Measure → reciprocity family → measure on Farey segments.
    Roundtrip {
        #[command(flatten)]
        measure: SeedArgs,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        shift: i64,
    },
}

#[derive(Subcommand, Debug)]
pub enum CurrentAction {
    /// Edge values on the subtree of the given depth.
    Dump {
        #[command(flatten)]
        measure: SeedArgs,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Write a debug SVG of the tessellation here.
        #[arg(long)]
        svg: Option<std::path::PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum NcAction {
    /// Shuffle identities of iterated integrals of random step forms.
    ShuffleCheck {
        #[arg(long, default_value_t = 2)]
        forms: usize,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

/// Rendered result of one command.
pub struct Output {
    pub json: Value,
    pub text: Option<String>,
    pub csv: Option<Vec<Vec<String>>>,
}

impl Output {
    fn json(json: Value) -> Output {
        Output { json, text: None, csv: None }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(&self.json).expect("serializable"),
            Format::Text => self.text.clone().unwrap_or_else(|| serde_json::to_string_pretty(&self.json).expect("serializable")),
            Format::Csv => match &self.csv {
                Some(rows) => rows.iter().map(|r| r.join(",")).collect::<Vec<_>>().join("\n"),
                None => serde_json::to_string(&self.json).expect("serializable"),
            },
        }
    }
}

fn parse_p1(s: &str) -> Result<P1> {
    s.parse()
}

fn check_bound(name: &str, v: usize, max: usize) -> Result<()> {
    if v > max {
        return Err(Error::Limit(format!("{name} = {v} exceeds {max}")));
    }
    Ok(())
}

fn seed_measure(a: &SeedArgs) -> Result<FromSeed<Poly>> {
    let space = seed_space(a.weight);
    let dim = space.basis.len();
    basis_measures(&space)
        .into_iter()
        .nth(a.seed_index)
        .ok_or_else(|| Error::Domain(format!("weight {} has {dim} basis seeds", a.weight)))
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn chain_json(chain: &[Segment]) -> Value {
    Value::Array(chain.iter().map(|s| json!([s.from.to_string(), s.to.to_string()])).collect())
}

fn chain_text(chain: &[Segment]) -> String {
    chain.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("\n")
}

/// Executes a parsed command.
pub fn execute(cli: &Cli) -> Result<Output> {
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    match &cli.command {
        Command::Cf { x } => {
            let v = parse_q(x)?;
            let cf = ContinuedFraction::expand(&v);
            let conv: Vec<String> = cf.convergents().iter().skip(1).map(P1::to_string).collect();
            Ok(Output { text: Some(cf.to_string()), ..Output::json(json!({"input": fmt_q(&v), "cf": cf.to_string(), "convergents": conv})) })
        }
        Command::Chain { from, to, randomize } => {
            let (a, b) = (parse_p1(from)?, parse_p1(to)?);
            let mut chain = primitive_chain(&a, &b);
            if *randomize > 0 {
                chain = randomize_chain(&chain, *randomize, &mut rng);
            }
            check_chain(&chain)?;
            Ok(Output {
                text: Some(chain_text(&chain)),
                ..Output::json(json!({"from": a.to_string(), "to": b.to_string(), "length": chain.len(), "chain": chain_json(&chain)}))
            })
        }
        Command::ReduceLoop { vertices, max_len } => {
            let lp = match vertices {
                Some(v) => {
                    let pts = v.split(',').map(|t| parse_p1(t.trim())).collect::<Result<Vec<_>>>()?;
                    if pts.len() < 2 {
                        return Err(Error::MalformedChain("a loop needs at least two vertices".into()));
                    }
                    let mut segs = Vec::new();
                    for i in 0..pts.len() {
                        segs.push(Segment::new(pts[i].clone(), pts[(i + 1) % pts.len()].clone())?);
                    }
                    segs
                }
                None => random_loop(*max_len, &mut rng),
            };
            let moves = reduce_loop(&lp)?;
            let rest = apply_moves(&lp, &moves)?;
            Ok(Output::json(json!({"loop": chain_json(&lp), "moves": to_json(&moves), "remaining": rest.len()})))
        }
        Command::SeedSpace { weight } => {
            let space = seed_space(*weight);
            let text = space.basis.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("\n");
            Ok(Output {
                text: Some(text),
                ..Output::json(json!({
                    "weight": weight,
                    "dimension": space.basis.len(),
                    "naive_dimension": seed_dimension_naive(*weight),
                    "basis": to_json(&space.basis),
                    "warning": space.warning,
                }))
            })
        }
        Command::HeckeMatrix { n, weight } => {
            let r = hecke_matrix(*n, *weight)?;
            let csv = r.normalized.iter().map(|row| row.iter().map(fmt_q).collect()).collect();
            Ok(Output { csv: Some(csv), ..Output::json(to_json(&r)) })
        }
        Command::Levymellin { action: LevyAction::Verify { measure, trunc } } => {
            check_bound("truncation", *trunc, MAX_TRUNCATION)?;
            let mu = seed_measure(measure)?;
            let r = verify_dirichlet_identity(&mu, *trunc)?;
            let csv = std::iter::once(vec!["n".to_string(), "equal".to_string()])
                .chain(r.rows.iter().map(|row| vec![row.n.to_string(), row.equal.to_string()]))
                .collect();
            let text = format!("truncation {}: {}", r.truncation, if r.pass { "all coefficients equal" } else { "MISMATCH" });
            Ok(Output { json: to_json(&r), text: Some(text), csv: Some(csv) })
        }
        Command::Dedekind { action: DedekindAction::Roundtrip { measure, depth, shift } } => {
            check_bound("depth", *depth, MAX_DEPTH)?;
            let mu = Arc::new(seed_measure(measure)?);
            let r = round_trip_check(mu, *depth, *shift)?;
            Ok(Output::json(to_json(&r)))
        }
        Command::Current { action: CurrentAction::Dump { measure, depth, svg } } => {
            check_bound("depth", *depth, MAX_DEPTH)?;
            let c = current_from_measure(Arc::new(seed_measure(measure)?));
            let check = current_validate(&c, *depth);
            if let Some(path) = svg {
                std::fs::write(path, tessellation_svg(|e| c.value(e).to_string(), (*depth).min(4), 3))
                    .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))?;
            }
            let dump = current_dump(&c, *depth);
            let csv = dump
                .iter()
                .map(|r| vec![r.interval.from.to_string(), r.interval.to.to_string(), format!("{:?}", r.edge.dir), r.value.to_string()])
                .collect();
            Ok(Output { csv: Some(csv), ..Output::json(json!({"validation": to_json(&check), "edges": to_json(&dump)})) })
        }
        Command::Integrate { measure, terms, compose } => {
            let mu = seed_measure(measure)?;
            let mut parsed = Vec::new();
            for t in terms {
                let parts: Vec<&str> = t.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(Error::Parse(format!("term {t:?} is not from,to,coefficient")));
                }
                let s = Segment::new(parse_p1(parts[0])?, parse_p1(parts[1])?)?;
                let a: Z = parts[2].parse().map_err(|_| Error::Parse(format!("coefficient {:?}", parts[2])))?;
                parsed.push((s, a));
            }
            let f = LocallyConstantFunction::new(parsed)?;
            let mut out = json!({
                "integral": to_json(&f.integrate(&mu)),
                "canonical": f.canonical().to_string(),
            });
            if let Some(g) = compose {
                let g: Mat2 = g.parse()?;
                if !g.is_unimodular() {
                    return Err(Error::Domain(format!("{g} is not in SL(2,Z)")));
                }
                let (l, r) = change_of_variable(&f, &g, &mu);
                out["change_of_variable"] = json!({"lhs": to_json(&l), "rhs": to_json(&r), "equal": l == r});
            }
            Ok(Output::json(out))
        }
        Command::Limsym { cf, measure, mode, n } => limsym(cf, measure, *mode, *n),
        Command::Nc { action: NcAction::ShuffleCheck { forms, order, samples } } => {
            if *forms == 0 || *order == 0 || *order > 6 {
                return Err(Error::Limit("need at least one form and 1 ≤ order ≤ 6".into()));
            }
            let fs = (0..*forms).map(|_| random_step_form(&mut rng)).collect();
            let j = iterated_measure(fs, *order)?;
            let mut failures = Vec::new();
            let mut checked = 0;
            for _ in 0..*samples {
                let a = P1::frac(rand::Rng::gen_range(&mut rng, -30..30), rand::Rng::gen_range(&mut rng, 1..4));
                let b = P1::frac(rand::Rng::gen_range(&mut rng, -30..30), rand::Rng::gen_range(&mut rng, 1..4));
                let r = j.eval(&a, &b).shuffle_report(*order);
                checked += r.checked;
                if !r.pass {
                    failures.push(json!({"from": a.to_string(), "to": b.to_string(), "witness": r.witness}));
                }
            }
            Ok(Output::json(json!({"pass": failures.is_empty(), "checked": checked, "failures": failures})))
        }
    }
}

fn limsym(cf: &str, measure: &str, mode: Mode, n: usize) -> Result<Output> {
    let theta: PeriodicCF = cf.parse()?;
    let parts: Vec<&str> = measure.split(':').collect();
    match parts.as_slice() {
        ["gamma0", level, idx] => {
            let level: u64 = level.parse().map_err(|_| Error::Parse(format!("level {level:?}")))?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse(format!("seed index {idx:?}")))?;
            let m = CosetModule::gamma0(level, idx)?;
            let closed = limiting_measure(&m, &theta, Side::FromInfinity)?;
            let exact = closed.value.to_f64();
            let out = match mode {
                Mode::Exact => json!({
                    "lambda": closed.lambda.to_f64(),
                    "lambda_exact": closed.lambda.to_string(),
                    "value": to_json(&closed.value),
                    "period_window": to_json(&closed.window),
                    "gap": Value::Null,
                }),
                Mode::Numeric => {
                    check_bound("n", n, MAX_ORBIT_STEPS)?;
                    let num = limiting_numeric(&m, &theta, n, Side::FromInfinity)?;
                    let gap = num.value.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    json!({"lambda": num.lambda, "value": num.value, "exact": to_json(&closed.value), "gap": gap, "n": n})
                }
            };
            Ok(Output::json(out))
        }
        ["seed", w, idx] => {
            let weight: usize = w.trim_start_matches('w').parse().map_err(|_| Error::Parse(format!("weight {w:?}")))?;
            let seed_index: usize = idx.parse().map_err(|_| Error::Parse(format!("seed index {idx:?}")))?;
            let mu = seed_measure(&SeedArgs { weight, seed_index })?;
            match mode {
                Mode::Exact => Err(Error::Domain(
                    "polynomial values do not factor through finite coset data; no closed form (use --mode numeric for a convergence report)".into(),
                )),
                Mode::Numeric => {
                    let capped = n.clamp(2, PROBE_CAP);
                    let probe = limiting_probe(&mu, &theta, capped, |p: &Poly| p.coeffs().to_vec())?;
                    Ok(Output::json(json!({
                        "lambda": lyapunov_estimate(&theta, capped)?,
                        "value": Value::Null,
                        "gap": Value::Null,
                        "converged": probe.converged,
                        "report": to_json(&probe),
                        "n_requested": n,
                    })))
                }
            }
        }
        _ => Err(Error::Parse(format!("measure {measure:?}: expected gamma0:N:i or seed:wW:i"))),
    }
}

/// Parses `argv`, runs the command, and writes the result to `out`; errors go
/// to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(&cli) {
        Ok(o) => {
            let _ = writeln!(out, "{}", o.render(cli.format));
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
