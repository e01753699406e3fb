//! Command-line front end.
//!
//! Exit codes: 0 success, 1 other failure, 2 parse error, 3 search budget
//! exceeded, 4 failed precondition on the input (point is not a dissipative
//! equilibrium, exact mode on float data), 5 integrator failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ParseError, PolyError, QuadratizeError, SimulateError, StabilityError};
use crate::json::{round12, serialize_points, serialize_result};
use crate::models::{bench_row, BenchRow};
use crate::parser::{parse_points, parse_system};
use crate::poly::{format_rational, CoeffKind, Point, PolySystem};
use crate::quadratize::{branch_and_bound, is_inner_quadratic, QuadratizationResult, RewriteRule, SearchOptions};
use crate::random;
use crate::simulate::{compare, integrate, to_float_point, IntegrateOptions, Status, Trajectory};
use crate::stability::{
    build_stabilizers, check_dissipative, dissipative_quadratize, is_unit_triangular, stabilized,
    stabilizer_y_jacobian, CheckMode, CheckOptions, DissipateOptions, PointReport, StabilityReport, Verdict,
    DEFAULT_TOL,
};

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_PRECONDITION: u8 = 4;
pub const EXIT_INTEGRATOR: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "dissquad", version, about = "Dissipativity-preserving quadratization of polynomial ODEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find an optimal inner-quadratic monomial quadratization.
    Quadratize(QuadratizeArgs),
    /// Quadratize and stabilize so that the given equilibria stay dissipative.
    Dissipate(DissipateArgs),
    /// Classify equilibria of a system as given, or run randomized self-checks.
    Check(CheckArgs),
    /// Integrate a system, or its quadratization with `--lift`.
    Simulate(SimulateArgs),
    /// Coupled Duffing oscillator benchmark.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    FewestLifted,
    MostLifted,
}

impl From<RuleArg> for RewriteRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::FewestLifted => RewriteRule::FewestLifted,
            RuleArg::MostLifted => RewriteRule::MostLifted,
        }
    }
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Largest number of new variables to try.
    #[arg(long)]
    pub budget: Option<usize>,
    /// How quadratic monomials are written in the new variables.
    #[arg(long, value_enum, default_value = "fewest-lifted")]
    pub rewrite: RuleArg,
    /// Fall back to the universal variable set when the budget runs out.
    #[arg(long)]
    pub fallback: bool,
}

impl SearchArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            budget: self.budget,
            threads: None,
            universal_fallback: self.fallback,
            rule: self.rewrite.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Equilibria as `(a, b); (c, d)` or a file containing them.
    #[arg(long)]
    pub equilibria: String,
    /// Defaults to exact for rational input and numeric otherwise.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Real-part margin for the numeric check.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct QuadratizeArgs {
    /// System file, `-` for stdin.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DissipateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub stability: StabilityArgs,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// System whose equilibria are classified as given.
    #[arg(long, required_unless_present = "self_test", requires = "equilibria")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub equilibria: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Run randomized invariant checks on generated systems.
    #[arg(long, conflicts_with = "input")]
    pub self_test: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Initial point, e.g. `0.1, 0.01`.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    #[arg(long)]
    pub t_end: f64,
    /// Integrate the quadratization instead, starting from the lifted point,
    /// and report drift against the original system.
    #[arg(long)]
    pub lift: bool,
    /// With `--lift`: stabilize for these equilibria first.
    #[arg(long, requires = "lift")]
    pub equilibria: Option<String>,
    /// With `--lift`: use this stabilizer gain instead of searching for one.
    #[arg(long, requires = "lift", conflicts_with = "equilibria")]
    pub lambda: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub abs_tol: f64,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long, default_value_t = 4)]
    pub n_max: usize,
    /// Also time the exact check.
    #[arg(long)]
    pub exact: bool,
    /// Per-row limit in seconds for the exact check.
    #[arg(long, default_value_t = 2000.0)]
    pub timeout: f64,
    /// Run rows concurrently (timings are then not comparable).
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub budget: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn parse_err(source: &str, e: ParseError) -> CliError {
    CliError::new(EXIT_PARSE, format!("{source}: {e}"))
}

impl From<QuadratizeError> for CliError {
    fn from(e: QuadratizeError) -> Self {
        let code = match e {
            QuadratizeError::BudgetExceeded { .. } => EXIT_BUDGET,
            _ => EXIT_OTHER,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        let code = match &e {
            StabilityError::Quadratize(q) => return q.clone().into(),
            StabilityError::NotEquilibrium { .. }
            | StabilityError::NotDissipative { .. }
            | StabilityError::Poly(PolyError::PointArity { .. }) => EXIT_PRECONDITION,
            _ => EXIT_OTHER,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<SimulateError> for CliError {
    fn from(e: SimulateError) -> Self {
        CliError::new(EXIT_INTEGRATOR, e.to_string())
    }
}

impl From<PolyError> for CliError {
    fn from(e: PolyError) -> Self {
        let code = match e {
            PolyError::PointArity { .. } => EXIT_PRECONDITION,
            _ => EXIT_OTHER,
        };
        CliError::new(code, e.to_string())
    }
}

fn read_source(path: &Path) -> Result<String, CliError> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)
            .map_err(|e| CliError::new(EXIT_OTHER, format!("stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CliError::new(EXIT_OTHER, format!("{}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<PolySystem, CliError> {
    let src = read_source(path)?;
    parse_system(&src).map_err(|e| parse_err(&path.display().to_string(), e))
}

/// Points from a literal spec or a file. Bare coordinates without parentheses
/// are read as one point per `;`-separated group.
fn load_points(spec: &str, arity: usize) -> Result<Vec<Point>, CliError> {
    let (src, origin) = if Path::new(spec).is_file() {
        (read_source(Path::new(spec))?, spec.to_string())
    } else {
        (spec.to_string(), "points".to_string())
    };
    let src = if src.contains('(') {
        src
    } else {
        src.split(';')
            .filter(|g| !g.trim().is_empty())
            .map(|g| format!("({g})"))
            .collect::<Vec<_>>()
            .join(";")
    };
    parse_points(&src, Some(arity)).map_err(|e| parse_err(&origin, e))
}

/// Resolves the check mode. Exact mode is refused for float input; without
/// `--mode` the choice follows the input.
fn resolve_mode(mode: Option<ModeArg>, sys: &PolySystem, pts: &[Point]) -> Result<CheckMode, CliError> {
    let float = sys.kind() == CoeffKind::Float || pts.iter().any(|p| p.kind() == CoeffKind::Float);
    match mode {
        Some(ModeArg::Exact) if float => Err(CliError::new(
            EXIT_PRECONDITION,
            "exact mode needs rational input but a literal with an exponent (float) was found; \
             write it as a decimal or fraction, or use --mode numeric",
        )),
        Some(ModeArg::Exact) => Ok(CheckMode::Exact),
        Some(ModeArg::Numeric) => Ok(CheckMode::Numeric),
        None if float => Ok(CheckMode::Numeric),
        None => Ok(CheckMode::Exact),
    }
}

fn format_or(output: &OutputArgs, default: Format, allowed: &[Format]) -> Result<Format, CliError> {
    let f = output.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::new(
            EXIT_OTHER,
            format!("format {f:?} is not available for this command").to_lowercase(),
        ))
    }
}

/// Runs a parsed command and returns what should be written to the output.
pub fn run(cli: &Cli) -> Result<(String, Option<PathBuf>), CliError> {
    match &cli.command {
        Command::Quadratize(a) => Ok((cmd_quadratize(a)?, a.output.out.clone())),
        Command::Dissipate(a) => Ok((cmd_dissipate(a)?, a.output.out.clone())),
        Command::Check(a) => Ok((cmd_check(a)?, a.output.out.clone())),
        Command::Simulate(a) => Ok((cmd_simulate(a)?, a.output.out.clone())),
        Command::Bench(a) => Ok((cmd_bench(a)?, a.output.out.clone())),
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_OTHER)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok((text, None)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok((text, Some(path))) => match std::fs::write(&path, text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                ExitCode::from(EXIT_OTHER)
            }
        },
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn quadratization_text(q: &QuadratizationResult) -> String {
    let mut s = String::new();
    if q.g.is_empty() {
        s.push_str("already quadratic, no new variables\n");
    } else {
        s.push_str("new variables:\n");
        for d in q.new_var_definitions() {
            let _ = writeln!(s, "  {d}");
        }
    }
    s.push_str("equations:\n");
    for line in q.lifted_system().to_string().lines() {
        let _ = writeln!(s, "  {line}");
    }
    s
}

pub fn cmd_quadratize(a: &QuadratizeArgs) -> Result<String, CliError> {
    let fmt = format_or(&a.output, Format::Json, &[Format::Json, Format::Text])?;
    let sys = load_system(&a.input)?;
    let q = branch_and_bound(&sys, &a.search.options())?;
    Ok(match fmt {
        Format::Text => quadratization_text(&q),
        _ => serialize_result(&q, None, None),
    })
}

fn eigen_text(r: &PointReport) -> String {
    if let Some(ev) = &r.exact_eigenvalues {
        let v: Vec<String> = ev.iter().map(format_rational).collect();
        return format!("[{}]", v.join(", "));
    }
    if r.eigenvalues.is_empty() {
        return "(not all rational)".into();
    }
    let v: Vec<String> = r
        .eigenvalues
        .iter()
        .map(|z| {
            let (re, im) = (round12(z.re), round12(z.im));
            if im == 0.0 {
                format!("{re}")
            } else {
                format!("{re}{}{}i", if im < 0.0 { "-" } else { "+" }, im.abs())
            }
        })
        .collect();
    format!("[{}]", v.join(", "))
}

fn report_text(q: &QuadratizationResult, rep: &StabilityReport) -> String {
    let mut s = quadratization_text(q);
    let _ = writeln!(s, "mode: {}", rep.mode);
    let _ = writeln!(s, "lambda: {}", rep.lambda);
    s.push_str("trace:\n");
    for step in &rep.trace {
        for p in &step.points {
            let _ = writeln!(s, "  lambda={:<6} {:<24} {:<16} {}", step.lambda, p.point.to_string(), p.verdict.to_string(), eigen_text(p));
        }
    }
    for w in &rep.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

pub fn cmd_dissipate(a: &DissipateArgs) -> Result<String, CliError> {
    let fmt = format_or(&a.output, Format::Json, &[Format::Json, Format::Text])?;
    let sys = load_system(&a.input)?;
    let pts = load_points(&a.stability.equilibria, sys.dim())?;
    let opts = DissipateOptions {
        check: CheckOptions {
            mode: resolve_mode(a.stability.mode, &sys, &pts)?,
            tol: a.stability.tol,
        },
        search: a.search.options(),
        timeout: a.timeout.map(Duration::from_secs_f64),
    };
    let (q, rep) = dissipative_quadratize(&sys, &pts, &opts)?;
    let h = build_stabilizers(&q)?;
    Ok(match fmt {
        Format::Text => report_text(&q, &rep),
        _ => serialize_result(&q, Some(&h), Some(&rep)),
    })
}

pub fn cmd_check(a: &CheckArgs) -> Result<String, CliError> {
    if a.self_test {
        let fmt = format_or(&a.output, Format::Text, &[Format::Text, Format::Json])?;
        return self_test(a.seed, a.count, fmt);
    }
    let fmt = format_or(&a.output, Format::Json, &[Format::Json, Format::Text])?;
    let path = a.input.as_ref().expect("clap enforces --input");
    let sys = load_system(path)?;
    let spec = a.equilibria.as_ref().expect("clap enforces --equilibria");
    let pts = load_points(spec, sys.dim())?;
    let opts = CheckOptions {
        mode: resolve_mode(a.mode, &sys, &pts)?,
        tol: a.tol,
    };
    let reports = pts
        .iter()
        .map(|p| check_dissipative(&sys, p, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(match fmt {
        Format::Text => {
            let mut s = String::new();
            for r in &reports {
                let _ = writeln!(s, "{:<24} {:<16} {}", r.point.to_string(), r.verdict.to_string(), eigen_text(r));
            }
            s
        }
        _ => serialize_points(sys.vars().names(), opts.mode, opts.tol, &reports),
    })
}

#[derive(Default, serde::Serialize)]
struct Tally {
    name: &'static str,
    passed: usize,
    total: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    failures: Vec<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            ..Default::default()
        }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else if self.failures.len() < 5 {
            self.failures.push(what());
        }
    }
}

/// Seeded random systems run through the pipeline, checking its invariants.
fn self_test(seed: u64, count: usize, fmt: Format) -> Result<String, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sound = Tally::new("soundness");
    let mut inner = Tally::new("inner-quadratic");
    let mut vanish = Tally::new("stabilizer-vanishing");
    let mut tri = Tally::new("unit-triangular-jacobian");
    let mut doubling = Tally::new("lambda-doubling");
    let opts = SearchOptions::default();

    for _ in 0..count {
        let n = rng.gen_range(1..=2);
        let sys = random::system(&mut rng, n, 3, 4);
        let q = branch_and_bound(&sys, &opts)?;
        sound.record(q.verify().is_ok(), || sys.to_string());
        inner.record(is_inner_quadratic(n, &q.g), || sys.to_string());
        let h = build_stabilizers(&q)?;
        let vanishes = h.h.iter().all(|p| q.substitute(p).is_ok_and(|s| s.is_zero()));
        let qs = stabilized(&q, &h, 3);
        vanish.record(vanishes && qs.verify().is_ok(), || sys.to_string());
        let pt = Point((0..n).map(|_| random::small_rational(&mut rng)).map(crate::poly::Coeff::Exact).collect());
        let lp = q.lift_point(&pt)?;
        let jy = stabilizer_y_jacobian(&h, n, &lp)?;
        tri.record(is_unit_triangular(&jy), || format!("{sys} at {pt}"));

        // Doubling: shift a random system so that a chosen point is a
        // dissipative equilibrium, then run the lambda schedule.
        let (s2, p2) = dissipative_instance(&mut rng, n);
        let r = dissipative_quadratize(&s2, std::slice::from_ref(&p2), &DissipateOptions::default());
        doubling.record(
            r.as_ref().is_ok_and(|(_, rep)| rep.trace.len() <= 65 && rep.points.iter().all(|p| p.verdict == Verdict::Dissipative)),
            || format!("{s2} at {p2}: {:?}", r.as_ref().err()),
        );
    }

    let tallies = [sound, inner, vanish, tri, doubling];
    let failed = tallies.iter().any(|t| t.passed != t.total);
    let out = match fmt {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({ "seed": seed, "count": count, "checks": tallies }))
                .expect("serializable");
            s.push('\n');
            s
        }
        _ => {
            let mut s = String::new();
            for t in &tallies {
                let _ = writeln!(s, "{:<28} {}/{}", t.name, t.passed, t.total);
                for f in &t.failures {
                    let _ = writeln!(s, "  failed: {}", f.replace('\n', "; "));
                }
            }
            s
        }
    };
    if failed {
        eprint!("{out}");
        return Err(CliError::new(EXIT_OTHER, "self-test failed"));
    }
    Ok(out)
}

/// Random system with an equilibrium whose Jacobian is Hurwitz: adds
/// `-c (x - p)` to a shifted random system until the point is dissipative.
fn dissipative_instance(rng: &mut ChaCha8Rng, n: usize) -> (PolySystem, Point) {
    let exact = CheckOptions::default();
    loop {
        let (s, p) = random::system_with_equilibrium(rng, n, 3, 4);
        if check_dissipative(&s, &p, &exact).is_ok_and(|r| r.verdict == Verdict::Dissipative) {
            return (s, p);
        }
    }
}

/// Quadratization used by `simulate --lift`.
fn lifted_for_simulation(a: &SimulateArgs, sys: &PolySystem) -> Result<(QuadratizationResult, Vec<String>), CliError> {
    let search = a.search.options();
    if let Some(spec) = &a.equilibria {
        let pts = load_points(spec, sys.dim())?;
        let opts = DissipateOptions {
            check: CheckOptions {
                mode: resolve_mode(a.mode, sys, &pts)?,
                tol: a.tol,
            },
            search,
            timeout: None,
        };
        let (q, rep) = dissipative_quadratize(sys, &pts, &opts)?;
        return Ok((q, rep.warnings));
    }
    let q = branch_and_bound(sys, &search)?;
    let lambda = a.lambda.unwrap_or(0);
    if lambda == 0 {
        return Ok((q, Vec::new()));
    }
    let h = build_stabilizers(&q)?;
    Ok((stabilized(&q, &h, lambda), Vec::new()))
}

fn status_json(s: &Status) -> serde_json::Value {
    serde_json::to_value(s).expect("serializable")
}

fn trajectory_json(t: &Trajectory) -> serde_json::Value {
    serde_json::json!({
        "variables": t.names,
        "status": status_json(&t.status),
        "t_final": t.times.last(),
        "final_state": t.last(),
        "accepted_steps": t.accepted,
        "rejected_steps": t.rejected,
    })
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<String, CliError> {
    let fmt = format_or(&a.output, Format::Csv, &[Format::Csv, Format::Json])?;
    let sys = load_system(&a.input)?;
    let x0 = load_points(&a.x0, sys.dim())?
        .into_iter()
        .next()
        .ok_or_else(|| CliError::new(EXIT_PARSE, "--x0: no initial point given"))?;
    let opts = IntegrateOptions {
        rel_tol: a.rel_tol,
        abs_tol: a.abs_tol,
        samples: a.samples,
        ..Default::default()
    };
    let x0 = to_float_point(&x0);

    if !a.lift {
        let tr = integrate(&sys, &x0, a.t_end, &opts)?;
        return Ok(match fmt {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&trajectory_json(&tr)).expect("serializable");
                s.push('\n');
                s
            }
            _ => tr.to_csv(),
        });
    }

    let (q, warnings) = lifted_for_simulation(a, &sys)?;
    let drift = compare(&sys, &q.lifted_system(), &q.g, &x0, a.t_end, &opts)?;
    Ok(match fmt {
        Format::Json => {
            let v = serde_json::json!({
                "new_variables": q.new_var_definitions(),
                "lambda": q.lambda.to_string(),
                "original": trajectory_json(&drift.original),
                "lifted": trajectory_json(&drift.lifted),
                "max_deviation": drift.max_deviation,
                "max_invariant_drift": drift.max_invariant_drift,
                "warnings": warnings,
            });
            let mut s = serde_json::to_string_pretty(&v).expect("serializable");
            s.push('\n');
            s
        }
        _ => {
            let mut s = String::new();
            for d in q.new_var_definitions() {
                let _ = writeln!(s, "# {d}");
            }
            let _ = writeln!(s, "# lambda: {}", q.lambda);
            for w in &warnings {
                let _ = writeln!(s, "# warning: {w}");
            }
            s.push_str(&drift.lifted.to_csv());
            let _ = writeln!(s, "# original status: {}", drift.original_status);
            let _ = writeln!(s, "# max deviation: {:e}", drift.max_deviation);
            let _ = writeln!(s, "# max invariant drift: {:e}", drift.max_invariant_drift);
            s
        }
    })
}

fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("n,dimension,equilibria,new_vars,lambda,t_quadratize,t_dissipate_numeric,t_dissipate_exact\n");
    for r in rows {
        let exact = match r.t_dissipate_exact {
            None => String::new(),
            Some(Ok(t)) => format!("{t:.3}"),
            Some(Err(limit)) => format!(">{limit}"),
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.3},{},{}",
            r.n,
            r.dimension,
            r.equilibria,
            r.new_vars,
            r.lambda.map_or(String::new(), |l| l.to_string()),
            r.t_quadratize,
            r.t_dissipate_numeric.map_or(String::new(), |t| format!("{t:.3}")),
            exact
        );
    }
    s
}

fn bench_json(rows: &[BenchRow]) -> String {
    let v: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            let mut o = serde_json::to_value(r).expect("serializable");
            o["t_dissipate_exact"] = match r.t_dissipate_exact {
                None => serde_json::Value::Null,
                Some(Ok(t)) => t.into(),
                Some(Err(limit)) => format!(">{limit}").into(),
            };
            o
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

pub fn cmd_bench(a: &BenchArgs) -> Result<String, CliError> {
    let fmt = format_or(&a.output, Format::Csv, &[Format::Csv, Format::Json])?;
    if a.n_min == 0 || a.n_min > a.n_max {
        return Err(CliError::new(EXIT_OTHER, "need 1 <= --n-min <= --n-max"));
    }
    let timeout = a.exact.then(|| Duration::from_secs_f64(a.timeout));
    let search = SearchOptions {
        budget: a.budget,
        ..Default::default()
    };
    let one = |n: usize| -> Result<BenchRow, CliError> {
        let t0 = Instant::now();
        let r = bench_row(n, timeout, &search)?;
        eprintln!("bench: n = {n} done in {:.2} s", t0.elapsed().as_secs_f64());
        Ok(r)
    };
    let ns: Vec<usize> = (a.n_min..=a.n_max).collect();
    let rows: Vec<BenchRow> = if a.parallel {
        par_rows(&ns, &one)?
    } else {
        ns.iter().map(|&n| one(n)).collect::<Result<_, _>>()?
    };
    Ok(match fmt {
        Format::Json => bench_json(&rows),
        _ => bench_csv(&rows),
    })
}

#[cfg(feature = "parallel")]
fn par_rows<F>(ns: &[usize], f: &F) -> Result<Vec<BenchRow>, CliError>
where
    F: Fn(usize) -> Result<BenchRow, CliError> + Sync,
{
    use rayon::prelude::*;
    ns.par_iter().map(|&n| f(n)).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_rows<F>(ns: &[usize], f: &F) -> Result<Vec<BenchRow>, CliError>
where
    F: Fn(usize) -> Result<BenchRow, CliError>,
{
    ns.iter().map(|&n| f(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_subcommand() {
        for args in [
            vec!["dissquad", "quadratize", "--input", "a.ode"],
            vec!["dissquad", "dissipate", "--input", "a.ode", "--equilibria", "(0); (2)", "--mode", "numeric"],
            vec!["dissquad", "check", "--self-test", "--seed", "3"],
            vec!["dissquad", "check", "--input", "a.ode", "--equilibria", "(0)"],
            vec!["dissquad", "simulate", "--input", "a.ode", "--x0", "-0.1", "--t-end", "10", "--lift"],
            vec!["dissquad", "bench", "--n-max", "2", "--exact", "--timeout", "5"],
        ] {
            Cli::try_parse_from(&args).unwrap_or_else(|e| panic!("{args:?}: {e}"));
        }
        assert!(Cli::try_parse_from(["dissquad", "check"]).is_err());
        assert!(Cli::try_parse_from(["dissquad", "simulate", "--input", "a", "--x0", "1", "--t-end", "1", "--lambda", "2"]).is_err());
    }

    #[test]
    fn bare_points() {
        let p = load_points("0; 3/10", 1).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].to_string(), "(3/10)");
        assert_eq!(load_points("0.1, 0.01", 2).unwrap().len(), 1);
        assert_eq!(load_points("(1, 2)", 1).unwrap_err().code, EXIT_PARSE);
    }

    #[test]
    fn exact_mode_refuses_floats() {
        let s = parse_system("x' = 1e0*x - x^3").unwrap();
        let e = resolve_mode(Some(ModeArg::Exact), &s, &[]).unwrap_err();
        assert_eq!(e.code, EXIT_PRECONDITION);
        assert_eq!(resolve_mode(None, &s, &[]).unwrap(), CheckMode::Numeric);
    }

    #[test]
    fn error_codes() {
        let e: CliError = StabilityError::from(QuadratizeError::BudgetExceeded { budget: 0 }).into();
        assert_eq!(e.code, EXIT_BUDGET);
        let e: CliError = StabilityError::NotDissipative {
            point: "(1)".into(),
            verdict: "marginal".into(),
        }
        .into();
        assert_eq!(e.code, EXIT_PRECONDITION);
        let e: CliError = SimulateError::StepUnderflow { t: 1.0 }.into();
        assert_eq!(e.code, EXIT_INTEGRATOR);
    }

    #[test]
    fn small_self_test_passes() {
        let out = self_test(1, 5, Format::Text).unwrap();
        assert!(out.lines().all(|l| l.ends_with("5/5")), "{out}");
    }
}
