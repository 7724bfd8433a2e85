//! The `meig` command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 solver did not converge.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::bench::{self, BatteryConfig, Method, Suite};
use crate::error::{Error, Result};
use crate::mgm::{SolverConfig, ThetaVariant};
use crate::objective::{verify_eigenpair, MEigenpair};
use crate::power::{power_solve, PowerConfig};
use crate::profile::{
    compute_profile, emit_profile_svg, read_records_csv, write_records_csv, Metric,
};
use crate::report::SolveReport;
use crate::shift::{best_of, DriverConfig};
use crate::tensor::{
    self, fixture, generate_random, validate_symmetry, FixtureName, GeneratorSpec, HierSymTensor,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "meig",
    version,
    about = "Extreme M-eigenvalues of elasticity-type tensors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random (or built-in) tensor file.
    Gen(GenArgs),
    /// Compute the largest (or smallest) M-eigenpair.
    Solve(SolveArgs),
    /// Check an eigenpair report against a tensor.
    Verify(VerifyArgs),
    /// Run an experiment battery and write the run CSV.
    Bench(BenchArgs),
    /// Compute a performance profile from a run CSV.
    Profile(ProfileArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, required_unless_present = "fixture")]
    pub m: Option<usize>,
    #[arg(long, required_unless_present = "fixture")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub low: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub high: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Write a built-in tensor (ex41, ex42, ex43, rank_one_neg) instead.
    #[arg(long, conflicts_with_all = ["m", "n"])]
    pub fixture: Option<String>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Tensor file (JSON).
    #[arg(long, required_unless_present = "fixture")]
    pub tensor: Option<PathBuf>,
    /// Built-in tensor name instead of a file.
    #[arg(long, conflicts_with = "tensor")]
    pub fixture: Option<String>,
    #[arg(long, default_value = "mgm1")]
    pub method: String,
    /// Memory depth (default 3 for mgm1, 1 for mgm2).
    #[arg(long = "N", visible_alias = "memory")]
    pub memory: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    /// Number of random starts (seeds `seed, seed+1, ...`); the best is kept.
    #[arg(long, default_value_t = 1)]
    pub starts: u64,
    #[arg(long)]
    pub smallest: bool,
    #[arg(long)]
    pub json: bool,
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1e-15)]
    pub gamma_floor: f64,
    /// printed or standard.
    #[arg(long, default_value = "printed")]
    pub theta: String,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub shift_growth: f64,
    #[arg(long, default_value_t = 12)]
    pub max_escalations: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub degeneracy_eps: f64,
    /// Power shift (default: sum of absolute entries).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Write the per-iteration trace CSV here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, required_unless_present = "fixture")]
    pub tensor: Option<PathBuf>,
    #[arg(long, conflicts_with = "tensor")]
    pub fixture: Option<String>,
    /// Report JSON from `solve --json`, or `-` for stdin.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub suite: String,
    /// Comma-separated method ids, e.g. `mgm1,mgm2,power` or `mgm1-n5`.
    #[arg(long, default_value = "mgm1,mgm2")]
    pub methods: String,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run CSV output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-(problem, method) summary CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Sizes override, e.g. `5,10` (square) or `12x18,30x30`.
    #[arg(long)]
    pub sizes: Option<String>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// iter or time.
    #[arg(long, default_value = "iter")]
    pub metric: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Verify(String),
    NoConvergence(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let res = match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Profile(a) => cmd_profile(&a),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            EXIT_VERIFY_FAIL
        }
        Err(Failure::NoConvergence(msg)) => {
            eprintln!("{msg}");
            EXIT_NO_CONVERGENCE
        }
    }
}

fn load_tensor(path: Option<&Path>, fixture_name: Option<&str>) -> Result<HierSymTensor> {
    match (path, fixture_name) {
        (_, Some(name)) => Ok(fixture(name.parse::<FixtureName>()?)),
        (Some(p), None) => tensor::load(p),
        (None, None) => Err(Error::Config(
            "either --tensor or --fixture is required".into(),
        )),
    }
}

fn cmd_gen(a: &GenArgs) -> CmdResult {
    let t = match &a.fixture {
        Some(name) => fixture(name.parse::<FixtureName>()?),
        None => {
            let (m, n) = (a.m.unwrap_or(0), a.n.unwrap_or(0));
            if m == 0 || n == 0 {
                return Err(Failure::Usage("--m and --n must be >= 1".into()));
            }
            generate_random(&GeneratorSpec {
                m,
                n,
                low: a.low,
                high: a.high,
                seed: a.seed,
            })?
        }
    };
    tensor::store(&t, &a.out)?;
    let check = validate_symmetry(&t.to_raw());
    println!(
        "wrote {} ({}x{}x{}x{}); symmetric: {}, max violation {:e}",
        a.out.display(),
        t.m(),
        t.n(),
        t.m(),
        t.n(),
        check.symmetric,
        check.max_violation
    );
    Ok(())
}

fn solver_config(a: &SolveArgs) -> std::result::Result<SolverConfig, Failure> {
    let base = match a.method.as_str() {
        "mgm1" => SolverConfig::mgm1(),
        "mgm2" => SolverConfig::mgm2(),
        other => {
            return Err(Error::Unknown {
                kind: "method",
                name: other.to_string(),
            }
            .into())
        }
    };
    let cfg = SolverConfig {
        memory: a.memory.unwrap_or(base.memory),
        eps: a.eps,
        max_iter: a.max_iter,
        seed: a.seed,
        wolfe_rho: a.rho,
        wolfe_sigma: a.sigma,
        gamma_floor: a.gamma_floor,
        theta_variant: a.theta.parse::<ThetaVariant>()?,
        ..base
    };
    cfg.validate()?;
    Ok(cfg)
}

fn solve_power(t: &HierSymTensor, a: &SolveArgs) -> Result<SolveReport> {
    let target = if a.smallest { t.negated() } else { t.clone() };
    let mut best: Option<SolveReport> = None;
    for s in 0..a.starts.max(1) {
        let cfg = PowerConfig {
            tau: a.tau.unwrap_or_else(|| crate::power::default_tau(&target)),
            eps: a.eps,
            max_iter: a.max_iter,
            seed: a.seed + s,
            ..PowerConfig::for_tensor(&target)
        };
        let rep = power_solve(&target, &cfg, None)?;
        let better = match (&best, rep.lambda()) {
            (None, _) => true,
            (Some(b), Some(l)) => b.lambda().is_none_or(|bl| l > bl),
            (Some(_), None) => false,
        };
        if better {
            best = Some(rep);
        }
    }
    let mut rep = best.expect("at least one start");
    if a.smallest {
        rep.pair = rep.pair.map(|p| p.negated());
    }
    Ok(rep)
}

fn cmd_solve(a: &SolveArgs) -> CmdResult {
    let t = load_tensor(a.tensor.as_deref(), a.fixture.as_deref())?;
    let rep = if a.method == "power" {
        if a.memory.is_some() {
            return Err(Failure::Usage(
                "--N does not apply to the power method".into(),
            ));
        }
        solve_power(&t, a)?
    } else {
        let cfg = DriverConfig {
            t0: a.t0,
            shift_growth: a.shift_growth,
            degeneracy_eps: a.degeneracy_eps,
            max_escalations: a.max_escalations,
            inner: solver_config(a)?,
        };
        cfg.validate()?;
        let seeds: Vec<u64> = (0..a.starts.max(1)).map(|s| a.seed + s).collect();
        if a.smallest {
            // The largest of -A gives the smallest of A.
            let mut rep = best_of(&t.negated(), &cfg, &seeds)?;
            rep.pair = rep.pair.map(|p| p.negated());
            rep
        } else {
            best_of(&t, &cfg, &seeds)?
        }
    };

    for e in &rep.escalations {
        log::info!(
            "shift escalation t={} ended {} after {} iterations",
            e.t,
            e.status,
            e.iters
        );
    }
    if let Some(path) = &a.trace {
        rep.write_trace_csv(BufWriter::new(File::create(path).map_err(Error::from)?))?;
    }

    if a.json {
        let text = serde_json::to_string_pretty(&rep.to_json())
            .map_err(|e| Failure::Usage(e.to_string()))?;
        println!("{text}");
    } else {
        print_report(&rep);
    }
    if rep.converged() {
        Ok(())
    } else {
        Err(Failure::NoConvergence(format!(
            "solver did not converge: {} ({})",
            rep.status,
            rep.message.as_deref().unwrap_or("no details")
        )))
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|a| format!("{a:.10}")).collect();
    format!("[{}]", parts.join(", "))
}

fn print_report(rep: &SolveReport) {
    println!("status: {}", rep.status);
    if let Some(p) = &rep.pair {
        println!("lambda: {:.10}", p.lambda);
        println!("x: {}", fmt_vec(&p.x));
        println!("y: {}", fmt_vec(&p.y));
        println!("residual_x: {:e}", p.residual_x);
        println!("residual_y: {:e}", p.residual_y);
    }
    println!("iterations: {}", rep.iters);
    println!("shift_t: {}", rep.shift_t);
    for (j, e) in rep.escalations.iter().enumerate() {
        println!(
            "escalation {}: t={} status={} iters={}",
            j + 1,
            e.t,
            e.status,
            e.iters
        );
    }
    if let Some(msg) = &rep.message {
        println!("message: {msg}");
    }
}

/// The eigenpair part of a report; other fields are ignored.
#[derive(Debug, Deserialize)]
struct PairReport {
    lambda: Option<f64>,
    x: Option<Vec<f64>>,
    y: Option<Vec<f64>>,
}

fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    let t = load_tensor(a.tensor.as_deref(), a.fixture.as_deref())?;
    let text = if a.report.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(Error::from)?;
        s
    } else {
        fs::read_to_string(&a.report).map_err(Error::from)?
    };
    let rep: PairReport = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("malformed report {}: {e}", a.report.display())))?;
    let (Some(lambda), Some(x), Some(y)) = (rep.lambda, rep.x, rep.y) else {
        return Err(Failure::Usage("report carries no eigenpair".into()));
    };
    if x.len() != t.m() || y.len() != t.n() {
        return Err(Failure::Usage(format!(
            "report dimensions ({}, {}) do not match tensor ({}, {})",
            x.len(),
            y.len(),
            t.m(),
            t.n()
        )));
    }
    let pair = MEigenpair::new(&t, lambda, x, y);
    match verify_eigenpair(&t, &pair, a.tol) {
        Ok(true) => {
            println!(
                "ok: residual_x {:e}, residual_y {:e} <= {:e}",
                pair.residual_x, pair.residual_y, a.tol
            );
            Ok(())
        }
        Ok(false) => Err(Failure::Verify(format!(
            "residual_x {:e}, residual_y {:e} exceed {:e}",
            pair.residual_x, pair.residual_y, a.tol
        ))),
        Err(e) => Err(Failure::Verify(e.to_string())),
    }
}

fn parse_sizes(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .map(|part| {
            let part = part.trim();
            let bad = || Error::Parse {
                context: "--sizes".into(),
                message: format!("bad size '{part}'"),
            };
            let (m, n) = match part.split_once('x') {
                Some((m, n)) => (m.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?),
                None => {
                    let v: usize = part.parse().map_err(|_| bad())?;
                    (v, v)
                }
            };
            if m == 0 || n == 0 {
                return Err(bad());
            }
            Ok((m, n))
        })
        .collect()
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("MEIG_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t >= 1)
            .map(Some)
            .ok_or_else(|| {
                Error::Config(format!(
                    "MEIG_THREADS must be a positive integer, got '{v}'"
                ))
            }),
        _ => Ok(None),
    }
}

fn cmd_bench(a: &BenchArgs) -> CmdResult {
    let suite: Suite = a.suite.parse()?;
    let methods = a
        .methods
        .split(',')
        .map(|m| m.trim().parse::<Method>())
        .collect::<Result<Vec<_>>>()?;
    let cfg = BatteryConfig {
        suite,
        methods,
        trials: a.trials,
        seed: a.seed,
        sizes: a.sizes.as_deref().map(parse_sizes).transpose()?,
        threads: threads_from_env()?,
    };
    let res = bench::run_battery(&cfg)?;
    write_records_csv(
        &res.records(),
        BufWriter::new(File::create(&a.out).map_err(Error::from)?),
    )?;
    if let Some(path) = &a.summary {
        bench::write_summary_csv(
            &res.summary,
            BufWriter::new(File::create(path).map_err(Error::from)?),
        )?;
    }
    let solved = res.outcomes.iter().filter(|o| o.record.solved()).count();
    println!(
        "{} runs ({} converged) written to {}",
        res.outcomes.len(),
        solved,
        a.out.display()
    );
    Ok(())
}

fn cmd_profile(a: &ProfileArgs) -> CmdResult {
    let metric: Metric = a.metric.parse()?;
    let file =
        File::open(&a.input).map_err(|e| Failure::Usage(format!("{}: {e}", a.input.display())))?;
    let records = read_records_csv(file)?;
    let table = compute_profile(&records, metric)?;
    table.write_csv(BufWriter::new(File::create(&a.out).map_err(Error::from)?))?;
    if let Some(svg) = &a.svg {
        emit_profile_svg(&table, svg)?;
    }
    let mut out = io::stdout().lock();
    for (w, c) in table.curves.iter().enumerate() {
        let _ = writeln!(out, "{}: phi(1) = {}", c.method, table.phi(w, 1.0));
    }
    Ok(())
}
