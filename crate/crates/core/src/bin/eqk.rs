//! `eqk` — construct, verify and perturb equilateral sets from the command line.
//!
//! Exit codes: 0 success/pass, 1 certified failure, 2 usage error,
//! 3 solver or parameter-selection failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use eqk::construct::{self, PointSet, PAIRWISE_CERT_LIMIT};
use eqk::norms::{find_eps0, modulus_of_smoothness, NormSpec, NormSpecParseError};
use eqk::oracle::{self, SearchConfig};
use eqk::perturbed::{self, PerturbationProblem, ProblemOptions, Variant};
use eqk::{json as ejson, verify, Error};

#[derive(Parser, Debug)]
#[command(name = "eqk", version, about = "Equilateral sets in finite-dimensional normed spaces")]
struct Cli {
    /// Seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "EQK_THREADS")]
    threads: Option<usize>,
    /// Record wall-clock time in the manifest (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Build an equilateral set for a norm and certify it.
    Construct {
        /// Norm specification (JSON).
        #[arg(long)]
        norm: PathBuf,
        /// Removed coordinates for hyperplane norms (default: smallest valid).
        #[arg(long)]
        k: Option<usize>,
        /// Relative tolerance (default: 1e-12 for hyperplane norms, 1e-9 otherwise).
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Certify a point set under a norm.
    Verify {
        /// Points file, e.g. the output of `construct`.
        #[arg(long)]
        points: PathBuf,
        /// Norm specification (JSON).
        #[arg(long)]
        norm: PathBuf,
        /// Relative tolerance.
        #[arg(long, default_value_t = verify::NUMERIC_TOL)]
        tol: f64,
    },
    /// Solve the fixed-point system for a target norm near a base norm.
    Perturb {
        /// Base norm specification (JSON).
        #[arg(long)]
        base: PathBuf,
        /// Target norm specification (JSON).
        #[arg(long)]
        target: PathBuf,
        /// Perturbation variant: symmetric, orlicz or subspace.
        #[arg(long)]
        variant: Variant,
        /// Removed coordinates, subspace variant only.
        #[arg(long)]
        k: Option<usize>,
        /// Sample budget for the modulus-of-smoothness estimate.
        #[arg(long)]
        budget: Option<usize>,
        /// Directions sampled for the sandwich check.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Radius of the admissible neighbourhood: of a base norm, or `R(p, n)`.
    Radius {
        /// Base norm specification (JSON).
        #[arg(long, requires = "variant", conflicts_with_all = ["p", "n"])]
        base: Option<PathBuf>,
        /// Perturbation variant: symmetric, orlicz or subspace.
        #[arg(long)]
        variant: Option<Variant>,
        /// Removed coordinates, subspace variant only.
        #[arg(long)]
        k: Option<usize>,
        /// Sample budget for the modulus-of-smoothness estimate.
        #[arg(long)]
        budget: Option<usize>,
        /// Exponent for the closed-form R(p, n), 1 < p < ∞.
        #[arg(long, requires = "n")]
        p: Option<f64>,
        /// Dimension for the closed-form R(p, n).
        #[arg(long, requires = "p")]
        n: Option<u64>,
    },
    /// Random-restart search for an equilateral set of size m.
    Oracle {
        /// Norm specification (JSON).
        #[arg(long)]
        norm: PathBuf,
        /// Number of points to look for.
        #[arg(long)]
        m: usize,
        /// Random restarts.
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        /// Coordinate sweeps per restart.
        #[arg(long, default_value_t = 20_000)]
        max_iterations: usize,
    },
    /// Estimate ρ_X(t), or the largest grid ε₀ with ρ(ε₀)/ε₀ ≤ 1/(6n).
    Smoothness {
        /// Norm specification (JSON).
        #[arg(long)]
        norm: PathBuf,
        /// Evaluate ρ at this t instead of searching for ε₀.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = perturbed::DEFAULT_SMOOTHNESS_BUDGET)]
        budget: usize,
    },
    /// Re-run the command recorded in an output file's manifest.
    Replay {
        /// Output file of an earlier run.
        #[arg(long)]
        from: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct OutArg {
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunManifest {
    subcommand: String,
    /// Arguments after the program name; replaying them reproduces the output.
    argv: Vec<String>,
    inputs: Vec<String>,
    parameters: Value,
    seed: u64,
    tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_seconds: Option<f64>,
    heuristic_flags: Vec<String>,
}

enum Failure {
    Usage(String),
    Certified(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_numerical_failure() => Failure::Numerical(e.to_string()),
            Error::Membership(_) | Error::Hypothesis(_) => Failure::Certified(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

struct Output {
    body: Value,
    pass: bool,
    flags: Vec<String>,
    parameters: Value,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_norm(path: &Path) -> CliResult<NormSpec> {
    NormSpec::from_json(&read(path)?).map_err(|e| match e {
        NormSpecParseError::Json(j) => Failure::Usage(format!(
            "{}: malformed JSON: {j} (line {}, column {})",
            path.display(),
            j.line(),
            j.column()
        )),
        NormSpecParseError::Invalid(err) => Failure::Usage(format!("{}: {err}", path.display())),
    })
}

#[derive(Deserialize)]
struct PointsFile {
    points: Vec<Vec<f64>>,
    claimed_distance: f64,
    #[serde(default)]
    parameters: Option<Value>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialize")
}

fn run_construct(norm: &Path, k: Option<usize>, tol: Option<f64>) -> CliResult<Output> {
    let spec = load_norm(norm)?;
    let built = construct::construct_for(&spec, k)?;
    let cert = built.certify(&spec, tol)?;
    let mut body = json!({
        "points": built.set.points,
        "claimed_distance": built.set.claimed_distance,
        "certificate": to_value(&cert),
        "construction": to_value(&built.kind),
        "parameters": to_value(&built.parameters),
    });
    body["norm"] = to_value(&spec);
    Ok(Output {
        pass: cert.passed(),
        flags: cert.heuristic_flags.clone(),
        parameters: json!({"k": k, "tol": cert.tolerance}),
        body,
    })
}

fn run_verify(points: &Path, norm: &Path, tol: f64) -> CliResult<Output> {
    let spec = load_norm(norm)?;
    let file: PointsFile =
        ejson::parse(&read(points)?, &points.display().to_string()).map_err(|e| Failure::Usage(e.to_string()))?;
    let set = PointSet { points: file.points, claimed_distance: file.claimed_distance };
    let free: Option<Vec<usize>> = file
        .parameters
        .as_ref()
        .and_then(|p| p.get("free_coordinates"))
        .and_then(|v| serde_json::from_value(v.clone()).ok());
    let cert = match free {
        Some(free) if spec.hyperplane().is_some() && set.len() > PAIRWISE_CERT_LIMIT => {
            verify::certify_sign_cube(&set, &free, &spec, tol)?
        }
        _ => verify::certify_equilateral(&set, &spec, tol)?,
    };
    Ok(Output {
        pass: cert.passed(),
        flags: cert.heuristic_flags.clone(),
        parameters: json!({"tol": tol}),
        body: json!({"certificate": to_value(&cert)}),
    })
}

fn problem_options(k: Option<usize>, budget: Option<usize>, samples: Option<usize>, seed: u64) -> ProblemOptions {
    ProblemOptions { k, smoothness_budget: budget, sandwich_samples: samples, seed }
}

fn run_perturb(base: &Path, target: &Path, variant: Variant, opts: ProblemOptions) -> CliResult<Output> {
    let base_spec = load_norm(base)?;
    let target_spec = load_norm(target)?;
    let problem = PerturbationProblem::new(variant, &base_spec, &target_spec, &opts)?;
    let self_map = problem.sample_self_map(1000, opts.seed);
    let out = perturbed::solve_and_certify(&problem)?;
    let body = json!({
        "points": out.set.points,
        "claimed_distance": out.set.claimed_distance,
        "solution": to_value(&out.solution),
        "certificate": to_value(&out.certificate),
        "problem": {
            "variant": to_value(&problem.variant),
            "parameters": to_value(&problem.parameters),
            "target_scale": problem.target_scale,
            "sandwich": to_value(&problem.sandwich),
            "self_map": to_value(&self_map),
        },
    });
    Ok(Output {
        pass: out.certificate.passed(),
        flags: out.certificate.heuristic_flags.clone(),
        parameters: json!({"variant": to_value(&variant), "k": opts.k, "budget": opts.smoothness_budget, "samples": opts.sandwich_samples}),
        body,
    })
}

fn run_radius_base(
    base: &Path,
    variant: Variant,
    k: Option<usize>,
    budget: Option<usize>,
    seed: u64,
) -> CliResult<Output> {
    let spec = load_norm(base)?;
    let params = match variant {
        Variant::Symmetric => perturbed::Parameters::Symmetric(perturbed::select_parameters_symmetric(
            &spec,
            budget.unwrap_or(perturbed::DEFAULT_SMOOTHNESS_BUDGET),
            seed,
        )?),
        Variant::Orlicz => {
            let fs = spec
                .luxemburg_functions()
                .ok_or_else(|| Failure::Usage("orlicz variant needs a Luxemburg Musielak-Orlicz base norm".into()))?;
            perturbed::Parameters::Orlicz(perturbed::select_parameters_orlicz(fs)?)
        }
        Variant::Subspace => {
            let h = spec
                .hyperplane()
                .ok_or_else(|| Failure::Usage("subspace variant needs a linfty_hyperplane base norm".into()))?;
            perturbed::Parameters::Subspace(perturbed::select_parameters_subspace(&h, k)?)
        }
    };
    let flags = params.heuristic_flags();
    Ok(Output {
        pass: true,
        body: json!({"R_lower": params.r_lower(), "parameters": to_value(&params), "heuristic_flags": flags}),
        flags,
        parameters: json!({"variant": to_value(&variant), "k": k, "budget": budget}),
    })
}

fn run_oracle(norm: &Path, m: usize, restarts: usize, max_iterations: usize, seed: u64) -> CliResult<Output> {
    let spec = load_norm(norm)?;
    let cfg = SearchConfig { restarts, max_iterations, ..SearchConfig::new(spec, m) };
    let out = oracle::search_equilateral(&cfg, seed)?;
    let flags = if out.found { vec![] } else { vec!["not-found-inconclusive".to_string()] };
    Ok(Output {
        pass: out.found,
        body: to_value(&out),
        flags,
        parameters: json!({"m": m, "restarts": restarts, "max_iterations": max_iterations, "residual_threshold": cfg.residual_threshold}),
    })
}

fn run_smoothness(norm: &Path, t: Option<f64>, budget: usize, seed: u64) -> CliResult<Output> {
    let spec = load_norm(norm)?;
    let body = match t {
        Some(t) => json!({"t": t, "rho_lower_estimate": modulus_of_smoothness(&spec, t, budget, seed)?}),
        None => json!({"eps0": find_eps0(&spec, spec.dim, budget, seed)?, "n": spec.dim}),
    };
    Ok(Output {
        pass: true,
        body,
        flags: vec!["rho-estimate-only".into()],
        parameters: json!({"t": t, "budget": budget}),
    })
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Construct { .. } => "construct",
        Command::Verify { .. } => "verify",
        Command::Perturb { .. } => "perturb",
        Command::Radius { .. } => "radius",
        Command::Oracle { .. } => "oracle",
        Command::Smoothness { .. } => "smoothness",
        Command::Replay { .. } => "replay",
    }
}

fn inputs(c: &Command) -> Vec<String> {
    let paths: Vec<&PathBuf> = match c {
        Command::Construct { norm, .. } | Command::Oracle { norm, .. } | Command::Smoothness { norm, .. } => vec![norm],
        Command::Verify { points, norm, .. } => vec![points, norm],
        Command::Perturb { base, target, .. } => vec![base, target],
        Command::Radius { base, .. } => base.iter().collect(),
        Command::Replay { from, .. } => vec![from],
    };
    paths.iter().map(|p| p.display().to_string()).collect()
}

fn out_path(c: &Command) -> Option<PathBuf> {
    match c {
        Command::Construct { out, .. } | Command::Perturb { out, .. } | Command::Replay { out, .. } => out.out.clone(),
        _ => None,
    }
}

/// Runs one (non-replay) command; returns the serialized document and the
/// exit status.
fn execute(cli: &Cli, argv: &[String]) -> CliResult<(String, bool)> {
    let start = Instant::now();
    let seed = cli.seed;
    let output = match &cli.command {
        Command::Construct { norm, k, tol, .. } => run_construct(norm, *k, *tol)?,
        Command::Verify { points, norm, tol } => run_verify(points, norm, *tol)?,
        Command::Perturb { base, target, variant, k, budget, samples, .. } => {
            run_perturb(base, target, *variant, problem_options(*k, *budget, *samples, seed))?
        }
        Command::Radius { base: Some(base), variant: Some(v), k, budget, .. } => {
            run_radius_base(base, *v, *k, *budget, seed)?
        }
        Command::Radius { p: Some(p), n: Some(n), .. } => {
            let r = construct::radius_lp(*p, *n)?;
            Output {
                pass: true,
                body: json!({"R": r, "p": p, "n": n}),
                flags: vec![],
                parameters: json!({"p": p, "n": n}),
            }
        }
        Command::Radius { .. } => {
            return Err(Failure::Usage("radius needs --base and --variant, or --p and --n".into()))
        }
        Command::Oracle { norm, m, restarts, max_iterations } => {
            run_oracle(norm, *m, *restarts, *max_iterations, seed)?
        }
        Command::Smoothness { norm, t, budget } => run_smoothness(norm, *t, *budget, seed)?,
        Command::Replay { .. } => unreachable!("replay is resolved before execution"),
    };
    let manifest = RunManifest {
        subcommand: subcommand_name(&cli.command).into(),
        argv: argv.to_vec(),
        inputs: inputs(&cli.command),
        parameters: output.parameters,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        timing_seconds: cli.timing.then(|| start.elapsed().as_secs_f64()),
        heuristic_flags: output.flags,
    };
    let mut body = output.body;
    body["manifest"] = to_value(&manifest);
    Ok((ejson::to_string(&body), output.pass))
}

/// Drops `--out <path>` / `--out=<path>` so a replay writes where it is told.
fn strip_out(argv: &[String]) -> Vec<String> {
    let mut res = Vec::new();
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            res.push(a.clone());
        }
    }
    res
}

fn configure_threads(threads: Option<usize>) {
    if let Some(t) = threads.filter(|t| *t > 0) {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

fn main_inner() -> CliResult<bool> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse_from(std::iter::once("eqk".to_string()).chain(argv.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Help and version requests go to stdout and are not errors.
            return if e.use_stderr() { Err(Failure::Usage(String::new())) } else { Ok(true) };
        }
    };
    configure_threads(cli.threads);
    let (cli, argv, out) = match &cli.command {
        Command::Replay { from, out } => {
            let doc: Value =
                ejson::parse(&read(from)?, &from.display().to_string()).map_err(|e| Failure::Usage(e.to_string()))?;
            let recorded: Vec<String> = doc
                .get("manifest")
                .and_then(|m| m.get("argv"))
                .and_then(|a| serde_json::from_value(a.clone()).ok())
                .ok_or_else(|| Failure::Usage(format!("{} has no manifest argv", from.display())))?;
            let recorded = strip_out(&recorded);
            let replayed = Cli::try_parse_from(std::iter::once("eqk".to_string()).chain(recorded.iter().cloned()))
                .map_err(|e| Failure::Usage(format!("manifest argv does not parse: {e}")))?;
            if matches!(replayed.command, Command::Replay { .. }) {
                return Err(Failure::Usage("cannot replay a replay".into()));
            }
            let mut argv = recorded;
            if let Some(o) = &out.out {
                argv.push("--out".into());
                argv.push(o.display().to_string());
            }
            (replayed, argv, out.out.clone())
        }
        _ => {
            let out = out_path(&cli.command);
            (cli, argv, out)
        }
    };
    // The manifest argv excludes the destination so outputs replay byte-identically.
    let (doc, pass) = execute(&cli, &strip_out(&argv))?;
    match out {
        Some(path) => fs::write(&path, format!("{doc}\n"))
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{doc}"),
    }
    Ok(pass)
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Certified(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
