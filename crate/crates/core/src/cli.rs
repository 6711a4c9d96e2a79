//! The `dwmsa` command line.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 I/O error,
//! 3 solver budget exhausted without a near-global certificate.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dcsolver::certificate::certify_solution;
use crate::dcsolver::{
    certify, dca_solve, Certificate, InitialPoint, Solution, SolverConfig, SolverStatus,
};
use crate::error::Error;
use crate::evalharness::{default_lambda_grid, evaluate_predictors, fmt_sig};
use crate::model::{load_instance_path, ProblemInstance};
use crate::renyi::{
    d_alpha_to_family, epsilon_hat, epsilon_t, guarantee_bound, renyi_divergence,
    target_conditionals, DiscreteDistribution,
};
use crate::simplex::SimplexWeights;
use crate::synthetic::{make_gaussian_problem, GaussianBenchConfig, Variant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "dwmsa",
    version,
    about = "Distribution-weighted multiple-source adaptation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the robust mixture weight and certify it.
    Solve {
        instance: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Sweep target mixtures and write a CSV report.
    Eval {
        instance: PathBuf,
        /// Solution JSON from `solve`, or `{"z": [...]}`.
        solution: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = crate::combiner::DEFAULT_ETA)]
        eta: f64,
    },
    /// Generate a Gaussian-mixture benchmark instance.
    SynthGen {
        #[command(flatten)]
        bench: BenchFlags,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate the two-domain benchmark, solve it and write the γ trace.
    BenchSynthetic {
        #[command(flatten)]
        bench: BenchFlags,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Rényi divergence between two distribution files.
    Divergence {
        p: PathBuf,
        q: PathBuf,
        /// Order; `inf` for the sup-ratio divergence.
        #[arg(long)]
        alpha: f64,
        /// Print d_α = exp(D_α) instead of D_α.
        #[arg(long)]
        exponentiated: bool,
        #[arg(long, default_value_t = 6)]
        digits: usize,
    },
    /// Evaluate a generalization bound.
    Bound {
        #[command(subcommand)]
        kind: BoundKind,
    },
    /// Certify a given weight z on an instance.
    Certify {
        instance: PathBuf,
        /// `uniform`, `vertex:k` (1-based) or a JSON file with the weights.
        #[arg(long)]
        z: String,
        #[arg(long, default_value_t = crate::combiner::DEFAULT_ETA)]
        eta: f64,
        #[arg(long, default_value_t = 1e-4)]
        eta_prime: f64,
        #[arg(long, default_value_t = 1e-2)]
        tol_global: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BoundKind {
    /// Known sources, arbitrary target: `[(ε+δ) d_α]^((α-1)/α) M^(1/α)`.
    Arbitrary {
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        d_alpha: f64,
        #[arg(long)]
        m_bound: f64,
        #[arg(long)]
        alpha: f64,
    },
    /// Estimated source densities: the loss term becomes ε̂.
    Estimate {
        #[arg(long)]
        true_instance: PathBuf,
        #[arg(long)]
        estimated_instance: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Divergence of the target to the estimate family; computed from
        /// `--target` when absent.
        #[arg(long)]
        d_alpha: Option<f64>,
        /// Target marginal over the support (JSON array).
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        m_bound: f64,
        #[arg(long)]
        alpha: f64,
    },
    /// Distinct conditionals: the loss term becomes ε_T.
    Conditional {
        /// Instance whose points carry `label_dist` with a `target` row.
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        d_alpha: f64,
        #[arg(long)]
        m_bound: f64,
        #[arg(long)]
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    TwoDomain,
    FourDomain,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::TwoDomain => Variant::TwoDomain,
            VariantArg::FourDomain => Variant::FourDomain,
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchFlags {
    #[arg(long, value_enum, default_value_t = VariantArg::TwoDomain)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 200)]
    pub n_train: usize,
    #[arg(long, default_value_t = 500)]
    pub n_support: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

impl BenchFlags {
    fn config(&self) -> GaussianBenchConfig {
        GaussianBenchConfig {
            n_train: self.n_train,
            n_support: self.n_support,
            seed: self.seed,
            variant: self.variant.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub eta_prime: Option<f64>,
    #[arg(long)]
    pub m_bound: Option<f64>,
    #[arg(long)]
    pub tol_global: Option<f64>,
    #[arg(long)]
    pub tol_outer: Option<f64>,
    #[arg(long)]
    pub tol_inner: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub max_inner: Option<usize>,
    /// Seed for `--z0 random`.
    #[arg(long = "solver-seed")]
    pub solver_seed: Option<u64>,
    /// `uniform`, `random`, `vertex:k` (1-based) or a JSON file.
    #[arg(long, default_value = "uniform")]
    pub z0: String,
}

impl SolverFlags {
    fn config(&self) -> Result<SolverConfig, CliError> {
        let d = SolverConfig::default();
        let cfg = SolverConfig {
            eta: self.eta.unwrap_or(d.eta),
            eta_prime: self.eta_prime.unwrap_or(d.eta_prime),
            m_bound: self.m_bound,
            z0: parse_z0(&self.z0)?,
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            max_inner: self.max_inner.unwrap_or(d.max_inner),
            inner_tol: self.tol_inner.unwrap_or(d.inner_tol),
            outer_tol: self.tol_outer.unwrap_or(d.outer_tol),
            global_tol: self.tol_global.unwrap_or(d.global_tol),
            seed: self.solver_seed.unwrap_or(d.seed),
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_z0(spec: &str) -> Result<InitialPoint, CliError> {
    match spec {
        "uniform" => Ok(InitialPoint::Uniform),
        "random" => Ok(InitialPoint::Random),
        s if s.starts_with("vertex:") => {
            let k: usize = s["vertex:".len()..]
                .parse()
                .map_err(|_| CliError::Validation(format!("bad vertex spec `{s}`")))?;
            if k == 0 {
                return Err(CliError::Validation("vertices are numbered from 1".into()));
            }
            Ok(InitialPoint::Vertex(k - 1))
        }
        path => Ok(InitialPoint::Given(read_weights(Path::new(path))?)),
    }
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, content: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => out
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

/// A weight vector stored as a JSON array, `{"z": [...]}`, `{"mass": [...]}`
/// or a `solve` output with `solution.z_star`.
fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let arr = match &value {
        serde_json::Value::Array(_) => Some(&value),
        serde_json::Value::Object(o) => o
            .get("z")
            .or_else(|| o.get("z_star"))
            .or_else(|| o.get("mass"))
            .or_else(|| o.get("solution").and_then(|s| s.get("z_star"))),
        _ => None,
    };
    let arr = arr.ok_or_else(|| {
        CliError::Validation(format!("{}: no weight vector found", path.display()))
    })?;
    serde_json::from_value(arr.clone())
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn read_weights(path: &Path) -> Result<SimplexWeights, CliError> {
    Ok(SimplexWeights::new(read_vector(path)?)?)
}

fn read_distribution(path: &Path) -> Result<DiscreteDistribution, CliError> {
    Ok(DiscreteDistribution::new(read_vector(path)?)?)
}

fn load(path: &Path) -> Result<ProblemInstance, CliError> {
    Ok(load_instance_path(path)?)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolveOutput {
    pub solution: Solution,
    pub certificate: Certificate,
}

fn solve_and_certify(
    instance: &ProblemInstance,
    cfg: &SolverConfig,
) -> Result<(SolveOutput, i32), CliError> {
    let solution = dca_solve(instance, cfg)?;
    let certificate = certify_solution(instance, &solution, cfg.eta_prime, cfg.global_tol);
    let code = if solution.status == SolverStatus::BudgetExhausted && !certificate.is_near_global {
        EXIT_BUDGET
    } else {
        EXIT_OK
    };
    Ok((
        SolveOutput {
            solution,
            certificate,
        },
        code,
    ))
}

fn trace_csv(solution: &Solution) -> String {
    let p = solution.z_star.dim();
    let mut out = String::from("iteration,gamma");
    for k in 1..=p {
        out.push_str(&format!(",z_{k}"));
    }
    out.push('\n');
    for (t, e) in solution.trace.iter().enumerate() {
        out.push_str(&format!("{t},{}", fmt_sig(e.gamma, 12)));
        for w in e.z.iter() {
            out.push(',');
            out.push_str(&fmt_sig(*w, 12));
        }
        out.push('\n');
    }
    out
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve {
            instance,
            output,
            solver,
        } => {
            let cfg = solver.config()?;
            let inst = load(&instance)?;
            let (res, code) = solve_and_certify(&inst, &cfg)?;
            write_output(output.as_deref(), &to_json(&res), out)?;
            Ok(code)
        }
        Command::Eval {
            instance,
            solution,
            output,
            eta,
        } => {
            let inst = load(&instance)?;
            let z = read_weights(&solution)?;
            let grid = default_lambda_grid(inst.num_domains());
            let report = evaluate_predictors(&inst, &z, eta, &grid)?;
            write_output(output.as_deref(), &report.to_csv(), out)?;
            Ok(EXIT_OK)
        }
        Command::SynthGen { bench, output } => {
            let prob = make_gaussian_problem(&bench.config())?;
            let mut json = prob.instance.to_json_string();
            json.push('\n');
            write_output(output.as_deref(), &json, out)?;
            Ok(EXIT_OK)
        }
        Command::BenchSynthetic {
            bench,
            output,
            solver,
        } => {
            let mut config = bench.config();
            config.variant = Variant::TwoDomain;
            let cfg = solver.config()?;
            let prob = make_gaussian_problem(&config)?;
            let (res, code) = solve_and_certify(&prob.instance, &cfg)?;
            write_output(output.as_deref(), &trace_csv(&res.solution), out)?;
            let _ = writeln!(
                err,
                "final gamma {} after {} iterations; z = {:?}",
                fmt_sig(res.solution.gamma_star, 6),
                res.solution.trace.len() - 1,
                res.solution.z_star.as_slice()
            );
            Ok(code)
        }
        Command::Divergence {
            p,
            q,
            alpha,
            exponentiated,
            digits,
        } => {
            let (pd, qd) = (read_distribution(&p)?, read_distribution(&q)?);
            let d = renyi_divergence(&pd, &qd, alpha)?;
            let v = if exponentiated { d.exp() } else { d };
            let _ = writeln!(out, "{v:.digits$}");
            Ok(EXIT_OK)
        }
        Command::Bound { kind } => {
            let json = match kind {
                BoundKind::Arbitrary {
                    epsilon,
                    delta,
                    d_alpha,
                    m_bound,
                    alpha,
                } => to_json(&guarantee_bound(epsilon + delta, d_alpha, m_bound, alpha)?),
                BoundKind::Estimate {
                    true_instance,
                    estimated_instance,
                    epsilon,
                    delta,
                    d_alpha,
                    target,
                    m_bound,
                    alpha,
                } => {
                    let tru = load(&true_instance)?;
                    let est = load(&estimated_instance)?;
                    let report = epsilon_hat(&tru, &est, epsilon, m_bound, alpha)?;
                    if let Some(k) = report.support_violation {
                        let _ = writeln!(
                            err,
                            "warning: estimate of domain {} ({}) puts mass outside the true support",
                            k + 1,
                            tru.domain_names[k]
                        );
                    }
                    let d = match (d_alpha, target) {
                        (Some(d), _) => d,
                        (None, Some(t)) => {
                            let td = read_distribution(&t)?;
                            d_alpha_to_family(&td, &est, alpha, 100)?.value
                        }
                        (None, None) => {
                            return Err(CliError::Validation("need --d-alpha or --target".into()));
                        }
                    };
                    let bound = guarantee_bound(report.value + delta, d, m_bound, alpha)?;
                    to_json(&serde_json::json!({ "epsilon_hat": report, "bound": bound }))
                }
                BoundKind::Conditional {
                    instance,
                    epsilon,
                    delta,
                    d_alpha,
                    m_bound,
                    alpha,
                } => {
                    let inst = load(&instance)?;
                    let target = target_conditionals(&inst)?;
                    let report = epsilon_t(&inst, &target, epsilon, m_bound, alpha)?;
                    let bound = guarantee_bound(report.value + delta, d_alpha, m_bound, alpha)?;
                    to_json(&serde_json::json!({ "epsilon_t": report, "bound": bound }))
                }
            };
            write_output(None, &json, out)?;
            Ok(EXIT_OK)
        }
        Command::Certify {
            instance,
            z,
            eta,
            eta_prime,
            tol_global,
            output,
        } => {
            let check = SolverConfig {
                eta,
                eta_prime,
                global_tol: tol_global,
                ..SolverConfig::default()
            };
            check.validate()?;
            let inst = load(&instance)?;
            let p = inst.num_domains();
            let zw = match parse_z0(&z)? {
                InitialPoint::Given(w) => w,
                other => SolverConfig { z0: other, ..check }.initial_point(p)?,
            };
            if zw.dim() != p {
                return Err(CliError::Validation(format!(
                    "z has {} entries for {p} domains",
                    zw.dim()
                )));
            }
            let cert = certify(&inst, &zw, eta, eta_prime, tol_global);
            write_output(output.as_deref(), &to_json(&cert), out)?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs the CLI with explicit output streams; returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(err, "{e}");
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Runs the CLI against the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
