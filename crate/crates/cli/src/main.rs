use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pmoreau::envelope::{
    self, ConjugatePair, ConvergenceProfile, MonotonicityProfile, ProxProblem,
};
use pmoreau::flow::{self, ExpRow, FlowTrajectory};
use pmoreau::hj::{self, HjResidual, SpaceTimeField};
use pmoreau::io::{csv_string, ext_real, fmt_f64, to_json_string};
use pmoreau::mosco::{self, DiagonalReport, EnvelopeReport, PointwiseReport};
use pmoreau::verify::{self, VerifySummary};
use pmoreau::{Error, FnSpec, GridSpec, PowerParams, SpaceSpec};

#[derive(Parser)]
#[command(
    name = "pmoreau",
    version,
    about = "p-Moreau–Yosida envelopes, proximal points and related checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON problem file (not needed for `verify`).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[arg(long, default_value_t = 42, global = true)]
    seed: u64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Proximal point, envelope value and derivative at one point.
    Prox,
    /// Envelope along a decreasing ε list.
    SweepEps,
    /// Analytic and grid conjugate of the envelope.
    Conjugate,
    /// Mosco reports on a shipped fixture family.
    Mosco,
    /// Lax–Oleinik field and Hamilton–Jacobi residual.
    Hj,
    /// Minimizing-movement trajectory.
    Flow,
    /// Full invariant suite.
    Verify,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    /// Unreadable or invalid input: exit 2.
    Input(String),
    /// Solver could not certify a result: exit 3.
    Solver(String),
    /// `verify` found violations (report already written): exit 1.
    Violations(usize),
}

fn core_err(task: &str) -> impl Fn(Error) -> Failure + '_ {
    move |e| match e {
        Error::SolverFailure { .. } => Failure::Solver(format!("{task}: {e}")),
        _ => Failure::Input(format!("{task}: {e}")),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSpec {
    space: SpaceSpec,
    #[serde(rename = "fn")]
    function: FnSpec,
    p: f64,
    u: Vec<f64>,
    eps: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DerivativeRow {
    eps: f64,
    analytic: f64,
    finite_difference: f64,
}

#[derive(Serialize, Deserialize)]
struct SweepReport {
    monotonicity: MonotonicityProfile,
    convergence: ConvergenceProfile,
    derivatives: Vec<DerivativeRow>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConjugateSpec {
    space: SpaceSpec,
    #[serde(rename = "fn")]
    function: FnSpec,
    p: f64,
    eps: f64,
    xi: Vec<Vec<f64>>,
    grid: GridSpec,
}

fn default_n_max() -> usize {
    64
}
fn default_tol() -> f64 {
    1e-6
}
fn default_p() -> f64 {
    2.0
}
fn default_eps() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MoscoSpec {
    fixture: String,
    #[serde(default = "default_n_max")]
    n_max: usize,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_p")]
    p: f64,
    #[serde(default = "default_eps")]
    eps: f64,
}

#[derive(Serialize, Deserialize)]
struct MoscoReport {
    fixture: String,
    liminf: PointwiseReport,
    recovery: PointwiseReport,
    envelope: EnvelopeReport,
    diagonal: DiagonalReport,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HjSpec {
    space: SpaceSpec,
    #[serde(rename = "fn")]
    function: FnSpec,
    p: f64,
    x_grid: GridSpec,
    t_values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct HjReport {
    field: SpaceTimeField,
    residual: Option<HjResidual>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExponentialSpec {
    t: f64,
    n_list: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowSpec {
    space: SpaceSpec,
    #[serde(rename = "fn")]
    function: FnSpec,
    p: f64,
    tau: f64,
    steps: usize,
    u0: Vec<f64>,
    #[serde(default)]
    exponential: Option<ExponentialSpec>,
}

#[derive(Serialize, Deserialize)]
struct FlowReport {
    trajectory: FlowTrajectory,
    #[serde(default)]
    exponential: Option<Vec<ExpRow>>,
}

#[derive(Serialize, Deserialize)]
struct VerifyRow {
    invariant: String,
    checks: usize,
    passed: usize,
    #[serde(with = "ext_real")]
    worst: f64,
}

fn load<T: DeserializeOwned>(cli: &Cli) -> Result<T, Failure> {
    let path = cli
        .spec
        .as_ref()
        .ok_or_else(|| Failure::Input("--spec is required for this command".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        Failure::Input(format!("schema error at `{at}`: {}", e.into_inner()))
    })
}

/// A command's result in both output forms.
struct Artifact {
    json: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Artifact {
    fn new<T: Serialize>(value: &T, header: Vec<String>, rows: Vec<Vec<String>>) -> Self {
        let json = to_json_string(value).expect("reports serialize");
        Self { json, header, rows }
    }
}

fn strings(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

fn run_prox(cli: &Cli) -> Result<Artifact, Failure> {
    let problem: ProxProblem = load(cli)?;
    let sol = problem.solve().map_err(core_err("prox"))?;
    let join = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ");
    let row = vec![
        join(&sol.minimizer),
        fmt_f64(sol.envelope_value),
        join(&sol.derivative),
        fmt_f64(sol.optimality_gap),
        serde_json::to_value(sol.solver)
            .expect("enum")
            .as_str()
            .unwrap_or_default()
            .to_string(),
        sol.iterations.to_string(),
    ];
    let header = strings(&[
        "minimizer",
        "envelope_value",
        "derivative",
        "optimality_gap",
        "solver",
        "iterations",
    ]);
    Ok(Artifact::new(&sol, header, vec![row]))
}

fn run_sweep(cli: &Cli) -> Result<Artifact, Failure> {
    let s: SweepSpec = load(cli)?;
    let f = s.function.build(&s.space).map_err(core_err("sweep-eps"))?;
    let monotonicity = envelope::eps_monotonicity_profile(&f, &s.space, s.p, &s.u, &s.eps)
        .map_err(core_err("sweep-eps: monotonicity profile"))?;
    let convergence = envelope::convergence_profile(&f, &s.space, s.p, &s.u, &s.eps)
        .map_err(core_err("sweep-eps: convergence profile"))?;
    let derivatives = s
        .eps
        .iter()
        .map(|&eps| {
            Ok(DerivativeRow {
                eps,
                analytic: envelope::eps_derivative(&f, &s.space, s.p, &s.u, eps)?,
                finite_difference: envelope::eps_derivative_fd(&f, &s.space, s.p, &s.u, eps)?,
            })
        })
        .collect::<pmoreau::Result<Vec<_>>>()
        .map_err(core_err("sweep-eps: eps derivative"))?;
    let header = strings(&[
        "eps",
        "f_eps",
        "distance",
        "gap",
        "bound",
        "eps_derivative",
        "eps_derivative_fd",
    ]);
    let rows = convergence
        .rows
        .iter()
        .zip(&derivatives)
        .map(|(r, d)| {
            vec![
                fmt_f64(r.eps),
                fmt_f64(r.value),
                fmt_f64(r.distance),
                fmt_f64(r.gap),
                r.bound.map_or_else(String::new, fmt_f64),
                fmt_f64(d.analytic),
                fmt_f64(d.finite_difference),
            ]
        })
        .collect();
    Ok(Artifact::new(
        &SweepReport {
            monotonicity,
            convergence,
            derivatives,
        },
        header,
        rows,
    ))
}

fn run_conjugate(cli: &Cli) -> Result<Artifact, Failure> {
    let s: ConjugateSpec = load(cli)?;
    let f = s.function.build(&s.space).map_err(core_err("conjugate"))?;
    let params = PowerParams::new(s.p, s.eps).map_err(core_err("conjugate"))?;
    let pairs: Vec<ConjugatePair> =
        envelope::envelope_conjugates(&f, &s.space, &params, &s.xi, &s.grid)
            .map_err(core_err("conjugate"))?;
    let rows = pairs
        .iter()
        .map(|c| {
            vec![
                c.xi.iter()
                    .map(|x| fmt_f64(*x))
                    .collect::<Vec<_>>()
                    .join(" "),
                c.analytic.map_or_else(String::new, fmt_f64),
                fmt_f64(c.numeric),
            ]
        })
        .collect();
    Ok(Artifact::new(
        &pairs,
        strings(&["xi", "analytic", "numeric"]),
        rows,
    ))
}

fn run_mosco(cli: &Cli) -> Result<Artifact, Failure> {
    let s: MoscoSpec = load(cli)?;
    let fx = mosco::fixture(&s.fixture).ok_or_else(|| {
        let mut names: Vec<&str> = mosco::FIXTURE_NAMES.to_vec();
        names.push(mosco::POINT_FIXTURE);
        Failure::Input(format!(
            "schema error at `fixture`: unknown fixture '{}', expected one of {names:?}",
            s.fixture
        ))
    })?;
    let params = PowerParams::new(s.p, s.eps).map_err(core_err("mosco"))?;
    let report = MoscoReport {
        fixture: s.fixture.clone(),
        liminf: mosco::liminf_check(&fx.seq, &fx.grid, s.n_max, s.tol)
            .map_err(core_err("mosco: liminf"))?,
        recovery: mosco::recovery_check(&fx.seq, &fx.grid, s.n_max, s.tol)
            .map_err(core_err("mosco: recovery"))?,
        envelope: mosco::envelope_preserves(
            &fx.seq, &fx.space, &params, &fx.grid, s.n_max, fx.burn_in,
        )
        .map_err(core_err("mosco: envelope"))?,
        diagonal: mosco::diagonal_convergence(
            &fx.seq,
            &fx.space,
            s.p,
            fx.eps_schedule,
            &fx.grid,
            s.n_max,
        )
        .map_err(core_err("mosco: diagonal"))?,
    };
    fn tag(name: &'static str, rows: Vec<Vec<String>>) -> impl Iterator<Item = Vec<String>> {
        rows.into_iter().map(move |mut r| {
            r.insert(0, name.to_string());
            r
        })
    }
    let rows = tag("liminf", report.liminf.csv_rows())
        .chain(tag("recovery", report.recovery.csv_rows()))
        .chain(tag("envelope", report.envelope.csv_rows()))
        .chain(tag("diagonal", report.diagonal.csv_rows()))
        .collect();
    Ok(Artifact::new(
        &report,
        strings(&["report", "n", "node", "margin_or_gap", "aux"]),
        rows,
    ))
}

fn run_hj(cli: &Cli) -> Result<Artifact, Failure> {
    let s: HjSpec = load(cli)?;
    let f = s.function.build(&s.space).map_err(core_err("hj"))?;
    let field = hj::lax_oleinik(&f, &s.space, s.p, &s.x_grid, &s.t_values)
        .map_err(core_err("hj: lax_oleinik"))?;
    let residual = if field.t_values.len() >= 3 && field.x_grid.points_per_axis >= 3 {
        Some(hj::hj_residual(&field, &s.space, s.p).map_err(core_err("hj: residual"))?)
    } else {
        None
    };
    let (header, rows) = (field.csv_header(), field.csv_rows());
    Ok(Artifact::new(&HjReport { field, residual }, header, rows))
}

fn run_flow(cli: &Cli) -> Result<Artifact, Failure> {
    let s: FlowSpec = load(cli)?;
    let f = s.function.build(&s.space).map_err(core_err("flow"))?;
    let trajectory = flow::minimizing_movement(&f, &s.space, s.p, s.tau, s.steps, &s.u0)
        .map_err(core_err("flow: trajectory"))?;
    let exponential = match &s.exponential {
        Some(e) => Some(
            flow::exponential_formula_check(&f, &s.space, e.t, &e.n_list, &s.u0)
                .map_err(core_err("flow: exponential formula"))?,
        ),
        None => None,
    };
    let (header, rows) = (trajectory.csv_header(), trajectory.csv_rows());
    Ok(Artifact::new(
        &FlowReport {
            trajectory,
            exponential,
        },
        header,
        rows,
    ))
}

fn run_verify(cli: &Cli) -> (Artifact, usize) {
    let summary: VerifySummary = verify::run_suite(cli.seed);
    let rows = summary
        .invariants
        .iter()
        .map(|i| {
            let worst = i
                .violations
                .iter()
                .map(|v| v.amount)
                .fold(f64::NAN, f64::max);
            VerifyRow {
                invariant: i.name.clone(),
                checks: i.checks,
                passed: i.passed,
                worst,
            }
        })
        .map(|r| {
            vec![
                r.invariant,
                r.checks.to_string(),
                r.passed.to_string(),
                fmt_f64(r.worst),
            ]
        })
        .collect();
    let n = summary.total_violations;
    (
        Artifact::new(
            &summary,
            strings(&["invariant", "checks", "passed", "worst_violation"]),
            rows,
        ),
        n,
    )
}

fn write(cli: &Cli, art: &Artifact) -> Result<(), Failure> {
    let body = match cli.format {
        Format::Json => art.json.clone(),
        Format::Csv => {
            let header: Vec<&str> = art.header.iter().map(String::as_str).collect();
            csv_string(&header, &art.rows)
        }
    };
    match &cli.out {
        Some(path) => fs::write(path, body)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::Input(format!("cannot write to stdout: {e}"))),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let art = match cli.command {
        Command::Prox => run_prox(cli)?,
        Command::SweepEps => run_sweep(cli)?,
        Command::Conjugate => run_conjugate(cli)?,
        Command::Mosco => run_mosco(cli)?,
        Command::Hj => run_hj(cli)?,
        Command::Flow => run_flow(cli)?,
        Command::Verify => {
            let (art, violations) = run_verify(cli);
            write(cli, &art)?;
            return if violations == 0 {
                Ok(())
            } else {
                Err(Failure::Violations(violations))
            };
        }
    };
    write(cli, &art)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violations(n)) => {
            eprintln!("verify: {n} invariant violation(s); see the report for the list");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure in {msg}");
            ExitCode::from(3)
        }
    }
}
