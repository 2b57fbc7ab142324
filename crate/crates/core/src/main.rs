use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use oqw::derivation::{build_transition_operators, Construction, ModelSpec, TransitionOperatorSet, NODE_1};
use oqw::io::{self, default_delta};
use oqw::linalg::{hermitian_eig, HERMITIAN_TOL};
use oqw::lindblad::{
    compare_discrete_continuous, rk4_integrate, steady_state, GeneratorSpec, OdeConfig, SteadyStateConfig,
};
use oqw::state::{BlockState, DensityMatrix};
use oqw::walk::{mixing_time, run_walk, StepMode, STRICT_TOL};
use oqw::{Error, Result};

/// Largest V·N for which `validate` diagonalizes the Choi matrix.
const CHOI_MAX_SIZE: usize = 8;
const CHOI_PSD_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "oqw",
    version,
    about = "Open quantum walks from a microscopic system-bath model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the coin operators of a model and write them as JSON.
    Derive(DeriveArgs),
    /// Run the discrete open quantum walk.
    Walk(WalkArgs),
    /// Integrate the continuous block master equation.
    Evolve(EvolveArgs),
    /// Compare the walk with the master equation as Δ shrinks.
    Compare(CompareArgs),
    /// Check a model or an operator file.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    Renormalized,
    FirstOrder,
}

impl From<Mode> for StepMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Strict => StepMode::Strict,
            Mode::Renormalized => StepMode::Renormalized,
            Mode::FirstOrder => StepMode::FirstOrderWarn,
        }
    }
}

#[derive(Args)]
struct DeriveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Time step Δ (default 0.01/γ₀).
    #[arg(long)]
    delta: Option<f64>,
    /// Use the exactly normalized stay operators.
    #[arg(long)]
    exact: bool,
    /// Operator file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false, args = ["config", "operators"])]
struct SourceArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    operators: Option<PathBuf>,
}

#[derive(Args)]
struct WalkArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, value_enum, default_value = "renormalized")]
    mode: Mode,
    /// Threshold for the reported mixing time.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Trajectory CSV to write; the report goes next to it as `<out>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Integrator step (default 0.01/max rate).
    #[arg(long)]
    dt: Option<f64>,
    /// Final time (default 10/γ₀).
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Also integrate to the steady state at this tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    /// Walk step Δ (default 1e-4/γ₀).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Normalization tolerance.
    #[arg(long, default_value_t = STRICT_TOL)]
    tol: f64,
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn load_model(path: &Path) -> Result<ModelSpec> {
    io::parse_model_config(&read(path)?)
}

fn construction(exact: bool) -> Construction {
    if exact {
        Construction::Exact
    } else {
        Construction::FirstOrder
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn write_report(out: Option<&Path>, report: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    if let Some(out) = out {
        let mut sidecar = out.as_os_str().to_owned();
        sidecar.push(".json");
        io::write_atomic(Path::new(&sidecar), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn derive(args: &DeriveArgs) -> Result<Value> {
    let spec = load_model(&args.config)?;
    let delta = args.delta.unwrap_or_else(|| default_delta(&spec));
    let ops = build_transition_operators(&spec, delta, construction(args.exact))?;
    if let Some(out) = &args.out {
        io::write_atomic(out, &(io::serialize_operators(&ops) + "\n"))?;
    }
    let residuals = ops.normalization_residual();
    Ok(json!({
        "command": "derive",
        "delta": delta,
        "construction": ops.construction,
        "terms": ops.terms.len(),
        "residuals": residuals,
        "max_residual": max_of(&residuals),
    }))
}

/// Operators plus the default initial state: the ground state of Ω₁ on
/// node 1 for a model, the maximally mixed coin on node 1 for a file.
fn load_walk(source: &SourceArgs, delta: Option<f64>, exact: bool) -> Result<(TransitionOperatorSet, BlockState)> {
    match (&source.config, &source.operators) {
        (Some(config), _) => {
            let spec = load_model(config)?;
            let delta = delta.unwrap_or_else(|| default_delta(&spec));
            let ops = build_transition_operators(&spec, delta, construction(exact))?;
            let init = BlockState::localized(2, NODE_1, &spec.ground_state()?)?;
            Ok((ops, init))
        }
        (None, Some(path)) => {
            let ops = io::parse_operators(&read(path)?)?;
            let init = BlockState::localized(ops.node_count, 0, &DensityMatrix::maximally_mixed(ops.dim))?;
            Ok((ops, init))
        }
        (None, None) => unreachable!("clap enforces a source"),
    }
}

fn walk(args: &WalkArgs) -> Result<Value> {
    let (ops, init) = load_walk(&args.source, args.delta, args.exact)?;
    let map = ops.to_map(args.mode.into())?;
    let traj = run_walk(&map, &init, args.steps)?;
    if let Some(out) = &args.out {
        io::write_trajectory(&traj, out)?;
    }
    let residuals = map.residuals();
    let mixing = match mixing_time(&traj, args.eps) {
        Ok(n) => Some(n),
        Err(Error::NotConverged(_) | Error::BadParameter { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(json!({
        "command": "walk",
        "delta": ops.delta,
        "mode": map.mode(),
        "steps": args.steps,
        "final_probabilities": traj.final_probabilities(),
        "mixing_time": mixing,
        "mixing_eps": args.eps,
        "residuals": residuals,
        "max_residual": max_of(&residuals),
        "max_raw_trace_drift": traj.max_raw_trace_drift(),
    }))
}

fn evolve(args: &EvolveArgs) -> Result<Value> {
    let spec = load_model(&args.config)?;
    let generator = GeneratorSpec::from_model(&spec)?;
    let rate = generator.max_rate();
    let dt = args.dt.unwrap_or(if rate > 0.0 { 0.01 / rate } else { 0.01 });
    let t_final = args.t_final.unwrap_or(10.0 / spec.gamma0());
    let cfg = OdeConfig::new(dt, t_final, args.stride)?;
    let init = BlockState::localized(2, NODE_1, &spec.ground_state()?)?;
    let traj = rk4_integrate(&generator, &init, &cfg)?;
    if let Some(out) = &args.out {
        io::write_trajectory(&traj, out)?;
    }
    let steady = match args.tol {
        Some(tol) => Some(steady_state(&generator, &init, tol, &SteadyStateConfig::default())?.node_probabilities()),
        None => None,
    };
    Ok(json!({
        "command": "evolve",
        "dt": dt,
        "t_final": t_final,
        "rows": traj.len(),
        "final_probabilities": traj.final_probabilities(),
        "max_trace_error": traj.max_trace_error(),
        "steady_state_probabilities": steady,
    }))
}

fn compare(args: &CompareArgs) -> Result<Value> {
    let spec = load_model(&args.config)?;
    let delta = args.delta.unwrap_or(1e-4 / spec.gamma0());
    let r = compare_discrete_continuous(&spec, delta, args.steps)?;
    Ok(json!({
        "command": "compare",
        "delta": r.delta,
        "steps": r.steps,
        "ode_dt": r.ode_dt,
        "max_deviation": r.max_deviation,
        "discrete_final": r.discrete_final,
        "continuous_final": r.continuous_final,
    }))
}

fn validate_operators(ops: &TransitionOperatorSet, tol: f64) -> (Value, Option<Error>) {
    let residuals = ops.normalization_residual();
    let choi_min = (ops.node_count * ops.dim <= CHOI_MAX_SIZE).then(|| {
        let map = ops
            .to_map(StepMode::FirstOrderWarn)
            .expect("parsed operators are well shaped");
        hermitian_eig(&map.choi_matrix(), HERMITIAN_TOL).map(|e| e.eigenvalues[0])
    });
    let choi_min = match choi_min.transpose() {
        Ok(v) => v,
        Err(e) => return (Value::Null, Some(e)),
    };
    let failure = residuals
        .iter()
        .enumerate()
        .find(|(_, r)| **r > tol)
        .map(|(node, &residual)| Error::NotNormalized { node, residual, tol })
        .or_else(|| choi_min.filter(|m| *m < -CHOI_PSD_TOL).map(Error::NotPsd));
    let report = json!({
        "command": "validate",
        "node_count": ops.node_count,
        "dim": ops.dim,
        "terms": ops.terms.len(),
        "residuals": residuals,
        "max_residual": max_of(&residuals),
        "tol": tol,
        "choi_min_eigenvalue": choi_min,
        "valid": failure.is_none(),
    });
    (report, failure)
}

fn validate_model(spec: &ModelSpec) -> Result<Value> {
    let bohr = spec.bohr()?;
    let channels = spec.channels()?;
    Ok(json!({
        "command": "validate",
        "dim": spec.dim(),
        "gamma0": spec.gamma0(),
        "beta": spec.beta(),
        "two_level_preset": spec.is_two_level_preset(),
        "up_frequencies": bohr.up_frequencies(),
        "down_frequencies": bohr.down_frequencies(),
        "channels": channels.iter().map(|c| json!({
            "from_node": c.from + 1,
            "to_node": c.to + 1,
            "label": c.label,
            "rate": c.rate,
        })).collect::<Vec<_>>(),
        "valid": true,
    }))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Derive(a) => write_report(None, &derive(a)?),
        Command::Walk(a) => write_report(a.out.as_deref(), &walk(a)?),
        Command::Evolve(a) => write_report(a.out.as_deref(), &evolve(a)?),
        Command::Compare(a) => write_report(None, &compare(a)?),
        Command::Validate(a) => match (&a.source.config, &a.source.operators) {
            (Some(config), _) => write_report(None, &validate_model(&load_model(config)?)?),
            (None, Some(path)) => {
                let ops = io::parse_operators(&read(path)?)?;
                let (report, failure) = validate_operators(&ops, a.tol);
                if !report.is_null() {
                    write_report(None, &report)?;
                }
                failure.map_or(Ok(()), Err)
            }
            (None, None) => unreachable!("clap enforces a source"),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
