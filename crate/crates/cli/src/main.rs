use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lipp::baselines::{solve_cipp, solve_greedy, CippQuery, GreedyMode, GreedyQuery};
use lipp::exec::set_thread_count;
use lipp::experiments::{
    bound_audit, budget_sweep, generate_all, generate_scenario, lambda_sweep, read_csv, runtime_profile, spec_family,
    summarize, write_csv, BudgetSweepConfig, LambdaSweepConfig, MetricsRow, ProfileConfig, ScenarioSpec,
};
use lipp::miqp::{build_assignment, build_miqp, export_model, parse_lp, validate_assignment, Assignment};
use lipp::{EnergyParams, Execution, LippError, PlanQuery, Scenario, SolveReport, SolveStatus, VisitPolicy};
use serde::Serialize;
use serde_json::{json, Value};

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "lipp", version, about = "Load-aware informative path planning")]
struct Cli {
    /// Worker threads for sweeps and the parallel search.
    #[arg(long, env = "LIPP_THREADS", global = true)]
    threads: Option<usize>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random scenario.
    Gen(GenArgs),
    /// Plan on a scenario file and write the solve report.
    Plan(PlanArgs),
    /// Lambda sweep over a family of random scenarios.
    SweepLambda(SweepLambdaArgs),
    /// Energy-budget sweep relative to the distance-budget reference.
    SweepBudget(SweepBudgetArgs),
    /// Audit the distance-overhead bound over sweep CSVs.
    AuditBound(AuditArgs),
    /// Wall-time profile over graph sizes.
    Profile(ProfileArgs),
    /// Write the mixed-integer model of a scenario in LP format.
    ExportMiqp(ExportArgs),
    /// Check an assignment against an exported model.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 0.4)]
    density: f64,
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    height_amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    signal_variance: f64,
    #[arg(long, default_value_t = 0.3)]
    lengthscale: f64,
    #[arg(long, default_value_t = 0.5)]
    noise_variance: f64,
    #[arg(long, default_value_t = 6)]
    test_points: usize,
    #[command(flatten)]
    energy: EnergyArgs,
    #[arg(long, short)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

/// Mass model flags shared by every planning command.
#[derive(Args, Debug, Clone, Copy, Serialize)]
struct EnergyArgs {
    /// Mass of one sample.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Energy budget B.
    #[arg(long, default_value_t = 2.0)]
    budget: f64,
    /// Base mass R0.
    #[arg(long, default_value_t = 1.0)]
    r0: f64,
    #[arg(long, default_value_t = 3)]
    smax: u32,
    /// Load capacity.
    #[arg(long, default_value_t = 100.0)]
    lmax: f64,
    /// Optional cap on geometric path length.
    #[arg(long)]
    distance_cap: Option<f64>,
}

impl EnergyArgs {
    fn params(&self) -> EnergyParams {
        EnergyParams {
            lambda: self.lambda,
            base_mass: self.r0,
            s_max: self.smax,
            l_max: self.lmax,
            budget: self.budget,
            distance_cap: self.distance_cap,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Method {
    Lipp,
    Cipp,
    Greedy,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum GreedyBudget {
    Energy,
    Distance,
}

#[derive(Args, Debug, Serialize)]
struct PlanArgs {
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "lipp")]
    method: Method,
    #[command(flatten)]
    energy: EnergyArgs,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 0.0)]
    gap: f64,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Samples per vertex for the distance-budget planner.
    #[arg(long, default_value_t = 3)]
    s: u32,
    /// Distance budget b.
    #[arg(long, default_value_t = 2.0)]
    distance_budget: f64,
    /// Which budget the greedy planner spends.
    #[arg(long, value_enum, default_value = "energy")]
    greedy_budget: GreedyBudget,
    /// Require at least one sample at every visited vertex.
    #[arg(long)]
    strict_sampling: bool,
    /// Also write the MIQP assignment of the plan (name -> value JSON).
    #[arg(long)]
    assignment_out: Option<PathBuf>,
    #[arg(long, short)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FamilyArgs {
    /// Number of scenarios.
    #[arg(long, default_value_t = 50)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![6, 7, 8, 9, 10])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.4)]
    density: f64,
    #[arg(long, default_value_t = 6)]
    test_points: usize,
}

impl FamilyArgs {
    fn specs(&self) -> Vec<ScenarioSpec> {
        let template = ScenarioSpec {
            density: self.density,
            test_point_count: self.test_points,
            ..ScenarioSpec::default()
        };
        spec_family(&template, &self.sizes, self.first_seed, self.seeds)
    }
}

#[derive(Args, Debug, Serialize)]
struct OutputArgs {
    /// One metrics row per line.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-condition means and standard errors.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Record wall time per row.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug, Serialize)]
struct SweepLambdaArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.25, 0.5, 0.75, 1.0])]
    lambdas: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    budget: f64,
    #[arg(long, default_value_t = 2.0)]
    distance_budget: f64,
    #[arg(long, default_value_t = 1.0)]
    r0: f64,
    #[arg(long, default_value_t = 3)]
    smax: u32,
    #[arg(long, default_value_t = 100.0)]
    lmax: f64,
    #[arg(long, default_value_t = 0.0)]
    gap: f64,
    #[arg(long)]
    no_greedy: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct SweepBudgetArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 0.5, 0.35])]
    kappas: Vec<f64>,
    /// Sample mass used for the reference energy and the load-aware planner.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 2.0)]
    distance_budget: f64,
    #[arg(long, default_value_t = 1.0)]
    r0: f64,
    #[arg(long, default_value_t = 3)]
    smax: u32,
    #[arg(long, default_value_t = 100.0)]
    lmax: f64,
    #[arg(long, default_value_t = 0.0)]
    gap: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct AuditArgs {
    /// Sweep CSV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 3)]
    smax: u32,
    #[arg(long, short)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ProfileArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![4, 6, 8, 10])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    seeds_per_size: u64,
    #[arg(long, default_value_t = 0.15)]
    density: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 2.0)]
    budget: f64,
    #[arg(long, default_value_t = 2.0)]
    distance_budget: f64,
    #[arg(long, default_value_t = 3)]
    smax: u32,
    #[arg(long, default_value_t = 0.05)]
    gap: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ExportArgs {
    scenario: PathBuf,
    #[command(flatten)]
    energy: EnergyArgs,
    #[arg(long, short)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ValidateArgs {
    /// Model written by export-miqp.
    model: PathBuf,
    /// JSON object mapping variable names to values.
    assignment: PathBuf,
    #[arg(long, short)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Internal(String),
}

impl From<LippError> for Failure {
    fn from(e: LippError) -> Self {
        match e {
            LippError::Input(_)
            | LippError::Parse { .. }
            | LippError::SchemaVersion { .. }
            | LippError::Json(_)
            | LippError::Csv(_)
            | LippError::Io(_) => Failure::Usage(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: thread count must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        set_thread_count(t);
    }
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Plan(a) => plan(a, execution),
        Command::SweepLambda(a) => sweep_lambda(a, execution),
        Command::SweepBudget(a) => sweep_budget(a, execution),
        Command::AuditBound(a) => audit(a),
        Command::Profile(a) => profile(a, execution),
        Command::ExportMiqp(a) => export(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_INFEASIBLE),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

/// Flags of the invocation, embedded in every output.
fn invocation(command: &str, args: &impl Serialize) -> Value {
    json!({
        "command": command,
        "flags": args,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| Failure::Internal(e.to_string()))
        }
    }
}

fn emit_json(path: Option<&Path>, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
    text.push('\n');
    emit(path, &text)
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    Scenario::load(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn gen(a: &GenArgs) -> Outcome {
    let spec = ScenarioSpec {
        n: a.n,
        density: a.density,
        seed: a.seed,
        area: 1.0,
        height_amplitude: a.height_amplitude,
        alpha: a.alpha,
        signal_variance: a.signal_variance,
        lengthscale: a.lengthscale,
        noise_variance: a.noise_variance,
        test_point_count: a.test_points,
        energy: a.energy.params(),
    };
    let mut sc = generate_scenario(&spec)?;
    sc.metadata.insert("invocation".into(), invocation("gen", a));
    let mut text = sc.to_json()?;
    text.push('\n');
    emit(a.out.as_deref(), &text)?;
    Ok(true)
}

fn plan(a: &PlanArgs, execution: Execution) -> Outcome {
    let sc = load_scenario(&a.scenario)?;
    let params = a.energy.params();
    let policy = if a.strict_sampling {
        VisitPolicy::SampleEveryVisit
    } else {
        VisitPolicy::PassThrough
    };
    let lipp_query = || {
        let mut q = PlanQuery::new(sc.world.clone(), sc.field.clone(), params)
            .with_gap(a.gap)
            .with_visit_policy(policy)
            .with_execution(execution);
        q.node_limit = a.node_limit;
        q
    };
    let report: SolveReport = match a.method {
        Method::Lipp => lipp::solve_exact(&lipp_query())?,
        Method::Cipp => {
            let mut q = CippQuery::new(sc.world.clone(), sc.field.clone(), a.distance_budget, a.s, params)
                .with_gap(a.gap)
                .with_execution(execution);
            q.node_limit = a.node_limit;
            solve_cipp(&q)?
        }
        Method::Greedy => solve_greedy(&GreedyQuery {
            world: sc.world.clone(),
            field: sc.field.clone(),
            energy: params,
            mode: match a.greedy_budget {
                GreedyBudget::Energy => GreedyMode::Energy,
                GreedyBudget::Distance => GreedyMode::Distance {
                    budget: a.distance_budget,
                },
            },
        })?,
    };
    if let (Some(path), Some(p)) = (&a.assignment_out, &report.plan) {
        let query = lipp_query();
        let model = build_miqp(&query)?;
        let assignment = build_assignment(&query, &model, p)?;
        emit_json(Some(path), &assignment.to_map(&model))?;
    }
    let prior = sc.field.prior_variance();
    emit_json(
        a.out.as_deref(),
        &json!({
            "invocation": invocation("plan", a),
            "prior_variance": prior,
            "report": report,
        }),
    )?;
    Ok(report.status != SolveStatus::Infeasible)
}

fn write_rows(rows: &[MetricsRow], output: &OutputArgs, meta: Value) -> Result<(), Failure> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    match &output.csv {
        Some(p) => emit(Some(p), &String::from_utf8_lossy(&buf))?,
        None if output.summary.is_none() => emit(None, &String::from_utf8_lossy(&buf))?,
        None => {}
    }
    if let Some(p) = &output.summary {
        emit_json(
            Some(p),
            &json!({
                "invocation": meta,
                "rows": rows.len(),
                "conditions": summarize(rows),
            }),
        )?;
    }
    Ok(())
}

fn sweep_lambda(a: &SweepLambdaArgs, execution: Execution) -> Outcome {
    let scenarios = generate_all(&a.family.specs(), execution)?;
    let config = LambdaSweepConfig {
        lambdas: a.lambdas.clone(),
        budget: a.budget,
        distance_budget: a.distance_budget,
        base_mass: a.r0,
        s_max: a.smax,
        l_max: a.lmax,
        optimality_gap: a.gap,
        include_greedy: !a.no_greedy,
        timing: a.output.timing,
        execution,
    };
    let rows = lambda_sweep(&scenarios, &config)?;
    write_rows(&rows, &a.output, invocation("sweep-lambda", a))?;
    Ok(true)
}

fn sweep_budget(a: &SweepBudgetArgs, execution: Execution) -> Outcome {
    let scenarios = generate_all(&a.family.specs(), execution)?;
    let config = BudgetSweepConfig {
        kappas: a.kappas.clone(),
        distance_budget: a.distance_budget,
        lambda: a.lambda,
        base_mass: a.r0,
        s_max: a.smax,
        l_max: a.lmax,
        optimality_gap: a.gap,
        timing: a.output.timing,
        execution,
    };
    let rows = budget_sweep(&scenarios, &config)?;
    write_rows(&rows, &a.output, invocation("sweep-budget", a))?;
    Ok(true)
}

fn audit(a: &AuditArgs) -> Outcome {
    let mut rows = Vec::new();
    for path in &a.inputs {
        let file = fs::File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        rows.extend(read_csv(file)?);
    }
    let report = bound_audit(&rows, a.smax);
    emit_json(
        a.out.as_deref(),
        &json!({
            "invocation": invocation("audit-bound", a),
            "audit": report,
        }),
    )?;
    Ok(report.clean())
}

fn profile(a: &ProfileArgs, execution: Execution) -> Outcome {
    let mut spec = ProfileConfig::default().spec;
    spec.density = a.density;
    spec.energy.lambda = a.lambda;
    spec.energy.budget = a.budget;
    spec.energy.s_max = a.smax;
    let config = ProfileConfig {
        sizes: a.sizes.clone(),
        seeds_per_size: a.seeds_per_size,
        spec,
        distance_budget: a.distance_budget,
        optimality_gap: a.gap,
        execution,
    };
    let (rows, summary) = runtime_profile(&config)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| Failure::Internal(e.to_string()))?;
    }
    let buf = w.into_inner().map_err(|e| Failure::Internal(e.to_string()))?;
    if a.csv.is_some() || a.summary.is_none() {
        emit(a.csv.as_deref(), &String::from_utf8_lossy(&buf))?;
    }
    if let Some(p) = &a.summary {
        emit_json(
            Some(p),
            &json!({
                "invocation": invocation("profile", a),
                "summary": summary,
            }),
        )?;
    }
    Ok(true)
}

fn export(a: &ExportArgs) -> Outcome {
    let sc = load_scenario(&a.scenario)?;
    let query = PlanQuery::new(sc.world, sc.field, a.energy.params());
    let model = build_miqp(&query)?;
    match &a.out {
        Some(p) => export_model(&model, p)?,
        None => emit(None, &lipp::miqp::write_lp(&model))?,
    }
    let counts = model.counts();
    eprintln!(
        "{} variables ({} binary, {} integer, {} continuous), {} constraints",
        counts.total(),
        counts.binary,
        counts.integer,
        counts.continuous,
        model.constraints.len()
    );
    Ok(true)
}

fn validate(a: &ValidateArgs) -> Outcome {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())));
    let model = parse_lp(&read(&a.model)?)?;
    let values = serde_json::from_str(&read(&a.assignment)?)?;
    let assignment = Assignment::from_map(&model, &values)?;
    let report = validate_assignment(&model, &assignment)?;
    emit_json(
        a.out.as_deref(),
        &json!({
            "invocation": invocation("validate", a),
            "all_pass": report.all_pass(),
            "report": report,
        }),
    )?;
    Ok(report.all_pass())
}
