//! `dlsat` command line: encode, train, evaluate, explain, cv and solve.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage error, 3 unsatisfiable
//! or inconsistent data, 4 resource limit (timeout or node cap).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use dlsat::crossval::{cross_validate, CvConfig};
use dlsat::dataset::{load_csv, one_hot, quantize, BinDataset, ClassColumn, DatasetError, Instance};
use dlsat::encoder::{encode_perfect, encode_sparse, EncodeError, SparseConfig};
use dlsat::maxsat::{format_output, solve_builtin, wcnf, BuiltinSolver, ExternalSolver, MaxSatSolver, SolveError};
use dlsat::metrics::{decimal, evaluate, explain_dl, MetricsError};
use dlsat::model::{DecisionList, ModelError, Schema};
use dlsat::trainer::{train, Mode, NSchedule, OrderingStrategy, TrainError};

#[derive(Debug, Parser)]
#[command(name = "dlsat", version, about = "Exact decision list learning through MaxSAT")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the WCNF formula for a fixed node bound, plus a variable map.
    Encode(EncodeArgs),
    /// Train a decision list and save it as JSON.
    Train(TrainArgs),
    /// Score a saved model on a dataset.
    Evaluate(EvaluateArgs),
    /// Show which rule classifies each instance and its explanation size.
    Explain(ExplainArgs),
    /// k-fold cross validation.
    Cv(CvArgs),
    /// Solve a WCNF file with the built-in solver (MaxSAT evaluation output).
    Solve(SolveArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Class column: a header name, a 0-based index, or `last`.
    #[arg(long = "class", default_value = "last")]
    class_column: ClassColumn,
    /// Equal-width intervals for numeric columns (2, 3, 4) or `off`.
    #[arg(long, default_value = "off", value_parser = parse_intervals)]
    quantize: Intervals,
}

#[derive(Debug, Clone, Copy)]
struct Intervals(Option<usize>);

fn parse_intervals(s: &str) -> std::result::Result<Intervals, String> {
    match s {
        "off" => Ok(Intervals(None)),
        "2" | "3" | "4" => Ok(Intervals(Some(s.parse().expect("digit")))),
        other => Err(format!("expected 2, 3, 4 or off, got `{other}`")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Perfect,
    Sparse,
}

#[derive(Debug, Args)]
struct ModeArgs {
    #[arg(long, value_enum, default_value = "perfect")]
    mode: ModeArg,
    /// Sparse regularization in (0, 1]; common values 0.005, 0.05, 0.5.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// `builtin`, or an external MaxSAT command (the WCNF path is appended).
    /// Defaults to $DLSAT_SOLVER when set, else builtin.
    #[arg(long)]
    solver: Option<String>,
    /// Per-solve time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    /// Node bound: fixed N in sparse mode, first N tried in perfect mode.
    #[arg(long)]
    nodes: Option<usize>,
    /// Perfect mode: N increment after an unsatisfiable bound.
    #[arg(long, default_value_t = NSchedule::DEFAULT_STEP)]
    step: usize,
    /// Perfect mode: largest N tried.
    #[arg(long, default_value_t = NSchedule::DEFAULT_MAX_N)]
    max_nodes: usize,
    /// union, count-asc, count-desc, acc-asc, acc-desc, cost-asc, cost-desc,
    /// greedy, or a comma-separated list of class names.
    #[arg(long, default_value = "union")]
    order: String,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    mode: ModeArgs,
    #[arg(long)]
    nodes: usize,
    /// WCNF output; the variable map goes to `<output>.map`.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    mode: ModeArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Where to write the model JSON.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Add one row per instance.
    #[arg(long)]
    per_instance: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// 1-based row to explain; all rows when omitted.
    #[arg(long)]
    row: Option<usize>,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    mode: ModeArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Folds trained concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Report file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    wcnf: PathBuf,
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Wcnf(#[from] wcnf::WcnfError),
    #[error("model and dataset disagree: {0}")]
    Mismatch(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Dataset(DatasetError::BadFoldCount { .. } | DatasetError::BadIntervals(_)) => 2,
            CliError::Encode(EncodeError::Inconsistent(_)) => 3,
            CliError::Encode(EncodeError::BadLambda(_) | EncodeError::TooFewNodes(_)) => 2,
            CliError::Train(e) => e.exit_code() as u8,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load(args: &DataArgs) -> Result<BinDataset> {
    let raw = load_csv(&args.data, &args.class_column)?;
    let raw = match args.quantize.0 {
        Some(k) => quantize(&raw, k)?,
        None => raw,
    };
    Ok(one_hot(&raw)?)
}

fn mode(args: &ModeArgs, schedule: Option<&ScheduleArgs>, classes: usize) -> Result<Mode> {
    match (args.mode, args.lambda) {
        (ModeArg::Sparse, None) => Err(CliError::Usage("sparse mode needs --lambda".into())),
        (ModeArg::Sparse, Some(lambda)) => {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return Err(CliError::Usage(format!("--lambda must lie in (0, 1], got {lambda}")));
            }
            Ok(Mode::Sparse {
                lambda,
                nodes: schedule.and_then(|s| s.nodes),
            })
        }
        (ModeArg::Perfect, Some(_)) => Err(CliError::Usage("--lambda needs --mode sparse".into())),
        (ModeArg::Perfect, None) => {
            let mut s = NSchedule::for_classes(classes);
            if let Some(args) = schedule {
                s.initial_n = args.nodes.unwrap_or(s.initial_n);
                s.step = args.step;
                s.max_n = args.max_nodes;
            }
            s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(Mode::Perfect(s))
        }
    }
}

fn strategy(text: &str, class_names: &[String]) -> Result<OrderingStrategy> {
    if let Ok(s) = text.parse() {
        return Ok(s);
    }
    let ids = text
        .split(',')
        .map(|name| {
            class_names
                .iter()
                .position(|c| c == name.trim())
                .ok_or_else(|| CliError::Usage(format!("unknown order or class `{name}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OrderingStrategy::Explicit(ids))
}

fn solver(args: &SolverArgs) -> Result<Box<dyn MaxSatSolver>> {
    let limit = match args.time_limit {
        Some(s) if s.is_finite() && s >= 0.0 => Some(Duration::from_secs_f64(s)),
        Some(s) => return Err(CliError::Usage(format!("bad --time-limit {s}"))),
        None => None,
    };
    let external = match args.solver.as_deref() {
        Some("builtin") => None,
        Some(cmd) => Some(
            ExternalSolver::from_command_line(cmd)
                .ok_or_else(|| CliError::Usage("empty --solver command".into()))?,
        ),
        None => ExternalSolver::from_env(),
    };
    Ok(match external {
        Some(e) => Box::new(e.with_time_limit(limit)),
        None => Box::new(BuiltinSolver::new(limit)),
    })
}

fn cmd_encode(args: EncodeArgs) -> Result<()> {
    let ds = load(&args.data)?;
    let enc = match mode(&args.mode, None, ds.class_count())? {
        Mode::Perfect(_) => encode_perfect(&ds, args.nodes)?,
        Mode::Sparse { lambda, .. } => encode_sparse(&ds, args.nodes, &SparseConfig::new(lambda, ds.len())?)?,
    };
    write(&args.output, &wcnf::to_wcnf_string(&enc.formula))?;
    let mut map = String::new();
    for var in 1..=enc.formula.variable_count {
        map.push_str(&format!("{var} {}\n", enc.layout.describe(var)));
    }
    let mut map_path = args.output.clone().into_os_string();
    map_path.push(".map");
    write(Path::new(&map_path), &map)?;
    println!(
        "variables {} hard {} soft {} literals {}",
        enc.formula.variable_count,
        enc.formula.hard.len(),
        enc.formula.soft.len(),
        enc.formula.literal_count()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let ds = load(&args.data)?;
    let mode = mode(&args.mode, Some(&args.schedule), ds.class_count())?;
    let strategy = strategy(&args.schedule.order, &ds.class_names)?;
    let solver = solver(&args.solver)?;
    let out = train(&ds, &mode, &strategy, solver.as_ref())?;
    let eval = evaluate(&out.list, &ds, false)?;
    print!("{}", out.list);
    println!("rules {}", out.list.rules.len());
    println!("size {}", out.list.size());
    if let Some(n) = out.nodes {
        println!("node_bound {n}");
    }
    println!("training_accuracy {:.4}", eval.accuracy);
    println!("average_explanation {}", eval.average_explanation);
    println!("optimal {}", out.optimal);
    if let Some(cost) = out.cost {
        println!("solver_cost {cost}");
    }
    if let Some(o) = out.objective {
        println!(
            "objective errors {} node_cost {} offset {} total {}",
            o.errors, o.node_cost, o.offset, o.total
        );
    }
    if !out.order.is_empty() {
        let names: Vec<&str> = out.order.iter().map(|&c| ds.class_names[c].as_str()).collect();
        println!("order {}", names.join(","));
    }
    for lint in out.list.lint() {
        eprintln!("warning: {lint:?}");
    }
    if let Some(path) = &args.output {
        write(path, &out.list.to_json())?;
    }
    Ok(())
}

/// Re-indexes `ds` to the model's feature and class order, by name.
fn align(ds: &BinDataset, schema: &Schema) -> Result<BinDataset> {
    let features = schema
        .feature_names
        .iter()
        .map(|name| {
            ds.feature_names
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| CliError::Mismatch(format!("dataset has no feature `{name}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let classes = ds
        .class_names
        .iter()
        .map(|name| {
            schema
                .class_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| CliError::Mismatch(format!("model has no class `{name}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BinDataset {
        feature_names: schema.feature_names.clone(),
        class_names: schema.class_names.clone(),
        target: schema.target.clone(),
        instances: ds
            .instances
            .iter()
            .map(|i| Instance {
                features: features.iter().map(|&f| i.features[f]).collect(),
                class_id: classes[i.class_id],
            })
            .collect(),
    })
}

fn load_model(path: &Path) -> Result<DecisionList> {
    Ok(DecisionList::from_json(&read(path)?)?)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let ds = align(&load(&args.data)?, &model.schema)?;
    let report = evaluate(&model, &ds, args.per_instance)?;
    match args.format {
        Format::Csv => print!("{}", report.to_csv()),
        Format::Json => println!("{}", report.to_json()),
    }
    Ok(())
}

fn cmd_explain(args: ExplainArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let ds = align(&load(&args.data)?, &model.schema)?;
    let rows: Vec<usize> = match args.row {
        Some(r) if r >= 1 && r <= ds.len() => vec![r - 1],
        Some(r) => return Err(CliError::Usage(format!("row {r} out of range 1..={}", ds.len()))),
        None => (0..ds.len()).collect(),
    };
    for i in rows {
        let x = &ds.instances[i].features;
        let size = decimal(explain_dl(&model, x)?);
        match model.predict(x)? {
            Some((_, k)) => println!(
                "row {}: rule {} ({}) explanation {size}",
                i + 1,
                k + 1,
                model.schema.rule_text(&model.rules[k])
            ),
            None => println!("row {}: no rule fires, explanation {size}", i + 1),
        }
    }
    Ok(())
}

fn cmd_cv(args: CvArgs) -> Result<()> {
    let raw = load_csv(&args.data.data, &args.data.class_column)?;
    // class names are needed to resolve an explicit order
    let classes = one_hot(&raw)?.class_names;
    let cfg = CvConfig {
        folds: args.folds,
        seed: args.seed,
        intervals: args.data.quantize.0,
        mode: mode(&args.mode, Some(&args.schedule), classes.len())?,
        strategy: strategy(&args.schedule.order, &classes)?,
        jobs: args.jobs,
    };
    let solver = solver(&args.solver)?;
    let report = cross_validate(&raw, &cfg, solver.as_ref())?;
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json() + "\n",
    };
    match &args.output {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let formula = wcnf::parse_wcnf(&read(&args.wcnf)?)?;
    let limit = args.time_limit.map(Duration::from_secs_f64);
    print!("{}", format_output(&solve_builtin(&formula, limit)));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Solve(a) => cmd_solve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
