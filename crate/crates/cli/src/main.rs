//! Command-line surface: real-data testing from CSV, simulation
//! scenarios, reference-table reproduction, and null-score export.
//!
//! Exit codes: 0 on completion, 2 on input errors, 3 on assumption
//! violations (`p >= n1 + n2`, a unit dimension ratio), 4 on I/O failures
//! writing outputs.

mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use meancov::{
    null_histogram, reproduce_table, run_hn_test, run_ml_test, run_replications,
    EntryDistribution, Error as CoreError, ModelKind, MomentMode, SimulationModel, TableId,
    TableRow, Tail, TestConfig, TestKind, TestSelection,
};

use report::{
    human_summary, rows_csv, test_csv, to_json_string, NulldistSummary, TableCellMeta, TableMeta,
    TestDocument, TOOL_NAME, TOOL_VERSION,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad inputs or flags: exit 2.
    Input(String),
    /// Statistical assumptions violated: exit 3.
    Assumption(String),
    /// Failure writing outputs: exit 4.
    Io(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        fn classify(e: &CoreError) -> bool {
            matches!(
                e,
                CoreError::Dimension { .. }
                    | CoreError::AssumptionViolation { .. }
                    | CoreError::Calibration { .. }
                    | CoreError::GammaRatio { .. }
            )
        }
        let assumption = match &e {
            CoreError::Replication { source, .. } => classify(source),
            other => classify(other),
        };
        if assumption {
            CliError::Assumption(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "meancov",
    version,
    about = "Simultaneous two-sample tests of high-dimensional mean vectors and covariance matrices"
)]
struct Cli {
    /// Cap the number of worker threads. Results never depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test two CSV samples (rows = observations, columns = variables).
    Test(TestArgs),
    /// Run one simulation scenario and emit rejection-rate rows.
    Simulate(SimulateArgs),
    /// Reproduce a reference size/power table into a directory.
    Reproduce(ReproduceArgs),
    /// Export standardized null scores for external plotting.
    Nulldist(NulldistArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TailArg {
    /// Reject for large |z|.
    TwoSided,
    /// Reject for small z (convention of the published reference tables).
    Lower,
}

impl From<TailArg> for Tail {
    fn from(t: TailArg) -> Tail {
        match t {
            TailArg::TwoSided => Tail::TwoSided,
            TailArg::Lower => Tail::Lower,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TestChoice {
    Ml,
    Hn,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistArg {
    /// Standardized Gamma entries (fourth cumulant 1.5).
    Gamma,
    /// Standard normal entries.
    Gaussian,
}

impl From<DistArg> for EntryDistribution {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Gamma => EntryDistribution::Gamma42,
            DistArg::Gaussian => EntryDistribution::Gaussian,
        }
    }
}

fn dist_name(d: DistArg) -> &'static str {
    match d {
        DistArg::Gamma => "gamma",
        DistArg::Gaussian => "gaussian",
    }
}

#[derive(Args)]
struct TestArgs {
    /// First sample, CSV.
    #[arg(long)]
    sample1: PathBuf,
    /// Second sample, CSV.
    #[arg(long)]
    sample2: PathBuf,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Which test(s) to run.
    #[arg(long, value_enum, default_value_t = TestChoice::Both)]
    test: TestChoice,
    /// Rejection tail for the likelihood-ratio test.
    #[arg(long, value_enum, default_value_t = TailArg::TwoSided)]
    tail: TailArg,
    /// Known fourth cumulant of sample 1 entries (requires --beta2).
    #[arg(long)]
    beta1: Option<f64>,
    /// Known fourth cumulant of sample 2 entries (requires --beta1).
    #[arg(long)]
    beta2: Option<f64>,
    /// Estimate the fourth cumulants from the data (default).
    #[arg(long, conflicts_with_all = ["beta1", "beta2"])]
    estimate_moments: bool,
    /// Write the machine-readable JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write a CSV rendition of the report here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario family: Model I (covariance scale) or II (mean shift).
    #[arg(long)]
    model: String,
    /// Degrees of freedom of sample 1 (the sample has n1 + 1 observations).
    #[arg(long)]
    n1: usize,
    #[arg(long)]
    n2: usize,
    /// Dimension.
    #[arg(long)]
    p: usize,
    /// Covariance scale parameter; Model I only.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    /// Master seed; required so every run is reproducible.
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = TailArg::Lower)]
    tail: TailArg,
    #[arg(long, value_enum, default_value_t = TestChoice::Both)]
    test: TestChoice,
    #[arg(long, value_enum, default_value_t = DistArg::Gamma)]
    distribution: DistArg,
    /// Write CSV rows here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON document here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Which table: 1 (sizes), 2 (Model I powers), 3 (Model II powers).
    #[arg(long)]
    table: u8,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// Output directory for table_<k>.csv and table_<k>.meta.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = TailArg::Lower)]
    tail: TailArg,
    #[arg(long, value_enum, default_value_t = DistArg::Gamma)]
    distribution: DistArg,
}

#[derive(Args)]
struct NulldistArgs {
    #[arg(long)]
    n1: usize,
    #[arg(long)]
    n2: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// Output file: one standardized score per line under a "z" header.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = DistArg::Gamma)]
    distribution: DistArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // Ignore failure: the global pool can only be set once (tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let result = match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Reproduce(args) => cmd_reproduce(args),
        Command::Nulldist(args) => cmd_nulldist(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Assumption(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
    }
}

fn write_out(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn cmd_test(args: TestArgs) -> Result<(), CliError> {
    let moment_mode = match (args.beta1, args.beta2) {
        (Some(beta1), Some(beta2)) => MomentMode::Known { beta1, beta2 },
        (None, None) => MomentMode::Estimate,
        _ => {
            return Err(CliError::Input(
                "--beta1 and --beta2 must be given together".into(),
            ))
        }
    };
    let cfg = TestConfig {
        alpha: args.alpha,
        moment_mode,
        warn_near_one: true,
        tail: args.tail.into(),
    };
    cfg.validate().map_err(CliError::from)?;

    let (s1, meta1) = io::load_sample(&args.sample1, "sample1")?;
    let (s2, meta2) = io::load_sample(&args.sample2, "sample2")?;
    if s1.dim() != s2.dim() {
        return Err(CliError::Input(format!(
            "samples have different column counts: {} vs {}",
            s1.dim(),
            s2.dim()
        )));
    }

    let mut reports = Vec::new();
    if matches!(args.test, TestChoice::Ml | TestChoice::Both) {
        reports.push(run_ml_test(&s1, &s2, &cfg).map_err(CliError::from)?);
    }
    if matches!(args.test, TestChoice::Hn | TestChoice::Both) {
        reports.push(run_hn_test(&s1, &s2, &cfg).map_err(CliError::from)?);
    }
    for r in &reports {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
    }

    print!("{}", human_summary(&meta1, &meta2, &reports));
    if let Some(path) = &args.json {
        let doc = TestDocument {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            sample1: &meta1,
            sample2: &meta2,
            reports: &reports,
        };
        write_out(path, &to_json_string(&doc))?;
    }
    if let Some(path) = &args.csv {
        write_out(path, &test_csv(&meta1, &meta2, &reports))?;
    }
    Ok(())
}

fn parse_model(text: &str, a: Option<f64>) -> Result<ModelKind, CliError> {
    match text {
        "I" | "i" | "1" => Ok(ModelKind::ModelI {
            a: a.unwrap_or(0.0),
        }),
        "II" | "ii" | "2" => {
            if a.is_some() {
                return Err(CliError::Input(
                    "--a applies to Model I only; Model II has no scale parameter".into(),
                ));
            }
            Ok(ModelKind::ModelII)
        }
        other => Err(CliError::Input(format!(
            "unknown model '{other}'; expected I or II"
        ))),
    }
}

fn selection(choice: TestChoice) -> TestSelection {
    match choice {
        TestChoice::Ml => TestSelection::ml_only(),
        TestChoice::Hn => TestSelection::hn_only(),
        TestChoice::Both => TestSelection::both(),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    if args.reps == 0 {
        return Err(CliError::Input("--reps must be at least 1".into()));
    }
    let model = SimulationModel {
        kind: parse_model(&args.model, args.a)?,
        n1: args.n1,
        n2: args.n2,
        p: args.p,
        distribution: args.distribution.into(),
    };
    let cfg = TestConfig {
        alpha: args.alpha,
        moment_mode: MomentMode::Known {
            beta1: model.beta_true(),
            beta2: model.beta_true(),
        },
        warn_near_one: true,
        tail: args.tail.into(),
    };
    let result = run_replications(&model, args.reps, args.seed, &cfg, selection(args.test))
        .map_err(CliError::from)?;

    let mut rows: Vec<TableRow> = Vec::new();
    let a = model.a();
    for (kind, rate) in [
        (TestKind::Ml, result.rejection_rate_ml),
        (TestKind::Hn, result.rejection_rate_hn),
    ] {
        if let Some(rate) = rate {
            rows.push(TableRow {
                n1: args.n1,
                n2: args.n2,
                p: args.p,
                a,
                test: kind,
                reps: args.reps,
                seed: args.seed,
                rate,
                runtime_ms: result.runtime_ms,
            });
        }
    }
    let csv = rows_csv(&rows);
    match &args.out {
        Some(path) => write_out(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.json {
        // TableRow carries a wall-clock runtime; the JSON document strips
        // it so outputs stay byte-identical run to run.
        #[derive(serde::Serialize)]
        struct RowOut<'a> {
            n1: usize,
            n2: usize,
            p: usize,
            a: Option<f64>,
            test: &'a str,
            reps: usize,
            seed: u64,
            rate: f64,
        }
        let out: Vec<RowOut> = rows
            .iter()
            .map(|r| RowOut {
                n1: r.n1,
                n2: r.n2,
                p: r.p,
                a: r.a,
                test: match r.test {
                    TestKind::Ml => "ml",
                    TestKind::Hn => "hn",
                },
                reps: r.reps,
                seed: r.seed,
                rate: r.rate,
            })
            .collect();
        #[derive(serde::Serialize)]
        struct Doc<'a> {
            tool: &'static str,
            version: &'static str,
            rows: &'a [RowOut<'a>],
        }
        write_out(
            path,
            &to_json_string(&Doc {
                tool: TOOL_NAME,
                version: TOOL_VERSION,
                rows: &out,
            }),
        )?;
    }
    eprintln!("runtime: {} ms", result.runtime_ms);
    Ok(())
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<(), CliError> {
    let table = match args.table {
        1 => TableId::T1,
        2 => TableId::T2,
        3 => TableId::T3,
        other => {
            return Err(CliError::Input(format!(
                "unknown table {other}; expected 1, 2 or 3"
            )))
        }
    };
    if args.reps == 0 {
        return Err(CliError::Input("--reps must be at least 1".into()));
    }
    let cfg = TestConfig {
        alpha: args.alpha,
        moment_mode: MomentMode::Known {
            beta1: EntryDistribution::from(args.distribution).beta_true(),
            beta2: EntryDistribution::from(args.distribution).beta_true(),
        },
        warn_near_one: true,
        tail: args.tail.into(),
    };
    let rows =
        reproduce_table(table, args.reps, args.seed, &cfg, args.distribution.into())
            .map_err(CliError::from)?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", args.out.display())))?;
    let csv_path = args.out.join(format!("table_{}.csv", args.table));
    write_out(&csv_path, &rows_csv(&rows))?;

    // One meta entry per cell (rows come in ml/hn pairs per cell).
    let cells: Vec<TableCellMeta> = rows
        .chunks(2)
        .map(|pair| TableCellMeta {
            n1: pair[0].n1,
            n2: pair[0].n2,
            p: pair[0].p,
            a: pair[0].a,
            seed: pair[0].seed,
            runtime_ms: pair[0].runtime_ms,
        })
        .collect();
    let meta = TableMeta {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        table: args.table,
        reps: args.reps,
        master_seed: args.seed,
        alpha: args.alpha,
        tail: report::tail_name(args.tail.into()).to_string(),
        distribution: dist_name(args.distribution).to_string(),
        cells,
    };
    let meta_path = args.out.join(format!("table_{}.meta.json", args.table));
    write_out(&meta_path, &to_json_string(&meta))?;
    eprintln!(
        "wrote {} and {}",
        csv_path.display(),
        meta_path.display()
    );
    Ok(())
}

fn cmd_nulldist(args: NulldistArgs) -> Result<(), CliError> {
    if args.reps == 0 {
        return Err(CliError::Input("--reps must be at least 1".into()));
    }
    let cfg = TestConfig {
        alpha: 0.05,
        moment_mode: MomentMode::Known {
            beta1: EntryDistribution::from(args.distribution).beta_true(),
            beta2: EntryDistribution::from(args.distribution).beta_true(),
        },
        warn_near_one: true,
        tail: Tail::Lower,
    };
    let hist = null_histogram(
        args.n1,
        args.n2,
        args.p,
        args.reps,
        args.seed,
        &cfg,
        args.distribution.into(),
    )
    .map_err(CliError::from)?;

    let mut file = String::with_capacity(hist.z_scores.len() * 20 + 2);
    file.push_str("z\n");
    for z in &hist.z_scores {
        file.push_str(&format!("{z}\n"));
    }
    write_out(&args.out, &file)?;

    let summary = NulldistSummary {
        n1: args.n1,
        n2: args.n2,
        p: args.p,
        reps: args.reps,
        seed: args.seed,
        mean: hist.mean,
        variance: hist.variance,
        sup_distance: hist.sup_distance,
    };
    print!("{}", to_json_string(&summary));
    Ok(())
}
