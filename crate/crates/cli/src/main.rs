//! `driftlab`: simulate sock-puppet audits, analyze drift, evaluate the
//! interaction predictor and replay fixtures.
//!
//! Errors are reported as one JSON line on stderr,
//! `{"error":"<kind>","message":"..."}`, with exit code 2 for invalid input,
//! 3 for runtime failures and 4 for I/O problems.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use driftlab_core::analytics::report::{
    analyze_experiment, emit_report, AnalysisOptions, CohortSpec, REPORT_DIR,
};
use driftlab_core::analytics::{AnalyticsError, Metric};
use driftlab_core::catalog::{Catalog, CatalogError};
use driftlab_core::evaluation::{evaluate, load_fixture, make_eval_fixture, EvalError};
use driftlab_core::experiment::{
    run_experiment, ExperimentConfig, ExperimentError, PredictorConfig, RunOptions,
    DEFAULT_OUTPUT_DIR,
};
use driftlab_core::replay::{run_replay, ReplayError, ReplayFixture};

const OUT_ENV: &str = "DRIFTLAB_OUT";

#[derive(Parser)]
#[command(
    name = "driftlab",
    version,
    about = "Sock-puppet audit simulator and drift analytics"
)]
struct Cli {
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `simulate`.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output root; also settable through DRIFTLAB_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write one log per user.
    Simulate {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
    },
    /// Analyze an experiment directory for one or more cohorts.
    Analyze {
        #[arg(short = 'e', long = "experiment")]
        experiment: PathBuf,
        /// e.g. `group=G2,topic=us_politics`; repeatable; defaults to all users.
        #[arg(long = "cohort")]
        cohort: Vec<String>,
    },
    /// Measure predictor accuracy on a labeled 350-video fixture.
    EvalPredictor {
        #[arg(short = 'f', long = "fixture")]
        fixture: PathBuf,
        /// Predictor config (`kind = "oracle"` or `kind = "remote"`).
        #[arg(short = 'p', long = "predictor")]
        predictor: PathBuf,
    },
    /// Write a synthetic log from a replay fixture and analyze it.
    Replay {
        #[arg(short = 'f', long = "fixture")]
        fixture: PathBuf,
    },
    /// Generate a labeled evaluation fixture.
    MakeEvalFixture {
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Validation,
    Runtime,
    Io,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Validation => "validation",
            Kind::Runtime => "runtime",
            Kind::Io => "io",
        }
    }

    fn code(self) -> u8 {
        match self {
            Kind::Validation => 2,
            Kind::Runtime => 3,
            Kind::Io => 4,
        }
    }
}

struct Failure {
    kind: Kind,
    message: String,
}

impl Failure {
    fn new(kind: Kind, message: impl ToString) -> Self {
        Self {
            kind,
            message: message.to_string(),
        }
    }
}

fn catalog_kind(e: &CatalogError) -> Kind {
    match e {
        CatalogError::Io(_) => Kind::Io,
        CatalogError::Record { .. }
        | CatalogError::InvalidSpec(_)
        | CatalogError::InvalidQuery(_) => Kind::Validation,
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let kind = match &e {
            ExperimentError::Invalid(_) | ExperimentError::Parse(_) => Kind::Validation,
            ExperimentError::Io { .. } => Kind::Io,
            ExperimentError::Catalog(c) => catalog_kind(c),
            ExperimentError::Log(driftlab_core::agent::LogError::Io(_)) => Kind::Io,
            _ => Kind::Runtime,
        };
        Failure::new(kind, e)
    }
}

impl From<AnalyticsError> for Failure {
    fn from(e: AnalyticsError) -> Self {
        let kind = match &e {
            AnalyticsError::CohortEmpty(_) | AnalyticsError::InvalidCohort(_) => Kind::Validation,
            AnalyticsError::Io(_)
            | AnalyticsError::Log(_)
            | AnalyticsError::InvalidExperiment(_) => Kind::Io,
            _ => Kind::Runtime,
        };
        Failure::new(kind, e)
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let kind = match &e {
            EvalError::FixtureShape(_) | EvalError::Config(_) => Kind::Validation,
            EvalError::Catalog(c) => catalog_kind(c),
            EvalError::Predictor(_) => Kind::Runtime,
        };
        Failure::new(kind, e)
    }
}

impl From<ReplayError> for Failure {
    fn from(e: ReplayError) -> Self {
        match e {
            ReplayError::Invalid(_) => Failure::new(Kind::Validation, e),
            ReplayError::Io(_) => Failure::new(Kind::Io, e),
            ReplayError::Analytics(a) => a.into(),
            ReplayError::Experiment(x) => x.into(),
            ReplayError::Log(_) => Failure::new(Kind::Io, e),
        }
    }
}

fn out_root(cli_out: &Option<PathBuf>) -> Option<PathBuf> {
    cli_out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
}

fn simulate(cli: &Cli, config: &Path) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(config)?;
    let opts = RunOptions {
        out_dir: out_root(&cli.out),
        workers: cli.workers,
        seed: cli.seed,
    };
    let summary = run_experiment(&cfg, &opts)?;
    println!(
        "wrote {} user logs ({} events) to {}",
        summary.users,
        summary.events,
        summary.dir.display()
    );
    if summary.predictor_failures > 0 {
        println!(
            "{} annotations failed and were treated as skips",
            summary.predictor_failures
        );
    }
    Ok(())
}

fn analyze(experiment: &Path, cohorts: &[String]) -> Result<(), Failure> {
    let specs: Vec<CohortSpec> = if cohorts.is_empty() {
        vec![CohortSpec::default()]
    } else {
        cohorts
            .iter()
            .map(|c| CohortSpec::parse(c))
            .collect::<Result<_, _>>()?
    };
    let opts = AnalysisOptions::default();
    for spec in &specs {
        let report = analyze_experiment(experiment, spec, &opts)?;
        emit_report(&experiment.join(REPORT_DIR), &report)?;
        let t = report.totals();
        println!(
            "{}: {} users, {} bins, {} events ({} interest, {} neutral, {} other)",
            spec,
            report.users.len(),
            report.bins.len(),
            t.total(),
            t.n_interest,
            t.n_neutral,
            t.n_other
        );
        for m in Metric::ALL {
            let s = report.series(m);
            let slope = s
                .fit
                .map_or("n/a".to_string(), |f| format!("{:+.5}", f.slope));
            let overall = s.overall.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            println!(
                "  {:<20} slope/bin {slope:>9}  overall {overall}",
                m.as_str()
            );
        }
    }
    println!(
        "report written to {}",
        experiment.join(REPORT_DIR).display()
    );
    Ok(())
}

fn read_predictor_config(path: &Path) -> Result<PredictorConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(Kind::Io, format!("{}: {e}", path.display())))?;
    #[derive(serde::Deserialize)]
    struct Wrapped {
        predictor: PredictorConfig,
    }
    if let Ok(w) = toml::from_str::<Wrapped>(&text) {
        return Ok(w.predictor);
    }
    toml::from_str::<PredictorConfig>(&text)
        .map_err(|e| Failure::new(Kind::Validation, format!("{}: {e}", path.display())))
}

fn eval_predictor(cli: &Cli, fixture: &Path, predictor: &Path) -> Result<(), Failure> {
    let cfg = read_predictor_config(predictor)?;
    let videos = load_fixture(fixture)?;
    let report = evaluate(&videos, &cfg, cli.seed.unwrap_or(0))?;
    print!("{}", report.table());
    Ok(())
}

fn replay(cli: &Cli, fixture: &Path) -> Result<(), Failure> {
    let f = ReplayFixture::load(fixture)?;
    let root = out_root(&cli.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let (dir, report) = run_replay(&f, &root)?;
    let t = report.totals();
    println!(
        "replayed {} events over {} bins ({} interest, {} neutral, {} other) into {}",
        t.total(),
        report.bins.len(),
        t.n_interest,
        t.n_neutral,
        t.n_other,
        dir.display()
    );
    Ok(())
}

fn make_fixture(cli: &Cli, output: &Path) -> Result<(), Failure> {
    let videos = make_eval_fixture(cli.seed.unwrap_or(0))?;
    let catalog = Catalog::from_records(videos, Default::default())
        .map_err(|e| Failure::new(catalog_kind(&e), e))?;
    catalog
        .write_records(output)
        .map_err(|e| Failure::new(catalog_kind(&e), e))?;
    println!(
        "wrote {} labeled videos to {}",
        catalog.len(),
        output.display()
    );
    Ok(())
}

fn report_failure(f: &Failure) -> ExitCode {
    eprintln!(
        "{}",
        serde_json::json!({ "error": f.kind.name(), "message": f.message })
    );
    ExitCode::from(f.kind.code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            return report_failure(&Failure::new(
                Kind::Validation,
                e.render().to_string().trim(),
            ))
        }
    };
    let result = match &cli.command {
        Command::Simulate { config } => simulate(&cli, config),
        Command::Analyze { experiment, cohort } => analyze(experiment, cohort),
        Command::EvalPredictor { fixture, predictor } => eval_predictor(&cli, fixture, predictor),
        Command::Replay { fixture } => replay(&cli, fixture),
        Command::MakeEvalFixture { output } => make_fixture(&cli, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report_failure(&f),
    }
}
