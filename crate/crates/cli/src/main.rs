use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use invukf_core::experiment::{emit_results, parse_config_str, run_experiment, ExperimentError, ExperimentPlan, OutputFormat};
use invukf_core::scenarios::{build_scenario, SCENARIO_NAMES};
use serde_json::json;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "invukf", version, about = "Seeded Monte-Carlo experiments for forward, inverse and kernel UKFs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its results.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, env = "INVUKF_OUT_DIR", default_value = "results")]
        out: PathBuf,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
    /// Print the built-in scenarios and their defaults.
    ListScenarios,
    /// Check a configuration without running it.
    Validate { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Both => OutputFormat::Both,
        }
    }
}

fn fail(code: u8, payload: serde_json::Value) -> ExitCode {
    eprintln!("{payload}");
    ExitCode::from(code)
}

fn report_error(err: &ExperimentError) -> ExitCode {
    match err {
        ExperimentError::Config(c) => fail(
            EXIT_CONFIG,
            json!({ "error": "config", "field": c.field, "message": c.message }),
        ),
        ExperimentError::Numerical { run, step, context, source } => fail(
            EXIT_NUMERICAL,
            json!({ "error": "numerical", "run": run, "step": step, "context": context, "message": source.to_string() }),
        ),
        ExperimentError::Io(msg) => fail(1, json!({ "error": "io", "message": msg })),
    }
}

fn load_plan(path: &Path) -> Result<ExperimentPlan, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        fail(
            EXIT_CONFIG,
            json!({ "error": "config", "field": "path", "message": format!("{}: {e}", path.display()) }),
        )
    })?;
    parse_config_str(&text)
        .and_then(|c| c.resolve())
        .map_err(|e| report_error(&ExperimentError::Config(e)))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            for name in SCENARIO_NAMES {
                let s = build_scenario(name, 0).expect("registered scenario");
                let d = s.model.dims;
                println!(
                    "{name}\tn_x={} n_y={} n_a={}\thorizon={} runs={}",
                    d.n_x, d.n_y, d.n_a, s.defaults.horizon, s.defaults.runs
                );
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_plan(&config) {
            Ok(plan) => {
                println!(
                    "ok: scenario={} horizon={} runs={} hash={}",
                    plan.scenario.model.name, plan.horizon, plan.runs, plan.config_hash
                );
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, out, workers, format } => {
            let plan = match load_plan(&config) {
                Ok(p) => p,
                Err(code) => return code,
            };
            let result = match run_experiment(&plan, workers) {
                Ok(r) => r,
                Err(e) => return report_error(&e),
            };
            match emit_results(&result, &out, format.into()) {
                Ok(files) => {
                    for s in &result.summaries {
                        println!(
                            "{:<22} rmse={} rcrlb={} nci={} divergence={:.3}",
                            s.label,
                            fmt(s.rmse),
                            fmt(s.rcrlb),
                            fmt(s.nci),
                            s.divergence_rate
                        );
                    }
                    for f in files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => report_error(&e),
            }
        }
    }
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.5}"))
}
