use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use casesim::pipeline::{self, ExperimentCode, PipelineConfig, PipelineError, SourceKind, Workspace};

/// Similar-case classification pipeline.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Pipeline config (TOML).
    #[arg(short, long, default_value = "casesim.toml")]
    config: PathBuf,
    /// Output root; overrides `output`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides `repeats`.
    #[arg(long)]
    repeats: Option<usize>,
    /// Overrides the global `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Sets any config key, e.g. `--set train.patience=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Screen the corpus and extract the court's dispute lists.
    Ingest,
    /// Generate dispute lists with the LLM prompt chain.
    LlmDisputes {
        /// llm_a or llm_b; both when omitted.
        #[arg(long)]
        source: Vec<String>,
    },
    /// Embed every dispute statement of the given codes.
    Embed {
        #[arg(long)]
        code: Vec<String>,
    },
    /// Sample same/diff sentence pairs for fine-tuning.
    FinetunePairs,
    /// Fine-tune each embedding backend once.
    Finetune,
    /// Cluster the disputes of the given codes.
    Cluster {
        #[arg(long)]
        code: Vec<String>,
    },
    /// Build the similarity images of the given codes.
    Images {
        #[arg(long)]
        code: Vec<String>,
    },
    /// Train one repeat of one code and save the network.
    Train {
        #[arg(long)]
        code: String,
        #[arg(long, default_value_t = 0)]
        repeat: usize,
    },
    /// Score a saved network on its repeat's test pairs.
    Evaluate {
        #[arg(long)]
        code: String,
        #[arg(long, default_value_t = 0)]
        repeat: usize,
    },
    /// ROUGE of the LLM dispute lists against the court's.
    Rouge,
    /// Run all experiment codes with repeated resampling.
    Matrix {
        /// Run ingest, llm-disputes, finetune-pairs, and finetune first.
        #[arg(long)]
        prepare: bool,
        /// Also render SVG boxplots.
        #[arg(long)]
        svg: bool,
    },
    /// Per-year and per-court counts of the eligible cases.
    Stats,
}

fn config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut overrides = cli.overrides.clone();
    if let Some(out) = &cli.output {
        let abs = std::path::absolute(out).map_err(|e| PipelineError::Config(e.to_string()))?;
        let quoted = toml::Value::String(abs.display().to_string()).to_string();
        overrides.push(format!("output={quoted}"));
    }
    if let Some(r) = cli.repeats {
        overrides.push(format!("repeats={r}"));
    }
    if let Some(s) = cli.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(w) = cli.workers {
        overrides.push(format!("workers={w}"));
    }
    PipelineConfig::load(&cli.config, &overrides)
}

fn codes(ws: &Workspace, given: &[String]) -> Result<Vec<ExperimentCode>, PipelineError> {
    if given.is_empty() {
        return Ok(ExperimentCode::matrix(&ws.config().backend_ids()));
    }
    given
        .iter()
        .map(|s| s.parse().map_err(PipelineError::Config))
        .collect()
}

fn code(s: &str) -> Result<ExperimentCode, PipelineError> {
    s.parse().map_err(PipelineError::Config)
}

fn print<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let ws = Workspace::new(config(cli)?)?;
    match &cli.command {
        Command::Ingest => print(&pipeline::ingest(&ws)?),
        Command::LlmDisputes { source } => {
            let kinds = if source.is_empty() {
                SourceKind::LLM.to_vec()
            } else {
                source
                    .iter()
                    .map(|s| s.parse().map_err(PipelineError::Config))
                    .collect::<Result<_, _>>()?
            };
            print(&pipeline::llm_disputes(&ws, &kinds)?);
        }
        Command::Embed { code } => {
            for c in codes(&ws, code)? {
                println!("{c}: {} statements", pipeline::embed_code(&ws, &c)?);
            }
        }
        Command::FinetunePairs => print(&pipeline::finetune_pairs(&ws)?),
        Command::Finetune => print(&pipeline::finetune(&ws)?),
        Command::Cluster { code } => {
            for c in codes(&ws, code)? {
                let (clustering, _) = pipeline::cluster_code(&ws, &c)?;
                println!(
                    "{c}: {} statements, {} clusters, epsilon {:.4}",
                    clustering.assignments.len(),
                    clustering.gamma,
                    clustering.epsilon
                );
            }
        }
        Command::Images { code } => {
            for c in codes(&ws, code)? {
                let data = pipeline::images_for_code(&ws, &c)?;
                println!("{c}: {} images, {} pairs skipped", data.samples.len(), data.skipped.len());
            }
        }
        Command::Train { code: c, repeat } => print(&pipeline::train_repeat(&ws, &code(c)?, *repeat)?),
        Command::Evaluate { code: c, repeat } => print(&pipeline::evaluate_repeat(&ws, &code(c)?, *repeat)?),
        Command::Rouge => {
            for (kind, report) in pipeline::rouge(&ws)? {
                println!("{}: {} documents", kind.key(), report.per_doc.len());
                print(&report.macro_avg);
            }
        }
        Command::Matrix { prepare, svg } => {
            if *prepare {
                pipeline::prepare(&ws)?;
            }
            let report = pipeline::run_matrix(&ws, *svg)?;
            for run in &report.runs {
                println!(
                    "{:<12} F1 mean {:.3} median {:.3}  accuracy mean {:.3} median {:.3}",
                    run.code.to_string(),
                    run.f1.mean,
                    run.f1.median,
                    run.accuracy.mean,
                    run.accuracy.median
                );
            }
            for f in &report.failures {
                eprintln!("{}: {}", f.code, f.message);
            }
            if let Some(f) = report.failures.first() {
                return Err(match &f.stage {
                    Some(stage) => PipelineError::MissingArtifact {
                        stage: stage.clone(),
                        detail: format!("{} of {} cells failed", report.failures.len(), report.failures.len() + report.runs.len()),
                    },
                    None => PipelineError::Data(format!("{} cells failed", report.failures.len())),
                });
            }
        }
        Command::Stats => print(&pipeline::stats(&ws)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
