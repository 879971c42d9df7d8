//! Runs every pipeline stage on the shipped fixture and the full 12-code
//! experiment matrix.
//!
//! ```text
//! cargo run --release --example desk_matrix -- [OUTPUT_DIR] [REPEATS]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use casesim::pipeline::{prepare, rouge, run_matrix, stats, PipelineConfig, Workspace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let out = std::path::absolute(args.next().unwrap_or_else(|| "desk-out".into()))?;
    let repeats: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);

    let config_path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk/desk.toml");
    let overrides = [
        format!("output={}", toml::Value::String(out.display().to_string())),
        format!("repeats={repeats}"),
    ];
    let ws = Workspace::new(PipelineConfig::load(&config_path, &overrides)?)?;
    let start = Instant::now();

    prepare(&ws)?;
    let corpus = stats(&ws)?;
    println!("{} eligible cases in {} years", corpus.total_cases, corpus.per_year.len());
    for (kind, report) in rouge(&ws)? {
        let m = report.macro_avg;
        println!("{}: ROUGE-1 F1 {:.3}, ROUGE-L F1 {:.3}", kind.key(), m.r1.f1, m.rl.f1);
    }

    let report = run_matrix(&ws, true)?;
    for run in &report.runs {
        println!(
            "{:<12} F1 median {:.3} mean {:.3}   accuracy median {:.3} mean {:.3}",
            run.code.to_string(),
            run.f1.median,
            run.f1.mean,
            run.accuracy.median,
            run.accuracy.mean
        );
    }
    for f in &report.failures {
        println!("{}: {}", f.code, f.message);
    }
    println!("done in {:.1?}; results under {}", start.elapsed(), out.display());
    Ok(())
}
