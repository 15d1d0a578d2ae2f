use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mssvdd::data::{self, cv_folds, stratified_split, SpectfLayout};
use mssvdd::metrics::{compute_metrics, ConfusionCounts};
use mssvdd_harness::config::ExperimentConfig;
use mssvdd_harness::error::{HarnessError, Result};
use mssvdd_harness::grid::{cells, grid_search, MonotonicityStats, SearchSpace, Selection};
use mssvdd_harness::persist::{load_model, save_model};
use mssvdd_harness::protocol::{load_dataset, run_protocol_on, LoadedData, ResultRow, SplitFailure};
use mssvdd_harness::report::{emit_report, render, ReportFormat};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "mssvdd", version, about = "Multimodal subspace one-class classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full protocol and write results, reports and models.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score a data file with a saved model.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Target class name for robot files.
        #[arg(long, default_value = "normal")]
        target: String,
        /// Column layout for SPECTF files.
        #[arg(long, default_value = "interleaved")]
        layout: String,
    },
    /// Grid search only, on the first split or the given training set.
    Grid {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render the results stored under a run directory.
    Report {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long, default_value = "md")]
        format: String,
    },
}

/// Contents of `results.json` in a run directory.
#[derive(Serialize, Deserialize)]
struct RunRecord {
    config: ExperimentConfig,
    rows: Vec<ResultRow>,
    summary: Vec<ResultRow>,
    failures: Vec<SplitFailure>,
    batches: usize,
    monotonicity_violations: usize,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn train(config_path: &Path) -> Result<()> {
    let config = ExperimentConfig::load(config_path)?;
    let data = load_dataset(&config)?;
    let outcome = run_protocol_on(&data, &config)?;
    let dir = &config.output.dir;
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    for f in &outcome.failures {
        eprintln!("split {} failed: {}", f.split, f.message);
    }
    if outcome.rows.is_empty() {
        return Err(HarnessError::EmptyReport("every split failed".into()));
    }
    for &format in &config.output.formats {
        emit_report(&outcome.summary, format, dir, "summary")?;
    }
    emit_report(&outcome.rows, ReportFormat::Csv, dir, "splits")?;
    if config.output.save_models {
        for m in &outcome.models {
            save_model(&m.model, &dir.join("models").join(format!("{}.msvd", m.name)))?;
        }
    }
    print!("{}", render(&outcome.summary, ReportFormat::Markdown)?);
    write_json(
        &dir.join("results.json"),
        &RunRecord {
            config,
            rows: outcome.rows,
            summary: outcome.summary,
            failures: outcome.failures,
            batches: outcome.batches,
            monotonicity_violations: outcome.monotonicity_violations,
        },
    )
}

#[derive(Serialize)]
struct GridRecord {
    split: String,
    selections: Vec<Selection>,
}

fn grid(config_path: &Path) -> Result<()> {
    let config = ExperimentConfig::load(config_path)?;
    let p = &config.protocol;
    let (train, split) = match load_dataset(&config)? {
        LoadedData::Pool(ds) => {
            let seed = p.split_seeds()[0];
            let plan = stratified_split(&ds.classes, p.train_fraction, seed)?;
            (ds.subset(&plan.train_idx), format!("seed{seed}"))
        }
        LoadedData::Fixed { train, .. } => (train, "given".into()),
    };
    let folds = cv_folds(&(0..train.len()).collect::<Vec<_>>(), &train.classes, p.cv_k, p.seed)?;
    let stats = MonotonicityStats::default();
    let mut selections = Vec::new();
    for &variant in &config.grids.variants {
        let grid = cells(&config.grids, variant);
        for &omega in &config.grids.omegas {
            let space = SearchSpace {
                variant,
                omega,
                max_iter: p.max_iter,
                standardize: p.standardize,
                center_kernel: p.center_kernel,
            };
            selections.extend(grid_search(&train, &folds, &grid, &config.grids.strategies, &space, &stats)?);
        }
    }
    let record = GridRecord { split, selections };
    println!("{}", serde_json::to_string_pretty(&record)?);
    let dir = &config.output.dir;
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_json(&dir.join("grid.json"), &record)
}

fn evaluate(model_path: &Path, data_path: &Path, target: &str, layout: &str) -> Result<()> {
    let model = load_model(model_path)?;
    let text = fs::read_to_string(data_path).map_err(|e| HarnessError::io(data_path, e))?;
    let to_data = |source| HarnessError::Data {
        path: data_path.to_path_buf(),
        source,
    };
    let ds = if text.contains(',') {
        let layout = match layout {
            "interleaved" => SpectfLayout::Interleaved,
            "blocked" => SpectfLayout::Blocked,
            other => return Err(HarnessError::Config(format!("unknown layout {other:?}"))),
        };
        data::parse_spectf(&text, layout, "eval").map_err(to_data)?
    } else {
        data::parse_robot(&text, target, "eval").map_err(to_data)?
    };
    let ds = if model.modalities() == 1 && ds.modalities() > 1 {
        ds.concatenated()
    } else {
        ds
    };
    let pred = model.predict(&ds)?;
    let counts = ConfusionCounts::from_predictions(&ds.labels, &pred)?;
    let metrics = compute_metrics(&counts)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "items": ds.len(),
            "strategy": model.params.decision.to_string(),
            "counts": counts,
            "metrics": metrics,
        }))?
    );
    Ok(())
}

fn collect_records(dir: &Path, out: &mut Vec<RunRecord>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_records(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "results.json") {
            let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
            out.push(serde_json::from_str(&text)?);
        }
    }
    Ok(())
}

fn report(runs: &Path, format: &str) -> Result<()> {
    let format: ReportFormat = format.parse()?;
    let mut records = Vec::new();
    collect_records(runs, &mut records)?;
    let rows: Vec<ResultRow> = records.into_iter().flat_map(|r| r.summary).collect();
    print!("{}", render(&rows, format)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train { config } => train(config),
        Command::Evaluate {
            model,
            data,
            target,
            layout,
        } => evaluate(model, data, target, layout),
        Command::Grid { config } => grid(config),
        Command::Report { runs, format } => report(runs, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
