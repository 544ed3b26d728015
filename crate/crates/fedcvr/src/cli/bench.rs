//! Multi-seed benchmark harness: a strategy comparison at a fixed noise
//! level, a privacy-utility sweep for the adaptive aggregator, summary CSVs
//! with significance tests, and plot-ready report files.
//!
//! Every cell (strategy, seed, σ) trains on the identical partitions written
//! once to `<out>/data`, so the aggregation strategy is the only variable.
//! Summaries are computed purely from the per-cell artifacts on disk, which
//! makes `report` an idempotent re-summarization.

use super::artifacts::{
    digest_bytes, read_checkpoint, read_json, write_csv, write_json, FORMAT_VERSION,
};
use super::config::ResolvedConfig;
use super::{build_world, write_world, CliError};
use crate::engine::{
    history_from_jsonl, history_to_jsonl, run_simulation, RoundRecord, SimulationSetup,
};
use crate::metrics::roc_points;
use crate::model::Mlp;
use crate::privacy::PrivacyConfig;
use crate::stats::{paired_t_test, significance_stars, summarize, welch_t_test};
use crate::strategies::StrategyKind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub struct BenchSpec {
    pub cfg: ResolvedConfig,
    pub strategies: Vec<StrategyKind>,
    pub seeds: Vec<u64>,
    pub sigmas: Vec<f64>,
    /// Noise multiplier shared by every strategy in the comparison table
    /// (0 = compare without DP).
    pub bench_sigma: f64,
    pub paired: bool,
    pub jobs: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "detail")]
pub enum CellStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellInfo {
    pub name: String,
    pub strategy: String,
    pub seed: u64,
    /// 0 encodes DP off.
    pub sigma: f64,
    pub status: CellStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchManifest {
    pub format_version: u32,
    pub config: ResolvedConfig,
    pub data_digest: String,
    pub strategies: Vec<String>,
    pub seeds: Vec<u64>,
    pub sigmas: Vec<f64>,
    pub bench_sigma: f64,
    pub paired: bool,
    pub cells: Vec<CellInfo>,
}

fn sigma_label(sigma: f64) -> String {
    if sigma > 0.0 {
        format!("sigma{sigma:.2}")
    } else {
        "dpoff".to_string()
    }
}

fn cell_name(strategy: StrategyKind, seed: u64, sigma: f64) -> String {
    format!("{}_seed{}_{}", strategy.name(), seed, sigma_label(sigma))
}

const COMPARISON_METRICS: [&str; 5] = ["accuracy", "precision", "recall", "f1", "auc"];

fn metric_value(record: &RoundRecord, metric: &str) -> f64 {
    match metric {
        "accuracy" => record.accuracy,
        "precision" => record.precision,
        "recall" => record.recall,
        "f1" => record.f1,
        "auc" => record.auc,
        "global_loss" => record.global_loss,
        other => unreachable!("unknown metric {other}"),
    }
}

pub fn cmd_bench(spec: &BenchSpec) -> Result<(), CliError> {
    std::fs::create_dir_all(&spec.out)
        .map_err(|e| CliError::Runtime(format!("create {}: {e}", spec.out.display())))?;

    // one dataset for every cell
    let world = build_world(&spec.cfg)?;
    let data_dir = spec.out.join("data");
    write_world(&world, &data_dir)?;
    let loaded = super::load_data_dir(&data_dir, spec.cfg.training.partition_mode)
        .map_err(CliError::Runtime)?;

    // comparison cells (strategy x seed at bench_sigma), then sweep cells
    // (fedcvr x seed x sigma); duplicates collapse by name
    let mut cells: Vec<(StrategyKind, u64, f64)> = Vec::new();
    for &strategy in &spec.strategies {
        for &seed in &spec.seeds {
            cells.push((strategy, seed, spec.bench_sigma));
        }
    }
    for &sigma in &spec.sigmas {
        for &seed in &spec.seeds {
            cells.push((StrategyKind::FedCvr, seed, sigma));
        }
    }
    cells.sort_by(|a, b| {
        cell_name(a.0, a.1, a.2).cmp(&cell_name(b.0, b.1, b.2))
    });
    cells.dedup_by_key(|c| cell_name(c.0, c.1, c.2));

    let runs_dir = spec.out.join("runs");
    std::fs::create_dir_all(&runs_dir)
        .map_err(|e| CliError::Runtime(format!("create {}: {e}", runs_dir.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let run_cell = |&(strategy, seed, sigma): &(StrategyKind, u64, f64)| -> CellInfo {
        let name = cell_name(strategy, seed, sigma);
        let status = match run_one_cell(
            spec,
            &loaded,
            strategy,
            seed,
            sigma,
            &runs_dir.join(&name),
        ) {
            Ok(()) => CellStatus::Ok,
            Err(e) => CellStatus::Failed(e.to_string()),
        };
        println!(
            "cell {name}: {}",
            match &status {
                CellStatus::Ok => "ok",
                CellStatus::Failed(msg) => msg,
            }
        );
        CellInfo {
            name,
            strategy: strategy.name().to_string(),
            seed,
            sigma,
            status,
        }
    };
    let cell_infos: Vec<CellInfo> = pool.install(|| cells.par_iter().map(run_cell).collect());

    let manifest = BenchManifest {
        format_version: FORMAT_VERSION,
        config: spec.cfg.clone(),
        data_digest: loaded.digest.clone(),
        strategies: spec.strategies.iter().map(|s| s.name().to_string()).collect(),
        seeds: spec.seeds.clone(),
        sigmas: spec.sigmas.clone(),
        bench_sigma: spec.bench_sigma,
        paired: spec.paired,
        cells: cell_infos,
    };
    write_json(&spec.out.join("bench_manifest.json"), &manifest).map_err(CliError::Runtime)?;

    let gaps = write_summaries(&spec.out, &manifest)?;
    if !gaps.is_empty() {
        eprintln!("warning: {} missing cells; see gaps.json", gaps.len());
    }
    println!(
        "bench complete: {} cells, summaries in {}",
        manifest.cells.len(),
        spec.out.display()
    );
    Ok(())
}

fn run_one_cell(
    spec: &BenchSpec,
    loaded: &super::LoadedData,
    strategy: StrategyKind,
    seed: u64,
    sigma: f64,
    dir: &Path,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("create {}: {e}", dir.display())))?;
    let mut cfg = spec.cfg.clone();
    cfg.training.seed = seed;
    cfg.strategy_kind = strategy;
    cfg.privacy = PrivacyConfig {
        enabled: sigma > 0.0,
        noise_multiplier: if sigma > 0.0 {
            sigma
        } else {
            cfg.privacy.noise_multiplier
        },
        ..cfg.privacy
    };
    let setup = SimulationSetup {
        tcfg: cfg.training,
        pcfg: cfg.privacy,
        scfg: cfg.strategy,
        jobs: 1,
        ..SimulationSetup::new(strategy, &loaded.partitions, &loaded.holdout)
    };
    let started = std::time::Instant::now();
    let output = run_simulation(&setup).map_err(|e| CliError::Runtime(e.to_string()))?;
    let wall = started.elapsed().as_secs_f64();

    std::fs::write(dir.join("history.jsonl"), history_to_jsonl(&output.records))
        .map_err(|e| CliError::Runtime(format!("write history: {e}")))?;
    super::write_checkpoint(&dir.join("checkpoint.bin"), &output.final_params)
        .map_err(CliError::Runtime)?;
    write_json(
        &dir.join("ledger.json"),
        &super::LedgerArtifact {
            format_version: FORMAT_VERSION,
            config: cfg.clone(),
            worst: output.worst_ledger.clone(),
            clients: output.ledgers.clone(),
        },
    )
    .map_err(CliError::Runtime)?;
    write_json(
        &dir.join("run.json"),
        &super::RunReport {
            format_version: FORMAT_VERSION,
            config: cfg.clone(),
            strategy: strategy.name().to_string(),
            dp_enabled: sigma > 0.0,
            sigma,
            jobs: 1,
            data_digest: loaded.digest.clone(),
            rounds_completed: output.records.len() as u64,
            wall_time_secs: wall,
            final_digest: output.final_params.digest_hex(),
        },
    )
    .map_err(CliError::Runtime)?;
    Ok(())
}

/// Load the histories of every OK cell matching (strategy, sigma), ordered
/// by seed.
fn cell_histories(
    out: &Path,
    manifest: &BenchManifest,
    strategy: &str,
    sigma: f64,
) -> Vec<(u64, Vec<RoundRecord>)> {
    let mut histories = Vec::new();
    for cell in &manifest.cells {
        if cell.strategy != strategy || cell.sigma != sigma || cell.status != CellStatus::Ok {
            continue;
        }
        let path = out.join("runs").join(&cell.name).join("history.jsonl");
        let Ok(text) = std::fs::read_to_string(&path) else {
            continue;
        };
        if let Ok(records) = history_from_jsonl(&text) {
            histories.push((cell.seed, records));
        }
    }
    histories.sort_by_key(|(seed, _)| *seed);
    histories
}

/// Write comparison.csv and tradeoff.csv from per-cell artifacts; returns
/// the list of gaps (missing or underpopulated groups).
pub fn write_summaries(out: &Path, manifest: &BenchManifest) -> Result<Vec<String>, CliError> {
    let mut gaps: Vec<String> = Vec::new();

    // final-round metric samples per strategy at the comparison sigma
    let final_samples = |strategy: &str, metric: &str| -> Vec<f64> {
        cell_histories(out, manifest, strategy, manifest.bench_sigma)
            .iter()
            .filter_map(|(_, records)| records.last().map(|r| metric_value(r, metric)))
            .collect()
    };
    let reference: Vec<Vec<f64>> = COMPARISON_METRICS
        .iter()
        .map(|m| final_samples("fedcvr", m))
        .collect();

    let mut rows = Vec::new();
    for strategy in &manifest.strategies {
        for (mi, metric) in COMPARISON_METRICS.iter().enumerate() {
            let values = final_samples(strategy, metric);
            if values.len() < 2 {
                gaps.push(format!(
                    "comparison {strategy}/{metric}: only {} runs",
                    values.len()
                ));
                rows.push(vec![
                    strategy.clone(),
                    metric.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                continue;
            }
            let (mean, std) = summarize(&values).expect("len >= 2");
            let (p_text, stars) = if strategy == "fedcvr" || reference[mi].len() < 2 {
                (String::new(), String::new())
            } else {
                let test = if manifest.paired && values.len() == reference[mi].len() {
                    paired_t_test(&values, &reference[mi])
                } else {
                    welch_t_test(&values, &reference[mi])
                };
                match test {
                    Ok(r) => (format!("{:.6e}", r.p), significance_stars(r.p).to_string()),
                    Err(_) => (String::new(), String::new()),
                }
            };
            rows.push(vec![
                strategy.clone(),
                metric.to_string(),
                format!("{mean:.6}"),
                format!("{std:.6}"),
                p_text,
                stars,
            ]);
        }
    }
    write_csv(
        &out.join("comparison.csv"),
        &["strategy", "metric", "mean", "std", "p_vs_fedcvr", "stars"],
        &rows,
    )
    .map_err(CliError::Runtime)?;

    // privacy-utility trade-off for fedcvr across sigmas
    let mut sigmas = manifest.sigmas.clone();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    let mut rows = Vec::new();
    for &sigma in &sigmas {
        let f1s: Vec<f64> = cell_histories(out, manifest, "fedcvr", sigma)
            .iter()
            .filter_map(|(_, records)| records.last().map(|r| r.f1))
            .collect();
        let epsilon = manifest
            .cells
            .iter()
            .find(|c| c.strategy == "fedcvr" && c.sigma == sigma && c.status == CellStatus::Ok)
            .and_then(|c| {
                read_json::<super::LedgerArtifact>(
                    &out.join("runs").join(&c.name).join("ledger.json"),
                )
                .ok()
            })
            .and_then(|l| l.worst.epsilon);
        let eps_text = epsilon.map_or("inf".to_string(), |e| format!("{e:.4}"));
        if f1s.len() < 2 {
            gaps.push(format!("tradeoff sigma {sigma}: only {} runs", f1s.len()));
            rows.push(vec![
                format!("{sigma}"),
                eps_text,
                String::new(),
                String::new(),
            ]);
            continue;
        }
        let (mean, std) = summarize(&f1s).expect("len >= 2");
        rows.push(vec![
            format!("{sigma}"),
            eps_text,
            format!("{mean:.6}"),
            format!("{std:.6}"),
        ]);
    }
    write_csv(
        &out.join("tradeoff.csv"),
        &["sigma", "epsilon", "f1_mean", "f1_std"],
        &rows,
    )
    .map_err(CliError::Runtime)?;

    if !gaps.is_empty() {
        write_json(&out.join("gaps.json"), &gaps).map_err(CliError::Runtime)?;
    }
    Ok(gaps)
}

pub fn cmd_report(bench_dir: &Path) -> Result<(), CliError> {
    let manifest: BenchManifest = read_json(&bench_dir.join("bench_manifest.json"))
        .map_err(|e| CliError::Usage(format!("not a bench directory: {e}")))?;
    // refresh the summary CSVs from the artifacts (no retraining)
    let mut gaps = write_summaries(bench_dir, &manifest)?;
    let report_dir = bench_dir.join("report");
    std::fs::create_dir_all(&report_dir)
        .map_err(|e| CliError::Runtime(format!("create {}: {e}", report_dir.display())))?;

    // metric evolution per strategy: per-round mean across seeds
    let mut rows = Vec::new();
    for strategy in &manifest.strategies {
        let histories = cell_histories(bench_dir, &manifest, strategy, manifest.bench_sigma);
        if histories.is_empty() {
            gaps.push(format!("metric_evolution {strategy}: no runs"));
            continue;
        }
        let rounds = histories[0].1.len();
        for round_idx in 0..rounds {
            let at = |f: &dyn Fn(&RoundRecord) -> f64| -> f64 {
                let vals: Vec<f64> = histories
                    .iter()
                    .filter_map(|(_, recs)| recs.get(round_idx).map(f))
                    .collect();
                vals.iter().sum::<f64>() / vals.len() as f64
            };
            rows.push(vec![
                strategy.clone(),
                format!("{}", round_idx + 1),
                format!("{:.6}", at(&|r| r.global_loss)),
                format!("{:.6}", at(&|r| r.accuracy)),
                format!("{:.6}", at(&|r| r.precision)),
                format!("{:.6}", at(&|r| r.recall)),
                format!("{:.6}", at(&|r| r.f1)),
                format!("{:.6}", at(&|r| r.auc)),
            ]);
        }
    }
    write_csv(
        &report_dir.join("metric_evolution.csv"),
        &[
            "strategy",
            "round",
            "global_loss",
            "accuracy",
            "precision",
            "recall",
            "f1",
            "auc",
        ],
        &rows,
    )
    .map_err(CliError::Runtime)?;

    // ROC points per strategy from the first available seed's checkpoint
    let loaded = super::load_data_dir(
        &bench_dir.join("data"),
        manifest.config.training.partition_mode,
    )
    .map_err(CliError::Runtime)?;
    let mlp = Mlp::default();
    let mut rows = Vec::new();
    for strategy in &manifest.strategies {
        // first seed whose checkpoint is actually present and readable
        let checkpoint = manifest
            .cells
            .iter()
            .filter(|c| {
                &c.strategy == strategy
                    && c.sigma == manifest.bench_sigma
                    && c.status == CellStatus::Ok
            })
            .find_map(|c| {
                read_checkpoint(&bench_dir.join("runs").join(&c.name).join("checkpoint.bin")).ok()
            });
        let Some(checkpoint) = checkpoint else {
            gaps.push(format!("roc_points {strategy}: no runs"));
            continue;
        };
        let scored = mlp.score_samples(&checkpoint, &loaded.holdout);
        let points = roc_points(&scored).map_err(|e| CliError::Runtime(e.to_string()))?;
        for (fpr, tpr) in points {
            rows.push(vec![
                strategy.clone(),
                format!("{fpr:.6}"),
                format!("{tpr:.6}"),
            ]);
        }
    }
    write_csv(&report_dir.join("roc_points.csv"), &["strategy", "fpr", "tpr"], &rows)
        .map_err(CliError::Runtime)?;

    // loss per round per sigma (fedcvr sweep)
    let mut sigmas = manifest.sigmas.clone();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    let mut rows = Vec::new();
    for &sigma in &sigmas {
        let histories = cell_histories(bench_dir, &manifest, "fedcvr", sigma);
        if histories.is_empty() {
            gaps.push(format!("dp_impact sigma {sigma}: no runs"));
            continue;
        }
        let rounds = histories[0].1.len();
        for round_idx in 0..rounds {
            let vals: Vec<f64> = histories
                .iter()
                .filter_map(|(_, recs)| recs.get(round_idx).map(|r| r.global_loss))
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            rows.push(vec![
                format!("{sigma}"),
                format!("{}", round_idx + 1),
                format!("{mean:.6}"),
            ]);
        }
    }
    write_csv(
        &report_dir.join("dp_impact.csv"),
        &["sigma", "round", "global_loss"],
        &rows,
    )
    .map_err(CliError::Runtime)?;

    if !gaps.is_empty() {
        write_json(&report_dir.join("gaps.json"), &gaps).map_err(CliError::Runtime)?;
        eprintln!("warning: report has {} gaps; see gaps.json", gaps.len());
    }
    println!("report written to {}", report_dir.display());
    Ok(())
}

/// Digest of the two summary CSVs, used by the determinism checks.
pub fn summary_digest(out: &Path) -> Result<String, CliError> {
    let comparison = std::fs::read(out.join("comparison.csv"))
        .map_err(|e| CliError::Runtime(format!("comparison.csv: {e}")))?;
    let tradeoff = std::fs::read(out.join("tradeoff.csv"))
        .map_err(|e| CliError::Runtime(format!("tradeoff.csv: {e}")))?;
    Ok(digest_bytes(&[&comparison, &tradeoff]))
}
