//! Command-line entry points: `gen-data`, `run`, `bench`, `report`.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or
//! configuration errors.

mod artifacts;
mod bench;
mod config;

pub use artifacts::{
    load_data_dir, read_checkpoint, read_json, write_checkpoint, write_json, DataCard,
    LedgerArtifact, LoadedData, PartitionManifest, RunReport,
};
pub use bench::{summary_digest, BenchManifest, BenchSpec, CellStatus};
pub use config::{ResolvedConfig, RunConfigFile};

use crate::data::{
    assign_risk_labels, generate_cohort_with, partition_iid_subset, partition_noniid,
    partition_noniid_subset, prevalence, read_cohort_csv, stratified_holdout, write_cohort_csv,
};
use crate::engine::{history_to_jsonl, run_simulation_with, SimulationSetup};
use crate::strategies::StrategyKind;
use clap::{Parser, Subcommand, ValueEnum};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config, missing inputs: exit code 2.
    Usage(String),
    /// Failures while running or writing: exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fedcvr",
    version,
    about = "Federated learning simulator with DP-SGD clients and pluggable server aggregation"
)]
pub struct Cli {
    /// Override the run seed from the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads: clients within a round for `run`, benchmark cells for
    /// `bench`. Results are identical for any value.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DpSwitch {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic cohort, partition manifests, and data card.
    GenData {
        /// Cohort size (overrides the config).
        #[arg(long)]
        n: Option<usize>,
        /// TOML config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run one federated simulation and write its artifacts.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// fedavg | fedprox | fedcluster | fedadagrad | fedyogi | fedcvr
        #[arg(long)]
        strategy: Option<String>,
        /// Enable or disable client-side differential privacy.
        #[arg(long, value_enum)]
        dp: Option<DpSwitch>,
        /// Noise multiplier σ (with --dp on).
        #[arg(long)]
        sigma: Option<f64>,
        /// Data directory produced by gen-data; generated in memory from the
        /// config when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Additionally write checkpoint_round_<k>.bin every k rounds.
        #[arg(long)]
        checkpoint_every: Option<u64>,
    },
    /// Strategy comparison and privacy-utility sweep over multiple seeds.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated strategy names (default: all six).
        #[arg(long)]
        strategies: Option<String>,
        /// Comma-separated run seeds (default: 1,2,3).
        #[arg(long)]
        seeds: Option<String>,
        /// Comma-separated noise multipliers for the FedCVR trade-off sweep;
        /// 0 means DP off (default: 0,0.5,1.0,1.5).
        #[arg(long)]
        sigmas: Option<String>,
        /// Noise multiplier applied to every strategy in the comparison
        /// table.
        #[arg(long, default_value_t = 1.0)]
        bench_sigma: f64,
        /// Compare against fedcvr with a paired t-test on matched seeds
        /// instead of Welch's test.
        #[arg(long)]
        paired: bool,
    },
    /// Emit plot-ready CSVs (and refreshed summaries) from a bench directory.
    Report {
        /// A directory produced by `bench`.
        #[arg(long)]
        bench: PathBuf,
    },
}

/// Parse argv and execute; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(), // clap prints help/usage; code 0 for --help, 2 otherwise
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenData { n, config } => {
            let mut cfg = ResolvedConfig::load(config.as_deref()).map_err(CliError::Usage)?;
            if let Some(n) = n {
                cfg.generator.n = n;
            }
            if let Some(seed) = cli.seed {
                cfg.training.seed = seed;
            }
            cmd_gen_data(&cfg, &cli.out)
        }
        Command::Run {
            config,
            strategy,
            dp,
            sigma,
            data,
            checkpoint_every,
        } => {
            let mut cfg = ResolvedConfig::load(config.as_deref()).map_err(CliError::Usage)?;
            if let Some(name) = strategy {
                cfg.strategy_kind = name
                    .parse::<StrategyKind>()
                    .map_err(|e| CliError::Usage(e.to_string()))?;
            }
            if let Some(dp) = dp {
                cfg.privacy.enabled = dp == DpSwitch::On;
            }
            if let Some(sigma) = sigma {
                if sigma < 0.0 {
                    return Err(CliError::Usage("--sigma must be non-negative".into()));
                }
                cfg.privacy.noise_multiplier = sigma;
            }
            if let Some(seed) = cli.seed {
                cfg.training.seed = seed;
            }
            cmd_run(&cfg, data.as_deref(), &cli.out, cli.jobs, checkpoint_every)
        }
        Command::Bench {
            config,
            strategies,
            seeds,
            sigmas,
            bench_sigma,
            paired,
        } => {
            let mut cfg = ResolvedConfig::load(config.as_deref()).map_err(CliError::Usage)?;
            if let Some(seed) = cli.seed {
                cfg.training.seed = seed;
            }
            let strategies = match strategies {
                Some(list) => parse_strategies(&list)?,
                None => StrategyKind::ALL.to_vec(),
            };
            let seeds = match seeds {
                Some(list) => parse_list::<u64>(&list, "--seeds")?,
                None => vec![1, 2, 3],
            };
            let sigmas = match sigmas {
                Some(list) => parse_list::<f64>(&list, "--sigmas")?,
                None => vec![0.0, 0.5, 1.0, 1.5],
            };
            if seeds.len() < 2 {
                return Err(CliError::Usage(
                    "bench needs at least 2 seeds for statistics".into(),
                ));
            }
            if sigmas.iter().any(|s| *s < 0.0) || bench_sigma < 0.0 {
                return Err(CliError::Usage("noise multipliers must be non-negative".into()));
            }
            bench::cmd_bench(&BenchSpec {
                cfg,
                strategies,
                seeds,
                sigmas,
                bench_sigma,
                paired,
                jobs: cli.jobs.max(1),
                out: cli.out,
            })
        }
        Command::Report { bench } => bench::cmd_report(&bench),
    }
}

fn parse_strategies(list: &str) -> Result<Vec<StrategyKind>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<StrategyKind>().map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

fn parse_list<T: std::str::FromStr>(list: &str, flag: &str) -> Result<Vec<T>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| CliError::Usage(format!("invalid value `{s}` for {flag}")))
        })
        .collect()
}

/// The generated dataset plus the exact artifact bytes that describe it.
pub(crate) struct World {
    pub cohort_csv: Vec<u8>,
    pub iid_manifest: PartitionManifest,
    pub noniid_manifest: PartitionManifest,
    pub datacard: DataCard,
}

/// Generate, label, split, and partition a cohort from the config.
///
/// The cohort passes through its CSV form before anything is fit or
/// partitioned, so in-memory runs and runs loaded from a gen-data directory
/// see bit-identical data.
pub(crate) fn build_world(cfg: &ResolvedConfig) -> Result<World, CliError> {
    use crate::engine::PartitionMode;

    let seed = cfg.training.seed;
    let cohort = assign_risk_labels(
        generate_cohort_with(&cfg.generator, seed).map_err(|e| CliError::Usage(e.to_string()))?,
    );
    let mut cohort_csv = Vec::new();
    write_cohort_csv(&cohort, &mut cohort_csv)
        .map_err(|e| CliError::Runtime(format!("serializing cohort: {e}")))?;
    let cohort = read_cohort_csv(cohort_csv.as_slice())
        .map_err(|e| CliError::Runtime(format!("reparsing cohort: {e}")))?;

    let scaler = crate::data::fit_scaler(&cohort).map_err(|e| CliError::Usage(e.to_string()))?;
    let (train, holdout) = stratified_holdout(&cohort, cfg.holdout_fraction, seed);
    let iid = partition_iid_subset(&cohort, &train, cfg.training.num_clients, seed, &scaler)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let noniid = partition_noniid_subset(&cohort, &train, &scaler)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let full_noniid = partition_noniid(&cohort, &scaler)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut noniid_sizes = BTreeMap::new();
    for shard in &noniid {
        noniid_sizes.insert(shard.specialty.name().to_string(), shard.n());
    }
    let mut full_sizes = BTreeMap::new();
    for shard in &full_noniid {
        full_sizes.insert(shard.specialty.name().to_string(), shard.n());
    }
    let datacard = DataCard {
        format_version: artifacts::FORMAT_VERSION,
        config: cfg.clone(),
        n: cohort.rows.len(),
        seed,
        prevalence: prevalence(&cohort),
        holdout_size: holdout.len(),
        iid_shard_sizes: iid.iter().map(|s| s.n()).collect(),
        noniid_shard_sizes: noniid_sizes,
        full_cohort_noniid_sizes: full_sizes,
    };
    Ok(World {
        cohort_csv,
        iid_manifest: PartitionManifest::new(cfg, PartitionMode::Iid, &holdout, &iid),
        noniid_manifest: PartitionManifest::new(cfg, PartitionMode::NonIid, &holdout, &noniid),
        datacard,
    })
}

/// Write a generated world into a data directory (the gen-data layout).
pub(crate) fn write_world(world: &World, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("create {}: {e}", dir.display())))?;
    std::fs::write(dir.join("cohort.csv"), &world.cohort_csv)
        .map_err(|e| CliError::Runtime(format!("write cohort.csv: {e}")))?;
    write_json(&dir.join("partition_iid.json"), &world.iid_manifest).map_err(CliError::Runtime)?;
    write_json(&dir.join("partition_noniid.json"), &world.noniid_manifest)
        .map_err(CliError::Runtime)?;
    write_json(&dir.join("datacard.json"), &world.datacard).map_err(CliError::Runtime)?;
    Ok(())
}

fn cmd_gen_data(cfg: &ResolvedConfig, out: &Path) -> Result<(), CliError> {
    let world = build_world(cfg)?;
    write_world(&world, out)?;
    let card = &world.datacard;
    println!(
        "cohort: {} rows, seed {}, prevalence {:.1}%",
        card.n,
        card.seed,
        100.0 * card.prevalence
    );
    println!("holdout: {} rows", card.holdout_size);
    println!("iid shards: {:?}", card.iid_shard_sizes);
    println!("noniid shards: {:?}", card.noniid_shard_sizes);
    println!("wrote cohort.csv, partition_iid.json, partition_noniid.json, datacard.json to {}", out.display());
    Ok(())
}

fn cmd_run(
    cfg: &ResolvedConfig,
    data: Option<&Path>,
    out: &Path,
    jobs: usize,
    checkpoint_every: Option<u64>,
) -> Result<(), CliError> {
    let loaded = match data {
        Some(dir) => load_data_dir(dir, cfg.training.partition_mode).map_err(CliError::Usage)?,
        None => {
            let world = build_world(cfg)?;
            let manifest = match cfg.training.partition_mode {
                crate::engine::PartitionMode::Iid => &world.iid_manifest,
                crate::engine::PartitionMode::NonIid => &world.noniid_manifest,
            };
            in_memory_data(&world.cohort_csv, manifest)?
        }
    };
    if loaded.partitions.len() != cfg.training.num_clients {
        return Err(CliError::Usage(format!(
            "config expects {} clients but the data directory has {} shards",
            cfg.training.num_clients,
            loaded.partitions.len()
        )));
    }
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("create {}: {e}", out.display())))?;

    let setup = SimulationSetup {
        tcfg: cfg.training,
        pcfg: cfg.privacy,
        scfg: cfg.strategy,
        jobs: jobs.max(1),
        ..SimulationSetup::new(cfg.strategy_kind, &loaded.partitions, &loaded.holdout)
    };
    let started = Instant::now();
    let out_dir = out.to_path_buf();
    let output = run_simulation_with(&setup, |record, params| {
        let eps = record
            .epsilon
            .map_or("inf".to_string(), |e| format!("{e:.3}"));
        println!(
            "round {:>4}  loss {:.4}  acc {:.4}  f1 {:.4}  auc {:.4}  eps {}",
            record.round, record.global_loss, record.accuracy, record.f1, record.auc, eps
        );
        if let Some(k) = checkpoint_every {
            if k > 0 && record.round % k == 0 {
                let path = out_dir.join(format!("checkpoint_round_{}.bin", record.round));
                if let Err(e) = write_checkpoint(&path, params) {
                    eprintln!("warning: {e}");
                }
            }
        }
    })
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let wall = started.elapsed().as_secs_f64();

    std::fs::write(out.join("history.jsonl"), history_to_jsonl(&output.records))
        .map_err(|e| CliError::Runtime(format!("write history.jsonl: {e}")))?;
    write_checkpoint(&out.join("checkpoint.bin"), &output.final_params)
        .map_err(CliError::Runtime)?;
    write_json(
        &out.join("ledger.json"),
        &LedgerArtifact {
            format_version: artifacts::FORMAT_VERSION,
            config: cfg.clone(),
            worst: output.worst_ledger.clone(),
            clients: output.ledgers.clone(),
        },
    )
    .map_err(CliError::Runtime)?;
    write_json(
        &out.join("run.json"),
        &RunReport {
            format_version: artifacts::FORMAT_VERSION,
            config: cfg.clone(),
            strategy: cfg.strategy_kind.name().to_string(),
            dp_enabled: cfg.privacy.enabled,
            sigma: cfg.privacy.noise_multiplier,
            jobs: jobs.max(1),
            data_digest: loaded.digest.clone(),
            rounds_completed: output.records.len() as u64,
            wall_time_secs: wall,
            final_digest: output.final_params.digest_hex(),
        },
    )
    .map_err(CliError::Runtime)?;
    let eps = output
        .worst_ledger
        .epsilon
        .map_or("inf (no noise accounted)".to_string(), |e| format!("{e:.3}"));
    println!(
        "done: {} rounds in {:.1}s, final epsilon {}",
        output.records.len(),
        wall,
        eps
    );
    Ok(())
}

/// Rebuild a [`LoadedData`] from in-memory artifact bytes (the `run` path
/// without --data).
fn in_memory_data(
    cohort_csv: &[u8],
    manifest: &PartitionManifest,
) -> Result<LoadedData, CliError> {
    use crate::data::{fit_scaler, samples_for, ClientDataset, Specialty};

    let cohort = read_cohort_csv(cohort_csv).map_err(|e| CliError::Runtime(e.to_string()))?;
    let scaler = fit_scaler(&cohort).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut partitions = Vec::new();
    for (key, rows) in &manifest.clients {
        let client_id: usize = key
            .parse()
            .map_err(|_| CliError::Runtime(format!("bad client id {key}")))?;
        let specialty = match manifest.specialties.get(key).map(String::as_str) {
            Some("young_general") => Specialty::YoungGeneral,
            Some("cardiology_referral") => Specialty::CardiologyReferral,
            Some("diabetes_smoking") => Specialty::DiabetesSmoking,
            Some("community") => Specialty::Community,
            Some("geriatric") => Specialty::Geriatric,
            _ => Specialty::IidShard,
        };
        partitions.push(ClientDataset {
            client_id,
            specialty,
            samples: samples_for(&cohort, rows, &scaler),
            row_indices: rows.clone(),
        });
    }
    partitions.sort_by_key(|p| p.client_id);
    let holdout = samples_for(&cohort, &manifest.holdout, &scaler);
    let manifest_bytes =
        serde_json::to_vec_pretty(manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    let digest = artifacts::digest_bytes(&[cohort_csv, &manifest_bytes]);
    Ok(LoadedData {
        cohort,
        scaler,
        partitions,
        holdout,
        digest,
    })
}
