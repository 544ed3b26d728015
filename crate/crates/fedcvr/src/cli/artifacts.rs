//! On-disk artifact formats: partition manifests, data cards, run reports,
//! ledgers, checkpoints, and RFC-4180 CSV emission. Every JSON artifact
//! embeds a format-version field and the full resolved configuration.

use super::config::ResolvedConfig;
use crate::data::{
    fit_scaler, read_cohort_csv, samples_for, ClientDataset, RawCohort, ScalerParams, Specialty,
};
use crate::engine::PartitionMode;
use crate::model::{ParamVector, Sample};
use crate::privacy::LedgerReport;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

/// Reconstructible description of one partitioning of the cohort: held-out
/// rows plus per-client row indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub format_version: u32,
    pub config: ResolvedConfig,
    pub mode: PartitionMode,
    pub seed: u64,
    pub holdout: Vec<usize>,
    /// client id (as a string key, for JSON) -> cohort row indices
    pub clients: BTreeMap<String, Vec<usize>>,
    pub specialties: BTreeMap<String, String>,
}

impl PartitionManifest {
    pub fn new(
        config: &ResolvedConfig,
        mode: PartitionMode,
        holdout: &[usize],
        shards: &[ClientDataset],
    ) -> Self {
        let mut clients = BTreeMap::new();
        let mut specialties = BTreeMap::new();
        for shard in shards {
            clients.insert(shard.client_id.to_string(), shard.row_indices.clone());
            specialties.insert(shard.client_id.to_string(), shard.specialty.name().to_string());
        }
        PartitionManifest {
            format_version: FORMAT_VERSION,
            config: config.clone(),
            mode,
            seed: config.training.seed,
            holdout: holdout.to_vec(),
            clients,
            specialties,
        }
    }
}

/// Summary statistics of a generated dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataCard {
    pub format_version: u32,
    pub config: ResolvedConfig,
    pub n: usize,
    pub seed: u64,
    pub prevalence: f64,
    pub holdout_size: usize,
    pub iid_shard_sizes: Vec<usize>,
    pub noniid_shard_sizes: BTreeMap<String, usize>,
    /// Specialty sizes when the cascade partitions the whole cohort (no
    /// holdout carved out), for comparison against published shard counts.
    pub full_cohort_noniid_sizes: BTreeMap<String, usize>,
}

/// Per-run metadata written next to the history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub config: ResolvedConfig,
    pub strategy: String,
    pub dp_enabled: bool,
    pub sigma: f64,
    pub jobs: usize,
    pub data_digest: String,
    pub rounds_completed: u64,
    pub wall_time_secs: f64,
    pub final_digest: String,
}

/// Accounting artifact: the worst-case client ledger plus every per-client
/// ledger.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerArtifact {
    pub format_version: u32,
    pub config: ResolvedConfig,
    pub worst: LedgerReport,
    pub clients: Vec<LedgerReport>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let file = fs::File::create(path).map_err(|e| format!("create {}: {e}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| format!("write {}: {e}", path.display()))?;
    w.write_all(b"\n").map_err(|e| format!("write {}: {e}", path.display()))?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let file = fs::File::open(path).map_err(|e| format!("open {}: {e}", path.display()))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| format!("parse {}: {e}", path.display()))
}

pub fn write_checkpoint(path: &Path, params: &ParamVector) -> Result<(), String> {
    let file = fs::File::create(path).map_err(|e| format!("create {}: {e}", path.display()))?;
    let mut w = BufWriter::new(file);
    params
        .write_to(&mut w)
        .map_err(|e| format!("write {}: {e}", path.display()))
}

pub fn read_checkpoint(path: &Path) -> Result<ParamVector, String> {
    let file = fs::File::open(path).map_err(|e| format!("open {}: {e}", path.display()))?;
    ParamVector::read_from(&mut BufReader::new(file))
        .map_err(|e| format!("read {}: {e}", path.display()))
}

/// FNV-1a fingerprint of file contents, as printed in run reports.
pub fn digest_bytes(chunks: &[&[u8]]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for chunk in chunks {
        for &b in *chunk {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// Quote a CSV field per RFC 4180 when it contains a delimiter, quote, or
/// newline.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Write a CSV file: UTF-8, LF endings, header row first.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), String> {
    let file = fs::File::create(path).map_err(|e| format!("create {}: {e}", path.display()))?;
    let mut w = BufWriter::new(file);
    let mut emit = |fields: Vec<String>| -> std::io::Result<()> {
        let line: Vec<String> = fields.iter().map(|f| csv_field(f)).collect();
        w.write_all(line.join(",").as_bytes())?;
        w.write_all(b"\n")
    };
    emit(header.iter().map(|s| s.to_string()).collect())
        .map_err(|e| format!("write {}: {e}", path.display()))?;
    for row in rows {
        emit(row.clone()).map_err(|e| format!("write {}: {e}", path.display()))?;
    }
    Ok(())
}

/// A data directory loaded back into memory, ready to drive simulations.
pub struct LoadedData {
    pub cohort: RawCohort,
    pub scaler: ScalerParams,
    pub partitions: Vec<ClientDataset>,
    pub holdout: Vec<Sample>,
    pub digest: String,
}

/// Load cohort.csv plus the manifest matching `mode` from a gen-data output
/// directory and rebuild the client shards exactly.
pub fn load_data_dir(dir: &Path, mode: PartitionMode) -> Result<LoadedData, String> {
    let cohort_path = dir.join("cohort.csv");
    let manifest_path = dir.join(match mode {
        PartitionMode::Iid => "partition_iid.json",
        PartitionMode::NonIid => "partition_noniid.json",
    });
    let cohort_bytes =
        fs::read(&cohort_path).map_err(|e| format!("open {}: {e}", cohort_path.display()))?;
    let manifest_bytes =
        fs::read(&manifest_path).map_err(|e| format!("open {}: {e}", manifest_path.display()))?;
    let cohort = read_cohort_csv(cohort_bytes.as_slice()).map_err(|e| e.to_string())?;
    let manifest: PartitionManifest =
        serde_json::from_slice(&manifest_bytes).map_err(|e| format!("parse manifest: {e}"))?;
    let scaler = fit_scaler(&cohort).map_err(|e| e.to_string())?;
    let mut partitions = Vec::with_capacity(manifest.clients.len());
    for (key, rows) in &manifest.clients {
        let client_id: usize = key
            .parse()
            .map_err(|_| format!("bad client id in manifest: {key}"))?;
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
    let digest = digest_bytes(&[&cohort_bytes, &manifest_bytes]);
    Ok(LoadedData {
        cohort,
        scaler,
        partitions,
        holdout,
        digest,
    })
}
