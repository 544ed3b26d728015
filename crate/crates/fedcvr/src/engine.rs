//! Federated round orchestration: broadcast, client-local (DP-)SGD, strategy
//! aggregation, held-out evaluation, and privacy-ledger composition.
//!
//! Determinism contract: every stochastic stream of a (round, client) pair is
//! derived from `client_round_seed(run_seed, round, client_id)`, client
//! updates are collected in ascending client-id order, and all reductions are
//! sequential — so `--jobs 1` and `--jobs N` produce byte-identical
//! histories.

use crate::data::ClientDataset;
use crate::metrics::{self, MetricsError};
use crate::model::{Mlp, ParamVector, Sample};
use crate::privacy::{
    clip_slice_in_place, gaussian_noise_into, LedgerReport, PrivacyConfig, PrivacyError,
    PrivacyLedger,
};
use crate::seed::{client_round_seed, hash64, rng_for};
use crate::strategies::{
    build_strategy, ClientSummary, RoundUpdate, Strategy, StrategyConfig, StrategyError,
    StrategyKind, StrategyState,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("all clients failed in round {round}")]
    AllClientsFailed { round: u64 },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    Iid,
    NonIid,
}

impl PartitionMode {
    pub fn name(&self) -> &'static str {
        match self {
            PartitionMode::Iid => "iid",
            PartitionMode::NonIid => "noniid",
        }
    }
}

/// Federated training loop parameters; defaults are the benchmark setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub num_clients: usize,
    pub rounds: u64,
    pub local_epochs: u64,
    pub client_lr: f64,
    pub batch_size: usize,
    /// Fraction of clients selected each round (1.0 = full participation).
    pub participation: f64,
    pub seed: u64,
    pub partition_mode: PartitionMode,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            num_clients: 5,
            rounds: 100,
            local_epochs: 5,
            client_lr: 0.01,
            batch_size: 32,
            participation: 1.0,
            seed: 42,
            partition_mode: PartitionMode::NonIid,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.num_clients == 0 {
            return Err(EngineError::Config("num_clients must be positive".into()));
        }
        if self.rounds == 0 {
            return Err(EngineError::Config("rounds must be positive".into()));
        }
        if self.local_epochs == 0 {
            return Err(EngineError::Config("local_epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(EngineError::Config("batch_size must be positive".into()));
        }
        if !(self.participation > 0.0 && self.participation <= 1.0) {
            return Err(EngineError::Config("participation must lie in (0, 1]".into()));
        }
        if self.client_lr.is_nan() || self.client_lr <= 0.0 {
            return Err(EngineError::Config("client_lr must be positive".into()));
        }
        Ok(())
    }
}

/// One round's results; serialized as one JSON Lines record with this exact
/// key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub global_loss: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    /// Per-client mean epoch-final training loss, indexed by client id; null
    /// for clients that failed or were not selected this round.
    pub client_losses: Vec<Option<f64>>,
    /// Worst-case (max over clients) privacy spend so far; null when the
    /// budget is infinite (DP off or σ = 0).
    pub epsilon: Option<f64>,
    pub flags: Vec<String>,
    pub failed_clients: Vec<usize>,
}

/// Full result of one simulation.
#[derive(Debug)]
pub struct SimulationOutput {
    pub records: Vec<RoundRecord>,
    pub final_params: ParamVector,
    pub final_state: StrategyState,
    /// One accounting report per client, indexed by client id.
    pub ledgers: Vec<LedgerReport>,
    /// The report of the client with the largest ε (ties to the lowest id).
    pub worst_ledger: LedgerReport,
}

/// Everything one simulation needs; construct with struct-update syntax from
/// [`SimulationSetup::new`].
pub struct SimulationSetup<'a> {
    pub mlp: Mlp,
    pub tcfg: TrainingConfig,
    pub pcfg: PrivacyConfig,
    pub scfg: StrategyConfig,
    pub kind: StrategyKind,
    pub partitions: &'a [ClientDataset],
    pub holdout: &'a [Sample],
    pub jobs: usize,
}

impl<'a> SimulationSetup<'a> {
    pub fn new(
        kind: StrategyKind,
        partitions: &'a [ClientDataset],
        holdout: &'a [Sample],
    ) -> Self {
        SimulationSetup {
            mlp: Mlp::default(),
            tcfg: TrainingConfig::default(),
            pcfg: PrivacyConfig::default(),
            scfg: StrategyConfig::default(),
            kind,
            partitions,
            holdout,
            jobs: 1,
        }
    }
}

/// Result of one client's local training round.
#[derive(Debug, Clone)]
pub struct ClientOutcome {
    pub update: RoundUpdate,
    /// Number of noisy batch steps taken (0 when DP is off).
    pub noise_steps: u64,
}

/// Local training: `local_epochs` of minibatch SGD with a fresh derived
/// shuffle per epoch. With DP on, each batch clips per-sample gradients to
/// `clip_norm`, sums them, adds N(0, σ²C²I) to the sum, divides by the true
/// batch size, and steps with `client_lr`. FedProx (prox_mu > 0) adds
/// μ(w_k − w_broadcast) to every raw gradient before clipping.
///
/// Returns the transmitted update (Δw rescaled to gradient units plus the
/// final weights) or a failure reason if the weights left the finite range.
pub fn client_update(
    mlp: &Mlp,
    w_broadcast: &ParamVector,
    data: &ClientDataset,
    tcfg: &TrainingConfig,
    pcfg: &PrivacyConfig,
    prox_mu: f64,
    round_seed: u64,
) -> Result<ClientOutcome, String> {
    debug_assert!(!data.samples.is_empty());
    let n = data.samples.len();
    let dim = mlp.param_len();
    let mut w_k = w_broadcast.clone();
    let mut scratch = mlp.scratch();
    let mut grad = vec![0.0; dim];
    let mut batch_sum = ParamVector::zeros(dim);
    let mut prox_grad = vec![0.0; dim];
    let mut noise_rng = rng_for(round_seed, "noise", &[]);
    let mut noise_steps = 0u64;
    let mut epoch_losses = Vec::with_capacity(tcfg.local_epochs as usize);

    for epoch in 0..tcfg.local_epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut shuffle_rng = rng_for(round_seed, "shuffle", &[epoch]);
        for i in (1..order.len()).rev() {
            let j = shuffle_rng.random_range(0..=i);
            order.swap(i, j);
        }
        for batch in order.chunks(tcfg.batch_size) {
            for v in batch_sum.as_mut_slice() {
                *v = 0.0;
            }
            if prox_mu > 0.0 {
                for (p, (wk, wb)) in prox_grad
                    .iter_mut()
                    .zip(w_k.as_slice().iter().zip(w_broadcast.as_slice()))
                {
                    *p = prox_mu * (wk - wb);
                }
            }
            for &sample_idx in batch {
                mlp.gradient_into(&w_k, &data.samples[sample_idx], &mut scratch, &mut grad);
                if prox_mu > 0.0 {
                    for (g, p) in grad.iter_mut().zip(prox_grad.iter()) {
                        *g += p;
                    }
                }
                if pcfg.enabled {
                    clip_slice_in_place(&mut grad, pcfg.clip_norm);
                }
                for (s, g) in batch_sum.as_mut_slice().iter_mut().zip(grad.iter()) {
                    *s += g;
                }
            }
            if pcfg.enabled {
                gaussian_noise_into(
                    batch_sum.as_mut_slice(),
                    pcfg.noise_multiplier * pcfg.clip_norm,
                    &mut noise_rng,
                );
                noise_steps += 1;
            }
            batch_sum.scale(1.0 / batch.len() as f64);
            w_k.axpy(-tcfg.client_lr, &batch_sum);
            if !w_k.all_finite() {
                return Err(format!(
                    "client {} diverged to non-finite weights in epoch {}",
                    data.client_id, epoch
                ));
            }
        }
        epoch_losses.push(mlp.mean_loss(&w_k, &data.samples));
    }

    let local_loss = epoch_losses.iter().sum::<f64>() / epoch_losses.len() as f64;
    let mut pseudo_gradient = w_broadcast.sub(&w_k);
    pseudo_gradient.scale(1.0 / tcfg.client_lr);
    Ok(ClientOutcome {
        update: RoundUpdate {
            client_id: data.client_id,
            pseudo_gradient,
            final_weights: w_k,
            n_samples: n,
            local_loss,
        },
        noise_steps,
    })
}

/// Per-client 7-dim data summary for FedCluster: feature means plus the
/// positive-label rate.
pub fn client_summary(data: &ClientDataset) -> ClientSummary {
    let n = data.samples.len() as f64;
    let mut features = vec![0.0; 7];
    for sample in &data.samples {
        for (acc, &f) in features.iter_mut().zip(sample.features.iter()) {
            *acc += f;
        }
        features[6] += f64::from(sample.label);
    }
    for f in &mut features {
        *f /= n;
    }
    ClientSummary {
        client_id: data.client_id,
        n_samples: data.samples.len(),
        features,
    }
}

/// Clients selected for a round: everyone at full participation, otherwise a
/// seeded sample of ⌈participation·num_clients⌉ ids, returned ascending.
fn select_clients(tcfg: &TrainingConfig, round: u64) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..tcfg.num_clients).collect();
    if tcfg.participation >= 1.0 {
        return ids;
    }
    let take = (tcfg.participation * tcfg.num_clients as f64).ceil() as usize;
    let take = take.clamp(1, tcfg.num_clients);
    let mut rng = rng_for(tcfg.seed, "participation", &[round]);
    for i in (1..ids.len()).rev() {
        let j = rng.random_range(0..=i);
        ids.swap(i, j);
    }
    let mut selected: Vec<usize> = ids.into_iter().take(take).collect();
    selected.sort_unstable();
    selected
}

struct Engine<'a> {
    setup: &'a SimulationSetup<'a>,
    strategy: Box<dyn Strategy>,
    ledgers: Vec<PrivacyLedger>,
    pool: Option<rayon::ThreadPool>,
}

impl<'a> Engine<'a> {
    fn new(setup: &'a SimulationSetup<'a>) -> Result<Self, EngineError> {
        setup.tcfg.validate()?;
        setup.pcfg.validate()?;
        if setup.partitions.len() != setup.tcfg.num_clients {
            return Err(EngineError::Config(format!(
                "{} partitions for {} clients",
                setup.partitions.len(),
                setup.tcfg.num_clients
            )));
        }
        if setup.holdout.is_empty() {
            return Err(EngineError::Config("empty held-out evaluation set".into()));
        }
        if setup.partitions.iter().any(|p| p.samples.is_empty()) {
            return Err(EngineError::Config("empty client shard".into()));
        }
        if setup
            .partitions
            .iter()
            .enumerate()
            .any(|(i, p)| p.client_id != i)
        {
            return Err(EngineError::Config(
                "partitions must be ordered by contiguous client ids".into(),
            ));
        }
        let initial = setup.mlp.init_params(hash64(setup.tcfg.seed, "model-init"));
        let summaries: Vec<ClientSummary> =
            setup.partitions.iter().map(client_summary).collect();
        let strategy = build_strategy(
            setup.kind,
            initial,
            &setup.scfg,
            Some(&summaries),
            hash64(setup.tcfg.seed, "fedcluster"),
        )?;
        let ledgers = setup
            .partitions
            .iter()
            .map(|p| {
                let q = (setup.tcfg.batch_size as f64 / p.samples.len() as f64).min(1.0);
                PrivacyLedger::new(PrivacyConfig {
                    sampling_rate: q,
                    ..setup.pcfg
                })
            })
            .collect();
        let pool = if setup.jobs > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(setup.jobs)
                    .build()
                    .map_err(|e| EngineError::Config(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Engine {
            setup,
            strategy,
            ledgers,
            pool,
        })
    }

    /// Worst-case ε across clients so far, None while infinite.
    fn epsilon_so_far(&self) -> Option<f64> {
        if !self.setup.pcfg.enabled {
            return None;
        }
        self.ledgers
            .iter()
            .filter_map(|l| l.to_epsilon(self.setup.pcfg.delta).ok())
            .map(|(e, _)| e)
            .fold(None, |acc: Option<f64>, e| {
                Some(acc.map_or(e, |best| best.max(e)))
            })
    }

    fn run_round(&mut self, round: u64) -> Result<RoundRecord, EngineError> {
        let setup = self.setup;
        let selected = select_clients(&setup.tcfg, round);
        let prox_mu = self.strategy.prox_mu();
        // snapshot broadcasts before fanning out
        let work: Vec<(usize, ParamVector)> = selected
            .iter()
            .map(|&id| (id, self.strategy.broadcast(id).clone()))
            .collect();
        let run_one = |(id, w): &(usize, ParamVector)| {
            client_update(
                &setup.mlp,
                w,
                &setup.partitions[*id],
                &setup.tcfg,
                &setup.pcfg,
                prox_mu,
                client_round_seed(setup.tcfg.seed, round, *id as u64),
            )
        };
        let results: Vec<Result<ClientOutcome, String>> = match &self.pool {
            Some(pool) => pool.install(|| work.par_iter().map(run_one).collect()),
            None => work.iter().map(run_one).collect(),
        };

        let mut outcomes = Vec::with_capacity(results.len());
        let mut failed_clients = Vec::new();
        for ((id, _), result) in work.iter().zip(results) {
            match result {
                Ok(outcome) => outcomes.push(outcome),
                Err(_reason) => failed_clients.push(*id),
            }
        }
        if outcomes.is_empty() {
            return Err(EngineError::AllClientsFailed { round });
        }
        let updates: Vec<RoundUpdate> = outcomes.iter().map(|o| o.update.clone()).collect();
        self.strategy.apply_round(&updates)?;
        for outcome in &outcomes {
            self.ledgers[outcome.update.client_id].compose(outcome.noise_steps);
        }

        let eval_model = self.strategy.eval_model();
        let scored = setup.mlp.score_samples(&eval_model, setup.holdout);
        let counts = metrics::confusion(&scored, 0.5)?;
        let mut flags: Vec<String> = counts
            .degenerate_flags()
            .into_iter()
            .map(str::to_string)
            .collect();
        let auc = match metrics::auc(&scored) {
            Ok(a) => a,
            Err(_) => {
                flags.push("auc_single_class".into());
                0.0
            }
        };
        let losses: Vec<f64> = updates.iter().map(|u| u.local_loss).collect();
        let sizes: Vec<usize> = updates.iter().map(|u| u.n_samples).collect();
        let global_loss = metrics::global_loss(&losses, &sizes)?;
        let mut client_losses = vec![None; setup.tcfg.num_clients];
        for u in &updates {
            client_losses[u.client_id] = Some(u.local_loss);
        }
        Ok(RoundRecord {
            round,
            global_loss,
            accuracy: counts.accuracy(),
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            auc,
            client_losses,
            epsilon: self.epsilon_so_far(),
            flags,
            failed_clients,
        })
    }
}

/// Run a full simulation: `rounds` federated rounds over fixed partitions,
/// evaluating on the held-out set after every aggregation.
pub fn run_simulation(setup: &SimulationSetup) -> Result<SimulationOutput, EngineError> {
    run_simulation_with(setup, |_, _| {})
}

/// [`run_simulation`] with a per-round observer (progress lines, periodic
/// checkpoints). The callback sees each finished record and the
/// post-aggregation evaluation model.
pub fn run_simulation_with<F>(
    setup: &SimulationSetup,
    mut on_round: F,
) -> Result<SimulationOutput, EngineError>
where
    F: FnMut(&RoundRecord, &ParamVector),
{
    let mut engine = Engine::new(setup)?;
    let mut records = Vec::with_capacity(setup.tcfg.rounds as usize);
    for round in 1..=setup.tcfg.rounds {
        let record = engine.run_round(round)?;
        on_round(&record, &engine.strategy.eval_model());
        records.push(record);
    }
    let ledgers: Vec<LedgerReport> = engine.ledgers.iter().map(|l| l.report()).collect();
    let worst_ledger = ledgers
        .iter()
        .max_by(|a, b| {
            let ea = a.epsilon.unwrap_or(f64::NEG_INFINITY);
            let eb = b.epsilon.unwrap_or(f64::NEG_INFINITY);
            ea.total_cmp(&eb)
        })
        .cloned()
        .expect("at least one client");
    Ok(SimulationOutput {
        records,
        final_params: engine.strategy.eval_model(),
        final_state: engine.strategy.snapshot(),
        ledgers,
        worst_ledger,
    })
}

/// One arm of the comparative experiment: `sigma` is None for the DP-off
/// baseline.
pub struct ComparativeArm {
    pub sigma: Option<f64>,
    pub output: SimulationOutput,
}

/// Paired comparison on identical partitions and identical model init: a
/// DP-off baseline followed by one DP-on run per noise multiplier.
pub fn run_comparative_experiment(
    setup: &SimulationSetup,
    sigmas: &[f64],
) -> Result<Vec<ComparativeArm>, EngineError> {
    let mut arms = Vec::with_capacity(1 + sigmas.len());
    let baseline = SimulationSetup {
        pcfg: PrivacyConfig {
            enabled: false,
            ..setup.pcfg
        },
        ..*setup
    };
    arms.push(ComparativeArm {
        sigma: None,
        output: run_simulation(&baseline)?,
    });
    for &sigma in sigmas {
        let arm = SimulationSetup {
            pcfg: PrivacyConfig {
                enabled: true,
                noise_multiplier: sigma,
                ..setup.pcfg
            },
            ..*setup
        };
        arms.push(ComparativeArm {
            sigma: Some(sigma),
            output: run_simulation(&arm)?,
        });
    }
    Ok(arms)
}

/// Serialize round records as JSON Lines with stable key order.
pub fn history_to_jsonl(records: &[RoundRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Parse a JSON Lines history back into records.
pub fn history_from_jsonl(text: &str) -> Result<Vec<RoundRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
