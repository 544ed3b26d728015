//! Server-side aggregation strategies behind one pluggable interface.
//!
//! A strategy consumes one round's [`RoundUpdate`]s, mutates its own state,
//! and exposes the model to broadcast next round plus the model to evaluate.
//! Stateless averaging (FedAvg, FedProx) weights client final weights by
//! sample count; the adaptive optimizers (FedAdagrad, FedYogi, FedCvr)
//! consume the uniform mean of the pseudo-gradients; FedCluster runs
//! weighted averaging independently inside static client clusters.

mod adaptive;
mod averaging;
mod cluster;

pub use adaptive::{
    fedadagrad_step, fedcvr_step, fedyogi_step, AccumState, FedAdagrad, FedCvr, FedYogi,
    MomentState,
};
pub use averaging::{fedprox_penalty, weighted_average_weights, FedAvg, FedProx};
pub use cluster::{kmeans_assign, ClientSummary, FedCluster};

use crate::model::ParamVector;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("no client updates to aggregate")]
    NoUpdates,
    #[error("total sample count is zero")]
    ZeroSamples,
    #[error("non-finite value during aggregation")]
    NonFinite,
    #[error("invalid strategy configuration: {0}")]
    Config(String),
    #[error("unknown strategy `{0}`; valid strategies: {names}", names = StrategyKind::NAMES.join(" | "))]
    UnknownName(String),
    #[error("mismatched parameter vector lengths")]
    LengthMismatch,
}

/// One client's transmitted contribution for a round.
///
/// `pseudo_gradient` is the weight delta rescaled to gradient units,
/// (w_broadcast − w_final) / η_c. `final_weights` carries the client's local
/// model verbatim so weight-averaging strategies are exact rather than
/// reconstructing through the division.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundUpdate {
    pub client_id: usize,
    pub pseudo_gradient: ParamVector,
    pub final_weights: ParamVector,
    pub n_samples: usize,
    pub local_loss: f64,
}

/// Server optimizer knobs; defaults follow the benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub server_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Stability constant in the adaptive denominator.
    pub tau: f64,
    /// Proximal coefficient (FedProx clients only).
    pub prox_mu: f64,
    /// Cluster count (FedCluster only).
    pub n_clusters: usize,
    /// Client learning rate; relates pseudo-gradients back to weight deltas.
    pub client_lr: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            server_lr: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            tau: 1e-3,
            prox_mu: 0.01,
            n_clusters: 2,
            client_lr: 0.01,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<(), StrategyError> {
        if self.server_lr.is_nan() || self.server_lr <= 0.0 {
            return Err(StrategyError::Config("server_lr must be positive".into()));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(StrategyError::Config(format!("{name} must lie in [0, 1)")));
            }
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(StrategyError::Config("tau must be positive".into()));
        }
        if self.prox_mu < 0.0 {
            return Err(StrategyError::Config("prox_mu must be non-negative".into()));
        }
        if self.n_clusters == 0 {
            return Err(StrategyError::Config("n_clusters must be positive".into()));
        }
        if self.client_lr.is_nan() || self.client_lr <= 0.0 {
            return Err(StrategyError::Config("client_lr must be positive".into()));
        }
        Ok(())
    }
}

/// The six selectable aggregation strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    FedAvg,
    FedProx,
    FedCluster,
    FedAdagrad,
    FedYogi,
    FedCvr,
}

impl StrategyKind {
    pub const NAMES: [&'static str; 6] = [
        "fedavg",
        "fedprox",
        "fedcluster",
        "fedadagrad",
        "fedyogi",
        "fedcvr",
    ];

    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::FedAvg,
        StrategyKind::FedProx,
        StrategyKind::FedCluster,
        StrategyKind::FedAdagrad,
        StrategyKind::FedYogi,
        StrategyKind::FedCvr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::FedAvg => "fedavg",
            StrategyKind::FedProx => "fedprox",
            StrategyKind::FedCluster => "fedcluster",
            StrategyKind::FedAdagrad => "fedadagrad",
            StrategyKind::FedYogi => "fedyogi",
            StrategyKind::FedCvr => "fedcvr",
        }
    }
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fedavg" => Ok(StrategyKind::FedAvg),
            "fedprox" => Ok(StrategyKind::FedProx),
            "fedcluster" => Ok(StrategyKind::FedCluster),
            "fedadagrad" => Ok(StrategyKind::FedAdagrad),
            "fedyogi" => Ok(StrategyKind::FedYogi),
            "fedcvr" => Ok(StrategyKind::FedCvr),
            other => Err(StrategyError::UnknownName(other.to_string())),
        }
    }
}

/// Serializable optimizer memory, for checkpoint/resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum StrategyState {
    FedAvg {
        w: ParamVector,
    },
    FedProx {
        w: ParamVector,
    },
    FedAdagrad {
        w: ParamVector,
        v: ParamVector,
    },
    FedYogi {
        w: ParamVector,
        m: ParamVector,
        v: ParamVector,
        t: u64,
    },
    FedCvr {
        w: ParamVector,
        m: ParamVector,
        v: ParamVector,
        t: u64,
    },
    FedCluster {
        assignment: Vec<usize>,
        models: Vec<ParamVector>,
        sizes: Vec<usize>,
    },
}

/// One server-side aggregation strategy, driven once per round.
pub trait Strategy: Send {
    fn kind(&self) -> StrategyKind;

    /// Model broadcast to a given client at the start of a round.
    fn broadcast(&self, client_id: usize) -> &ParamVector;

    /// Consume the round's updates (sorted ascending by client id) and
    /// advance the global state.
    fn apply_round(&mut self, updates: &[RoundUpdate]) -> Result<(), StrategyError>;

    /// Model used for server-side evaluation this round.
    fn eval_model(&self) -> ParamVector;

    /// Proximal coefficient the clients must apply; zero for everything but
    /// FedProx.
    fn prox_mu(&self) -> f64 {
        0.0
    }

    fn snapshot(&self) -> StrategyState;
}

/// Uniform arithmetic mean of the pseudo-gradients, summed in the given
/// (ascending client id) order.
pub fn aggregate_mean(updates: &[RoundUpdate]) -> Result<ParamVector, StrategyError> {
    let first = updates.first().ok_or(StrategyError::NoUpdates)?;
    let mut sum = ParamVector::zeros(first.pseudo_gradient.len());
    for u in updates {
        if u.pseudo_gradient.len() != sum.len() {
            return Err(StrategyError::LengthMismatch);
        }
        sum.axpy(1.0, &u.pseudo_gradient);
    }
    sum.scale(1.0 / updates.len() as f64);
    if !sum.all_finite() {
        return Err(StrategyError::NonFinite);
    }
    Ok(sum)
}

/// Instantiate a strategy around an initial global model.
///
/// FedCluster additionally needs per-client data summaries and a seed for
/// its one-time clustering.
pub fn build_strategy(
    kind: StrategyKind,
    initial: ParamVector,
    cfg: &StrategyConfig,
    client_summaries: Option<&[ClientSummary]>,
    seed: u64,
) -> Result<Box<dyn Strategy>, StrategyError> {
    cfg.validate()?;
    Ok(match kind {
        StrategyKind::FedAvg => Box::new(averaging::FedAvg::new(initial, cfg)),
        StrategyKind::FedProx => Box::new(averaging::FedProx::new(initial, cfg)),
        StrategyKind::FedAdagrad => Box::new(adaptive::FedAdagrad::new(initial, cfg)),
        StrategyKind::FedYogi => Box::new(adaptive::FedYogi::new(initial, cfg)),
        StrategyKind::FedCvr => Box::new(adaptive::FedCvr::new(initial, cfg)),
        StrategyKind::FedCluster => {
            let summaries = client_summaries.ok_or_else(|| {
                StrategyError::Config("fedcluster requires per-client summaries".into())
            })?;
            Box::new(cluster::FedCluster::new(initial, cfg, summaries, seed)?)
        }
    })
}

/// Rebuild a strategy from a serialized state snapshot.
pub fn restore_strategy(
    state: StrategyState,
    cfg: &StrategyConfig,
) -> Result<Box<dyn Strategy>, StrategyError> {
    cfg.validate()?;
    Ok(match state {
        StrategyState::FedAvg { w } => Box::new(averaging::FedAvg::new(w, cfg)),
        StrategyState::FedProx { w } => Box::new(averaging::FedProx::new(w, cfg)),
        StrategyState::FedAdagrad { w, v } => Box::new(adaptive::FedAdagrad::restore(w, v, cfg)),
        StrategyState::FedYogi { w, m, v, t } => {
            Box::new(adaptive::FedYogi::restore(w, m, v, t, cfg))
        }
        StrategyState::FedCvr { w, m, v, t } => {
            Box::new(adaptive::FedCvr::restore(w, m, v, t, cfg))
        }
        StrategyState::FedCluster {
            assignment,
            models,
            sizes,
        } => Box::new(cluster::FedCluster::restore(assignment, models, sizes, cfg)?),
    })
}

#[cfg(test)]
pub(crate) fn scalar_update(client_id: usize, g: f64, n: usize) -> RoundUpdate {
    RoundUpdate {
        client_id,
        pseudo_gradient: ParamVector::from_vec(vec![g]),
        final_weights: ParamVector::from_vec(vec![0.0]),
        n_samples: n,
        local_loss: 0.0,
    }
}
