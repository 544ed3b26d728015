//! Stateless weight-averaging strategies: FedAvg and FedProx. The server
//! computes the sample-size-weighted average of the clients' final local
//! weights; FedProx additionally instructs clients to regularize toward the
//! broadcast model.

use super::{RoundUpdate, Strategy, StrategyConfig, StrategyError, StrategyKind, StrategyState};
use crate::model::ParamVector;

/// Sample-size-weighted average of the clients' final weights:
/// w ← Σ (nᵢ/N)·wᵢ.
pub fn weighted_average_weights(updates: &[RoundUpdate]) -> Result<ParamVector, StrategyError> {
    let first = updates.first().ok_or(StrategyError::NoUpdates)?;
    let total: usize = updates.iter().map(|u| u.n_samples).sum();
    if total == 0 {
        return Err(StrategyError::ZeroSamples);
    }
    let mut out = ParamVector::zeros(first.final_weights.len());
    for u in updates {
        if u.final_weights.len() != out.len() {
            return Err(StrategyError::LengthMismatch);
        }
        out.axpy(u.n_samples as f64 / total as f64, &u.final_weights);
    }
    if !out.all_finite() {
        return Err(StrategyError::NonFinite);
    }
    Ok(out)
}

/// Proximal term of the FedProx client objective:
/// loss addend (μ/2)·‖w_local − w_global‖² and gradient addend
/// μ·(w_local − w_global). The gradient addend joins every raw minibatch
/// gradient before clipping when DP is on.
pub fn fedprox_penalty(
    w_local: &ParamVector,
    w_global: &ParamVector,
    mu: f64,
) -> Result<(f64, ParamVector), StrategyError> {
    if w_local.len() != w_global.len() {
        return Err(StrategyError::LengthMismatch);
    }
    if mu < 0.0 {
        return Err(StrategyError::Config("prox_mu must be non-negative".into()));
    }
    let diff = w_local.sub(w_global);
    let loss = 0.5 * mu * diff.l2_norm().powi(2);
    let mut grad = diff;
    grad.scale(mu);
    Ok((loss, grad))
}

pub struct FedAvg {
    w: ParamVector,
}

impl FedAvg {
    pub fn new(initial: ParamVector, _cfg: &StrategyConfig) -> Self {
        FedAvg { w: initial }
    }
}

impl Strategy for FedAvg {
    fn kind(&self) -> StrategyKind {
        StrategyKind::FedAvg
    }

    fn broadcast(&self, _client_id: usize) -> &ParamVector {
        &self.w
    }

    fn apply_round(&mut self, updates: &[RoundUpdate]) -> Result<(), StrategyError> {
        self.w = weighted_average_weights(updates)?;
        Ok(())
    }

    fn eval_model(&self) -> ParamVector {
        self.w.clone()
    }

    fn snapshot(&self) -> StrategyState {
        StrategyState::FedAvg { w: self.w.clone() }
    }
}

/// FedProx: FedAvg aggregation plus a client-side proximal pull toward the
/// broadcast model with coefficient μ.
pub struct FedProx {
    w: ParamVector,
    mu: f64,
}

impl FedProx {
    pub fn new(initial: ParamVector, cfg: &StrategyConfig) -> Self {
        FedProx {
            w: initial,
            mu: cfg.prox_mu,
        }
    }
}

impl Strategy for FedProx {
    fn kind(&self) -> StrategyKind {
        StrategyKind::FedProx
    }

    fn broadcast(&self, _client_id: usize) -> &ParamVector {
        &self.w
    }

    fn apply_round(&mut self, updates: &[RoundUpdate]) -> Result<(), StrategyError> {
        self.w = weighted_average_weights(updates)?;
        Ok(())
    }

    fn eval_model(&self) -> ParamVector {
        self.w.clone()
    }

    fn prox_mu(&self) -> f64 {
        self.mu
    }

    fn snapshot(&self) -> StrategyState {
        StrategyState::FedProx { w: self.w.clone() }
    }
}
