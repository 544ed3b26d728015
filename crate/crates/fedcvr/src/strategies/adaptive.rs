//! Server-side adaptive optimizers: Adam-style moments (FedCvr), the additive
//! second-moment variant (FedYogi), and accumulated squared gradients
//! (FedAdagrad). All updates are element-wise over the aggregated
//! pseudo-gradient.

use super::{aggregate_mean, RoundUpdate, Strategy, StrategyConfig, StrategyError, StrategyKind, StrategyState};
use crate::model::ParamVector;

/// First/second moment memory with the round counter driving bias
/// correction.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub m: ParamVector,
    pub v: ParamVector,
    pub t: u64,
}

impl MomentState {
    pub fn zeros(len: usize) -> Self {
        MomentState {
            m: ParamVector::zeros(len),
            v: ParamVector::zeros(len),
            t: 0,
        }
    }
}

/// Accumulated squared-gradient memory (no momentum, no bias correction).
#[derive(Debug, Clone, PartialEq)]
pub struct AccumState {
    pub v: ParamVector,
}

impl AccumState {
    pub fn zeros(len: usize) -> Self {
        AccumState {
            v: ParamVector::zeros(len),
        }
    }
}

fn check_finite(w: &ParamVector) -> Result<(), StrategyError> {
    if w.all_finite() {
        Ok(())
    } else {
        Err(StrategyError::NonFinite)
    }
}

/// One Adam-style server step:
/// m ← β₁m + (1−β₁)ḡ, v ← β₂v + (1−β₂)ḡ², bias correction with the
/// incremented round counter, then w ← w − η·m̂/(√v̂ + τ).
pub fn fedcvr_step(
    state: &mut MomentState,
    w: &mut ParamVector,
    g_bar: &ParamVector,
    cfg: &StrategyConfig,
) -> Result<(), StrategyError> {
    if g_bar.len() != w.len() || state.m.len() != w.len() {
        return Err(StrategyError::LengthMismatch);
    }
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    let (m, v) = (state.m.as_mut_slice(), state.v.as_mut_slice());
    for ((w_i, (m_i, v_i)), &g) in w
        .as_mut_slice()
        .iter_mut()
        .zip(m.iter_mut().zip(v.iter_mut()))
        .zip(g_bar.as_slice())
    {
        *m_i = cfg.beta1 * *m_i + (1.0 - cfg.beta1) * g;
        *v_i = cfg.beta2 * *v_i + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m_i / bc1;
        let v_hat = *v_i / bc2;
        *w_i -= cfg.server_lr * m_hat / (v_hat.sqrt() + cfg.tau);
    }
    check_finite(w)
}

/// FedYogi step: momentum as FedCvr, additive second moment
/// v ← v − (1−β₂)ḡ²·sign(v − ḡ²), same bias corrections and update.
pub fn fedyogi_step(
    state: &mut MomentState,
    w: &mut ParamVector,
    g_bar: &ParamVector,
    cfg: &StrategyConfig,
) -> Result<(), StrategyError> {
    if g_bar.len() != w.len() || state.m.len() != w.len() {
        return Err(StrategyError::LengthMismatch);
    }
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    let (m, v) = (state.m.as_mut_slice(), state.v.as_mut_slice());
    for ((w_i, (m_i, v_i)), &g) in w
        .as_mut_slice()
        .iter_mut()
        .zip(m.iter_mut().zip(v.iter_mut()))
        .zip(g_bar.as_slice())
    {
        *m_i = cfg.beta1 * *m_i + (1.0 - cfg.beta1) * g;
        let g2 = g * g;
        // sign(0) = 0, so v is a fixed point when it already equals g²
        let sign = if *v_i > g2 {
            1.0
        } else if *v_i < g2 {
            -1.0
        } else {
            0.0
        };
        *v_i -= (1.0 - cfg.beta2) * g2 * sign;
        let m_hat = *m_i / bc1;
        let v_hat = *v_i / bc2;
        *w_i -= cfg.server_lr * m_hat / (v_hat.sqrt() + cfg.tau);
    }
    check_finite(w)
}

/// FedAdagrad step: v ← v + ḡ², w ← w − η·ḡ/(√v + τ).
pub fn fedadagrad_step(
    state: &mut AccumState,
    w: &mut ParamVector,
    g_bar: &ParamVector,
    cfg: &StrategyConfig,
) -> Result<(), StrategyError> {
    if g_bar.len() != w.len() || state.v.len() != w.len() {
        return Err(StrategyError::LengthMismatch);
    }
    for ((w_i, v_i), &g) in w
        .as_mut_slice()
        .iter_mut()
        .zip(state.v.as_mut_slice().iter_mut())
        .zip(g_bar.as_slice())
    {
        *v_i += g * g;
        *w_i -= cfg.server_lr * g / (v_i.sqrt() + cfg.tau);
    }
    check_finite(w)
}

macro_rules! moment_strategy {
    ($name:ident, $kind:expr, $step:ident, $state_variant:ident) => {
        pub struct $name {
            w: ParamVector,
            state: MomentState,
            cfg: StrategyConfig,
        }

        impl $name {
            pub fn new(initial: ParamVector, cfg: &StrategyConfig) -> Self {
                let state = MomentState::zeros(initial.len());
                $name {
                    w: initial,
                    state,
                    cfg: *cfg,
                }
            }

            pub fn restore(
                w: ParamVector,
                m: ParamVector,
                v: ParamVector,
                t: u64,
                cfg: &StrategyConfig,
            ) -> Self {
                $name {
                    w,
                    state: MomentState { m, v, t },
                    cfg: *cfg,
                }
            }
        }

        impl Strategy for $name {
            fn kind(&self) -> StrategyKind {
                $kind
            }

            fn broadcast(&self, _client_id: usize) -> &ParamVector {
                &self.w
            }

            fn apply_round(&mut self, updates: &[RoundUpdate]) -> Result<(), StrategyError> {
                let g_bar = aggregate_mean(updates)?;
                $step(&mut self.state, &mut self.w, &g_bar, &self.cfg)
            }

            fn eval_model(&self) -> ParamVector {
                self.w.clone()
            }

            fn snapshot(&self) -> StrategyState {
                StrategyState::$state_variant {
                    w: self.w.clone(),
                    m: self.state.m.clone(),
                    v: self.state.v.clone(),
                    t: self.state.t,
                }
            }
        }
    };
}

moment_strategy!(FedCvr, StrategyKind::FedCvr, fedcvr_step, FedCvr);
moment_strategy!(FedYogi, StrategyKind::FedYogi, fedyogi_step, FedYogi);

pub struct FedAdagrad {
    w: ParamVector,
    state: AccumState,
    cfg: StrategyConfig,
}

impl FedAdagrad {
    pub fn new(initial: ParamVector, cfg: &StrategyConfig) -> Self {
        let state = AccumState::zeros(initial.len());
        FedAdagrad {
            w: initial,
            state,
            cfg: *cfg,
        }
    }

    pub fn restore(w: ParamVector, v: ParamVector, cfg: &StrategyConfig) -> Self {
        FedAdagrad {
            w,
            state: AccumState { v },
            cfg: *cfg,
        }
    }
}

impl Strategy for FedAdagrad {
    fn kind(&self) -> StrategyKind {
        StrategyKind::FedAdagrad
    }

    fn broadcast(&self, _client_id: usize) -> &ParamVector {
        &self.w
    }

    fn apply_round(&mut self, updates: &[RoundUpdate]) -> Result<(), StrategyError> {
        let g_bar = aggregate_mean(updates)?;
        fedadagrad_step(&mut self.state, &mut self.w, &g_bar, &self.cfg)
    }

    fn eval_model(&self) -> ParamVector {
        self.w.clone()
    }

    fn snapshot(&self) -> StrategyState {
        StrategyState::FedAdagrad {
            w: self.w.clone(),
            v: self.state.v.clone(),
        }
    }
}
