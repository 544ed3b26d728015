//! Per-sample gradient clipping, Gaussian noise injection, and Rényi-DP
//! accounting with conversion to (ε, δ).
//!
//! Accounting model: one "step" is one noisy batch gradient. For sampling
//! rate q = 1 the accountant uses the exact Gaussian-mechanism RDP α/(2σ²);
//! for q < 1 it uses the binomial-expansion upper bound of the subsampled
//! Gaussian mechanism at integer orders, interpolating the log moment
//! linearly between bracketing integers for fractional orders. Conversion to
//! (ε, δ) uses the classic bound ε = RDP(α) + ln(1/δ)/(α−1), minimized over
//! the order grid.

use crate::model::ParamVector;
use crate::seed::rng_for;
use crate::special::{ln_binomial, log_sum_exp};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PrivacyError {
    #[error("invalid privacy configuration: {0}")]
    Config(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite gradient")]
    NonFinite,
    #[error("privacy mechanism is disabled in this configuration")]
    Disabled,
    #[error("ledger has no recorded steps")]
    NoSteps,
    #[error("privacy budget is infinite at every order (sigma = 0?)")]
    InfiniteBudget,
}

/// Client-side DP parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyConfig {
    pub enabled: bool,
    /// L2 clip bound C for per-sample gradients.
    pub clip_norm: f64,
    /// Noise multiplier σ; the per-coordinate noise std is σ·C. σ = 0 means
    /// clipping only (infinite budget).
    pub noise_multiplier: f64,
    /// Failure probability δ of the (ε, δ) guarantee.
    pub delta: f64,
    /// Probability that a record participates in one step (batch / shard).
    pub sampling_rate: f64,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig {
            enabled: false,
            clip_norm: 1.0,
            noise_multiplier: 1.0,
            delta: 1e-5,
            sampling_rate: 1.0,
        }
    }
}

impl PrivacyConfig {
    pub fn validate(&self) -> Result<(), PrivacyError> {
        if self.clip_norm.is_nan() || self.clip_norm <= 0.0 {
            return Err(PrivacyError::Config("clip_norm must be positive".into()));
        }
        if self.noise_multiplier < 0.0 {
            return Err(PrivacyError::Config(
                "noise_multiplier must be non-negative".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(PrivacyError::Config("delta must lie in (0, 1)".into()));
        }
        if !(self.sampling_rate > 0.0 && self.sampling_rate <= 1.0) {
            return Err(PrivacyError::Config(
                "sampling_rate must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Comparisons against the clip bound allow this relative slack so that
/// re-clipping an already-clipped vector is a bitwise no-op (the recomputed
/// norm of a scaled vector can spill above C by a few ulp).
const CLIP_REL_SLACK: f64 = 1e-14;

/// In-place clip to `‖g‖₂ ≤ c`, preserving direction.
pub fn clip_slice_in_place(g: &mut [f64], c: f64) {
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= c * (1.0 + CLIP_REL_SLACK) {
        return;
    }
    let scale = c / norm;
    for v in g {
        *v *= scale;
    }
}

/// `g / max(1, ‖g‖₂ / C)`: unchanged below the bound, rescaled onto the
/// sphere of radius C above it.
pub fn clip_gradient(g: &ParamVector, clip_norm: f64) -> Result<ParamVector, PrivacyError> {
    if clip_norm.is_nan() || clip_norm <= 0.0 {
        return Err(PrivacyError::Config("clip_norm must be positive".into()));
    }
    if !g.all_finite() {
        return Err(PrivacyError::NonFinite);
    }
    let mut out = g.clone();
    clip_slice_in_place(out.as_mut_slice(), clip_norm);
    Ok(out)
}

/// Add iid N(0, std²) noise to every coordinate. No-op when std = 0 (the
/// stream is not consumed, so a σ = 0 run is bitwise equal to no-noise).
pub fn gaussian_noise_into(buf: &mut [f64], std: f64, rng: &mut ChaCha20Rng) {
    if std == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, std).expect("std validated by caller");
    for v in buf {
        *v += normal.sample(rng);
    }
}

/// Sum of clipped per-sample gradients plus N(0, σ²C²I).
///
/// The caller divides by the batch size before stepping; the noise is added
/// to the sum (not the average), so the effective per-coordinate noise std on
/// the averaged gradient is σC/L.
pub fn noisy_batch_gradient(
    per_sample_grads: &[ParamVector],
    config: &PrivacyConfig,
    rng_seed: u64,
) -> Result<ParamVector, PrivacyError> {
    if !config.enabled {
        return Err(PrivacyError::Disabled);
    }
    config.validate()?;
    let first = per_sample_grads.first().ok_or(PrivacyError::EmptyBatch)?;
    let mut sum = ParamVector::zeros(first.len());
    for g in per_sample_grads {
        if !g.all_finite() {
            return Err(PrivacyError::NonFinite);
        }
        let mut clipped = g.clone();
        clip_slice_in_place(clipped.as_mut_slice(), config.clip_norm);
        sum.axpy(1.0, &clipped);
    }
    let mut rng = rng_for(rng_seed, "noise", &[]);
    gaussian_noise_into(
        sum.as_mut_slice(),
        config.noise_multiplier * config.clip_norm,
        &mut rng,
    );
    Ok(sum)
}

/// Default RDP order grid: the conventional sparse orders plus a dense 0.1
/// sweep of (2, 20] so the (ε, δ) conversion sits within ~1e-6 of a dense
/// scalar minimization.
pub fn default_orders() -> Vec<f64> {
    let mut orders = vec![1.25, 1.5, 1.75];
    orders.extend((20..=200).map(|k| k as f64 / 10.0));
    orders.extend((21..=64).map(|k| k as f64));
    orders.push(128.0);
    orders.push(256.0);
    orders
}

/// ln A_α of the subsampled Gaussian mechanism at integer order α ≥ 1,
/// via the binomial expansion
/// A_α = Σ_k C(α,k) (1−q)^(α−k) q^k exp((k²−k)/(2σ²)), evaluated in log
/// space.
fn log_moment_int(q: f64, sigma: f64, alpha: u64) -> f64 {
    debug_assert!(alpha >= 1);
    let terms: Vec<f64> = (0..=alpha)
        .map(|k| {
            let kf = k as f64;
            ln_binomial(alpha, k)
                + (alpha - k) as f64 * (-q).ln_1p()
                + kf * q.ln()
                + (kf * kf - kf) / (2.0 * sigma * sigma)
        })
        .collect();
    log_sum_exp(&terms)
}

/// RDP cost of one noisy step at order α > 1.
///
/// q = 1 is the exact Gaussian mechanism α/(2σ²); q < 1 uses the integer
/// binomial bound with linear interpolation of the log moment between
/// bracketing integer orders (ln A₁ = 0), which stays an upper bound by the
/// convexity of the log moment in α. σ = 0 signals an infinite budget.
pub fn rdp_of_step(q: f64, sigma: f64, alpha: f64) -> f64 {
    assert!(alpha > 1.0, "RDP order must exceed 1, got {alpha}");
    assert!(q > 0.0 && q <= 1.0, "sampling rate must lie in (0, 1]");
    if sigma == 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return alpha / (2.0 * sigma * sigma);
    }
    let floor = alpha.floor();
    if alpha == floor {
        return log_moment_int(q, sigma, alpha as u64) / (alpha - 1.0);
    }
    let lo = floor as u64;
    let hi = lo + 1;
    let log_lo = if lo == 1 {
        0.0
    } else {
        log_moment_int(q, sigma, lo)
    };
    let log_hi = log_moment_int(q, sigma, hi);
    let t = alpha - floor;
    ((1.0 - t) * log_lo + t * log_hi) / (alpha - 1.0)
}

/// Per-client accountant: accumulates RDP over a fixed order grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrivacyLedger {
    orders: Vec<f64>,
    /// RDP cost of one step at each order, fixed by (q, σ).
    step_costs: Vec<f64>,
    steps_taken: u64,
    config: PrivacyConfig,
}

/// Per-run accounting summary, serialized next to the run history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub steps: u64,
    pub sigma: f64,
    pub clip_norm: f64,
    pub q: f64,
    pub delta: f64,
    /// None encodes an infinite budget (DP off or σ = 0).
    pub epsilon: Option<f64>,
    pub best_alpha: Option<f64>,
}

impl PrivacyLedger {
    pub fn new(config: PrivacyConfig) -> Self {
        Self::with_orders(config, default_orders())
    }

    pub fn with_orders(config: PrivacyConfig, orders: Vec<f64>) -> Self {
        let step_costs = orders
            .iter()
            .map(|&a| rdp_of_step(config.sampling_rate, config.noise_multiplier, a))
            .collect();
        PrivacyLedger {
            orders,
            step_costs,
            steps_taken: 0,
            config,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn config(&self) -> &PrivacyConfig {
        &self.config
    }

    /// Accumulated RDP at each grid order: steps · cost-per-step.
    pub fn rdp_totals(&self) -> Vec<f64> {
        self.step_costs
            .iter()
            .map(|c| self.steps_taken as f64 * c)
            .collect()
    }

    /// Record `steps` further noisy steps.
    pub fn compose(&mut self, steps: u64) {
        self.steps_taken += steps;
    }

    /// Convert the accumulated RDP to (ε, best α) at failure probability δ.
    pub fn to_epsilon(&self, delta: f64) -> Result<(f64, f64), PrivacyError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(PrivacyError::Config("delta must lie in (0, 1)".into()));
        }
        if self.steps_taken == 0 {
            return Err(PrivacyError::NoSteps);
        }
        let ln_inv_delta = (1.0 / delta).ln();
        let mut best: Option<(f64, f64)> = None;
        for (&alpha, &cost) in self.orders.iter().zip(self.step_costs.iter()) {
            let eps = self.steps_taken as f64 * cost + ln_inv_delta / (alpha - 1.0);
            if eps.is_finite() && best.is_none_or(|(b, _)| eps < b) {
                best = Some((eps, alpha));
            }
        }
        best.ok_or(PrivacyError::InfiniteBudget)
    }

    pub fn report(&self) -> LedgerReport {
        let eps = if self.steps_taken == 0 {
            None
        } else {
            self.to_epsilon(self.config.delta).ok()
        };
        LedgerReport {
            steps: self.steps_taken,
            sigma: self.config.noise_multiplier,
            clip_norm: self.config.clip_norm,
            q: self.config.sampling_rate,
            delta: self.config.delta,
            epsilon: eps.map(|(e, _)| e),
            best_alpha: eps.map(|(_, a)| a),
        }
    }
}
