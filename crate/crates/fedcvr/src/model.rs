//! Fixed-architecture MLP (6-64-32-1, ReLU / sigmoid) for binary risk
//! prediction, with exact per-sample gradients via manual backpropagation.
//!
//! Parameters live in a flat [`ParamVector`] with a fixed canonical layout:
//! layer-1 weights row-major, layer-1 biases, layer-2 weights, layer-2
//! biases, output weights, output bias. The flat layout is the currency
//! between clients, server and strategies; per-sample gradients use the same
//! layout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

/// Number of input features (age, systolic BP, diastolic BP, cholesterol,
/// smoker, diabetic — after standardization).
pub const INPUT_DIM: usize = 6;

/// Logits are clamped to this magnitude before the sigmoid so the output
/// probability never saturates to an exact 0 or 1 in f64.
pub const LOGIT_CLAMP: f64 = 30.0;

/// Probabilities are clamped into [PROB_EPS, 1 − PROB_EPS] before the log in
/// the BCE loss.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("non-finite input feature")]
    NonFiniteInput,
    #[error("parameter vector length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Flat vector of model parameters (or of a gradient in the same layout).
///
/// The vector length is arbitrary so strategy math can be unit-tested on
/// low-dimensional vectors; [`Mlp`] validates the length against its own
/// layout at the API boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// self += a * x
    pub fn axpy(&mut self, a: f64, x: &ParamVector) {
        assert_eq!(self.len(), x.len(), "axpy length mismatch");
        for (s, v) in self.0.iter_mut().zip(x.0.iter()) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.0 {
            *v *= a;
        }
    }

    /// self − other, element-wise.
    pub fn sub(&self, other: &ParamVector) -> ParamVector {
        assert_eq!(self.len(), other.len(), "sub length mismatch");
        ParamVector(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// Binary format: u64 little-endian element count, then that many f64
    /// little-endian values. Used by checkpoints.
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(&(self.0.len() as u64).to_le_bytes())?;
        for v in &self.0 {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> std::io::Result<ParamVector> {
        let mut len_buf = [0u8; 8];
        r.read_exact(&mut len_buf)?;
        let len = u64::from_le_bytes(len_buf) as usize;
        let mut values = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            r.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        Ok(ParamVector(values))
    }

    /// FNV-1a over the little-endian byte image; stable fingerprint for run
    /// reports.
    pub fn digest_hex(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        mix(&(self.0.len() as u64).to_le_bytes());
        for v in &self.0 {
            mix(&v.to_le_bytes());
        }
        format!("{h:016x}")
    }
}

/// One standardized record: six features plus a binary label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: [f64; INPUT_DIM],
    pub label: u8,
}

/// Per-layer view of a [`ParamVector`] in the canonical layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: f64,
}

/// Reusable activation buffers for the per-sample hot path.
#[derive(Debug, Clone)]
pub struct Scratch {
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

/// Network shape. Hidden sizes are configurable only so tests can scale the
/// topology down; the production shape is 6-64-32-1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub hidden1: usize,
    pub hidden2: usize,
}

impl Default for Mlp {
    fn default() -> Self {
        Mlp {
            hidden1: 64,
            hidden2: 32,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Binary cross-entropy, with the prediction clamped to
/// [PROB_EPS, 1 − PROB_EPS] before the logs.
pub fn bce_loss(prediction: f64, label: u8) -> f64 {
    let p = prediction.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

impl Mlp {
    pub fn param_len(&self) -> usize {
        INPUT_DIM * self.hidden1
            + self.hidden1
            + self.hidden1 * self.hidden2
            + self.hidden2
            + self.hidden2
            + 1
    }

    /// Offsets of (w1, b1, w2, b2, w3, b3) in the flat layout.
    fn offsets(&self) -> (usize, usize, usize, usize, usize, usize) {
        let w1 = 0;
        let b1 = w1 + INPUT_DIM * self.hidden1;
        let w2 = b1 + self.hidden1;
        let b2 = w2 + self.hidden1 * self.hidden2;
        let w3 = b2 + self.hidden2;
        let b3 = w3 + self.hidden2;
        (w1, b1, w2, b2, w3, b3)
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            z1: vec![0.0; self.hidden1],
            a1: vec![0.0; self.hidden1],
            z2: vec![0.0; self.hidden2],
            a2: vec![0.0; self.hidden2],
            d1: vec![0.0; self.hidden1],
            d2: vec![0.0; self.hidden2],
        }
    }

    fn check_len(&self, params: &ParamVector) -> Result<(), ModelError> {
        if params.len() != self.param_len() {
            return Err(ModelError::LengthMismatch {
                expected: self.param_len(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Seed-deterministic initialization: weights uniform in
    /// ±sqrt(1 / fan_in) per layer, biases exactly zero.
    pub fn init_params(&self, seed: u64) -> ParamVector {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut values = vec![0.0; self.param_len()];
        let (w1, _, w2, _, w3, _) = self.offsets();
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, values: &mut [f64]| {
            let bound = (1.0 / fan_in as f64).sqrt();
            for v in &mut values[range] {
                *v = (rng.random::<f64>() * 2.0 - 1.0) * bound;
            }
        };
        fill(w1..w1 + INPUT_DIM * self.hidden1, INPUT_DIM, &mut values);
        fill(w2..w2 + self.hidden1 * self.hidden2, self.hidden1, &mut values);
        fill(w3..w3 + self.hidden2, self.hidden2, &mut values);
        ParamVector(values)
    }

    /// P(y=1|x), strictly inside (0, 1). The logit is clamped to
    /// ±[`LOGIT_CLAMP`] before the sigmoid.
    pub fn forward(&self, params: &ParamVector, features: &[f64]) -> Result<f64, ModelError> {
        self.check_len(params)?;
        if features.len() != INPUT_DIM || features.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteInput);
        }
        let mut scratch = self.scratch();
        let mut x = [0.0; INPUT_DIM];
        x.copy_from_slice(features);
        Ok(self.forward_with(params, &x, &mut scratch))
    }

    /// Hot-path forward pass; callers own the scratch buffers.
    pub fn forward_with(
        &self,
        params: &ParamVector,
        features: &[f64; INPUT_DIM],
        s: &mut Scratch,
    ) -> f64 {
        let p = params.as_slice();
        let (w1, b1, w2, b2, w3, b3) = self.offsets();
        for j in 0..self.hidden1 {
            let row = &p[w1 + j * INPUT_DIM..w1 + (j + 1) * INPUT_DIM];
            let mut z = p[b1 + j];
            for i in 0..INPUT_DIM {
                z += row[i] * features[i];
            }
            s.z1[j] = z;
            s.a1[j] = relu(z);
        }
        for k in 0..self.hidden2 {
            let row = &p[w2 + k * self.hidden1..w2 + (k + 1) * self.hidden1];
            let mut z = p[b2 + k];
            for (w, a) in row.iter().zip(s.a1.iter()) {
                z += w * a;
            }
            s.z2[k] = z;
            s.a2[k] = relu(z);
        }
        let mut z3 = p[b3];
        for k in 0..self.hidden2 {
            z3 += p[w3 + k] * s.a2[k];
        }
        sigmoid(z3.clamp(-LOGIT_CLAMP, LOGIT_CLAMP))
    }

    /// Exact gradient of `bce_loss(forward(params, x), y)` with respect to
    /// every parameter, in the canonical layout.
    pub fn per_sample_gradient(&self, params: &ParamVector, sample: &Sample) -> ParamVector {
        let mut grad = ParamVector::zeros(self.param_len());
        let mut scratch = self.scratch();
        self.gradient_into(params, sample, &mut scratch, grad.as_mut_slice());
        grad
    }

    /// Hot-path backprop. Overwrites `grad` (same layout as the params) and
    /// returns the predicted probability. Uses the algebraic simplification
    /// dL/dz = p − y, which treats the logit clamp as identity; beyond the
    /// clamp the true derivative is below 1e-13 and indistinguishable from it
    /// at the tolerances used everywhere in this crate.
    pub fn gradient_into(
        &self,
        params: &ParamVector,
        sample: &Sample,
        s: &mut Scratch,
        grad: &mut [f64],
    ) -> f64 {
        debug_assert_eq!(params.len(), self.param_len());
        debug_assert_eq!(grad.len(), self.param_len());
        let p = params.as_slice();
        let (w1, b1, w2, b2, w3, b3) = self.offsets();
        let prob = self.forward_with(params, &sample.features, s);

        let d3 = prob - f64::from(sample.label);
        grad[b3] = d3;
        for k in 0..self.hidden2 {
            grad[w3 + k] = d3 * s.a2[k];
            s.d2[k] = if s.z2[k] > 0.0 { d3 * p[w3 + k] } else { 0.0 };
        }
        for j in 0..self.hidden1 {
            s.d1[j] = 0.0;
        }
        for k in 0..self.hidden2 {
            let dk = s.d2[k];
            grad[b2 + k] = dk;
            let row = w2 + k * self.hidden1;
            if dk == 0.0 {
                for j in 0..self.hidden1 {
                    grad[row + j] = 0.0;
                }
                continue;
            }
            for j in 0..self.hidden1 {
                grad[row + j] = dk * s.a1[j];
                s.d1[j] += dk * p[row + j];
            }
        }
        for j in 0..self.hidden1 {
            let dj = if s.z1[j] > 0.0 { s.d1[j] } else { 0.0 };
            grad[b1 + j] = dj;
            let row = w1 + j * INPUT_DIM;
            for i in 0..INPUT_DIM {
                grad[row + i] = dj * sample.features[i];
            }
        }
        prob
    }

    /// Mean BCE loss over a sample set.
    pub fn mean_loss(&self, params: &ParamVector, samples: &[Sample]) -> f64 {
        assert!(!samples.is_empty());
        let mut scratch = self.scratch();
        let mut total = 0.0;
        for sample in samples {
            let p = self.forward_with(params, &sample.features, &mut scratch);
            total += bce_loss(p, sample.label);
        }
        total / samples.len() as f64
    }

    /// Gradient of the batch-mean loss: accumulates per-sample gradients into
    /// one buffer and divides once at the end.
    pub fn mean_gradient(&self, params: &ParamVector, samples: &[Sample]) -> ParamVector {
        assert!(!samples.is_empty());
        let mut scratch = self.scratch();
        let mut acc = vec![0.0; self.param_len()];
        let mut grad = vec![0.0; self.param_len()];
        for sample in samples {
            self.gradient_into(params, sample, &mut scratch, &mut grad);
            for (a, g) in acc.iter_mut().zip(grad.iter()) {
                *a += g;
            }
        }
        let inv = 1.0 / samples.len() as f64;
        for a in &mut acc {
            *a *= inv;
        }
        ParamVector(acc)
    }

    /// Probability scores over a sample set, paired with the true labels.
    pub fn score_samples(&self, params: &ParamVector, samples: &[Sample]) -> Vec<(f64, u8)> {
        let mut scratch = self.scratch();
        samples
            .iter()
            .map(|s| (self.forward_with(params, &s.features, &mut scratch), s.label))
            .collect()
    }

    /// Split a flat vector into per-layer pieces.
    pub fn to_layers(&self, params: &ParamVector) -> Result<LayerParams, ModelError> {
        self.check_len(params)?;
        let p = params.as_slice();
        let (w1, b1, w2, b2, w3, b3) = self.offsets();
        Ok(LayerParams {
            w1: p[w1..b1].to_vec(),
            b1: p[b1..w2].to_vec(),
            w2: p[w2..b2].to_vec(),
            b2: p[b2..w3].to_vec(),
            w3: p[w3..b3].to_vec(),
            b3: p[b3],
        })
    }

    /// Reassemble the flat vector from per-layer pieces.
    pub fn from_layers(&self, layers: &LayerParams) -> ParamVector {
        let mut values = Vec::with_capacity(self.param_len());
        values.extend_from_slice(&layers.w1);
        values.extend_from_slice(&layers.b1);
        values.extend_from_slice(&layers.w2);
        values.extend_from_slice(&layers.b2);
        values.extend_from_slice(&layers.w3);
        values.push(layers.b3);
        assert_eq!(values.len(), self.param_len());
        ParamVector(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use rand::Rng;

    fn random_sample(rng: &mut impl Rng) -> Sample {
        let mut features = [0.0; INPUT_DIM];
        for f in &mut features {
            *f = rng.random::<f64>() * 4.0 - 2.0;
        }
        Sample {
            features,
            label: u8::from(rng.random::<f64>() < 0.5),
        }
    }

    #[test]
    fn param_len_is_2561() {
        // 6*64 + 64 + 64*32 + 32 + 32 + 1
        assert_eq!(Mlp::default().param_len(), 2561);
    }

    #[test]
    fn init_is_seed_deterministic_and_seed_sensitive() {
        let mlp = Mlp::default();
        assert_eq!(mlp.init_params(42), mlp.init_params(42));
        assert_ne!(mlp.init_params(42), mlp.init_params(43));
    }

    #[test]
    fn init_biases_are_zero_and_weights_bounded() {
        let mlp = Mlp::default();
        let params = mlp.init_params(42);
        let layers = mlp.to_layers(&params).unwrap();
        assert!(layers.b1.iter().all(|&b| b == 0.0));
        assert!(layers.b2.iter().all(|&b| b == 0.0));
        assert_eq!(layers.b3, 0.0);
        let bound1 = (1.0 / 6.0f64).sqrt();
        assert!(layers.w1.iter().all(|w| w.abs() <= bound1));
        assert!(layers.w2.iter().all(|w| w.abs() <= 0.125));
    }

    #[test]
    fn zero_network_outputs_half() {
        let mlp = Mlp::default();
        let params = ParamVector::zeros(mlp.param_len());
        let p = mlp.forward(&params, &[1.0, -2.0, 0.5, 3.0, 1.0, 0.0]).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn saturated_output_bias_hits_clamp() {
        let mlp = Mlp::default();
        let mut params = ParamVector::zeros(mlp.param_len());
        let last = mlp.param_len() - 1;
        params.as_mut_slice()[last] = 30.0;
        let p = mlp.forward(&params, &[0.0; 6]).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!(p < 1.0);
        // And beyond the clamp the logit no longer grows.
        params.as_mut_slice()[last] = 1e6;
        let p2 = mlp.forward(&params, &[0.0; 6]).unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn forward_rejects_non_finite_input() {
        let mlp = Mlp::default();
        let params = mlp.init_params(1);
        assert!(mlp
            .forward(&params, &[f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0])
            .is_err());
    }

    #[test]
    fn forward_is_pure() {
        let mlp = Mlp::default();
        let params = mlp.init_params(5);
        let x = [0.3, -1.2, 0.8, 2.0, 1.0, 0.0];
        let a = mlp.forward(&params, &x).unwrap();
        let b = mlp.forward(&params, &x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    /// Independent forward-pass oracle: explicit matrix construction and a
    /// different accumulation order from the implementation.
    fn forward_oracle(mlp: &Mlp, params: &ParamVector, x: &[f64; 6]) -> f64 {
        let layers = mlp.to_layers(params).unwrap();
        let matvec = |w: &[f64], b: &[f64], input: &[f64], out_dim: usize| -> Vec<f64> {
            let in_dim = input.len();
            let mut out = b.to_vec();
            // column-major accumulation, unlike the row-major implementation
            for i in 0..in_dim {
                for (j, o) in out.iter_mut().enumerate().take(out_dim) {
                    *o += w[j * in_dim + i] * input[i];
                }
            }
            out
        };
        let a1: Vec<f64> = matvec(&layers.w1, &layers.b1, x, mlp.hidden1)
            .into_iter()
            .map(|z| z.max(0.0))
            .collect();
        let a2: Vec<f64> = matvec(&layers.w2, &layers.b2, &a1, mlp.hidden2)
            .into_iter()
            .map(|z| z.max(0.0))
            .collect();
        let mut z3 = layers.b3;
        for (w, a) in layers.w3.iter().zip(a2.iter()) {
            z3 += w * a;
        }
        1.0 / (1.0 + (-z3.clamp(-30.0, 30.0)).exp())
    }

    #[test]
    fn forward_matches_matrix_multiply_oracle() {
        let mlp = Mlp::default();
        let mut rng = rng_for(90, "forward-oracle", &[]);
        for i in 0..20 {
            let params = mlp.init_params(1000 + i);
            let sample = random_sample(&mut rng);
            let got = mlp.forward(&params, &sample.features).unwrap();
            let want = forward_oracle(&mlp, &params, &sample.features);
            assert!((got - want).abs() <= 1e-12, "got {got}, want {want}");
        }
    }

    #[test]
    fn bce_analytic_values() {
        assert!((bce_loss(0.5, 1) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((bce_loss(0.5, 0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((bce_loss(0.9, 1) - (-0.9f64.ln())).abs() < 1e-12);
        // clamping keeps the loss finite at the endpoints
        assert!(bce_loss(0.0, 1).is_finite());
        assert!(bce_loss(1.0, 0).is_finite());
        assert!(bce_loss(0.3, 1) >= 0.0);
    }

    #[test]
    fn saturated_correct_prediction_has_vanishing_gradient() {
        let mlp = Mlp::default();
        let mut params = ParamVector::zeros(mlp.param_len());
        let last = mlp.param_len() - 1;
        params.as_mut_slice()[last] = 30.0;
        let sample = Sample {
            features: [0.0; 6],
            label: 1,
        };
        let grad = mlp.per_sample_gradient(&params, &sample);
        assert!(grad.l2_norm() < 1e-10, "norm = {}", grad.l2_norm());
    }

    /// Central finite differences of the actual loss pipeline.
    fn fd_gradient(mlp: &Mlp, params: &ParamVector, sample: &Sample, h: f64) -> Vec<f64> {
        let mut work = params.clone();
        let mut out = vec![0.0; params.len()];
        for (i, slot) in out.iter_mut().enumerate() {
            let orig = work.as_slice()[i];
            work.as_mut_slice()[i] = orig + h;
            let lp = bce_loss(mlp.forward(&work, &sample.features).unwrap(), sample.label);
            work.as_mut_slice()[i] = orig - h;
            let lm = bce_loss(mlp.forward(&work, &sample.features).unwrap(), sample.label);
            work.as_mut_slice()[i] = orig;
            *slot = (lp - lm) / (2.0 * h);
        }
        out
    }

    #[test]
    fn gradient_matches_finite_differences_spot_check() {
        // Small net so the unit test stays fast; the full-size 100-pair sweep
        // lives in the acceptance suite.
        let mlp = Mlp {
            hidden1: 8,
            hidden2: 4,
        };
        let mut rng = rng_for(31, "fd-unit", &[]);
        for trial in 0..10 {
            let params = mlp.init_params(500 + trial);
            let sample = random_sample(&mut rng);
            let grad = mlp.per_sample_gradient(&params, &sample);
            let fd = fd_gradient(&mlp, &params, &sample, 1e-5);
            for (i, (&g, &f)) in grad.as_slice().iter().zip(fd.iter()).enumerate() {
                // relative error 1e-4, absolute floor 1e-8 for near-zero coords
                assert!(
                    (g - f).abs() <= (1e-4 * f.abs()).max(1e-8),
                    "trial {trial} coord {i}: analytic {g}, fd {f}"
                );
            }
        }
    }

    #[test]
    fn mean_gradient_is_mean_of_per_sample_gradients() {
        let mlp = Mlp::default();
        let params = mlp.init_params(7);
        let mut rng = rng_for(8, "mean-grad", &[]);
        let samples: Vec<Sample> = (0..9).map(|_| random_sample(&mut rng)).collect();
        let batch = mlp.mean_gradient(&params, &samples);
        let mut avg = ParamVector::zeros(mlp.param_len());
        for s in &samples {
            avg.axpy(1.0 / samples.len() as f64, &mlp.per_sample_gradient(&params, s));
        }
        for (a, b) in batch.as_slice().iter().zip(avg.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn layer_roundtrip_is_bitwise() {
        let mlp = Mlp::default();
        let params = mlp.init_params(11);
        let rebuilt = mlp.from_layers(&mlp.to_layers(&params).unwrap());
        assert_eq!(params, rebuilt);
    }

    #[test]
    fn binary_serialization_roundtrip() {
        let mlp = Mlp::default();
        let params = mlp.init_params(3);
        let mut buf = Vec::new();
        params.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 8 * params.len());
        let back = ParamVector::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(params, back);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mlp = Mlp::default();
        let short = ParamVector::zeros(10);
        assert!(matches!(
            mlp.forward(&short, &[0.0; 6]),
            Err(ModelError::LengthMismatch { .. })
        ));
    }
}
