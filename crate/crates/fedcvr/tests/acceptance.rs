//! Acceptance suite: one test per numbered criterion, each printing a
//! PASS/FAIL line (visible with `--nocapture`). Tolerances are pinned in the
//! assertions.
//!
//! Criterion 9's published-shard-size clause is a documented expected
//! failure: the specialty cascade assigns age > 65 first, which under a
//! uniform age distribution necessarily captures ~35% of the cohort against
//! a 4.2% target, and the young/community split is bounded by the age-band
//! mass ratio regardless of any tuning of the independent feature marginals.
//! The check runs faithfully and reports the per-shard ratios.

use fedcvr::cli::summary_digest;
use fedcvr::data::{
    assign_risk_labels, fit_scaler, generate_cohort, partition_iid, partition_noniid,
    partition_iid_subset, partition_noniid_subset, prevalence, samples_for, stratified_holdout,
    ClientDataset,
};
use fedcvr::engine::{client_update, run_simulation, PartitionMode, SimulationSetup, TrainingConfig};
use fedcvr::metrics::{auc, confusion, ConfusionCounts};
use fedcvr::model::{bce_loss, Mlp, ParamVector, Sample};
use fedcvr::privacy::{clip_gradient, noisy_batch_gradient, PrivacyConfig, PrivacyLedger};
use fedcvr::seed::{client_round_seed, hash64, rng_for};
use fedcvr::stats::welch_t_test;
use fedcvr::strategies::{fedcvr_step, MomentState, StrategyConfig, StrategyKind};
use rand::Rng;
use std::time::Instant;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn random_sample(rng: &mut impl Rng) -> Sample {
    let mut features = [0.0; 6];
    for f in &mut features {
        *f = rng.random::<f64>() * 4.0 - 2.0;
    }
    Sample {
        features,
        label: u8::from(rng.random::<f64>() < 0.5),
    }
}

/// ReLU on/off pattern of both hidden layers, computed through the layer
/// view rather than the forward implementation.
fn relu_pattern(mlp: &Mlp, params: &ParamVector, x: &[f64; 6]) -> Vec<bool> {
    let layers = mlp.to_layers(params).unwrap();
    let mut pattern = Vec::with_capacity(mlp.hidden1 + mlp.hidden2);
    let mut a1 = vec![0.0; mlp.hidden1];
    for (j, a) in a1.iter_mut().enumerate() {
        let mut z = layers.b1[j];
        for (i, &xi) in x.iter().enumerate() {
            z += layers.w1[j * 6 + i] * xi;
        }
        pattern.push(z > 0.0);
        *a = z.max(0.0);
    }
    for k in 0..mlp.hidden2 {
        let row = &layers.w2[k * mlp.hidden1..(k + 1) * mlp.hidden1];
        let mut z = layers.b2[k];
        for (w, a) in row.iter().zip(a1.iter()) {
            z += w * a;
        }
        pattern.push(z > 0.0);
    }
    pattern
}

/// Criterion 1: analytic per-sample gradients match central finite
/// differences (h = 1e-5) on 100 random (params, sample) pairs of the
/// full-size network, relative error ≤ 1e-4 with a 1e-8 absolute floor,
/// in under 10 seconds.
///
/// The FD oracle is only meaningful where the loss is differentiable: a
/// coordinate whose ±h stencil straddles a ReLU kink (the activation pattern
/// differs between the two evaluation points) is excluded and counted; the
/// excluded fraction must stay below 0.01% of all coordinates.
#[test]
fn criterion_01_gradient_correctness() {
    let started = Instant::now();
    let mlp = Mlp::default();
    let mut rng = rng_for(1001, "acceptance-fd", &[]);
    let h = 1e-5;
    let mut worst_rel = 0.0f64;
    let mut kink_skips = 0usize;
    let total = 100 * mlp.param_len();
    for pair in 0..100 {
        let params = mlp.init_params(20_000 + pair);
        let sample = random_sample(&mut rng);
        let grad = mlp.per_sample_gradient(&params, &sample);
        let mut work = params.clone();
        for i in 0..params.len() {
            let orig = work.as_slice()[i];
            work.as_mut_slice()[i] = orig + h;
            let lp = bce_loss(mlp.forward(&work, &sample.features).unwrap(), sample.label);
            work.as_mut_slice()[i] = orig - h;
            let lm = bce_loss(mlp.forward(&work, &sample.features).unwrap(), sample.label);
            let fd = (lp - lm) / (2.0 * h);
            let g = grad.as_slice()[i];
            let err = (g - fd).abs();
            if err > (1e-4 * fd.abs()).max(1e-8) {
                // check whether the stencil crossed a kink; only then is the
                // central difference an invalid derivative estimate
                work.as_mut_slice()[i] = orig + h;
                let pat_plus = relu_pattern(&mlp, &work, &sample.features);
                work.as_mut_slice()[i] = orig - h;
                let pat_minus = relu_pattern(&mlp, &work, &sample.features);
                work.as_mut_slice()[i] = orig;
                assert_ne!(
                    pat_plus, pat_minus,
                    "pair {pair} coord {i}: analytic {g} vs fd {fd} away from any kink"
                );
                kink_skips += 1;
                continue;
            }
            work.as_mut_slice()[i] = orig;
            if fd.abs() > 1e-4 {
                worst_rel = worst_rel.max(err / fd.abs());
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let skip_frac = kink_skips as f64 / total as f64;
    let ok = elapsed < 10.0 && skip_frac < 1e-4;
    report(
        "1 (gradient correctness)",
        ok,
        &format!(
            "100 pairs x 2561 coords, worst relative error {worst_rel:.2e}, \
             {kink_skips} kink-straddling coords excluded ({:.4}%), {elapsed:.1}s",
            100.0 * skip_frac
        ),
    );
}

/// Criterion 2: (a) clipping bounds every gradient norm by C + 1e-12 and is
/// bitwise idempotent; (b) a σ=0 DP-on client run is bitwise equal to a
/// manually coded clipping-only run on the same seeds; (c) injected noise
/// matches σ·C within ±3% over ≥ 10^4 draws.
#[test]
fn criterion_02_dp_mechanism() {
    // (a) on real model gradients, with a clip bound tight enough to bind
    let mlp = Mlp::default();
    let mut rng = rng_for(2002, "acceptance-clip", &[]);
    for trial in 0..200 {
        let params = mlp.init_params(30_000 + trial);
        let sample = random_sample(&mut rng);
        let grad = mlp.per_sample_gradient(&params, &sample);
        for c in [1.0, 0.01] {
            let clipped = clip_gradient(&grad, c).unwrap();
            assert!(clipped.l2_norm() <= c + 1e-12, "norm over bound at C={c}");
            let twice = clip_gradient(&clipped, c).unwrap();
            assert_eq!(clipped, twice, "clip not idempotent at C={c}");
        }
    }

    // (b) engine σ=0 DP path vs an independent clipped-SGD loop
    let cohort = assign_risk_labels(generate_cohort(600, 42).unwrap());
    let scaler = fit_scaler(&cohort).unwrap();
    let shards = partition_iid(&cohort, 5, 42, &scaler).unwrap();
    let tcfg = TrainingConfig {
        num_clients: 5,
        local_epochs: 2,
        batch_size: 32,
        ..TrainingConfig::default()
    };
    let pcfg = PrivacyConfig {
        enabled: true,
        noise_multiplier: 0.0,
        clip_norm: 1.0,
        ..PrivacyConfig::default()
    };
    let w0 = mlp.init_params(hash64(42, "model-init"));
    for shard in &shards {
        let round_seed = client_round_seed(42, 1, shard.client_id as u64);
        let outcome = client_update(&mlp, &w0, shard, &tcfg, &pcfg, 0.0, round_seed).unwrap();
        let manual = clipped_sgd_reference(&mlp, &w0, shard, &tcfg, pcfg.clip_norm, round_seed);
        assert_eq!(
            outcome.update.final_weights, manual,
            "client {} drifted from the clipping-only reference",
            shard.client_id
        );
    }

    // (c) noise concentration: a zero gradient exposes the raw draws
    let zero = vec![ParamVector::zeros(12_000)];
    let noise_cfg = PrivacyConfig {
        enabled: true,
        clip_norm: 0.5,
        noise_multiplier: 1.5,
        ..PrivacyConfig::default()
    };
    let noisy = noisy_batch_gradient(&zero, &noise_cfg, 77).unwrap();
    let n = noisy.len() as f64;
    let mean = noisy.as_slice().iter().sum::<f64>() / n;
    let std = (noisy
        .as_slice()
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (n - 1.0))
        .sqrt();
    let target = 0.5 * 1.5;
    let ok = (std - target).abs() <= 0.03 * target;
    report(
        "2 (DP mechanism)",
        ok,
        &format!("clip bound + bitwise σ=0 equivalence OK; noise std {std:.4} vs σC {target:.4}"),
    );
}

fn clipped_sgd_reference(
    mlp: &Mlp,
    w0: &ParamVector,
    shard: &ClientDataset,
    tcfg: &TrainingConfig,
    clip: f64,
    round_seed: u64,
) -> ParamVector {
    let mut w = w0.clone();
    let mut scratch = mlp.scratch();
    let mut grad = vec![0.0; mlp.param_len()];
    for epoch in 0..tcfg.local_epochs {
        let mut order: Vec<usize> = (0..shard.samples.len()).collect();
        let mut rng = rng_for(round_seed, "shuffle", &[epoch]);
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for batch in order.chunks(tcfg.batch_size) {
            let mut sum = ParamVector::zeros(mlp.param_len());
            for &i in batch {
                mlp.gradient_into(&w, &shard.samples[i], &mut scratch, &mut grad);
                fedcvr::privacy::clip_slice_in_place(&mut grad, clip);
                for (s, g) in sum.as_mut_slice().iter_mut().zip(grad.iter()) {
                    *s += g;
                }
            }
            sum.scale(1.0 / batch.len() as f64);
            w.axpy(-tcfg.client_lr, &sum);
        }
    }
    w
}

/// Criterion 3: accountant matches the dense-grid conversion at the
/// single-step benchmark within 1e-3, is monotone in σ and in T, and reports
/// both readings of the published ε ≈ 13.4 configuration without asserting
/// either.
#[test]
fn criterion_03_accountant_correctness() {
    // dense-grid oracle for min over α of α/2 + ln(1e5)/(α−1)
    let ln_inv_delta = (1.0f64 / 1e-5).ln();
    let mut dense_min = f64::INFINITY;
    let mut alpha = 1.0001f64;
    while alpha < 300.0 {
        dense_min = dense_min.min(alpha / 2.0 + ln_inv_delta / (alpha - 1.0));
        alpha += 1e-4;
    }

    let eps_for = |sigma: f64, q: f64, steps: u64| -> f64 {
        let mut ledger = PrivacyLedger::new(PrivacyConfig {
            enabled: true,
            noise_multiplier: sigma,
            sampling_rate: q,
            ..PrivacyConfig::default()
        });
        ledger.compose(steps);
        ledger.to_epsilon(1e-5).unwrap().0
    };

    let eps_single = eps_for(1.0, 1.0, 1);
    assert!(
        (eps_single - dense_min).abs() < 1e-3,
        "single-step ε {eps_single} vs dense-grid {dense_min}"
    );

    // monotone non-increasing in σ, non-decreasing in T
    let by_sigma: Vec<f64> = [0.5, 1.0, 1.5].iter().map(|&s| eps_for(s, 1.0, 10)).collect();
    assert!(by_sigma[0] >= by_sigma[1] && by_sigma[1] >= by_sigma[2], "{by_sigma:?}");
    let by_steps: Vec<f64> = [1, 10, 100].iter().map(|&t| eps_for(1.0, 1.0, t)).collect();
    assert!(by_steps[0] <= by_steps[1] && by_steps[1] <= by_steps[2], "{by_steps:?}");

    // the published ε ≈ 13.4 configuration under both parameter readings;
    // reported, not asserted (the two readings are mutually inconsistent)
    let full_participation = eps_for(1.0, 1.0, 100);
    let q = 32.0 / 6000.0;
    let steps = 100 * 5 * (6000f64 / 32.0).ceil() as u64;
    let subsampled = eps_for(1.0, q, steps);
    println!(
        "  published ε≈13.4 readings: q=1, T=100 → ε = {full_participation:.2}; \
         q=32/6000, {steps} steps → ε = {subsampled:.2}"
    );
    report(
        "3 (accountant)",
        true,
        &format!("single-step ε {eps_single:.6} vs dense {dense_min:.6}; σ-monotone {by_sigma:?}; T-monotone {by_steps:?}"),
    );
}

/// Criterion 4: five-round scalar trajectories of the three adaptive
/// optimizers match independently coded recurrences to 1e-12, and the
/// first FedCVR step hits the hand-computed values to 1e-9.
#[test]
fn criterion_04_strategy_recurrences() {
    let cfg = StrategyConfig::default();
    let scalar = |v: f64| ParamVector::from_vec(vec![v]);

    // one-step example
    let mut state = MomentState::zeros(1);
    let mut w = scalar(0.0);
    fedcvr_step(&mut state, &mut w, &scalar(1.0), &cfg).unwrap();
    let m_hat = state.m.as_slice()[0] / (1.0 - cfg.beta1);
    assert!((m_hat - 1.0).abs() <= 1e-9, "m̂₁ = {m_hat}");
    assert!(
        (w.as_slice()[0] - (-0.099_900_099_900_099_9)).abs() <= 1e-9,
        "w₁ = {}",
        w.as_slice()[0]
    );

    // five-round trajectories vs naive recurrences
    let stream = [1.0, -1.0, 1.0, 0.25, -0.75];
    let (mut m, mut v, mut w_cvr) = (0.0f64, 0.0f64, 0.0f64);
    let (mut ym, mut yv, mut w_yogi) = (0.0f64, 0.0f64, 0.0f64);
    let (mut av, mut w_ada) = (0.0f64, 0.0f64);
    let mut cvr = (MomentState::zeros(1), scalar(0.0));
    let mut yogi = (MomentState::zeros(1), scalar(0.0));
    let mut ada = (fedcvr::strategies::AccumState::zeros(1), scalar(0.0));
    for (t, &g) in stream.iter().enumerate() {
        let t = (t + 1) as i32;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        w_cvr -= 0.1 * (m / (1.0 - 0.9f64.powi(t)))
            / ((v / (1.0 - 0.999f64.powi(t))).sqrt() + 1e-3);
        ym = 0.9 * ym + 0.1 * g;
        let g2 = g * g;
        let s = if yv > g2 { 1.0 } else if yv < g2 { -1.0 } else { 0.0 };
        yv -= 0.001 * g2 * s;
        w_yogi -= 0.1 * (ym / (1.0 - 0.9f64.powi(t)))
            / ((yv / (1.0 - 0.999f64.powi(t))).sqrt() + 1e-3);
        av += g * g;
        w_ada -= 0.1 * g / (av.sqrt() + 1e-3);

        let gv = scalar(g);
        fedcvr_step(&mut cvr.0, &mut cvr.1, &gv, &cfg).unwrap();
        fedcvr::strategies::fedyogi_step(&mut yogi.0, &mut yogi.1, &gv, &cfg).unwrap();
        fedcvr::strategies::fedadagrad_step(&mut ada.0, &mut ada.1, &gv, &cfg).unwrap();
        assert!((cvr.1.as_slice()[0] - w_cvr).abs() <= 1e-12, "fedcvr round {t}");
        assert!((yogi.1.as_slice()[0] - w_yogi).abs() <= 1e-12, "fedyogi round {t}");
        assert!((ada.1.as_slice()[0] - w_ada).abs() <= 1e-12, "fedadagrad round {t}");
    }
    report(
        "4 (strategy recurrences)",
        true,
        "fedcvr/fedyogi/fedadagrad match scalar oracles over 5 rounds; one-step values exact to 1e-9",
    );
}

/// Criterion 5: momentum as a low-pass filter — with β₁ = 0.9 and a
/// constant-plus-Gaussian stream, the post-burn-in variance of m̂ lies within
/// ±25% of (1−β₁)/(1+β₁) times the noise variance, in under 5 seconds.
#[test]
fn criterion_05_momentum_denoiser() {
    use rand_distr::{Distribution, Normal};
    let started = Instant::now();
    let cfg = StrategyConfig::default();
    let noise_std = 0.7;
    let normal = Normal::new(0.0, noise_std).unwrap();
    let mut rng = rng_for(5005, "acceptance-denoise", &[]);
    let mut state = MomentState::zeros(1);
    let mut w = ParamVector::from_vec(vec![0.0]);
    let mut m_hats = Vec::with_capacity(10_000);
    for t in 0..10_200u64 {
        let g = ParamVector::from_vec(vec![1.3 + normal.sample(&mut rng)]);
        fedcvr_step(&mut state, &mut w, &g, &cfg).unwrap();
        if t >= 200 {
            m_hats.push(state.m.as_slice()[0] / (1.0 - cfg.beta1.powi(state.t as i32)));
        }
    }
    let n = m_hats.len() as f64;
    let mean = m_hats.iter().sum::<f64>() / n;
    let var = m_hats.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n;
    let expected = noise_std * noise_std * (1.0 - cfg.beta1) / (1.0 + cfg.beta1);
    let elapsed = started.elapsed().as_secs_f64();
    let ok = (var - expected).abs() <= 0.25 * expected && elapsed < 5.0;
    report(
        "5 (momentum denoiser)",
        ok,
        &format!(
            "var(m̂) {var:.5} vs (1−β)/(1+β)·σ² {expected:.5} (ratio {:.3}), {elapsed:.1}s",
            var / expected
        ),
    );
}

/// Criterion 6: a 1-client, E=1, DP-off simulation with weight-averaging
/// aggregation reproduces a standalone centralized minibatch-SGD trainer
/// bit for bit over 50 rounds.
#[test]
fn criterion_06_centralized_equivalence() {
    let mlp = Mlp::default();
    let cohort = assign_risk_labels(generate_cohort(500, 42).unwrap());
    let scaler = fit_scaler(&cohort).unwrap();
    let (train, holdout) = stratified_holdout(&cohort, 0.2, 42);
    let parts = partition_iid_subset(&cohort, &train, 1, 42, &scaler).unwrap();
    let holdout = samples_for(&cohort, &holdout, &scaler);
    let tcfg = TrainingConfig {
        num_clients: 1,
        rounds: 50,
        local_epochs: 1,
        ..TrainingConfig::default()
    };
    let setup = SimulationSetup {
        tcfg,
        ..SimulationSetup::new(StrategyKind::FedAvg, &parts, &holdout)
    };
    let out = run_simulation(&setup).unwrap();

    // standalone centralized trainer, sharing only the seed-derivation rule
    let samples = &parts[0].samples;
    let mut w = mlp.init_params(hash64(42, "model-init"));
    let mut scratch = mlp.scratch();
    let mut grad = vec![0.0; mlp.param_len()];
    for round in 1..=50u64 {
        let rs = client_round_seed(42, round, 0);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut rng = rng_for(rs, "shuffle", &[0]);
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for batch in order.chunks(tcfg.batch_size) {
            let mut sum = ParamVector::zeros(mlp.param_len());
            for &i in batch {
                mlp.gradient_into(&w, &samples[i], &mut scratch, &mut grad);
                for (s, g) in sum.as_mut_slice().iter_mut().zip(grad.iter()) {
                    *s += g;
                }
            }
            sum.scale(1.0 / batch.len() as f64);
            w.axpy(-tcfg.client_lr, &sum);
        }
    }
    let ok = out.final_params == w;
    report(
        "6 (centralized equivalence)",
        ok,
        "federated 1-client run equals standalone minibatch SGD bitwise after 50 rounds",
    );
}

/// Criterion 7: identical (config, seed) produce byte-identical history
/// JSONL under --jobs 1 and --jobs 4, exercised through the CLI binary.
#[test]
fn criterion_07_end_to_end_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("desk.toml");
    std::fs::write(&config, "cohort_n = 1500\nrounds = 5\nlocal_epochs = 2\ndp_enabled = true\n")
        .unwrap();
    let data_dir = dir.path().join("data");
    let bin = env!("CARGO_BIN_EXE_fedcvr");
    let run = |args: &[&str]| {
        let status = std::process::Command::new(bin)
            .args(args)
            .status()
            .expect("binary runs");
        assert!(status.success(), "fedcvr {args:?} failed");
    };
    run(&[
        "gen-data",
        "--config",
        config.to_str().unwrap(),
        "--out",
        data_dir.to_str().unwrap(),
    ]);
    for jobs in ["1", "4"] {
        run(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--strategy",
            "fedcvr",
            "--dp",
            "on",
            "--sigma",
            "1.0",
            "--data",
            data_dir.to_str().unwrap(),
            "--out",
            dir.path().join(format!("run_j{jobs}")).to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
    }
    let h1 = std::fs::read(dir.path().join("run_j1/history.jsonl")).unwrap();
    let h4 = std::fs::read(dir.path().join("run_j4/history.jsonl")).unwrap();
    let c1 = std::fs::read(dir.path().join("run_j1/checkpoint.bin")).unwrap();
    let c4 = std::fs::read(dir.path().join("run_j4/checkpoint.bin")).unwrap();
    let ok = h1 == h4 && c1 == c4;
    report(
        "7 (end-to-end determinism)",
        ok,
        &format!("history.jsonl identical across --jobs 1/4 ({} bytes)", h1.len()),
    );
}

/// Criterion 8: desk-scale benchmark trends on a 3,000-sample non-IID cohort
/// (R = 30, N = 3 paired seeds, σ = 1.0): (a) FedCVR mean AUC ≥ FedAvg mean
/// AUC, (b) FedCVR mean F1 non-increasing across σ ∈ {0, 1.0, 1.5}, (c)
/// DP-on loss shows the two-phase pattern (late-round mean below early-round
/// mean). Total runtime must stay under 15 minutes.
#[test]
fn criterion_08_desk_benchmark_trends() {
    let started = Instant::now();
    let cohort = assign_risk_labels(generate_cohort(3_000, 42).unwrap());
    let scaler = fit_scaler(&cohort).unwrap();
    let (train, holdout_idx) = stratified_holdout(&cohort, 0.2, 42);
    let parts = partition_noniid_subset(&cohort, &train, &scaler).unwrap();
    let holdout = samples_for(&cohort, &holdout_idx, &scaler);
    let seeds = [1u64, 2, 3];

    let run = |kind: StrategyKind, seed: u64, sigma: f64| {
        let setup = SimulationSetup {
            tcfg: TrainingConfig {
                rounds: 30,
                seed,
                partition_mode: PartitionMode::NonIid,
                ..TrainingConfig::default()
            },
            pcfg: PrivacyConfig {
                enabled: sigma > 0.0,
                noise_multiplier: sigma,
                ..PrivacyConfig::default()
            },
            ..SimulationSetup::new(kind, &parts, &holdout)
        };
        run_simulation(&setup).unwrap()
    };

    let mean = |values: &[f64]| values.iter().sum::<f64>() / values.len() as f64;

    // (a) FedCVR vs FedAvg at σ = 1.0, final-round AUC over paired seeds
    let fedcvr_dp: Vec<_> = seeds.iter().map(|&s| run(StrategyKind::FedCvr, s, 1.0)).collect();
    let fedavg_dp: Vec<_> = seeds.iter().map(|&s| run(StrategyKind::FedAvg, s, 1.0)).collect();
    let auc_of = |outs: &[fedcvr::engine::SimulationOutput]| {
        outs.iter().map(|o| o.records.last().unwrap().auc).collect::<Vec<f64>>()
    };
    let cvr_auc = mean(&auc_of(&fedcvr_dp));
    let avg_auc = mean(&auc_of(&fedavg_dp));

    // (b) FedCVR final F1 across σ ∈ {0, 1.0, 1.5}
    let f1_at = |sigma: f64, pre: Option<&[fedcvr::engine::SimulationOutput]>| -> f64 {
        match pre {
            Some(outs) => mean(
                &outs
                    .iter()
                    .map(|o| o.records.last().unwrap().f1)
                    .collect::<Vec<f64>>(),
            ),
            None => mean(
                &seeds
                    .iter()
                    .map(|&s| run(StrategyKind::FedCvr, s, sigma).records.last().unwrap().f1)
                    .collect::<Vec<f64>>(),
            ),
        }
    };
    let f1_clean = f1_at(0.0, None);
    let f1_mid = f1_at(1.0, Some(&fedcvr_dp));
    let f1_high = f1_at(1.5, None);

    // (c) two-phase DP loss: rounds 21–30 below rounds 1–10 (σ = 1.0 arm)
    let phase_means: Vec<(f64, f64)> = fedcvr_dp
        .iter()
        .map(|o| {
            let losses: Vec<f64> = o.records.iter().map(|r| r.global_loss).collect();
            (mean(&losses[..10]), mean(&losses[20..30]))
        })
        .collect();
    let early = mean(&phase_means.iter().map(|p| p.0).collect::<Vec<f64>>());
    let late = mean(&phase_means.iter().map(|p| p.1).collect::<Vec<f64>>());

    let elapsed = started.elapsed().as_secs_f64();
    let ok_a = cvr_auc >= avg_auc;
    let ok_b = f1_clean >= f1_mid && f1_mid >= f1_high;
    let ok_c = late < early;
    let ok_time = elapsed < 900.0;
    report(
        "8 (desk benchmark trends)",
        ok_a && ok_b && ok_c && ok_time,
        &format!(
            "(a) AUC fedcvr {cvr_auc:.4} vs fedavg {avg_auc:.4}; \
             (b) F1 σ=0/1/1.5 = {f1_clean:.4}/{f1_mid:.4}/{f1_high:.4}; \
             (c) loss rounds 1-10 {early:.4} vs 21-30 {late:.4}; {elapsed:.0}s"
        ),
    );
}

/// Criterion 9: data pipeline. Prevalence and the disjoint/exhaustive checks
/// pass; the published-shard-size clause (±20% of the Table of specialty
/// counts) is asserted faithfully and is a DOCUMENTED EXPECTED FAILURE — the
/// specialty cascade and the independent uniform-age generator cannot
/// produce those counts (see the ledger analysis printed on failure).
#[test]
fn criterion_09_data_pipeline() {
    let cohort = assign_risk_labels(generate_cohort(30_000, 42).unwrap());
    let scaler = fit_scaler(&cohort).unwrap();

    let p = prevalence(&cohort);
    let prevalence_ok = (0.151..=0.191).contains(&p);
    println!("  9.1 prevalence {:.2}% in 17.1±2pt window: {}", p * 100.0, prevalence_ok);

    let iid = partition_iid(&cohort, 5, 42, &scaler).unwrap();
    let noniid = partition_noniid(&cohort, &scaler).unwrap();
    let mut disjoint_ok = true;
    for shards in [&iid, &noniid] {
        let mut seen: Vec<usize> = shards.iter().flat_map(|s| s.row_indices.clone()).collect();
        seen.sort_unstable();
        disjoint_ok &= seen == (0..cohort.rows.len()).collect::<Vec<_>>();
    }
    println!("  9.2 both partitioners disjoint & exhaustive: {disjoint_ok}");

    let targets = [
        ("young_general", 13_130usize),
        ("cardiology_referral", 4_730),
        ("diabetes_smoking", 9_250),
        ("community", 1_620),
        ("geriatric", 1_270),
    ];
    let mut shard_report = String::new();
    let mut sizes_ok = true;
    for (name, target) in targets {
        let size = noniid
            .iter()
            .find(|s| s.specialty.name() == name)
            .map_or(0, |s| s.n());
        let within = (size as f64 - target as f64).abs() <= 0.2 * target as f64;
        sizes_ok &= within;
        shard_report.push_str(&format!("{name} {size}/{target} ({}) ", if within { "ok" } else { "OUT" }));
    }
    println!("  9.3 shard sizes vs published targets ±20%: {sizes_ok} — {shard_report}");

    let ok = prevalence_ok && disjoint_ok && sizes_ok;
    report(
        "9 (data pipeline)",
        ok,
        &format!(
            "prevalence {:.2}% {}; disjoint/exhaustive {}; published-shard-size clause {} — \
             EXPECTED failure: a cascade that assigns age>65 first takes ~35% of a uniform(18,90) \
             cohort against a 4.2% target, and young:community mass is bounded by the age-band \
             ratio 32:15 for any independent feature marginals (targets need >5:1). \
             No generator parameters satisfy the published counts under the specified cascade.",
            p * 100.0,
            if prevalence_ok { "ok" } else { "OUT" },
            if disjoint_ok { "ok" } else { "BROKEN" },
            if sizes_ok { "ok" } else { &shard_report }
        ),
    );
}

/// Criterion 10: metric cross-checks — rank AUC vs an O(n²) oracle on 50
/// random tied sets, the confusion-rate formulas on 20 random tables, and
/// Welch p-values vs frozen external-package values at 5 canonical cases.
#[test]
fn criterion_10_metrics_cross_checks() {
    let mut rng = rng_for(1010, "acceptance-metrics", &[]);

    // AUC vs brute force
    let mut checked = 0;
    while checked < 50 {
        let n = 8 + (rng.random::<f64>() * 80.0) as usize;
        let scored: Vec<(f64, u8)> = (0..n)
            .map(|_| {
                let s = (rng.random::<f64>() * 10.0).round() / 10.0; // forces ties
                (s, u8::from(rng.random::<f64>() < 0.45))
            })
            .collect();
        if !scored.iter().any(|(_, y)| *y == 1) || !scored.iter().any(|(_, y)| *y == 0) {
            continue;
        }
        let fast = auc(&scored).unwrap();
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for &(sp, _) in scored.iter().filter(|(_, y)| *y == 1) {
            for &(sn, _) in scored.iter().filter(|(_, y)| *y == 0) {
                pairs += 1.0;
                wins += if sp > sn {
                    1.0
                } else if sp == sn {
                    0.5
                } else {
                    0.0
                };
            }
        }
        assert!((fast - wins / pairs).abs() <= 1e-12, "AUC mismatch");
        checked += 1;
    }

    // confusion-rate formulas on random tables
    for _ in 0..20 {
        let c = ConfusionCounts {
            true_pos: (rng.random::<f64>() * 500.0) as u64,
            true_neg: (rng.random::<f64>() * 500.0) as u64,
            false_pos: 1 + (rng.random::<f64>() * 500.0) as u64,
            false_neg: 1 + (rng.random::<f64>() * 500.0) as u64,
        };
        let (tp, tn, fp, fneg) = (
            c.true_pos as f64,
            c.true_neg as f64,
            c.false_pos as f64,
            c.false_neg as f64,
        );
        assert!((c.accuracy() - (tp + tn) / (tp + tn + fp + fneg)).abs() < 1e-12);
        assert!((c.error_rate() - (1.0 - c.accuracy())).abs() == 0.0);
        assert!((c.precision() - tp / (tp + fp)).abs() < 1e-12);
        assert!((c.recall() - tp / (tp + fneg)).abs() < 1e-12);
        let (p, r) = (c.precision(), c.recall());
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        assert!((c.f1() - f1).abs() < 1e-12);
        assert!(c.f1() <= 2.0 * p.min(r) + 1e-12);
    }
    // threshold convention reused by the engine
    let counts = confusion(&[(0.5, 1), (0.49, 1)], 0.5).unwrap();
    assert_eq!(counts.true_pos, 1);
    assert_eq!(counts.false_neg, 1);

    // Welch vs frozen external oracle (scipy.stats.ttest_ind, equal_var=False)
    let cases: [(&[f64], &[f64], f64); 5] = [
        (
            &[0.85, 0.86, 0.84, 0.85, 0.87],
            &[0.92, 0.91, 0.93, 0.92, 0.92],
            1.593_709_980_394_28e-5,
        ),
        (&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.5, 2.5, 3.5, 4.5, 5.5], 0.630_536_075_556_976),
        (&[10.0, 10.1, 9.9, 10.2, 9.8], &[10.0, 10.1, 9.9, 10.2, 9.8], 1.0),
        (
            &[0.5, 0.6, 0.55],
            &[0.9, 0.85, 0.95, 0.88],
            6.881_155_817_552_99e-4,
        ),
        (
            &[1.0, 1.1, 0.9, 1.05, 0.95, 1.02],
            &[2.0, 2.2, 1.8],
            9.601_928_416_871_88e-3,
        ),
    ];
    for (a, b, p_want) in cases {
        let r = welch_t_test(a, b).unwrap();
        assert!((r.p - p_want).abs() < 1e-6, "p {} vs {p_want}", r.p);
    }
    report(
        "10 (metrics cross-checks)",
        true,
        "rank AUC = pairwise oracle (50 sets), rate formulas (20 tables), Welch = external oracle (5 cases)",
    );
}

/// Companion check to criterion 7 at the bench level: rerunning the bench
/// with the same seeds yields identical summary CSV digests.
#[test]
fn bench_summaries_are_reproducible() {
    let bin = env!("CARGO_BIN_EXE_fedcvr");
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    std::fs::write(&config, "cohort_n = 1200\nrounds = 4\nlocal_epochs = 1\n").unwrap();
    let digest_of = |out: &std::path::Path| {
        let status = std::process::Command::new(bin)
            .args([
                "bench",
                "--config",
                config.to_str().unwrap(),
                "--strategies",
                "fedavg,fedcvr",
                "--seeds",
                "1,2",
                "--sigmas",
                "0,1.0",
                "--out",
                out.to_str().unwrap(),
                "--jobs",
                "2",
            ])
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
        summary_digest(out).unwrap()
    };
    let a = digest_of(&dir.path().join("bench_a"));
    let b = digest_of(&dir.path().join("bench_b"));
    assert_eq!(a, b, "bench summaries drifted between identical runs");
}
