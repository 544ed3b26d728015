//! The two moving parts of DP-SGD in isolation: per-sample clipping and
//! Gaussian noise on the summed batch gradient.
//!
//! ```sh
//! cargo run --example dp_sgd_basics
//! ```

use fedcvr::model::ParamVector;
use fedcvr::privacy::{clip_gradient, noisy_batch_gradient, PrivacyConfig};

fn main() {
    // clipping preserves direction, caps the norm
    let g = ParamVector::from_vec(vec![3.0, 4.0]);
    let clipped = clip_gradient(&g, 1.0).expect("clip");
    println!(
        "clip: ({}, {}) with norm {} -> ({:.3}, {:.3}) with norm {:.3}",
        g.as_slice()[0],
        g.as_slice()[1],
        g.l2_norm(),
        clipped.as_slice()[0],
        clipped.as_slice()[1],
        clipped.l2_norm()
    );
    let small = ParamVector::from_vec(vec![0.3, 0.4]);
    println!(
        "clip: a gradient already inside the ball is untouched: {:?}",
        clip_gradient(&small, 1.0).unwrap().as_slice()
    );

    // a batch of per-sample gradients: clip each, sum, add N(0, σ²C²I)
    let batch = vec![
        ParamVector::from_vec(vec![3.0, 4.0]),   // norm 5 -> clipped
        ParamVector::from_vec(vec![0.0, 0.5]),   // inside the ball
        ParamVector::from_vec(vec![-6.0, 8.0]),  // norm 10 -> clipped
    ];
    let cfg = PrivacyConfig {
        enabled: true,
        clip_norm: 1.0,
        noise_multiplier: 1.0,
        ..PrivacyConfig::default()
    };
    let noiseless = noisy_batch_gradient(
        &batch,
        &PrivacyConfig {
            noise_multiplier: 0.0,
            ..cfg
        },
        7,
    )
    .expect("sum");
    let noisy = noisy_batch_gradient(&batch, &cfg, 7).expect("noisy sum");
    println!(
        "\nbatch of 3: clipped sum = ({:.3}, {:.3})",
        noiseless.as_slice()[0],
        noiseless.as_slice()[1]
    );
    println!(
        "            with σ=1 noise = ({:.3}, {:.3})",
        noisy.as_slice()[0],
        noisy.as_slice()[1]
    );
    println!("            (the trainer divides by the batch size before stepping)");

    // noise scale check over many coordinates
    let wide = vec![ParamVector::zeros(50_000)];
    let draws = noisy_batch_gradient(&wide, &cfg, 99).expect("draws");
    let n = draws.len() as f64;
    let mean = draws.as_slice().iter().sum::<f64>() / n;
    let std = (draws
        .as_slice()
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (n - 1.0))
        .sqrt();
    println!(
        "\nnoise std over 50k coordinates: {std:.4} (target σ·C = {})",
        cfg.noise_multiplier * cfg.clip_norm
    );
}
