//! Run all six aggregation strategies on identical non-IID partitions under
//! the same DP noise and compare final held-out metrics.
//!
//! ```sh
//! cargo run --example compare_strategies
//! ```
//!
//! For multi-seed statistics with significance tests, use the CLI:
//! `fedcvr bench --seeds 1,2,3`.

use fedcvr::data::{
    assign_risk_labels, fit_scaler, generate_cohort, partition_noniid_subset, samples_for,
    stratified_holdout,
};
use fedcvr::engine::{run_simulation, SimulationSetup, TrainingConfig};
use fedcvr::privacy::PrivacyConfig;
use fedcvr::strategies::StrategyKind;

fn main() {
    let cohort = assign_risk_labels(generate_cohort(3_000, 42).expect("cohort"));
    let scaler = fit_scaler(&cohort).expect("scaler");
    let (train, holdout_idx) = stratified_holdout(&cohort, 0.2, 42);
    let partitions = partition_noniid_subset(&cohort, &train, &scaler).expect("partition");
    let holdout = samples_for(&cohort, &holdout_idx, &scaler);

    println!("30 rounds, 5 specialized hospitals, DP σ = 1.0, identical seeds\n");
    println!("strategy     loss    acc     recall  f1      auc     eps");
    for kind in StrategyKind::ALL {
        let setup = SimulationSetup {
            tcfg: TrainingConfig {
                rounds: 30,
                seed: 1,
                ..TrainingConfig::default()
            },
            pcfg: PrivacyConfig {
                enabled: true,
                noise_multiplier: 1.0,
                ..PrivacyConfig::default()
            },
            ..SimulationSetup::new(kind, &partitions, &holdout)
        };
        let output = run_simulation(&setup).expect("simulation");
        let last = output.records.last().unwrap();
        println!(
            "{:<11}  {:.4}  {:.4}  {:.4}  {:.4}  {:.4}  {:.2}",
            kind.name(),
            last.global_loss,
            last.accuracy,
            last.recall,
            last.f1,
            last.auc,
            last.epsilon.unwrap_or(f64::INFINITY)
        );
    }
}
