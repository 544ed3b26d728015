//! Generate the synthetic clinical cohort and inspect how it shards.
//!
//! ```sh
//! cargo run --example generate_data
//! ```

use fedcvr::data::{
    assign_risk_labels, fit_scaler, generate_cohort, partition_iid, partition_noniid, prevalence,
    stratified_holdout,
};

fn main() {
    let cohort = assign_risk_labels(generate_cohort(30_000, 42).expect("cohort"));
    println!(
        "cohort: {} rows, seed {}, high-risk prevalence {:.2}%",
        cohort.rows.len(),
        cohort.seed,
        100.0 * prevalence(&cohort)
    );

    let scaler = fit_scaler(&cohort).expect("scaler");
    println!("\nglobal scaler (fit before partitioning):");
    let names = ["age", "systolic_bp", "diastolic_bp", "cholesterol", "smoker", "diabetic"];
    for (i, name) in names.iter().enumerate() {
        println!(
            "  {name:<13} mean {:>8.3}  std {:>7.3}",
            scaler.means[i], scaler.std_devs[i]
        );
    }

    let (train, holdout) = stratified_holdout(&cohort, 0.2, 42);
    println!("\nsplit: {} training rows, {} held out for evaluation", train.len(), holdout.len());

    let iid = partition_iid(&cohort, 5, 42, &scaler).expect("iid partition");
    println!("\niid shards (random equal split):");
    for shard in &iid {
        println!("  client {}: {} rows", shard.client_id, shard.n());
    }

    let noniid = partition_noniid(&cohort, &scaler).expect("noniid partition");
    println!("\nnon-iid shards (specialty cascade):");
    for shard in &noniid {
        let pos = shard.samples.iter().filter(|s| s.label == 1).count();
        println!(
            "  client {} ({:<19}): {:>5} rows, {:>5.1}% high risk",
            shard.client_id,
            shard.specialty.name(),
            shard.n(),
            100.0 * pos as f64 / shard.n() as f64
        );
    }
}
