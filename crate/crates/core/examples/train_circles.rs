//! Learns a metric on the concentric-circles toy problem and reports how much
//! of its trace sits on the two informative directions.
//!
//! cargo run --release --example train_circles

use std::time::Instant;

use mahal_boost::constraints::factors_from_triplets;
use mahal_boost::datasets::{concentric_circles, CirclesConfig};
use mahal_boost::linalg::dense_evd;
use mahal_boost::{generate_triplets, train, TrainConfig};

fn main() -> mahal_boost::Result<()> {
    let data = concentric_circles(&CirclesConfig::default())?;
    let triplets = generate_triplets(&data, 3)?;
    let factors = factors_from_triplets(&data, &triplets)?;
    println!(
        "{} points, {} dims, {} triplets",
        data.len(),
        data.dim(),
        triplets.len()
    );

    let start = Instant::now();
    let report = train(&factors, &TrainConfig::default())?;
    let model = &report.model;
    println!(
        "{} iterations in {:.2}s, converged={}",
        model.meta.iterations,
        start.elapsed().as_secs_f64(),
        model.meta.converged
    );

    let eig = dense_evd(model.matrix())?;
    let trace: f64 = eig.values.iter().sum();
    let normalized: Vec<String> = eig
        .values
        .iter()
        .map(|l| format!("{:.3}", l / trace))
        .collect();
    println!("normalized eigenvalues: {{{}}}", normalized.join(", "));
    println!("top-2 mass: {:.4}", (eig.values[0] + eig.values[1]) / trace);
    Ok(())
}
