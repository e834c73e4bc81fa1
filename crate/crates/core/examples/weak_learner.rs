//! One boosting round by hand: build the dual-weighted constraint operator,
//! extract its top eigenpair without forming the matrix, and pick the step
//! size by bisection.
//!
//! cargo run --release --example weak_learner

use mahal_boost::boost::{line_search_w, primal_objective, update_dual};
use mahal_boost::constraints::{factors_from_triplets, WeightedConstraintOperator};
use mahal_boost::datasets::iris;
use mahal_boost::generate_triplets;
use mahal_boost::linalg::{dense_evd, largest_eigenpair, materialize, EigenOptions};

fn main() -> mahal_boost::Result<()> {
    let data = iris();
    let factors = factors_from_triplets(&data, &generate_triplets(&data, 3)?)?;
    let n = factors.len();
    let u = vec![1.0 / n as f64; n];
    let v = 1e-7;

    let op = WeightedConstraintOperator::new(&factors, &u)?;
    let top = largest_eigenpair(&op, &EigenOptions::default())?;
    let dense = dense_evd(&materialize(&op))?;
    println!("{n} constraints");
    println!(
        "lambda_max: iterative {:.12}, dense {:.12}",
        top.value, dense.values[0]
    );
    println!("xi = {:.4?}", top.vector);

    let h: Vec<f64> = factors
        .iter()
        .map(|f| f.eval_rank_one(&top.vector))
        .collect::<Result<_, _>>()?;
    let step = line_search_w(&h, &u, v, 1e-9, 2f64.powi(60))?;
    let u_next = update_dual(&u, &h, step.w)?;
    let rho: Vec<f64> = h.iter().map(|x| x * step.w).collect();
    println!("w = {:.6e} (capped: {})", step.w, step.capped);
    println!(
        "objective {:.6} -> {:.6}",
        primal_objective(&vec![0.0; n], 0.0, v)?,
        primal_objective(&rho, step.w, v)?
    );
    let violated = u_next
        .iter()
        .zip(&h)
        .filter(|(_, &x)| x < 0.0)
        .map(|(u, _)| u)
        .sum::<f64>();
    println!("dual mass on constraints still violated after the step: {violated:.4}");
    Ok(())
}
