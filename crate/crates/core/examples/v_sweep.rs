//! Sensitivity of the learned metric to the trace regularizer `v` on the
//! bundled breast-cancer set. Every `v` sees the same ten splits.
//!
//! cargo run --release --example v_sweep

use std::time::Instant;

use mahal_boost::datasets::breast_cancer;
use mahal_boost::eval::{v_sweep, ExperimentSpec};

fn main() -> mahal_boost::Result<()> {
    let data = breast_cancer();
    let spec = ExperimentSpec::from_fraction(data.len(), 0.7);
    let vs = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4];
    let start = Instant::now();
    let sweep = v_sweep(&data, &spec, &vs)?;
    println!(
        "# breast cancer: {} train / {} test, {:.1}s",
        spec.n_train,
        spec.n_test,
        start.elapsed().as_secs_f64()
    );
    print!("{}", sweep.to_table());
    println!("spread of mean error across v: {:.4} pp", sweep.spread());
    Ok(())
}
