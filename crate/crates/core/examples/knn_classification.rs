//! 3-nearest-neighbor test error of the learned metric against the Euclidean
//! baseline on the bundled Iris and Wine sets, 10 random stratified splits each.
//!
//! cargo run --release --example knn_classification

use mahal_boost::datasets::{iris, wine};
use mahal_boost::eval::{classification_error, ExperimentSpec};

fn main() -> mahal_boost::Result<()> {
    for (name, data, n_train, n_test) in [("iris", iris(), 105, 45), ("wine", wine(), 142, 36)] {
        let result = classification_error(&data, &ExperimentSpec::new(n_train, n_test))?;
        let secs: f64 =
            result.runs.iter().map(|r| r.elapsed_secs).sum::<f64>() / result.runs.len() as f64;
        println!("# {name}: {n_train} train / {n_test} test, {secs:.3}s per run");
        print!("{}", result.to_table());
        println!();
    }
    Ok(())
}
