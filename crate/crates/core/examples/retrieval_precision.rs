//! Precision of the top 5, 10, 15 and 20 retrieved neighbors for queries of
//! one class, ranked by the learned metric and by Euclidean distance. Any
//! precomputed feature vectors work; the bundled Wine set stands in here.
//!
//! cargo run --release --example retrieval_precision

use mahal_boost::datasets::wine;
use mahal_boost::eval::{retrieval_precision, ExperimentSpec};

fn main() -> mahal_boost::Result<()> {
    let data = wine();
    let mut spec = ExperimentSpec::new(118, 60);
    spec.n_runs = 5;
    for target in data.class_counts().into_keys() {
        let result = retrieval_precision(&data, &spec, target, &[5, 10, 15, 20])?;
        println!("# target class {target}");
        print!("{}", result.to_table());
        println!();
    }
    Ok(())
}
