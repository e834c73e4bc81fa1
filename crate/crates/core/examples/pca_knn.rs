//! PCA preprocessing before metric learning: Wine projected onto a varying
//! number of principal components of each training split.
//!
//! cargo run --release --example pca_knn

use mahal_boost::datasets::wine;
use mahal_boost::eval::{classification_error, ExperimentSpec};

fn main() -> mahal_boost::Result<()> {
    let data = wine();
    println!("pca_dim\tboost_error_pct\teuclidean_error_pct");
    for d in [2, 5, 8, 13] {
        let mut spec = ExperimentSpec::new(142, 36);
        spec.pca_dim = Some(d);
        let r = classification_error(&data, &spec)?;
        let (b, e) = (r.boost.unwrap(), r.euclidean.unwrap());
        println!(
            "{d}\t{:.2} ({:.2})\t{:.2} ({:.2})",
            b.mean, b.std, e.mean, e.std
        );
    }
    Ok(())
}
