//! Trains on concentric circles, saves the model, reloads it and writes the
//! 2-D embedding as CSV for external plotting. The 2-D kNN error is
//! compared with a 2-D PCA projection of the same data.
//!
//! cargo run --release --example transform_export -- [out.csv]

use mahal_boost::constraints::factors_from_triplets;
use mahal_boost::datasets::{concentric_circles, to_delimited, CirclesConfig};
use mahal_boost::eval::{knn_leave_one_out, Metric, Pca, PointSet};
use mahal_boost::{generate_triplets, train, Dataset, MetricModel, TrainConfig};

fn loo_error(data: &Dataset) -> mahal_boost::Result<f64> {
    let pred = knn_leave_one_out(&PointSet::from(data), &Metric::Euclidean, 3)?;
    let wrong = pred
        .iter()
        .zip(data.labels())
        .filter(|(p, y)| p != y)
        .count();
    Ok(100.0 * wrong as f64 / data.len() as f64)
}

fn main() -> mahal_boost::Result<()> {
    let data = concentric_circles(&CirclesConfig::default())?;
    let factors = factors_from_triplets(&data, &generate_triplets(&data, 3)?)?;
    let model = train(&factors, &TrainConfig::default())?.model;

    let dir = std::env::temp_dir().join("mahal-boost-example");
    std::fs::create_dir_all(&dir)?;
    let model_path = dir.join("circles.json");
    model.save(&model_path)?;
    let model = MetricModel::load(&model_path)?;

    let embedded = model.transform_dataset(&data, 2)?;
    let pca = Pca::fit(&data, 2)?;
    let pca_embedded = pca.project(&data)?;
    println!("3NN leave-one-out error in 2-D:");
    println!("  learned metric  {:6.2}%", loo_error(&embedded)?);
    println!("  PCA             {:6.2}%", loo_error(&pca_embedded)?);
    println!("  full Euclidean  {:6.2}%", loo_error(&data)?);

    let out = std::env::args()
        .nth(1)
        .map_or_else(|| dir.join("circles_2d.csv"), Into::into);
    std::fs::write(&out, to_delimited(&embedded))?;
    println!("wrote {}", out.display());
    Ok(())
}
