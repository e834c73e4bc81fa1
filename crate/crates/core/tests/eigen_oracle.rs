mod common;

use common::{random_instance, random_symmetric, rng};
use mahal_boost::constraints::WeightedConstraintOperator;
use mahal_boost::linalg::{dense_evd, largest_eigenpair, materialize, EigenOptions};
use proptest::prelude::*;
use rand::Rng;

fn residual(m: &nalgebra::DMatrix<f64>, value: f64, vector: &[f64]) -> f64 {
    let x = nalgebra::DVector::from_column_slice(vector);
    (m * &x - &x * value).norm()
}

#[test]
fn matches_dense_on_random_symmetric_matrices() {
    let mut rng = rng(7);
    for case in 0..100 {
        let d = rng.gen_range(1..=64);
        let m = random_symmetric(&mut rng, d);
        let dense = dense_evd(&m).unwrap().values[0];
        let pair = largest_eigenpair(&m, &EigenOptions::default()).unwrap();
        assert!(
            (pair.value - dense).abs() <= 1e-8 * dense.abs().max(1.0),
            "case {case}: {} vs {dense}",
            pair.value
        );
        assert!(residual(&m, pair.value, &pair.vector) <= 1e-6 * dense.abs().max(1.0));
    }
}

#[test]
fn clustered_and_negative_spectra() {
    // Two nearly equal top eigenvalues, and an all-negative spectrum.
    let mut rng = rng(8);
    let q = dense_evd(&random_symmetric(&mut rng, 12)).unwrap().vectors;
    for spectrum in [
        (0..12)
            .map(|i| {
                if i < 2 {
                    5.0 - 1e-9 * i as f64
                } else {
                    -(i as f64)
                }
            })
            .collect::<Vec<_>>(),
        (0..12).map(|i| -1.0 - i as f64).collect(),
    ] {
        let m = &q
            * nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(spectrum.clone()))
            * q.transpose();
        let m = (&m + m.transpose()) * 0.5;
        let top = spectrum.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pair = largest_eigenpair(&m, &EigenOptions::default()).unwrap();
        assert!(
            (pair.value - top).abs() <= 1e-8 * top.abs().max(1.0),
            "{} vs {top}",
            pair.value
        );
    }
}

#[test]
fn matrix_free_operator_agrees_with_materialized() {
    for seed in 0..20 {
        let (_, factors) = random_instance(seed);
        let mut rng = rng(seed);
        let u: Vec<f64> = {
            let raw: Vec<f64> = factors.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
            let t: f64 = raw.iter().sum();
            raw.iter().map(|x| x / t).collect()
        };
        let op = WeightedConstraintOperator::new(&factors, &u).unwrap();
        let dense = dense_evd(&materialize(&op)).unwrap().values[0];
        let pair = largest_eigenpair(&op, &EigenOptions::default()).unwrap();
        assert!(
            (pair.value - dense).abs() <= 1e-8 * dense.abs().max(1.0),
            "seed {seed}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn returned_pair_is_consistent(seed in any::<u64>(), d in 1usize..=24) {
        let mut rng = rng(seed);
        let m = random_symmetric(&mut rng, d);
        let pair = largest_eigenpair(&m, &EigenOptions::default()).unwrap();
        let norm: f64 = pair.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        let x = nalgebra::DVector::from_column_slice(&pair.vector);
        let rq = (x.transpose() * &m * &x)[0];
        prop_assert!((rq - pair.value).abs() <= 1e-12 * pair.value.abs().max(1.0));
    }
}
