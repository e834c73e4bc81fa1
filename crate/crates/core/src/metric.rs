//! The learned Mahalanobis metric.
//!
//! A [`MetricModel`] holds the dense matrix `X` together with the rank-one
//! basis it was assembled from, `X = Σ_j w_j ξ_j ξ_jᵀ`. Keeping the basis lets
//! a reloaded model be audited against its own construction.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::boost::TrainConfig;
use crate::constraints::{quadratic_form, Dataset};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{asymmetry, dense_evd, dot};

pub const MODEL_FORMAT: &str = "mahal-boost-metric";
pub const MODEL_VERSION: u32 = 1;

/// One weak learner: weight `w ≥ 0` on the trace-one rank-one matrix `ξξᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisElement {
    pub w: f64,
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    /// Trainer settings, absent for hand-built models.
    pub config: Option<TrainConfig>,
    pub dataset_fingerprint: Option<String>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricModel {
    x: DMatrix<f64>,
    basis: Vec<BasisElement>,
    pub meta: ModelMeta,
}

fn add_outer(x: &mut DMatrix<f64>, w: f64, xi: &[f64]) {
    let d = xi.len();
    for i in 0..d {
        let wi = w * xi[i];
        for j in 0..d {
            x[(i, j)] += wi * xi[j];
        }
    }
}

impl MetricModel {
    /// `X = Σ w_j ξ_j ξ_jᵀ`. Weights must be nonnegative and vectors unit length.
    pub fn from_basis(dim: usize, basis: Vec<BasisElement>, meta: ModelMeta) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("metric dimension must be at least 1"));
        }
        let mut x = DMatrix::zeros(dim, dim);
        for (j, b) in basis.iter().enumerate() {
            check_dim(dim, b.xi.len())?;
            if !(b.w >= 0.0) || !b.w.is_finite() {
                return Err(Error::input(format!(
                    "basis {j} has invalid weight {}",
                    b.w
                )));
            }
            let n = dot(&b.xi, &b.xi).sqrt();
            if (n - 1.0).abs() > 1e-10 {
                return Err(Error::input(format!(
                    "basis {j} vector has norm {n}, expected 1"
                )));
            }
            add_outer(&mut x, b.w, &b.xi);
        }
        Ok(MetricModel { x, basis, meta })
    }

    /// Euclidean metric `X = I`, stored as the coordinate basis with unit weights.
    pub fn identity(dim: usize) -> Result<Self> {
        let basis = (0..dim)
            .map(|i| {
                let mut xi = vec![0.0; dim];
                xi[i] = 1.0;
                BasisElement { w: 1.0, xi }
            })
            .collect();
        Self::from_basis(dim, basis, ModelMeta::default())
    }

    /// Wraps an explicit PSD matrix; its positive eigenpairs become the basis.
    pub fn from_matrix(x: DMatrix<f64>, meta: ModelMeta) -> Result<Self> {
        let eig = dense_evd(&x)?;
        let top = eig.values[0].max(1.0);
        if eig.values.iter().any(|&l| l < -1e-9 * top) {
            return Err(Error::input("matrix is not positive semidefinite"));
        }
        let basis = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.0)
            .map(|(i, &l)| BasisElement {
                w: l,
                xi: eig.vector(i),
            })
            .collect();
        let x = (&x + x.transpose()) * 0.5;
        Ok(MetricModel { x, basis, meta })
    }

    /// Appends one weak learner, updating `X` in place.
    pub(crate) fn push_basis(&mut self, element: BasisElement) {
        add_outer(&mut self.x, element.w, &element.xi);
        self.basis.push(element);
    }

    pub(crate) fn empty(dim: usize, meta: ModelMeta) -> Self {
        MetricModel {
            x: DMatrix::zeros(dim, dim),
            basis: Vec::new(),
            meta,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn basis(&self) -> &[BasisElement] {
        &self.basis
    }

    pub fn weight_sum(&self) -> f64 {
        self.basis.iter().map(|b| b.w).sum()
    }

    /// Same metric with every weight multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::input("scale factor must be positive and finite"));
        }
        let mut out = self.clone();
        out.x *= c;
        out.basis.iter_mut().for_each(|b| b.w *= c);
        Ok(out)
    }

    /// `(a − b)ᵀ X (a − b)`, with round-off negatives clamped to zero.
    pub fn squared_distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_dim(self.dim(), a.len())?;
        check_dim(self.dim(), b.len())?;
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let q = quadratic_form(&self.x, &d);
        if q >= 0.0 {
            return Ok(q);
        }
        // Size of the terms that were summed; anything below 1e-9 of it is round-off.
        let mut scale = 0.0;
        for i in 0..d.len() {
            for j in 0..d.len() {
                scale += (d[i] * self.x[(i, j)] * d[j]).abs();
            }
        }
        if q >= -1e-9 * scale.max(1.0) {
            Ok(0.0)
        } else {
            Err(Error::Logic(format!(
                "negative squared distance {q:.3e}; metric matrix is not PSD"
            )))
        }
    }

    /// Projection `L` (D×d) whose columns are `q_i √λ_i` for the top-`d` eigenpairs of `X`.
    pub fn transform_matrix(&self, d: usize) -> Result<DMatrix<f64>> {
        if d == 0 || d > self.dim() {
            return Err(Error::input(format!(
                "projection dimension must be in 1..={}, got {d}",
                self.dim()
            )));
        }
        let eig = dense_evd(&self.x)?;
        Ok(DMatrix::from_fn(self.dim(), d, |i, j| {
            eig.vectors[(i, j)] * eig.values[j].max(0.0).sqrt()
        }))
    }

    /// Maps every point `a` to `Lᵀa`, keeping labels.
    pub fn transform_dataset(&self, data: &Dataset, d: usize) -> Result<Dataset> {
        check_dim(self.dim(), data.dim())?;
        let l = self.transform_matrix(d)?;
        let mut out = Vec::with_capacity(data.len() * d);
        for row in data.rows() {
            for c in 0..d {
                out.push((0..row.len()).map(|i| l[(i, c)] * row[i]).sum());
            }
        }
        data.with_features(d, out)
    }

    /// Checks symmetry, PSD-ness and agreement between `X` and its basis.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let skew = asymmetry(&self.x);
        if skew > 1e-10 {
            return Err(Error::input(format!(
                "metric matrix is not symmetric ({skew:.3e})"
            )));
        }
        let eig = dense_evd(&self.x)?;
        let top = eig.values[0].abs().max(1.0);
        let min = eig.values[d - 1];
        if min < -1e-9 * top {
            return Err(Error::input(format!(
                "metric matrix has negative eigenvalue {min:.3e}"
            )));
        }
        let rebuilt = Self::from_basis(d, self.basis.clone(), ModelMeta::default())?;
        let err = (&rebuilt.x - &self.x).norm();
        if err > 1e-8 * self.x.norm() + 1e-12 {
            return Err(Error::input(format!(
                "basis does not reproduce the matrix (Frobenius error {err:.3e})"
            )));
        }
        let trace = self.x.trace();
        let wsum = self.weight_sum();
        if (trace - wsum).abs() > 1e-8 * trace.abs().max(wsum.abs()) + 1e-12 {
            return Err(Error::input(format!(
                "trace {trace} differs from weight sum {wsum}"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            dim: self.dim(),
            x: self.x.transpose().iter().copied().collect(),
            basis: self.basis.clone(),
            meta: self.meta.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Logic(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::ModelLoad(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::ModelLoad(format!(
                "unknown format tag {:?}",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::ModelLoad(format!(
                "unsupported version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        let d = file.dim;
        if d == 0 || file.x.len() != d * d {
            return Err(Error::ModelLoad(format!(
                "matrix has {} entries, expected {d}x{d}",
                file.x.len()
            )));
        }
        if file.basis.iter().any(|b| b.xi.len() != d) {
            return Err(Error::ModelLoad(
                "basis vector length differs from dim".into(),
            ));
        }
        let model = MetricModel {
            x: DMatrix::from_row_slice(d, d, &file.x),
            basis: file.basis,
            meta: file.meta,
        };
        model
            .validate()
            .map_err(|e| Error::ModelLoad(e.to_string()))?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    dim: usize,
    /// Row-major.
    x: Vec<f64>,
    basis: Vec<BasisElement>,
    meta: ModelMeta,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(d: usize, terms: usize, seed: u64) -> MetricModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = (0..terms)
            .map(|_| {
                let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = dot(&v, &v).sqrt();
                BasisElement {
                    w: rng.gen_range(0.0..2.0),
                    xi: v.into_iter().map(|x| x / n).collect(),
                }
            })
            .collect();
        MetricModel::from_basis(d, basis, ModelMeta::default()).unwrap()
    }

    #[test]
    fn identity_is_euclidean() {
        let m = MetricModel::identity(2).unwrap();
        assert_eq!(m.squared_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        m.validate().unwrap();
    }

    #[test]
    fn diagonal_feature_weighting() {
        let x = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.0]));
        let m = MetricModel::from_matrix(x, ModelMeta::default()).unwrap();
        assert!((m.squared_distance(&[1.0, 1.0], &[0.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(m.basis().len(), 1);
    }

    #[test]
    fn distance_matches_projection() {
        let m = random_model(5, 7, 1);
        let l = m.transform_matrix(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let diff = nalgebra::DVector::from_iterator(5, a.iter().zip(&b).map(|(x, y)| x - y));
            let proj = l.transpose() * diff;
            let want = proj.norm_squared();
            let got = m.squared_distance(&a, &b).unwrap();
            assert!((got - want).abs() <= 1e-8 * want.max(1e-12));
        }
    }

    #[test]
    fn transform_examples() {
        let l = MetricModel::identity(2)
            .unwrap()
            .transform_matrix(2)
            .unwrap();
        assert!((&l * l.transpose() - DMatrix::identity(2, 2)).norm() < 1e-12);

        let m = MetricModel::from_basis(
            2,
            vec![BasisElement {
                w: 1.0,
                xi: vec![1.0, 0.0],
            }],
            ModelMeta::default(),
        )
        .unwrap();
        let l = m.transform_matrix(1).unwrap();
        assert!((l[(0, 0)].abs() - 1.0).abs() < 1e-12 && l[(1, 0)].abs() < 1e-12);
        assert!(m.transform_matrix(3).is_err());
        assert!(m.transform_matrix(0).is_err());
    }

    #[test]
    fn low_rank_reconstruction() {
        let m = random_model(6, 3, 4);
        let l = m.transform_matrix(3).unwrap();
        let err = (&l * l.transpose() - m.matrix()).norm() / m.matrix().norm();
        assert!(err < 1e-7);
    }

    #[test]
    fn trace_equals_weight_sum() {
        let m = random_model(4, 9, 5);
        assert!((m.matrix().trace() - m.weight_sum()).abs() < 1e-12 * m.weight_sum());
        m.validate().unwrap();
    }

    #[test]
    fn rejects_bad_basis() {
        let bad_w = vec![BasisElement {
            w: -1.0,
            xi: vec![1.0],
        }];
        assert!(MetricModel::from_basis(1, bad_w, ModelMeta::default()).is_err());
        let bad_xi = vec![BasisElement {
            w: 1.0,
            xi: vec![2.0],
        }];
        assert!(MetricModel::from_basis(1, bad_xi, ModelMeta::default()).is_err());
    }

    #[test]
    fn rejects_non_psd_matrix() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(MetricModel::from_matrix(x, ModelMeta::default()).is_err());
    }

    #[test]
    fn round_off_negative_clamped() {
        // X ≈ ξξᵀ with ξ ⟂ a−b: the exact quadratic form is zero.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = MetricModel::from_basis(
            2,
            vec![BasisElement {
                w: 3.0,
                xi: vec![s, -s],
            }],
            ModelMeta::default(),
        )
        .unwrap();
        let q = m.squared_distance(&[0.1, 0.1], &[0.7, 0.7]).unwrap();
        assert!((0.0..1e-15).contains(&q));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut m = random_model(3, 4, 8);
        m.meta.iterations = 4;
        m.meta.dataset_fingerprint = Some("abc".into());
        let back = MetricModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn corrupt_json_is_load_error() {
        let text = MetricModel::identity(3).unwrap().to_json().unwrap();
        let cut = &text[..text.len() / 2];
        assert!(matches!(
            MetricModel::from_json(cut),
            Err(Error::ModelLoad(_))
        ));

        let bumped = text.replace("\"version\": 1", "\"version\": 99");
        assert!(matches!(
            MetricModel::from_json(&bumped),
            Err(Error::ModelLoad(_))
        ));

        // Break the X/basis agreement.
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let mut v = v;
        v["x"][0] = serde_json::json!(5.0);
        assert!(MetricModel::from_json(&v.to_string()).is_err());
    }
}
