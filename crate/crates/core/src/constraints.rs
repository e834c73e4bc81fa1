//! Labeled datasets, triplet mining and factored constraint matrices.
//!
//! A triplet `(i, j, k)` asks that `a_i` be closer to `a_j` (same class) than
//! to `a_k` (other class). Under a metric `X` its margin is
//! `⟨A_r, X⟩ = (a_i − a_k)ᵀX(a_i − a_k) − (a_i − a_j)ᵀX(a_i − a_j)`, so
//! `A_r = u uᵀ − v vᵀ` with `u = a_i − a_k` and `v = a_i − a_j`. Only `u` and
//! `v` are stored.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, SymmetricOperator};

/// Points in `R^D` with integer class labels. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<i64>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<i64>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::input(format!(
                "row {i} has {} features, expected {dim}",
                r.len()
            )));
        }
        Self::from_flat(dim, rows.concat(), labels)
    }

    /// Builds a dataset from row-major features.
    pub fn from_flat(dim: usize, features: Vec<f64>, labels: Vec<i64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("dataset needs at least one feature"));
        }
        if features.len() != dim * labels.len() {
            return Err(Error::input(format!(
                "{} feature values do not fill {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if labels.len() < 2 {
            return Err(Error::input("dataset needs at least two points"));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite feature at row {} column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Dataset {
            dim,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    pub fn label(&self, i: usize) -> i64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Member count per label, ordered by label.
    pub fn class_counts(&self) -> BTreeMap<i64, usize> {
        let mut counts = BTreeMap::new();
        for &l in &self.labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::input(format!(
                    "index {i} out of range for {} points",
                    self.len()
                )));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::from_flat(self.dim, features, labels)
    }

    /// Same labels, new features (e.g. after a projection).
    pub fn with_features(&self, dim: usize, features: Vec<f64>) -> Result<Self> {
        Self::from_flat(dim, features, self.labels.clone())
    }

    /// Short content hash of features and labels.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for v in &self.features {
            h.update(v.to_bits().to_le_bytes());
        }
        for l in &self.labels {
            h.update(l.to_le_bytes());
        }
        h.finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Indices of an anchor, a same-class target and a different-class impostor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub anchor: usize,
    pub target: usize,
    pub impostor: usize,
}

/// Mines `k` targets and `k` impostors per anchor and emits all `k²` pairings.
///
/// Neighbors are Euclidean in the given features; distance ties go to the
/// lower index. Output is ordered by anchor, then target rank, then impostor rank.
pub fn generate_triplets(data: &Dataset, k: usize) -> Result<Vec<Triplet>> {
    if k == 0 {
        return Err(Error::input("triplet neighbor count k must be at least 1"));
    }
    let counts = data.class_counts();
    if counts.len() < 2 {
        return Err(Error::input(
            "triplet generation needs at least two classes",
        ));
    }
    for (&label, &n) in &counts {
        if n < k + 1 {
            return Err(Error::input(format!(
                "class {label} has {n} members; k = {k} needs at least {}",
                k + 1
            )));
        }
        if data.len() - n < k {
            return Err(Error::input(format!(
                "class {label} has only {} points outside it; k = {k} impostors needed",
                data.len() - n
            )));
        }
    }

    let n = data.len();
    let mut out = Vec::with_capacity(n * k * k);
    let mut same: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut other: Vec<(f64, usize)> = Vec::with_capacity(n);
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    for i in 0..n {
        same.clear();
        other.clear();
        let yi = data.label(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = squared_euclidean(data.row(i), data.row(j));
            if data.label(j) == yi {
                same.push((d, j));
            } else {
                other.push((d, j));
            }
        }
        for list in [&mut same, &mut other] {
            list.select_nth_unstable_by(k - 1, by_distance);
            list.truncate(k);
            list.sort_by(by_distance);
        }
        for &(_, target) in &same {
            for &(_, impostor) in &other {
                out.push(Triplet {
                    anchor: i,
                    target,
                    impostor,
                });
            }
        }
    }
    Ok(out)
}

/// `A_r = u uᵀ − v vᵀ` kept as its two difference vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintFactors {
    /// `u = a_i − a_k`, anchor minus impostor.
    pub impostor_diff: Vec<f64>,
    /// `v = a_i − a_j`, anchor minus target.
    pub target_diff: Vec<f64>,
}

impl ConstraintFactors {
    pub fn new(impostor_diff: Vec<f64>, target_diff: Vec<f64>) -> Result<Self> {
        check_dim(impostor_diff.len(), target_diff.len())?;
        Ok(ConstraintFactors {
            impostor_diff,
            target_diff,
        })
    }

    pub fn dim(&self) -> usize {
        self.impostor_diff.len()
    }

    /// `⟨A_r, ξξᵀ⟩ = (ξ·u)² − (ξ·v)²` for a unit vector `ξ`.
    pub fn eval_rank_one(&self, xi: &[f64]) -> Result<f64> {
        check_dim(self.dim(), xi.len())?;
        debug_assert!(
            (dot(xi, xi).sqrt() - 1.0).abs() < 1e-8,
            "ξ must have unit norm"
        );
        Ok(self.eval_rank_one_unchecked(xi))
    }

    #[inline]
    pub(crate) fn eval_rank_one_unchecked(&self, xi: &[f64]) -> f64 {
        let a = dot(xi, &self.impostor_diff);
        let b = dot(xi, &self.target_diff);
        a * a - b * b
    }

    /// `⟨A_r, X⟩ = uᵀXu − vᵀXv`.
    pub fn eval_full(&self, x: &DMatrix<f64>) -> Result<f64> {
        check_dim(self.dim(), x.nrows())?;
        check_dim(self.dim(), x.ncols())?;
        Ok(quadratic_form(x, &self.impostor_diff) - quadratic_form(x, &self.target_diff))
    }

    /// `Tr(A_r) = ‖u‖² − ‖v‖²`.
    pub fn trace(&self) -> f64 {
        dot(&self.impostor_diff, &self.impostor_diff) - dot(&self.target_diff, &self.target_diff)
    }

    /// The dense `D×D` matrix `A_r`.
    pub fn materialize(&self) -> DMatrix<f64> {
        let d = self.dim();
        let (u, v) = (&self.impostor_diff, &self.target_diff);
        DMatrix::from_fn(d, d, |i, j| u[i] * u[j] - v[i] * v[j])
    }
}

pub(crate) fn quadratic_form(x: &DMatrix<f64>, d: &[f64]) -> f64 {
    let n = d.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for (j, dj) in d.iter().enumerate() {
            row += x[(i, j)] * dj;
        }
        total += d[i] * row;
    }
    total
}

pub fn factors_from_triplet(data: &Dataset, t: &Triplet) -> Result<ConstraintFactors> {
    let n = data.len();
    for idx in [t.anchor, t.target, t.impostor] {
        if idx >= n {
            return Err(Error::input(format!(
                "triplet index {idx} out of range for {n} points"
            )));
        }
    }
    let a = data.row(t.anchor);
    let u = a
        .iter()
        .zip(data.row(t.impostor))
        .map(|(x, y)| x - y)
        .collect();
    let v = a
        .iter()
        .zip(data.row(t.target))
        .map(|(x, y)| x - y)
        .collect();
    Ok(ConstraintFactors {
        impostor_diff: u,
        target_diff: v,
    })
}

pub fn factors_from_triplets(
    data: &Dataset,
    triplets: &[Triplet],
) -> Result<Vec<ConstraintFactors>> {
    triplets
        .iter()
        .map(|t| factors_from_triplet(data, t))
        .collect()
}

/// The weighted constraint sum `Â = Σ_r w_r A_r`, applied without forming it.
pub struct WeightedConstraintOperator<'a> {
    factors: &'a [ConstraintFactors],
    weights: &'a [f64],
    dim: usize,
}

impl<'a> WeightedConstraintOperator<'a> {
    pub fn new(factors: &'a [ConstraintFactors], weights: &'a [f64]) -> Result<Self> {
        check_dim(factors.len(), weights.len())?;
        let dim = factors
            .first()
            .map(ConstraintFactors::dim)
            .ok_or_else(|| Error::input("constraint list is empty"))?;
        for f in factors {
            check_dim(dim, f.dim())?;
        }
        Ok(WeightedConstraintOperator {
            factors,
            weights,
            dim,
        })
    }
}

impl SymmetricOperator for WeightedConstraintOperator<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (f, &w) in self.factors.iter().zip(self.weights) {
            if w == 0.0 {
                continue;
            }
            let cu = w * dot(&f.impostor_diff, x);
            let cv = w * dot(&f.target_diff, x);
            for ((o, u), v) in out.iter_mut().zip(&f.impostor_diff).zip(&f.target_diff) {
                *o += cu * u - cv * v;
            }
        }
    }
}
