//! Symmetric eigen kernels.
//!
//! [`largest_eigenpair`] finds the algebraically largest eigenpair of an
//! operator that is only available through matrix-vector products. It runs
//! Lanczos with full reorthogonalization and restarts from the best Ritz
//! vector, so it never needs the matrix itself and it does not confuse the
//! most negative eigenvalue with the largest one.
//!
//! [`dense_evd`] is a full decomposition for small dense matrices. It backs
//! projection extraction and serves as the reference the iterative solver is
//! tested against.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Largest dimension [`dense_evd`] accepts.
pub const DENSE_EVD_MAX_DIM: usize = 4096;

/// A symmetric linear map on `R^D`, known only through its action on vectors.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// Writes `A x` into `out`. Both slices have length [`dim`](Self::dim).
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.nrows();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += self[(i, j)] * xj;
            }
            *o = acc;
        }
    }
}

/// Adapts a closure into a [`SymmetricOperator`]. The caller vouches for symmetry.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnOperator { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> SymmetricOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit Euclidean norm. The sign is arbitrary.
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Residual target: `‖Aξ − λξ‖ ≤ tol · max(1, |λ|)`.
    pub tol: f64,
    /// Budget of operator applications; `None` means `10·D + 1000`.
    pub max_iter: Option<usize>,
    /// Seed for the start vector and any breakdown restarts.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            max_iter: None,
            seed: 0x5eed,
        }
    }
}

impl EigenOptions {
    pub fn budget(&self, dim: usize) -> usize {
        self.max_iter.unwrap_or(10 * dim + 1000)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

/// Two passes of classical Gram-Schmidt against `basis`; returns the remaining norm.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
    norm(w)
}

/// Counts operator applications and rejects non-finite output.
struct Counted<'a, O: ?Sized> {
    op: &'a O,
    calls: usize,
}

impl<'a, O: SymmetricOperator + ?Sized> Counted<'a, O> {
    fn apply(&mut self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.calls += 1;
        self.op.apply(x, out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("operator produced a non-finite value"));
        }
        Ok(())
    }
}

/// Top eigenpair of the symmetric tridiagonal matrix with the given diagonal
/// and off-diagonal. Returns `(θ, y)` with `y` of unit norm.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let s = alpha.len();
    let mut t = DMatrix::<f64>::zeros(s, s);
    for i in 0..s {
        t[(i, i)] = alpha[i];
        if i + 1 < s {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (best, _) =
        eig.eigenvalues
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
            );
    let y = eig.eigenvectors.column(best).iter().copied().collect();
    (eig.eigenvalues[best], y)
}

/// Largest algebraic eigenvalue of `op` with a unit eigenvector.
///
/// When the dominant eigenvalue is repeated any unit vector from its
/// eigenspace may be returned. The returned value is the Rayleigh quotient of
/// the returned vector.
pub fn largest_eigenpair<O: SymmetricOperator + ?Sized>(
    op: &O,
    opts: &EigenOptions,
) -> Result<EigenPair> {
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::input("operator dimension must be at least 1"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::input("eigen tolerance must be positive"));
    }
    let budget = opts.budget(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut op = Counted { op, calls: 0 };
    let mut ax = vec![0.0; dim];

    if dim == 1 {
        op.apply(&[1.0], &mut ax)?;
        return Ok(EigenPair {
            value: ax[0],
            vector: vec![1.0],
        });
    }

    let max_basis = dim.min(64);
    let mut start = random_unit(dim, &mut rng);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    // Running estimate of ‖A‖ from the Lanczos coefficients; sets the rounding floor.
    let mut op_scale: f64 = 0.0;

    loop {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
        let mut alpha: Vec<f64> = Vec::with_capacity(max_basis);
        let mut beta: Vec<f64> = Vec::with_capacity(max_basis);
        basis.push(start.clone());
        let mut w = vec![0.0; dim];

        loop {
            if op.calls >= budget {
                let (value, vector, residual) =
                    best.unwrap_or((f64::NAN, start.clone(), f64::INFINITY));
                return Err(Error::EigenNoConvergence {
                    iterations: op.calls,
                    residual,
                    best_value: value,
                    best_vector: vector,
                });
            }
            let q = basis.last().unwrap().clone();
            op.apply(&q, &mut w)?;
            let a = dot(&q, &w);
            alpha.push(a);
            let b = orthogonalize(&mut w, &basis);
            op_scale = op_scale.max(a.abs() + b + beta.last().copied().unwrap_or(0.0));

            let steps = alpha.len();
            let breakdown = b <= 1e-13 * op_scale.max(f64::MIN_POSITIVE);
            let full = steps == max_basis;
            let exhausted = steps == dim;

            if breakdown && !exhausted && !full {
                // Krylov space is invariant; extend with a fresh direction so an
                // unlucky start vector cannot hide the dominant eigenspace.
                let mut fresh = random_unit(dim, &mut rng);
                orthogonalize(&mut fresh, &basis);
                let n = norm(&fresh);
                fresh.iter_mut().for_each(|x| *x /= n);
                beta.push(0.0);
                basis.push(fresh);
                continue;
            }

            if steps.is_multiple_of(4) || full || exhausted || breakdown {
                let (theta, y) = top_ritz(&alpha, &beta);
                let estimate = if exhausted {
                    0.0
                } else {
                    b * y[steps - 1].abs()
                };
                let target = opts.tol * theta.abs().max(1.0);
                if estimate <= target || full || exhausted {
                    let mut x = vec![0.0; dim];
                    for (yi, qi) in y.iter().zip(&basis) {
                        axpy(*yi, qi, &mut x);
                    }
                    let n = norm(&x);
                    x.iter_mut().for_each(|v| *v /= n);
                    op.apply(&x, &mut ax)?;
                    let value = dot(&x, &ax);
                    let residual = ax
                        .iter()
                        .zip(&x)
                        .map(|(a, xi)| (a - value * xi).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    let floor = 64.0 * f64::EPSILON * op_scale;
                    if residual <= opts.tol * value.abs().max(1.0) || residual <= floor {
                        return Ok(EigenPair { value, vector: x });
                    }
                    if best.as_ref().is_none_or(|b| residual < b.2) {
                        best = Some((value, x.clone(), residual));
                    }
                    if full || exhausted {
                        start = x;
                        break;
                    }
                }
            }

            w.iter_mut().for_each(|v| *v /= b);
            beta.push(b);
            basis.push(w.clone());
        }
    }
}

/// Eigendecomposition of a dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
}

impl DenseEigen {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i).iter().copied().collect()
    }

    /// `Σ λ_i q_i q_iᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = self.values.len();
        let scaled = DMatrix::from_fn(d, d, |i, j| self.vectors[(i, j)] * self.values[j]);
        &scaled * self.vectors.transpose()
    }
}

/// Largest `|M_ij − M_ji|` relative to `max(1, max |M_ij|)`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
pub fn dense_evd(m: &DMatrix<f64>) -> Result<DenseEigen> {
    if m.nrows() != m.ncols() {
        return Err(Error::input(format!(
            "matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let d = m.nrows();
    if d == 0 || d > DENSE_EVD_MAX_DIM {
        return Err(Error::input(format!(
            "dense eigendecomposition supports 1..={DENSE_EVD_MAX_DIM} rows, got {d}"
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("matrix has non-finite entries"));
    }
    let skew = asymmetry(m);
    if skew > 1e-10 {
        return Err(Error::input(format!(
            "matrix is not symmetric (relative defect {skew:.3e})"
        )));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(DenseEigen { values, vectors })
}

/// `xᵀ A x / xᵀ x`.
pub fn rayleigh_quotient<O: SymmetricOperator + ?Sized>(op: &O, x: &[f64]) -> f64 {
    let mut ax = vec![0.0; x.len()];
    op.apply(x, &mut ax);
    dot(x, &ax) / dot(x, x)
}

/// Builds the dense matrix of an operator by applying it to the unit basis.
pub fn materialize<O: SymmetricOperator + ?Sized>(op: &O) -> DMatrix<f64> {
    let d = op.dim();
    let mut m = DMatrix::zeros(d, d);
    let mut e = vec![0.0; d];
    let mut col = vec![0.0; d];
    for j in 0..d {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        for i in 0..d {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    m
}

/// Largest relative violation of `⟨Ax, y⟩ = ⟨x, Ay⟩` over `probes` random pairs.
pub fn symmetry_defect<O: SymmetricOperator + ?Sized>(op: &O, probes: usize, seed: u64) -> f64 {
    let d = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ax = vec![0.0; d];
    let mut ay = vec![0.0; d];
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let x = random_unit(d, &mut rng);
        let y = random_unit(d, &mut rng);
        op.apply(&x, &mut ax);
        op.apply(&y, &mut ay);
        let lhs = dot(&ax, &y);
        let rhs = dot(&x, &ay);
        let scale = norm(&ax).max(norm(&ay)).max(1.0);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}
