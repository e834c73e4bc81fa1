//! Experiment harness: PCA preprocessing, kNN classification, retrieval
//! precision and the regularization sweep.
//!
//! Every run draws its split from its own RNG stream (`seed + run`), so runs
//! can execute in parallel and still produce identical results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boost::{train, TrainConfig};
use crate::constraints::{factors_from_triplets, generate_triplets, squared_euclidean, Dataset};
use crate::error::{check_dim, Error, Result};
use crate::linalg::dense_evd;
use crate::metric::MetricModel;

/// Principal directions of a training set.
#[derive(Debug, Clone)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// D×d, orthonormal columns ordered by decreasing variance.
    pub components: DMatrix<f64>,
    /// Sample variance (divisor `N − 1`) along each component.
    pub variances: Vec<f64>,
}

impl Pca {
    pub fn fit(data: &Dataset, d: usize) -> Result<Self> {
        let (n, dim) = (data.len(), data.dim());
        if d == 0 || d > n.min(dim) {
            return Err(Error::input(format!(
                "PCA dimension must be in 1..={}, got {d}",
                n.min(dim)
            )));
        }
        let mut mean = vec![0.0; dim];
        for row in data.rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for row in data.rows() {
            let c: Vec<f64> = row.iter().zip(&mean).map(|(x, m)| x - m).collect();
            for i in 0..dim {
                for j in i..dim {
                    cov[(i, j)] += c[i] * c[j];
                }
            }
        }
        for i in 0..dim {
            for j in i..dim {
                let v = cov[(i, j)] / (n as f64 - 1.0);
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        let eig = dense_evd(&cov)?;
        Ok(Pca {
            mean,
            components: eig.vectors.columns(0, d).into_owned(),
            variances: eig.values[..d].to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.components.ncols()
    }

    /// Centers with the training mean, then projects.
    pub fn project(&self, data: &Dataset) -> Result<Dataset> {
        check_dim(self.mean.len(), data.dim())?;
        let d = self.dim();
        let mut out = Vec::with_capacity(data.len() * d);
        for row in data.rows() {
            for c in 0..d {
                let mut acc = 0.0;
                for (i, (x, m)) in row.iter().zip(&self.mean).enumerate() {
                    acc += self.components[(i, c)] * (x - m);
                }
                out.push(acc);
            }
        }
        data.with_features(d, out)
    }
}

/// Distance used for neighbor ranking.
#[derive(Debug, Clone, Copy)]
pub enum Metric<'a> {
    Euclidean,
    Learned(&'a MetricModel),
}

impl Metric<'_> {
    pub fn squared_distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            Metric::Euclidean => {
                check_dim(a.len(), b.len())?;
                Ok(squared_euclidean(a, b))
            }
            Metric::Learned(m) => m.squared_distance(a, b),
        }
    }
}

/// Borrowed labeled points. Unlike [`Dataset`] it may hold a single point.
#[derive(Debug, Clone, Copy)]
pub struct PointSet<'a> {
    dim: usize,
    features: &'a [f64],
    labels: &'a [i64],
}

impl<'a> PointSet<'a> {
    pub fn new(dim: usize, features: &'a [f64], labels: &'a [i64]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::input("point set is empty"));
        }
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(Error::input(
                "feature buffer does not match labels and dimension",
            ));
        }
        Ok(PointSet {
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

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// `(squared distance, index)` for every point except `skip`, ascending,
    /// ties broken by lower index.
    fn ranked(
        &self,
        metric: &Metric,
        query: &[f64],
        skip: Option<usize>,
    ) -> Result<Vec<(f64, usize)>> {
        check_dim(self.dim, query.len())?;
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            if Some(i) == skip {
                continue;
            }
            out.push((metric.squared_distance(query, self.row(i))?, i));
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(out)
    }
}

impl<'a> From<&'a Dataset> for PointSet<'a> {
    fn from(d: &'a Dataset) -> Self {
        PointSet {
            dim: d.dim(),
            features: d.features(),
            labels: d.labels(),
        }
    }
}

/// Majority label among the `k` nearest training points.
///
/// Distance ties go to the lower index. Vote ties go to whichever tied label
/// owns the nearest of the `k` neighbors.
pub fn knn_predict(train: &PointSet, metric: &Metric, query: &[f64], k: usize) -> Result<i64> {
    knn_predict_excluding(train, metric, query, k, None)
}

fn knn_predict_excluding(
    train: &PointSet,
    metric: &Metric,
    query: &[f64],
    k: usize,
    skip: Option<usize>,
) -> Result<i64> {
    let available = train.len() - usize::from(skip.is_some());
    if k == 0 || k > available {
        return Err(Error::input(format!(
            "k must be in 1..={available}, got {k}"
        )));
    }
    let ranked = train.ranked(metric, query, skip)?;
    let neighbors = &ranked[..k];
    let mut votes: BTreeMap<i64, usize> = BTreeMap::new();
    for &(_, i) in neighbors {
        *votes.entry(train.labels[i]).or_insert(0) += 1;
    }
    let best = *votes.values().max().unwrap();
    let winner = neighbors
        .iter()
        .map(|&(_, i)| train.labels[i])
        .find(|l| votes[l] == best)
        .unwrap();
    Ok(winner)
}

/// Leave-one-out kNN predictions over a single set.
pub fn knn_leave_one_out(points: &PointSet, metric: &Metric, k: usize) -> Result<Vec<i64>> {
    (0..points.len())
        .map(|i| knn_predict_excluding(points, metric, points.row(i), k, Some(i)))
        .collect()
}

pub fn knn_predict_all(
    train: &PointSet,
    metric: &Metric,
    queries: &Dataset,
    k: usize,
) -> Result<Vec<i64>> {
    queries
        .rows()
        .map(|q| knn_predict(train, metric, q, k))
        .collect()
}

/// Percentage of mispredicted test points.
pub fn knn_error_pct(train: &Dataset, test: &Dataset, metric: &Metric, k: usize) -> Result<f64> {
    let pred = knn_predict_all(&train.into(), metric, test, k)?;
    let wrong = pred
        .iter()
        .zip(test.labels())
        .filter(|(p, y)| p != y)
        .count();
    Ok(100.0 * wrong as f64 / test.len() as f64)
}

/// Mean precision@c over every pool point labeled `target`, ranking all
/// other pool points by distance.
pub fn precision_at_cutoffs(
    pool: &PointSet,
    metric: &Metric,
    target: i64,
    cutoffs: &[usize],
) -> Result<Vec<f64>> {
    let max = pool.len().saturating_sub(1);
    if let Some(&c) = cutoffs.iter().find(|&&c| c == 0 || c > max) {
        return Err(Error::input(format!("cutoff {c} must be in 1..={max}")));
    }
    let queries: Vec<usize> = (0..pool.len())
        .filter(|&i| pool.labels[i] == target)
        .collect();
    if queries.is_empty() {
        return Err(Error::input(format!(
            "target label {target} is absent from the pool"
        )));
    }
    let mut totals = vec![0.0; cutoffs.len()];
    for &q in &queries {
        let ranked = pool.ranked(metric, pool.row(q), Some(q))?;
        for (t, &c) in totals.iter_mut().zip(cutoffs) {
            let hits = ranked[..c]
                .iter()
                .filter(|&&(_, i)| pool.labels[i] == target)
                .count();
            *t += hits as f64 / c as f64;
        }
    }
    Ok(totals
        .into_iter()
        .map(|t| t / queries.len() as f64)
        .collect())
}

/// Which distances an experiment scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Compare {
    #[default]
    Both,
    Boost,
    Euclidean,
}

impl Compare {
    pub fn boost(self) -> bool {
        self != Compare::Euclidean
    }

    pub fn euclidean(self) -> bool {
        self != Compare::Boost
    }
}

/// Train/test sizes, repetition count and trainer settings for one protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub n_runs: usize,
    /// Neighbors used by the kNN classifier.
    pub knn_k: usize,
    /// Targets and impostors mined per anchor.
    pub triplet_k: usize,
    pub pca_dim: Option<usize>,
    pub train: TrainConfig,
    /// Run `r` splits with `seed + r`.
    pub seed: u64,
    pub compare: Compare,
}

impl ExperimentSpec {
    pub fn new(n_train: usize, n_test: usize) -> Self {
        ExperimentSpec {
            n_train,
            n_test,
            n_runs: 10,
            knn_k: 3,
            triplet_k: 3,
            pca_dim: None,
            train: TrainConfig::default(),
            seed: 0,
            compare: Compare::Both,
        }
    }

    /// Sizes from a train fraction of the whole dataset.
    pub fn from_fraction(n: usize, train_fraction: f64) -> Self {
        let n_train = ((n as f64) * train_fraction).round() as usize;
        Self::new(n_train, n - n_train)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::input("train and test sizes must be positive"));
        }
        if self.n_train + self.n_test > n {
            return Err(Error::input(format!(
                "split {}+{} exceeds {n} points",
                self.n_train, self.n_test
            )));
        }
        if self.n_runs == 0 {
            return Err(Error::input("n_runs must be at least 1"));
        }
        if self.knn_k == 0 || self.triplet_k == 0 {
            return Err(Error::input("neighbor counts must be at least 1"));
        }
        self.train.validate()
    }
}

/// Allocates `total` across classes in proportion to their sizes (largest remainder).
fn proportional(total: usize, sizes: &[usize]) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let total = total.min(n);
    let exact: Vec<f64> = sizes
        .iter()
        .map(|&s| total as f64 * s as f64 / n as f64)
        .collect();
    let mut alloc: Vec<usize> = exact
        .iter()
        .map(|e| (e.floor() as usize).min(total))
        .collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = total - alloc.iter().sum::<usize>();
    while left > 0 {
        for &i in &order {
            if left > 0 && alloc[i] < sizes[i] {
                alloc[i] += 1;
                left -= 1;
            }
        }
    }
    alloc
}

/// Class-stratified random split; returns sorted train and test indices.
pub fn stratified_split(
    data: &Dataset,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_train + n_test > data.len() {
        return Err(Error::input("split sizes exceed dataset size"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in data.labels().iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let sizes: Vec<usize> = by_class.values().map(Vec::len).collect();
    let train_alloc = proportional(n_train, &sizes);
    let remaining: Vec<usize> = sizes.iter().zip(&train_alloc).map(|(s, t)| s - t).collect();
    let test_alloc = proportional(n_test, &remaining);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for ((members, &nt), &ns) in by_class.values_mut().zip(&train_alloc).zip(&test_alloc) {
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..nt]);
        test.extend_from_slice(&members[nt..nt + ns]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Mean and sample standard deviation (divisor `n − 1`; zero for one value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, std }
    }
}

/// Outcome of training on one split. Absent when the run used a fixed model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOutcome {
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: usize,
    pub boost_error_pct: Option<f64>,
    pub euclidean_error_pct: Option<f64>,
    pub training: Option<TrainOutcome>,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub runs: Vec<RunResult>,
    pub boost: Option<Summary>,
    pub euclidean: Option<Summary>,
}

impl ExperimentResult {
    fn from_runs(runs: Vec<RunResult>) -> Self {
        let summarize = |f: fn(&RunResult) -> Option<f64>| {
            let vals: Option<Vec<f64>> = runs.iter().map(f).collect();
            vals.map(|v| Summary::of(&v))
        };
        let boost = summarize(|r| r.boost_error_pct);
        let euclidean = summarize(|r| r.euclidean_error_pct);
        ExperimentResult {
            runs,
            boost,
            euclidean,
        }
    }

    /// Tab-separated: one row per run, then `mean` and `std` rows. Only the
    /// scored metrics get a column. Timings are left out so the table is
    /// reproducible byte for byte.
    pub fn to_table(&self) -> String {
        let trained = self.runs.iter().all(|r| r.training.is_some());
        let mut s = String::from("run");
        if self.boost.is_some() {
            s.push_str("\tboost_error_pct");
        }
        if self.euclidean.is_some() {
            s.push_str("\teuclidean_error_pct");
        }
        if trained {
            s.push_str("\titerations\tconverged");
        }
        s.push('\n');
        for r in &self.runs {
            let _ = write!(s, "{}", r.run);
            for v in [r.boost_error_pct, r.euclidean_error_pct]
                .into_iter()
                .flatten()
            {
                let _ = write!(s, "\t{v:.4}");
            }
            if let Some(t) = r.training.filter(|_| trained) {
                let _ = write!(s, "\t{}\t{}", t.iterations, t.converged);
            }
            s.push('\n');
        }
        let pad = if trained { "\t\t" } else { "" };
        for (name, f) in [
            ("mean", (|x: &Summary| x.mean) as fn(&Summary) -> f64),
            ("std", |x| x.std),
        ] {
            let _ = write!(s, "{name}");
            for sm in [self.boost, self.euclidean].iter().flatten() {
                let _ = write!(s, "\t{:.4}", f(sm));
            }
            let _ = writeln!(s, "{pad}");
        }
        s
    }
}

/// Where the learned metric for each run comes from.
#[derive(Debug, Clone, Copy)]
enum Learner<'a> {
    Train,
    Fixed(&'a MetricModel),
}

/// Split, optional PCA, and (when the learned metric is scored) training for one run.
struct PreparedRun {
    train: Dataset,
    test: Dataset,
    model: Option<MetricModel>,
    training: Option<TrainOutcome>,
}

fn prepare_run(
    data: &Dataset,
    spec: &ExperimentSpec,
    learner: Learner,
    run: usize,
) -> Result<PreparedRun> {
    let (tr, te) = stratified_split(
        data,
        spec.n_train,
        spec.n_test,
        spec.seed.wrapping_add(run as u64),
    )?;
    let mut train_set = data.subset(&tr)?;
    let mut test_set = data.subset(&te)?;
    if let Some(d) = spec.pca_dim {
        let pca = Pca::fit(&train_set, d)?;
        train_set = pca.project(&train_set)?;
        test_set = pca.project(&test_set)?;
    }
    let (model, training) = match (spec.compare.boost(), learner) {
        (false, _) => (None, None),
        (true, Learner::Fixed(m)) => {
            check_dim(m.dim(), train_set.dim())?;
            (Some(m.clone()), None)
        }
        (true, Learner::Train) => {
            let triplets = generate_triplets(&train_set, spec.triplet_k)?;
            let factors = factors_from_triplets(&train_set, &triplets)?;
            let mut model = train(&factors, &spec.train)?.model;
            model.meta.dataset_fingerprint = Some(train_set.fingerprint());
            let outcome = TrainOutcome {
                iterations: model.meta.iterations,
                converged: model.meta.converged,
            };
            (Some(model), Some(outcome))
        }
    };
    Ok(PreparedRun {
        train: train_set,
        test: test_set,
        model,
        training,
    })
}

fn classification_run(
    data: &Dataset,
    spec: &ExperimentSpec,
    learner: Learner,
    run: usize,
) -> Result<RunResult> {
    let start = Instant::now();
    let p = prepare_run(data, spec, learner, run)?;
    let boost = match &p.model {
        Some(m) => Some(knn_error_pct(
            &p.train,
            &p.test,
            &Metric::Learned(m),
            spec.knn_k,
        )?),
        None => None,
    };
    let euclid = match spec.compare.euclidean() {
        true => Some(knn_error_pct(
            &p.train,
            &p.test,
            &Metric::Euclidean,
            spec.knn_k,
        )?),
        false => None,
    };
    Ok(RunResult {
        run,
        boost_error_pct: boost,
        euclidean_error_pct: euclid,
        training: p.training,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

fn run_all<T: Send>(n_runs: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..n_runs)
        .into_par_iter()
        .map(|run| {
            f(run).map_err(|e| Error::Run {
                run,
                source: Box::new(e),
            })
        })
        .collect()
}

/// kNN test error over `n_runs` splits, training a fresh metric on every
/// training split.
pub fn classification_error(data: &Dataset, spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate(data.len())?;
    let runs = run_all(spec.n_runs, |run| {
        classification_run(data, spec, Learner::Train, run)
    })?;
    Ok(ExperimentResult::from_runs(runs))
}

/// [`classification_error`] with one pre-trained metric shared by every run.
pub fn classification_error_with_model(
    data: &Dataset,
    spec: &ExperimentSpec,
    model: &MetricModel,
) -> Result<ExperimentResult> {
    spec.validate(data.len())?;
    let runs = run_all(spec.n_runs, |run| {
        classification_run(data, spec, Learner::Fixed(model), run)
    })?;
    Ok(ExperimentResult::from_runs(runs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub cutoffs: Vec<usize>,
    /// `boost_per_run[run][c]`; empty when the learned metric was not scored.
    pub boost_per_run: Vec<Vec<f64>>,
    pub euclidean_per_run: Vec<Vec<f64>>,
    pub boost: Option<Vec<f64>>,
    pub euclidean: Option<Vec<f64>>,
}

impl RetrievalResult {
    /// Tab-separated, one column per cutoff.
    pub fn to_table(&self) -> String {
        let mut s = String::from("run\tmetric");
        for c in &self.cutoffs {
            let _ = write!(s, "\tp@{c}");
        }
        s.push('\n');
        let mut row = |label: &str, metric: &str, vals: &[f64]| {
            let _ = write!(s, "{label}\t{metric}");
            for v in vals {
                let _ = write!(s, "\t{v:.4}");
            }
            s.push('\n');
        };
        let n_runs = self.boost_per_run.len().max(self.euclidean_per_run.len());
        for i in 0..n_runs {
            if let Some(b) = self.boost_per_run.get(i) {
                row(&i.to_string(), "boost", b);
            }
            if let Some(e) = self.euclidean_per_run.get(i) {
                row(&i.to_string(), "euclidean", e);
            }
        }
        if let Some(b) = &self.boost {
            row("mean", "boost", b);
        }
        if let Some(e) = &self.euclidean {
            row("mean", "euclidean", e);
        }
        s
    }
}

fn column_means(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = rows.len() as f64;
    let first = rows.first()?;
    Some(
        (0..first.len())
            .map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n)
            .collect(),
    )
}

/// Precision@c for queries of `target` within each test split, averaged per
/// split and then across runs.
pub fn retrieval_precision(
    data: &Dataset,
    spec: &ExperimentSpec,
    target: i64,
    cutoffs: &[usize],
) -> Result<RetrievalResult> {
    spec.validate(data.len())?;
    if cutoffs.is_empty() {
        return Err(Error::input("at least one cutoff is required"));
    }
    if let Some(&c) = cutoffs.iter().find(|&&c| c == 0 || c + 1 > spec.n_test) {
        return Err(Error::input(format!(
            "cutoff {c} must be in 1..={}",
            spec.n_test.saturating_sub(1)
        )));
    }
    let per_run = run_all(spec.n_runs, |run| {
        let p = prepare_run(data, spec, Learner::Train, run)?;
        let pool = PointSet::from(&p.test);
        let b = match &p.model {
            Some(m) => Some(precision_at_cutoffs(
                &pool,
                &Metric::Learned(m),
                target,
                cutoffs,
            )?),
            None => None,
        };
        let e = match spec.compare.euclidean() {
            true => Some(precision_at_cutoffs(
                &pool,
                &Metric::Euclidean,
                target,
                cutoffs,
            )?),
            false => None,
        };
        Ok((b, e))
    })?;
    let (b, e): (Vec<_>, Vec<_>) = per_run.into_iter().unzip();
    let boost_per_run: Vec<Vec<f64>> = b.into_iter().flatten().collect();
    let euclidean_per_run: Vec<Vec<f64>> = e.into_iter().flatten().collect();
    Ok(RetrievalResult {
        cutoffs: cutoffs.to_vec(),
        boost: column_means(&boost_per_run),
        euclidean: column_means(&euclidean_per_run),
        boost_per_run,
        euclidean_per_run,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VSweepResult {
    pub vs: Vec<f64>,
    pub results: Vec<ExperimentResult>,
}

impl VSweepResult {
    /// Tab-separated, one column per `v`; rows are per-run learned-metric
    /// errors, their mean and std, and the Euclidean mean when scored.
    pub fn to_table(&self) -> String {
        let mut s = String::from("row");
        for v in &self.vs {
            let _ = write!(s, "\tv={v:e}");
        }
        s.push('\n');
        let n_runs = self.results.first().map_or(0, |r| r.runs.len());
        for run in 0..n_runs {
            let _ = write!(s, "{run}");
            for r in &self.results {
                let _ = write!(
                    s,
                    "\t{:.4}",
                    r.runs[run].boost_error_pct.unwrap_or(f64::NAN)
                );
            }
            s.push('\n');
        }
        let mut row = |name: &str, f: &dyn Fn(&ExperimentResult) -> Option<f64>| {
            let vals: Option<Vec<f64>> = self.results.iter().map(f).collect();
            if let Some(vals) = vals {
                let _ = write!(s, "{name}");
                for v in vals {
                    let _ = write!(s, "\t{v:.4}");
                }
                s.push('\n');
            }
        };
        row("mean", &|r| r.boost.map(|b| b.mean));
        row("std", &|r| r.boost.map(|b| b.std));
        row("euclidean_mean", &|r| r.euclidean.map(|e| e.mean));
        s
    }

    /// Largest minus smallest mean learned-metric error across `v`.
    pub fn spread(&self) -> f64 {
        let means: Vec<f64> = self
            .results
            .iter()
            .filter_map(|r| r.boost.map(|b| b.mean))
            .collect();
        let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = means.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// [`classification_error`] once per `v` on identical splits.
pub fn v_sweep(data: &Dataset, spec: &ExperimentSpec, vs: &[f64]) -> Result<VSweepResult> {
    if vs.is_empty() {
        return Err(Error::input("v grid is empty"));
    }
    if let Some(v) = vs.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::input(format!("v must be positive, got {v}")));
    }
    if !spec.compare.boost() {
        return Err(Error::input("a v sweep needs the learned metric"));
    }
    let mut results = Vec::with_capacity(vs.len());
    for &v in vs {
        let mut s = spec.clone();
        s.train.v = v;
        results.push(classification_error(data, &s)?);
    }
    Ok(VSweepResult {
        vs: vs.to_vec(),
        results,
    })
}
