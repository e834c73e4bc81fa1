//! Oracles and property checks shared by the integration tests and the
//! acceptance target. Checks return `Err(description)` instead of panicking so
//! the acceptance runner can report them.

#![allow(dead_code)]

use mahal_boost::boost::{
    dual_from_margins, stationarity_lhs, train_with, TrainConfig, TrainReport,
};
use mahal_boost::constraints::{factors_from_triplets, ConstraintFactors};
use mahal_boost::linalg::dense_evd;
use mahal_boost::{generate_triplets, Dataset, MetricModel};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

/// Random labeled points in `D ≤ 10` with at most 200 triplets.
pub fn random_instance(seed: u64) -> (Dataset, Vec<ConstraintFactors>) {
    let mut rng = rng(seed);
    let dim = rng.gen_range(2..=10);
    let classes = rng.gen_range(2..=3);
    let k = rng.gen_range(1..=3);
    let n = rng.gen_range(classes * (k + 1)..=24);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        // Every class gets at least k + 1 members; the rest are random.
        let label = if i < classes * (k + 1) {
            i % classes
        } else {
            rng.gen_range(0..classes)
        };
        let shift = label as f64 * rng.gen_range(0.0..1.5);
        rows.push(
            (0..dim)
                .map(|j| rng.gen_range(-1.0..1.0) + if j == 0 { shift } else { 0.0 })
                .collect(),
        );
        labels.push(label as i64);
    }
    let data = Dataset::new(rows, labels).unwrap();
    let mut triplets = generate_triplets(&data, k).unwrap();
    triplets.truncate(200);
    let factors = factors_from_triplets(&data, &triplets).unwrap();
    (data, factors)
}

/// The first `count` instances from [`random_instance`] on which default
/// training never takes a capped step, so every round gets the full checks of
/// [`train_checked`].
pub fn uncapped_instances(count: usize) -> Vec<(u64, Vec<ConstraintFactors>)> {
    let mut out = Vec::with_capacity(count);
    let mut seed = 0;
    while out.len() < count {
        let (_, factors) = random_instance(seed);
        let report = train_with(&factors, &TrainConfig::default(), |_| {}).unwrap();
        if report.state.history.iter().all(|h| !h.capped) {
            out.push((seed, factors));
        }
        seed += 1;
    }
    out
}

/// `log Σ exp(−ρ) + v·tr X`, evaluated directly on a dense `X`.
pub fn objective_of_matrix(factors: &[ConstraintFactors], x: &DMatrix<f64>, v: f64) -> f64 {
    let rho: Vec<f64> = factors.iter().map(|f| f.eval_full(x).unwrap()).collect();
    let m = rho.iter().map(|r| -r).fold(f64::NEG_INFINITY, f64::max);
    m + rho.iter().map(|r| (-r - m).exp()).sum::<f64>().ln() + v * x.trace()
}

/// Trains while checking, after every round:
/// the objective never increases (tol 1e-9 relative),
/// margins match a from-scratch recomputation (1e-8 relative),
/// the incremental dual matches `exp(−ρ)/Z` from those margins (1e-8 relative),
/// and the dual stays on the simplex (1e-12).
///
/// The two margin-based checks stop after a capped step. Margins then reach
/// about `2⁶⁰·h`, where rounding alone moves `exp(−ρ)` by more than 1e-8.
pub fn train_checked(
    factors: &[ConstraintFactors],
    cfg: &TrainConfig,
) -> Result<TrainReport, String> {
    let mut rho_scratch = vec![0.0; factors.len()];
    let mut prev = (factors.len() as f64).ln();
    let mut failure: Option<String> = None;
    let mut capped = false;
    let report = train_with(factors, cfg, |round| {
        if failure.is_some() {
            return;
        }
        capped |= round.record.capped;
        let it = round.record.iteration;
        let obj = round.record.objective;
        if obj > prev + 1e-9 * prev.abs().max(1.0) {
            failure = Some(format!("objective rose at iteration {it}: {prev} -> {obj}"));
            return;
        }
        prev = obj;
        let sum: f64 = round.u.iter().sum();
        if round.u.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > 1e-12 {
            failure = Some(format!(
                "dual left the simplex at iteration {it}: sum {sum}"
            ));
            return;
        }
        if capped {
            return;
        }
        for (r, f) in rho_scratch.iter_mut().zip(factors) {
            *r += round.record.w * f.eval_rank_one(round.xi).unwrap();
        }
        let rho_scale = rho_scratch.iter().fold(1.0f64, |m, r| m.max(r.abs()));
        for (a, b) in round.rho.iter().zip(&rho_scratch) {
            if (a - b).abs() > 1e-8 * rho_scale {
                failure = Some(format!("margin drift at iteration {it}: {a} vs {b}"));
                return;
            }
        }
        let scratch = dual_from_margins(&rho_scratch);
        let u_scale = scratch.iter().fold(0.0f64, |m, x| m.max(*x));
        for (a, b) in round.u.iter().zip(&scratch) {
            if (a - b).abs() > 1e-8 * u_scale {
                failure = Some(format!("dual mismatch at iteration {it}: {a} vs {b}"));
                return;
            }
        }
    })
    .map_err(|e| e.to_string())?;
    match failure {
        Some(f) => Err(f),
        None => Ok(report),
    }
}

/// Min eigenvalue ≥ −1e-9 (relative to the largest) and `|Tr X − Σw| ≤ 1e-8` relative.
pub fn check_psd_trace(model: &MetricModel) -> Check {
    let eig = dense_evd(model.matrix()).map_err(|e| e.to_string())?;
    let top = eig.values[0].abs().max(1.0);
    let min = *eig.values.last().unwrap();
    if min < -1e-9 * top {
        return Err(format!("min eigenvalue {min:e}"));
    }
    let tr = model.matrix().trace();
    let ws = model.weight_sum();
    if (tr - ws).abs() > 1e-8 * tr.abs().max(ws.abs()).max(1.0) {
        return Err(format!("trace {tr} vs weight sum {ws}"));
    }
    Ok(())
}

/// Random `(h, u, v)` whose stationarity function changes sign on `(0, ∞)`.
pub fn random_line_search_case(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, f64) {
    loop {
        let n = rng.gen_range(2..=40);
        let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let u: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let v = if rng.gen_bool(0.5) {
            0.0
        } else {
            10f64.powf(rng.gen_range(-8.0..-1.0))
        };
        let slope0: f64 = h.iter().zip(&u).map(|(h, u)| (h - v) * u).sum();
        if slope0 > 1e-3 && h.iter().any(|&x| x < v) {
            return (h, u, v);
        }
    }
}

/// Illinois-modified regula falsi on a doubling bracket, to `|Δw| ≤ 1e-12`.
pub fn reference_root(h: &[f64], u: &[f64], v: f64) -> f64 {
    // Multiplying by exp(w·min h) keeps every term bounded without changing the sign.
    let hmin = h.iter().copied().fold(f64::INFINITY, f64::min);
    let f = |w: f64| -> f64 {
        h.iter()
            .zip(u)
            .map(|(&hr, &ur)| (hr - v) * ur * (-(hr - hmin) * w).exp())
            .sum()
    };
    let (mut a, mut b) = (0.0, 1.0);
    while f(b) > 0.0 {
        a = b;
        b *= 2.0;
    }
    let (mut fa, mut fb) = (f(a), f(b));
    let mut side = 0;
    for _ in 0..10_000 {
        if (b - a).abs() <= 1e-12 {
            break;
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc > 0.0 {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    0.5 * (a + b)
}

/// Cross-check of the unshifted stationarity function at the reference root.
pub fn stationarity_at(h: &[f64], u: &[f64], v: f64, w: f64) -> f64 {
    stationarity_lhs(h, u, v, w)
}

/// A tiny problem whose optimum is finite and nonzero.
///
/// Finiteness comes from a certificate `c ≥ 0`, `Σc = 1`, with
/// `Σ c_r A_r ≺ 0` (eigenvalues at most `−μ`): every nonzero PSD `X` then
/// violates some constraint, and `f(X) ≥ μ·Tr X`, so `Tr X* ≤ log|S| / μ`.
/// The optimum is not `X = 0` because the averaged constraint has a
/// positive eigenvalue larger than `v`.
pub struct SmallInstance {
    pub dim: usize,
    pub factors: Vec<ConstraintFactors>,
    pub v: f64,
    /// Upper bound on `Tr X*`.
    pub trace_bound: f64,
}

pub fn small_instance(rng: &mut ChaCha8Rng, dim: usize, v: f64) -> SmallInstance {
    let eig = |x: &DMatrix<f64>| dense_evd(x).unwrap().values;
    loop {
        let m = rng.gen_range(2..=4);
        let factors: Vec<ConstraintFactors> = (0..m)
            .map(|_| {
                let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                ConstraintFactors::new(a, b).unwrap()
            })
            .collect();
        let mats: Vec<DMatrix<f64>> = factors.iter().map(|f| f.materialize()).collect();
        let mean = mats.iter().fold(DMatrix::zeros(dim, dim), |a, b| a + b) / m as f64;
        if eig(&mean)[0] < v + 0.05 {
            continue;
        }
        let mut mu = 0.0f64;
        for _ in 0..200 {
            let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let combo = mats
                .iter()
                .zip(&raw)
                .fold(DMatrix::zeros(dim, dim), |acc, (a, c)| {
                    acc + a * (c / total)
                });
            mu = mu.max(-eig(&combo)[0]);
        }
        if mu < 0.05 {
            continue;
        }
        return SmallInstance {
            dim,
            factors,
            v,
            trace_bound: (m as f64).ln() / mu,
        };
    }
}

/// Grid search with zoom over `X = LLᵀ`, `L` lower triangular. Entries of `L`
/// start in `[−√T, √T]` (diagonal `[0, √T]`) where `T` bounds `Tr X*`; each
/// pass evaluates a full grid and then shrinks the box around the best point.
pub fn grid_optimum(inst: &SmallInstance) -> f64 {
    let d = inst.dim;
    let slots: Vec<(usize, usize)> = (0..d).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    let p = slots.len();
    let per_axis: usize = match p {
        1 => 401,
        3 => 41,
        _ => 9,
    };
    let r = inst.trace_bound.sqrt();
    let mut lo: Vec<f64> = slots
        .iter()
        .map(|&(i, j)| if i == j { 0.0 } else { -r })
        .collect();
    let mut hi = vec![r; p];
    let eval = |params: &[f64]| {
        let mut l = DMatrix::<f64>::zeros(d, d);
        for (&(i, j), &x) in slots.iter().zip(params) {
            l[(i, j)] = x;
        }
        objective_of_matrix(&inst.factors, &(&l * l.transpose()), inst.v)
    };
    let mut best = f64::INFINITY;
    let mut best_at = vec![0.0; p];
    let total = per_axis.pow(p as u32);
    for _ in 0..25 {
        let mut point = vec![0.0; p];
        for idx in 0..total {
            let mut rest = idx;
            for a in 0..p {
                let t = (rest % per_axis) as f64 / (per_axis - 1) as f64;
                rest /= per_axis;
                point[a] = lo[a] + t * (hi[a] - lo[a]);
            }
            let f = eval(&point);
            if f < best {
                best = f;
                best_at.copy_from_slice(&point);
            }
        }
        for a in 0..p {
            // Keep two grid cells on each side of the incumbent.
            let half = 2.0 * (hi[a] - lo[a]) / (per_axis - 1) as f64;
            let floor = if slots[a].0 == slots[a].1 {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            lo[a] = (best_at[a] - half).max(floor);
            hi[a] = best_at[a] + half;
        }
    }
    best
}

/// Outcome of training one [`SmallInstance`] next to its grid optimum.
pub struct SmallOutcome {
    pub trained: f64,
    pub grid: f64,
    /// `λ_max(Â) − v` at the returned point, from a dense solve.
    pub dual_excess: f64,
    /// `Σ_j w_j (v − ξ_jᵀ Â ξ_j)`, which bounds `trained − optimum` once `Â ⪯ vI`.
    pub duality_gap: f64,
}

pub fn solve_small(inst: &SmallInstance) -> Result<SmallOutcome, String> {
    let cfg = TrainConfig {
        v: inst.v,
        max_iters: 5000,
        ..TrainConfig::default()
    };
    let report = train_with(&inst.factors, &cfg, |_| {}).map_err(|e| e.to_string())?;
    let model = &report.model;
    let d = inst.dim;
    let ahat = inst
        .factors
        .iter()
        .zip(&report.state.u)
        .fold(DMatrix::zeros(d, d), |acc, (f, u)| {
            acc + f.materialize() * *u
        });
    let dual_excess = dense_evd(&ahat).map_err(|e| e.to_string())?.values[0] - inst.v;
    let duality_gap = model
        .basis()
        .iter()
        .map(|b| {
            let xi = nalgebra::DVector::from_column_slice(&b.xi);
            b.w * (inst.v - (xi.transpose() * &ahat * &xi)[0])
        })
        .sum();
    Ok(SmallOutcome {
        trained: objective_of_matrix(&inst.factors, model.matrix(), inst.v),
        grid: grid_optimum(inst),
        dual_excess,
        duality_gap,
    })
}
