//! Boosting trainer for the PSD metric.
//!
//! Each round:
//! 1. build `Â = Σ_r u_r A_r` from the current dual weights,
//! 2. take its top eigenpair `(λ, ξ)`; stop if `λ < v`,
//! 3. line-search the weight `w` of `ξξᵀ` by bisection on
//!    `Σ_r (H_r − v) u_r exp(−w H_r) = 0` with `H_r = ⟨A_r, ξξᵀ⟩`,
//! 4. reweight `u_r ← u_r exp(−w H_r) / z`.
//!
//! The objective minimized is `log Σ_r exp(−ρ_r) + v·Σ_j w_j` with margins
//! `ρ_r = ⟨A_r, X⟩`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintFactors, WeightedConstraintOperator};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{largest_eigenpair, EigenOptions};
pub use crate::metric::BasisElement;
use crate::metric::{MetricModel, ModelMeta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Trace regularization weight.
    pub v: f64,
    pub max_iters: usize,
    /// Absolute bracket width at which bisection stops.
    pub bisect_tol: f64,
    pub eig_tol: f64,
    /// Upper clamp on a single step weight.
    pub w_cap: f64,
    /// Eigen solver budget in operator applications; `None` means `10·D + 1000`.
    pub eig_max_iter: Option<usize>,
    /// Seeds the eigen solver's start vector.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            v: 1e-7,
            max_iters: 500,
            bisect_tol: 1e-9,
            eig_tol: 1e-8,
            w_cap: 2f64.powi(60),
            eig_max_iter: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(Error::input(format!("v must be positive, got {}", self.v)));
        }
        if self.max_iters == 0 {
            return Err(Error::input("max_iters must be at least 1"));
        }
        if !(self.bisect_tol > 0.0) {
            return Err(Error::input("bisection tolerance must be positive"));
        }
        if !(self.eig_tol > 0.0) {
            return Err(Error::input("eigen tolerance must be positive"));
        }
        if !(self.w_cap > 0.0) {
            return Err(Error::input("w_cap must be positive"));
        }
        Ok(())
    }
}

/// One boosting round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub lambda_max: f64,
    pub w: f64,
    /// Primal objective after this round's update.
    pub objective: f64,
    pub elapsed_secs: f64,
    /// The step hit `w_cap` without a sign change.
    pub capped: bool,
}

impl IterationRecord {
    /// Single-line `key=value` rendering used by the training log.
    pub fn log_line(&self) -> String {
        format!(
            "iter={} lambda_max={:.12e} w={:.12e} objective={:.12e} elapsed_s={:.6}{}",
            self.iteration,
            self.lambda_max,
            self.w,
            self.objective,
            self.elapsed_secs,
            if self.capped {
                " warning=unbounded-step"
            } else {
                ""
            }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// `λ_max(Â) < v` at the given round; no basis was added in that round.
    Converged {
        iteration: usize,
    },
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct TrainState {
    /// Dual weights on the simplex.
    pub u: Vec<f64>,
    /// Running margins `ρ_r = ⟨A_r, X⟩`.
    pub rho: Vec<f64>,
    pub history: Vec<IterationRecord>,
    /// Objective before any basis was added (`log |S|`).
    pub initial_objective: f64,
    /// `λ_max(Â)` from the round that triggered convergence.
    pub final_lambda_max: Option<f64>,
    pub termination: Termination,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: MetricModel,
    pub state: TrainState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    pub w: f64,
    /// No sign change up to the cap; `w` is the cap.
    pub capped: bool,
}

/// Left side of the stationarity condition from log dual weights, divided by
/// a positive factor so only its sign and zero set are meaningful. Entries
/// with `log_u = −∞` are skipped.
fn stationarity_log(h: &[f64], log_u: &[f64], v: f64, w: f64) -> f64 {
    let live = || h.iter().zip(log_u).filter(|(_, l)| l.is_finite());
    let shift = live()
        .map(|(&hr, &l)| l - w * hr)
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return 0.0;
    }
    live()
        .map(|(&hr, &l)| (hr - v) * (l - w * hr - shift).exp())
        .sum()
}

/// `Σ_r (h_r − v) u_r exp(−w h_r)`, the derivative of the objective along the new coordinate.
pub fn stationarity_lhs(h: &[f64], u: &[f64], v: f64, w: f64) -> f64 {
    h.iter()
        .zip(u)
        .map(|(&hr, &ur)| (hr - v) * ur * (-w * hr).exp())
        .sum()
}

/// Bisection for the step weight.
///
/// The bracket starts at `[0, 1]` and doubles its upper end until the
/// stationarity condition turns non-positive. If that never happens below
/// `w_cap` the cap is returned with `capped` set.
pub fn line_search_w(h: &[f64], u: &[f64], v: f64, eps: f64, w_cap: f64) -> Result<LineSearch> {
    check_dim(h.len(), u.len())?;
    if u.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::input("dual weights must be finite and nonnegative"));
    }
    let log_u: Vec<f64> = u.iter().map(|x| x.ln()).collect();
    line_search_log(h, &log_u, v, eps, w_cap)
}

/// [`line_search_w`] on log dual weights, so that weights too small to
/// represent still steer the search.
fn line_search_log(h: &[f64], log_u: &[f64], v: f64, eps: f64, w_cap: f64) -> Result<LineSearch> {
    if h.is_empty() {
        return Err(Error::input("line search needs at least one constraint"));
    }
    if !(eps > 0.0) || !(w_cap > 0.0) {
        return Err(Error::input(
            "line search tolerance and cap must be positive",
        ));
    }
    let g = |w: f64| stationarity_log(h, log_u, v, w);
    let at_zero = g(0.0);
    if !(at_zero > 0.0) {
        return Err(Error::Logic(format!(
            "line search called with non-positive slope {at_zero:.3e} at w = 0"
        )));
    }

    let mut lo = 0.0;
    let mut hi = 1.0_f64.min(w_cap);
    while g(hi) > 0.0 {
        if hi >= w_cap {
            return Ok(LineSearch {
                w: w_cap,
                capped: true,
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(w_cap);
    }

    while hi - lo >= eps {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(LineSearch {
        w: 0.5 * (lo + hi),
        capped: false,
    })
}

/// `u'_r = u_r exp(−h_r w) / z`, exponentiated after subtracting the largest exponent.
pub fn update_dual(u: &[f64], h: &[f64], w: f64) -> Result<Vec<f64>> {
    check_dim(u.len(), h.len())?;
    if !(w >= 0.0) || !w.is_finite() {
        return Err(Error::input(format!(
            "step weight must be finite and nonnegative, got {w}"
        )));
    }
    let shift = h
        .iter()
        .zip(u)
        .filter(|(_, &ur)| ur > 0.0)
        .map(|(&hr, _)| -hr * w)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = h
        .iter()
        .zip(u)
        .map(|(&hr, &ur)| {
            if ur > 0.0 {
                ur * (-hr * w - shift).exp()
            } else {
                0.0
            }
        })
        .collect();
    let z = neumaier_sum(&out);
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Logic(format!("dual normalizer is {z}")));
    }
    out.iter_mut().for_each(|x| *x /= z);
    Ok(out)
}

/// Log dual weights `ℓ_r = −ρ_r − log Σ_k exp(−ρ_k)`.
///
/// Unrolling the update rule of [`update_dual`] from uniform weights gives
/// exactly this, so the trainer rebuilds the weights from its margins rather
/// than accumulating `−h_r w` in the log weights. With margins near 1e10 the
/// accumulated form drifts from `exp(−ρ)/Z` by more than 1e-8 relative.
fn log_dual_from_margins(rho: &[f64]) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = rho.iter().map(|r| -r).collect();
    let m = out
        .iter()
        .copied()
        .filter(|x| x.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::Logic("every dual weight vanished".into()));
    }
    // Shift first: with |m| near 1e18, `m + ln z` would absorb ln z entirely.
    out.iter_mut().for_each(|x| *x -= m);
    let terms: Vec<f64> = out.iter().map(|x| x.exp()).collect();
    let log_z = neumaier_sum(&terms).ln();
    out.iter_mut().for_each(|x| *x -= log_z);
    Ok(out)
}

pub(crate) fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `log Σ_r exp(−ρ_r) + v·w_sum`, computed with a max shift.
pub fn primal_objective(rho: &[f64], w_sum: f64, v: f64) -> Result<f64> {
    if rho.is_empty() {
        return Err(Error::input("objective needs at least one margin"));
    }
    if rho.iter().any(|r| !r.is_finite()) || !w_sum.is_finite() || !v.is_finite() {
        return Err(Error::input("objective inputs must be finite"));
    }
    let m = rho.iter().map(|r| -r).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = rho.iter().map(|r| (-r - m).exp()).sum();
    Ok(m + s.ln() + v * w_sum)
}

/// `exp(−ρ_r) / Σ_k exp(−ρ_k)`, the dual weights implied by the margins.
pub fn dual_from_margins(rho: &[f64]) -> Vec<f64> {
    let m = rho.iter().map(|r| -r).fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = rho.iter().map(|r| (-r - m).exp()).collect();
    let z = neumaier_sum(&e);
    e.into_iter().map(|x| x / z).collect()
}

/// No base can violate the dual constraint once `λ_max(Â) < v`.
pub fn check_convergence(lambda_max: f64, v: f64) -> bool {
    lambda_max < v
}

/// `max_j Σ_r u_r H_rj − v` over the stored bases; `−v` for an empty model.
pub fn dual_feasibility_gap(
    model: &MetricModel,
    factors: &[ConstraintFactors],
    u: &[f64],
    v: f64,
) -> Result<f64> {
    check_dim(factors.len(), u.len())?;
    let mut worst = f64::NEG_INFINITY;
    for b in model.basis() {
        let mut s = 0.0;
        for (f, &ur) in factors.iter().zip(u) {
            s += ur * f.eval_rank_one(&b.xi)?;
        }
        worst = worst.max(s);
    }
    Ok(if worst.is_finite() { worst - v } else { -v })
}

/// Read-only view of the solver after a completed round.
#[derive(Debug, Clone, Copy)]
pub struct Round<'a> {
    pub record: &'a IterationRecord,
    /// Dual weights after the update.
    pub u: &'a [f64],
    /// Margins after the update.
    pub rho: &'a [f64],
    /// Basis direction added this round.
    pub xi: &'a [f64],
}

pub fn train(factors: &[ConstraintFactors], cfg: &TrainConfig) -> Result<TrainReport> {
    train_with(factors, cfg, |_| {})
}

/// [`train`], calling `observe` after every completed round.
pub fn train_with<F: FnMut(Round<'_>)>(
    factors: &[ConstraintFactors],
    cfg: &TrainConfig,
    mut observe: F,
) -> Result<TrainReport> {
    cfg.validate()?;
    if factors.is_empty() {
        return Err(Error::input("constraint list is empty"));
    }
    let dim = factors[0].dim();
    for f in factors {
        check_dim(dim, f.dim())?;
    }
    let n = factors.len();
    let mut log_u = vec![-(n as f64).ln(); n];
    let mut u = vec![1.0 / n as f64; n];
    let mut rho = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut model = MetricModel::empty(
        dim,
        ModelMeta {
            config: Some(*cfg),
            ..ModelMeta::default()
        },
    );
    let mut history = Vec::new();
    let mut w_sum = 0.0;
    let initial_objective = primal_objective(&rho, 0.0, cfg.v)?;
    let eig_opts = EigenOptions {
        tol: cfg.eig_tol,
        max_iter: cfg.eig_max_iter,
        seed: cfg.seed,
    };
    let start = Instant::now();
    let mut termination = Termination::MaxIterations;
    let mut final_lambda_max = None;

    for iteration in 1..=cfg.max_iters {
        let wrap = |e: Error| Error::Training {
            iteration,
            source: Box::new(e),
        };
        let op = WeightedConstraintOperator::new(factors, &u).map_err(wrap)?;
        let pair = largest_eigenpair(&op, &eig_opts).map_err(wrap)?;
        if check_convergence(pair.value, cfg.v) {
            termination = Termination::Converged { iteration };
            final_lambda_max = Some(pair.value);
            break;
        }
        for (hr, f) in h.iter_mut().zip(factors) {
            *hr = f.eval_rank_one_unchecked(&pair.vector);
        }
        // λ ≥ v but the factored slope at zero can still round to ≤ 0 when λ ≈ v.
        if !(stationarity_log(&h, &log_u, cfg.v, 0.0) > 0.0) {
            termination = Termination::Converged { iteration };
            final_lambda_max = Some(pair.value);
            break;
        }
        let step = line_search_log(&h, &log_u, cfg.v, cfg.bisect_tol, cfg.w_cap).map_err(wrap)?;
        for (r, hr) in rho.iter_mut().zip(&h) {
            *r += step.w * hr;
        }
        log_u = log_dual_from_margins(&rho).map_err(wrap)?;
        u = log_u.iter().map(|l| l.exp()).collect();
        w_sum += step.w;
        let objective = primal_objective(&rho, w_sum, cfg.v).map_err(wrap)?;
        let record = IterationRecord {
            iteration,
            lambda_max: pair.value,
            w: step.w,
            objective,
            elapsed_secs: start.elapsed().as_secs_f64(),
            capped: step.capped,
        };
        observe(Round {
            record: &record,
            u: &u,
            rho: &rho,
            xi: &pair.vector,
        });
        model.push_basis(BasisElement {
            w: step.w,
            xi: pair.vector,
        });
        history.push(record);
    }

    model.meta.iterations = model.basis().len();
    model.meta.converged = matches!(termination, Termination::Converged { .. });
    Ok(TrainReport {
        model,
        state: TrainState {
            u,
            rho,
            history,
            initial_objective,
            final_lambda_max,
            termination,
        },
    })
}
