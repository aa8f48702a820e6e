//! The adaptive proximal inexact gradient driver.
//!
//! Each outer iteration `i`:
//!
//! 1. queries `(f_i, g^i)` at `x^i`,
//! 2. backtracks `lambda = lambda_i^(0) * alpha^l` until the relaxed sufficient-decrease
//!    test ([`LineSearch::B1`] or [`LineSearch::B2`]) accepts `x^i(lambda)`,
//! 3. moves to `x^{i+1} = prox(h, lambda_i, x^i - lambda_i g^i)`,
//! 4. stops with `x^i` once `Delta_i <= epsilon` (see [`termination_delta`]),
//! 5. sets the next initial trial stepsize from the alternate Barzilai-Borwein rule.
//!
//! The relaxation `nu_i` in the line-search tests absorbs oracle errors, so the
//! accepted stepsizes stay bounded away from zero even with noisy evaluations.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::oracle::{ErrorBudget, SmoothOracle};
use crate::prox::{gradient_mapping, Prox};
use crate::{Error, Result, Vector};

/// Sufficient-decrease test used by the backtracking loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineSearch {
    /// Decrease of `f + h` by `theta / lambda * |x(lambda) - x|^2`, relaxed by `nu_i`.
    B1,
    /// Quadratic upper model of `f` at `x`, relaxed by `nu_i`.
    B2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApigConfig {
    pub theta: f64,
    pub alpha: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Initial trial stepsize for iterations 0 and 1.
    pub lambda0: f64,
    pub epsilon: f64,
    pub line_search: LineSearch,
    pub budget: ErrorBudget,
    pub max_outer_iters: usize,
    /// Backtracking cap per iteration; defaults to `ceil(log_alpha(lambda_min / lambda_max)) + 80`.
    pub ls_cap: Option<usize>,
}

impl Default for ApigConfig {
    fn default() -> Self {
        ApigConfig {
            theta: 1e-4,
            alpha: 0.25,
            lambda_min: 1e-10,
            lambda_max: 1e10,
            lambda0: 1.0,
            epsilon: 1e-6,
            line_search: LineSearch::B1,
            budget: ErrorBudget::exact(),
            max_outer_iters: 10_000,
            ls_cap: None,
        }
    }
}

impl ApigConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.theta) {
            return Err(Error::invalid(format!("theta must lie in (0, 1), got {}", self.theta)));
        }
        if !open_unit(self.alpha) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.lambda_min > 0.0 && self.lambda_min < self.lambda_max && self.lambda_max.is_finite()) {
            return Err(Error::invalid("need 0 < lambda_min < lambda_max < inf"));
        }
        if !(self.lambda0 >= self.lambda_min && self.lambda0 <= self.lambda_max) {
            return Err(Error::invalid("lambda0 must lie in [lambda_min, lambda_max]"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        let (a, c) = (self.budget.a(), self.budget.c());
        if c > self.theta / 4.0 {
            return Err(Error::invalid(format!("budget c = {c} exceeds theta/4 = {}", self.theta / 4.0)));
        }
        let compatible = match self.line_search {
            LineSearch::B1 => a < 1.0 - 2.0 * c - self.theta,
            LineSearch::B2 => a < 1.0 - 4.0 * c,
        };
        if !compatible {
            return Err(Error::invalid(format!(
                "budget (a = {a}, c = {c}) incompatible with {:?} at theta = {}",
                self.line_search, self.theta
            )));
        }
        Ok(())
    }

    pub fn ls_cap(&self) -> usize {
        self.ls_cap.unwrap_or_else(|| {
            ((self.lambda_min / self.lambda_max).ln() / self.alpha.ln()).ceil() as usize + 80
        })
    }

    /// The `theta` the stepsize analysis uses: the configured one for B1 and 1/2 for B2.
    pub fn effective_theta(&self) -> f64 {
        match self.line_search {
            LineSearch::B1 => self.theta,
            LineSearch::B2 => 0.5,
        }
    }
}

/// `2 (1 - theta - a - 2c) / (L + 2b + 1)`, below which every trial stepsize passes the line search.
pub fn stepsize_upper_bound(theta: f64, a: f64, b: f64, c: f64, lipschitz: f64) -> f64 {
    2.0 * (1.0 - theta - a - 2.0 * c) / (lipschitz + 2.0 * b + 1.0)
}

/// `min(lambda_min, alpha * stepsize_upper_bound)`: no accepted stepsize falls below this
/// when the oracle honors its budget.
pub fn stepsize_floor(config: &ApigConfig, lipschitz: f64) -> f64 {
    let b = &config.budget;
    let upper = stepsize_upper_bound(config.effective_theta(), b.a(), b.b(), b.c(), lipschitz);
    config.lambda_min.min(config.alpha * upper)
}

/// Largest number of backtracks the stepsize analysis allows.
pub fn max_backtracks(config: &ApigConfig, lipschitz: f64) -> usize {
    let floor = stepsize_floor(config, lipschitz);
    ((config.lambda_max / floor).ln() / (1.0 / config.alpha).ln()).ceil() as usize
}

/// `1/2` when `a = b = 0`, else `min(lambda / (2a), 1 / (2b))` with zero coefficients read as `+inf`.
pub fn upsilon1(lambda: f64, a: f64, b: f64) -> f64 {
    if a * a + b * b == 0.0 {
        return 0.5;
    }
    let from_a = if a == 0.0 { f64::INFINITY } else { lambda / (2.0 * a) };
    let from_b = if b == 0.0 { f64::INFINITY } else { 1.0 / (2.0 * b) };
    from_a.min(from_b)
}

/// `nu_i = upsilon1(lambda) * eta_g(i)^2 + 2 eta_f(i)`.
pub fn relaxation_nu(lambda: f64, budget: &ErrorBudget, i: usize) -> f64 {
    let eta_g = budget.eta_g(i);
    let gradient_part = if eta_g == 0.0 {
        0.0
    } else {
        upsilon1(lambda, budget.a(), budget.b()) * eta_g * eta_g
    };
    gradient_part + 2.0 * budget.eta_f(i)
}

#[allow(clippy::too_many_arguments)]
pub fn check_ls_b1(
    f_trial: f64,
    h_trial: f64,
    f_cur: f64,
    h_cur: f64,
    displacement: f64,
    lambda: f64,
    theta: f64,
    nu: f64,
) -> bool {
    f_trial + h_trial <= f_cur + h_cur - theta / lambda * displacement * displacement + nu
}

/// `step` is `x(lambda) - x`.
pub fn check_ls_b2(f_trial: f64, f_cur: f64, g: &Vector, step: &Vector, lambda: f64, nu: f64) -> bool {
    f_trial <= f_cur + g.dot(step) + step.norm_squared() / (2.0 * lambda) + nu
}

/// Alternate Barzilai-Borwein stepsize from `s = x^i - x^{i-1}` and `y = g^i - g^{i-1}`.
///
/// Even `i` uses `|s|^2 / |s'y|`, odd `i` uses `|s'y| / |y|^2`. A vanishing denominator
/// returns `fallback` so that backtracking takes over.
pub fn abb_stepsize(s: &Vector, y: &Vector, i: usize, fallback: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let sy = s.dot(y).abs();
    let (num, den) = if i.is_multiple_of(2) {
        (s.norm_squared(), sy)
    } else {
        (sy, y.norm_squared())
    };
    if den < TINY || !(num / den).is_finite() {
        fallback
    } else {
        num / den
    }
}

/// Consecutive iterates and gradients feeding the ABB rule.
#[derive(Debug, Clone, Copy)]
pub struct StepPair<'a> {
    pub x_prev: &'a Vector,
    pub x_cur: &'a Vector,
    pub g_prev: &'a Vector,
    pub g_cur: &'a Vector,
}

/// `lambda_i^(0)`: `lambda0` for `i <= 1`, else the ABB stepsize of iteration `i - 1`
/// (computed from inexact gradients) clamped to `[lambda_min, lambda_max]`.
pub fn initial_trial_stepsize(pair: Option<StepPair<'_>>, config: &ApigConfig, i: usize) -> f64 {
    match pair {
        Some(p) if i >= 2 => {
            let s = p.x_cur - p.x_prev;
            let y = p.g_cur - p.g_prev;
            let abb = abb_stepsize(&s, &y, i - 1, config.lambda_max);
            clamp_trial(abb, config)
        }
        _ => config.lambda0,
    }
}

pub fn clamp_trial(lambda: f64, config: &ApigConfig) -> f64 {
    lambda.max(config.lambda_min).min(config.lambda_max)
}

/// `Delta_i = |G_lambda(x^i, g^i)| + sqrt(eta_g(i)^2 + (a^2 / lambda^2 + b^2) |x^{i+1} - x^i|^2)`,
/// an upper bound on the exact-gradient stationarity residual at `x^i`.
pub fn termination_delta(g_mapped_norm: f64, budget: &ErrorBudget, i: usize, lambda: f64, displacement: f64) -> f64 {
    g_mapped_norm + budget.gradient_bound_sq(i, lambda, displacement).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIters,
    LsFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub i: usize,
    pub x: Vector,
    /// Accepted stepsize `lambda_i`.
    pub lambda: f64,
    pub lambda_init: f64,
    /// Number of backtracks `l`.
    pub ls_trials: usize,
    pub g_mapped_norm: f64,
    pub delta_g: f64,
    pub nu: f64,
    pub f_inexact: f64,
    pub inner_cost: u64,
}

#[derive(Debug, Clone)]
pub struct ApigResult {
    /// The returned point: `x^i` of the terminating iteration, or the last iterate otherwise.
    pub x_final: Vector,
    /// `x^{i+1}` computed in the last recorded iteration.
    pub x_next: Vector,
    pub status: Status,
    pub trace: Vec<IterationRecord>,
}

impl ApigResult {
    pub fn outer_iters(&self) -> usize {
        self.trace.len()
    }

    pub fn total_inner_cost(&self) -> u64 {
        self.trace.iter().map(|r| r.inner_cost).sum()
    }

    /// The accepted stepsize of the last iteration.
    pub fn final_lambda(&self) -> Option<f64> {
        self.trace.last().map(|r| r.lambda)
    }
}

/// Runs the APIG loop from `x0`.
///
/// A starting point outside `dom(h)` is projected once with a tiny prox step.
pub fn run<O, H>(oracle: &mut O, h: &H, config: &ApigConfig, x0: &Vector) -> Result<ApigResult>
where
    O: SmoothOracle + ?Sized,
    H: Prox + ?Sized,
{
    config.validate()?;
    if x0.len() != oracle.dim() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim(),
            found: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("starting point has non-finite entries"));
    }
    let mut x = if h.value(x0).is_finite() {
        x0.clone()
    } else {
        h.prox(1e-12, x0)?
    };

    let ls_cap = config.ls_cap();
    let budget = &config.budget;
    let mut trace = Vec::new();
    let mut lambda_init = config.lambda0;
    let mut prev: Option<(Vector, Vector)> = None;

    for i in 0..config.max_outer_iters {
        let anchor = oracle.anchor(&x, i, lambda_init)?;
        let g = anchor
            .gradient
            .ok_or_else(|| Error::invalid("oracle anchor returned no gradient"))?;
        if g.len() != x.len() || g.iter().any(|v| !v.is_finite()) || !anchor.f_value.is_finite() {
            return Err(Error::invalid(format!("oracle returned a non-finite evaluation at iteration {i}")));
        }
        let f_cur = anchor.f_value;
        let h_cur = h.value(&x);
        let mut cost = anchor.cost;

        let mut ell = 0;
        let (gm, nu) = loop {
            let lambda = lambda_init * config.alpha.powi(ell as i32);
            let gm = gradient_mapping(h, lambda, &x, &g)?;
            let step = &gm.prox_point - &x;
            let disp = step.norm();
            let trial = oracle.trial(&gm.prox_point, i, lambda, disp)?;
            cost += trial.cost;
            let nu = relaxation_nu(lambda, budget, i);
            let accepted = match config.line_search {
                LineSearch::B1 => {
                    let h_trial = h.value(&gm.prox_point);
                    check_ls_b1(trial.f_value, h_trial, f_cur, h_cur, disp, lambda, config.theta, nu)
                }
                LineSearch::B2 => check_ls_b2(trial.f_value, f_cur, &g, &step, lambda, nu),
            };
            if accepted {
                break (gm, nu);
            }
            ell += 1;
            if ell > ls_cap {
                let x_next = x.clone();
                return Ok(ApigResult {
                    x_final: x,
                    x_next,
                    status: Status::LsFailure,
                    trace,
                });
            }
        };

        let lambda = gm.stepsize;
        let disp = gm.displacement();
        let delta = termination_delta(gm.norm(), budget, i, lambda, disp);
        trace.push(IterationRecord {
            i,
            x: x.clone(),
            lambda,
            lambda_init,
            ls_trials: ell,
            g_mapped_norm: gm.norm(),
            delta_g: delta,
            nu,
            f_inexact: f_cur,
            inner_cost: cost,
        });
        if delta <= config.epsilon {
            return Ok(ApigResult {
                x_final: x,
                x_next: gm.prox_point,
                status: Status::Converged,
                trace,
            });
        }

        let next_init = match &prev {
            Some((x_prev, g_prev)) => initial_trial_stepsize(
                Some(StepPair {
                    x_prev,
                    x_cur: &x,
                    g_prev,
                    g_cur: &g,
                }),
                config,
                i + 1,
            ),
            None => config.lambda0,
        };
        lambda_init = next_init;
        prev = Some((x, g));
        x = gm.prox_point;
    }

    Ok(ApigResult {
        x_final: x.clone(),
        x_next: x,
        status: Status::MaxIters,
        trace,
    })
}

#[derive(Serialize)]
struct TraceRow {
    i: usize,
    lambda: f64,
    ls_trials: usize,
    g_mapped_norm: f64,
    delta_g: f64,
    nu: f64,
    f_inexact: f64,
    inner_cost: u64,
}

/// Writes the trace as CSV with columns
/// `i, lambda, ls_trials, g_mapped_norm, delta_g, nu, f_inexact, inner_cost`.
pub fn write_trace_csv<W: Write>(trace: &[IterationRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in trace {
        w.serialize(TraceRow {
            i: r.i,
            lambda: r.lambda,
            ls_trials: r.ls_trials,
            g_mapped_norm: r.g_mapped_norm,
            delta_g: r.delta_g,
            nu: r.nu,
            f_inexact: r.f_inexact,
            inner_cost: r.inner_cost,
        })?;
    }
    if trace.is_empty() {
        w.write_record(["i", "lambda", "ls_trials", "g_mapped_norm", "delta_g", "nu", "f_inexact", "inner_cost"])?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<trace writer>".into(),
        source: e,
    })?;
    Ok(())
}
