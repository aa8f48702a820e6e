//! APIG-FP: the APIG loop on `f = -d`, `h = indicator(x >= 0)`, where the oracle
//! accuracy is steered through the fixed-point tolerance `res` and the unknown error
//! constants `C_i`, `C~_i` grow by `varrho` on every rejected trial.

use serde::{Deserialize, Serialize};

use super::dual::{evaluate_dual, evaluate_dual_value, reference_dual, DualEval};
use super::fixed_point::{FpState, DEFAULT_FP_CAP};
use super::instance::NetworkInstance;
use crate::apig::{abb_stepsize, upsilon1, ApigResult, IterationRecord, Status};
use crate::oracle::EtaSequence;
use crate::prox::{gradient_mapping, ProxFriendly};
use crate::{Error, Result, Vector};

/// Error term used by the stopping test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationBound {
    /// `C_i sqrt(eta_g^2 + b^2 |x^{i+1} - x^i|^2)`, the requested accuracy.
    Target,
    /// `C_i (r1 + r2)` with the Thompson residuals the anchor solve actually reached.
    #[default]
    Achieved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApigFpConfig {
    pub theta: f64,
    pub alpha: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda0: f64,
    pub epsilon: f64,
    pub max_outer_iters: usize,
    pub ls_cap: Option<usize>,
    pub b_tilde: f64,
    pub eta_g_tilde: EtaSequence,
    pub eta_f_tilde: EtaSequence,
    pub varrho: f64,
    pub c0: f64,
    pub c_tilde0: f64,
    pub fp_max_iters: usize,
    pub termination: TerminationBound,
    /// Smallest `res` ever requested from the fixed-point solver.
    pub res_floor: f64,
    /// Runs whose multipliers grow past this norm stop with [`Error::DualUnbounded`].
    pub iterate_limit: f64,
}

impl Default for ApigFpConfig {
    fn default() -> Self {
        Self::absolute(2.0, 1.2)
    }
}

impl ApigFpConfig {
    fn base(b_tilde: f64, eta_g_tilde: EtaSequence, eta_f_tilde: EtaSequence) -> Self {
        ApigFpConfig {
            theta: 1e-4,
            alpha: 0.25,
            lambda_min: 1e-10,
            lambda_max: 1e10,
            lambda0: 1.0,
            epsilon: 1e-6,
            max_outer_iters: 5_000,
            ls_cap: None,
            b_tilde,
            eta_g_tilde,
            eta_f_tilde,
            varrho: 1.1,
            c0: 100.0,
            c_tilde0: 100.0,
            fp_max_iters: DEFAULT_FP_CAP,
            termination: TerminationBound::default(),
            res_floor: 1e-13,
            iterate_limit: 1e8,
        }
    }

    /// APIG-FP-A: `b~ = 0`, `eta~_g = eta~_f = 10^-d1 (i+1)^-d2`.
    pub fn absolute(delta1: f64, delta2: f64) -> Self {
        let eta = EtaSequence::from_deltas(delta1, delta2);
        Self::base(0.0, eta, eta)
    }

    /// APIG-FP-R: `b~ = 10^-d3`, `eta~_g = 0`, `eta~_f = 10^-d1 (i+1)^-d2`.
    pub fn relative(delta1: f64, delta2: f64, delta3: f64) -> Self {
        Self::base(10f64.powf(-delta3), EtaSequence::Zero, EtaSequence::from_deltas(delta1, delta2))
    }

    /// The PG baseline: every solve at the constant tolerance `res`.
    pub fn high_precision(res: f64) -> Self {
        let eta = EtaSequence::Constant { value: res };
        Self::base(0.0, eta, eta)
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.theta) || !open_unit(self.alpha) {
            return Err(Error::invalid("theta and alpha must lie in (0, 1)"));
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
        if !(self.varrho > 1.0) {
            return Err(Error::invalid(format!("varrho must exceed 1, got {}", self.varrho)));
        }
        if !(self.c0 > 0.0 && self.c_tilde0 > 0.0) {
            return Err(Error::invalid("initial error constants must be positive"));
        }
        if !(self.b_tilde >= 0.0) || !self.b_tilde.is_finite() {
            return Err(Error::invalid("b_tilde must be finite and nonnegative"));
        }
        for seq in [&self.eta_g_tilde, &self.eta_f_tilde] {
            if seq.at(0) < 0.0 || !seq.at(0).is_finite() {
                return Err(Error::invalid("eta sequences must be finite and nonnegative"));
            }
        }
        if !(self.iterate_limit > 0.0) {
            return Err(Error::invalid("iterate_limit must be positive"));
        }
        if !(self.res_floor > 0.0) || self.fp_max_iters == 0 {
            return Err(Error::invalid("res_floor and fp_max_iters must be positive"));
        }
        Ok(())
    }

    pub fn ls_cap(&self) -> usize {
        self.ls_cap
            .unwrap_or_else(|| ((self.lambda_min / self.lambda_max).ln() / self.alpha.ln()).ceil() as usize + 80)
    }

    /// `res` of iteration `i` for a trial displacement `d`, floored at `res_floor`.
    pub fn res(&self, i: usize, displacement: f64) -> f64 {
        let g = self.eta_g_tilde.at(i);
        let target = (g * g + (self.b_tilde * displacement).powi(2)).sqrt().min(self.eta_f_tilde.at(i));
        target.max(self.res_floor)
    }
}

/// Extra per-iteration data of an APIG-FP run, aligned with `result.trace`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpIterationInfo {
    pub c: f64,
    pub c_tilde: f64,
    pub res: f64,
    pub anchor_residual: f64,
    pub dual_value: f64,
}

#[derive(Debug, Clone)]
pub struct ApigFpResult {
    pub result: ApigResult,
    pub info: Vec<FpIterationInfo>,
    /// Fixed-point state of the last anchor solve.
    pub state: FpState,
    pub total_fp_iters: u64,
    pub max_iterate_norm: f64,
    /// Number of ABB stepsizes that fell outside `[lambda_min, lambda_max]`.
    pub abb_clamp_events: usize,
}

impl ApigFpResult {
    pub fn status(&self) -> Status {
        self.result.status
    }

    pub fn x_final(&self) -> &Vector {
        &self.result.x_final
    }

    pub fn outer_iters(&self) -> usize {
        self.result.trace.len()
    }

    pub fn mean_fp_per_outer(&self) -> f64 {
        if self.result.trace.is_empty() {
            0.0
        } else {
            self.total_fp_iters as f64 / self.result.trace.len() as f64
        }
    }
}

fn project_nonneg(v: Vector) -> Vector {
    v.map(|x| x.max(0.0))
}

struct Anchor {
    eval: DualEval,
    gradient: Vector,
}

impl Anchor {
    fn achieved(&self) -> f64 {
        self.eval.state.res_beta + self.eval.state.res_p
    }

    fn fits(&self, res: f64) -> bool {
        self.eval.state.res_beta <= res / 2.0 && self.eval.state.res_p <= res / 2.0
    }
}

/// Runs APIG-FP on the dual of the beamforming problem from `x0 >= 0`.
pub fn apig_fp_run(inst: &NetworkInstance, config: &ApigFpConfig, x0: &Vector) -> Result<ApigFpResult> {
    config.validate()?;
    inst.check_dual_point(x0)?;
    let cap = config.fp_max_iters;
    let ls_cap = config.ls_cap();
    let h = ProxFriendly::IndicatorNonneg;

    let mut x = x0.clone();
    let mut warm = FpState::cold(inst.k());
    let mut c = config.c0;
    let mut c_tilde = config.c_tilde0;
    let mut lambda_init = config.lambda0;
    let mut prev: Option<(Vector, Vector)> = None;
    let mut trace = Vec::new();
    let mut info = Vec::new();
    let mut total_fp: u64 = 0;
    let mut max_norm = x.norm();
    let mut clamp_events = 0;

    for i in 0..config.max_outer_iters {
        let mut cost: u64 = 0;
        let mut anchor: Option<Anchor> = None;
        let mut ell = 0;

        let accepted = loop {
            let lambda = lambda_init * config.alpha.powi(ell as i32);

            // g^i depends on res, which depends on |x^i(lambda) - x^i|; refine until consistent.
            let mut res = config.res(i, f64::INFINITY);
            let mut step = None;
            for _ in 0..30 {
                let current = match anchor.take() {
                    Some(a) if a.fits(res) => a,
                    prior => {
                        let start = prior.as_ref().map_or(&warm, |a| &a.eval.state);
                        let eval = evaluate_dual(inst, &x, start, res, cap)?;
                        cost += eval.fp_iters as u64;
                        let gradient = -eval.gradient.clone().expect("two-stage solve returns a gradient");
                        Anchor { eval, gradient }
                    }
                };
                let gm = gradient_mapping(&h, lambda, &x, &current.gradient)?;
                let required = config.res(i, gm.displacement());
                let fits = current.fits(required);
                anchor = Some(current);
                step = Some((gm, required));
                if fits {
                    break;
                }
                res = required;
            }
            let (gm, res) = step.expect("consistency loop runs at least once");
            let a = anchor.as_ref().expect("anchor computed above");
            let disp = gm.displacement();

            let trial = evaluate_dual_value(inst, &gm.prox_point, &a.eval.state, res, cap)?;
            cost += trial.fp_iters as u64;
            let f_cur = -a.eval.value;
            let f_trial = -trial.value;

            let eta_g = config.eta_g_tilde.at(i);
            let eta_f = config.eta_f_tilde.at(i);
            let grad_part = if eta_g == 0.0 {
                0.0
            } else {
                upsilon1(lambda, 0.0, c * config.b_tilde) * (c * eta_g).powi(2)
            };
            let nu = grad_part + (c + c_tilde) * eta_f;
            if f_trial <= f_cur - config.theta * disp * disp / lambda + nu {
                break Some((gm, res, nu));
            }
            c *= config.varrho;
            c_tilde *= config.varrho;
            ell += 1;
            if ell > ls_cap {
                break None;
            }
        };

        total_fp += cost;
        let anchor = anchor.expect("anchor computed in the line search");
        let Some((gm, res, nu)) = accepted else {
            let x_next = x.clone();
            return Ok(ApigFpResult {
                result: ApigResult { x_final: x, x_next, status: Status::LsFailure, trace },
                info,
                state: anchor.eval.state,
                total_fp_iters: total_fp,
                max_iterate_norm: max_norm,
                abb_clamp_events: clamp_events,
            });
        };

        let disp = gm.displacement();
        let error_term = match config.termination {
            TerminationBound::Target => {
                let eta_g = config.eta_g_tilde.at(i);
                (eta_g * eta_g + (config.b_tilde * disp).powi(2)).sqrt()
            }
            TerminationBound::Achieved => anchor.achieved(),
        };
        let delta = gm.norm() + c * error_term;
        trace.push(IterationRecord {
            i,
            x: x.clone(),
            lambda: gm.stepsize,
            lambda_init,
            ls_trials: ell,
            g_mapped_norm: gm.norm(),
            delta_g: delta,
            nu,
            f_inexact: -anchor.eval.value,
            inner_cost: cost,
        });
        info.push(FpIterationInfo {
            c,
            c_tilde,
            res,
            anchor_residual: anchor.achieved(),
            dual_value: anchor.eval.value,
        });
        warm = anchor.eval.state.clone();

        if delta <= config.epsilon {
            return Ok(ApigFpResult {
                result: ApigResult { x_final: x, x_next: gm.prox_point, status: Status::Converged, trace },
                info,
                state: warm,
                total_fp_iters: total_fp,
                max_iterate_norm: max_norm,
                abb_clamp_events: clamp_events,
            });
        }

        lambda_init = match &prev {
            Some((x_prev, g_prev)) => {
                let abb = abb_stepsize(&(&x - x_prev), &(&anchor.gradient - g_prev), i, config.lambda_max);
                if abb < config.lambda_min || abb > config.lambda_max {
                    clamp_events += 1;
                }
                abb.clamp(config.lambda_min, config.lambda_max)
            }
            None => config.lambda0,
        };
        prev = Some((x, anchor.gradient));
        x = gm.prox_point;
        max_norm = max_norm.max(x.norm());
        if max_norm > config.iterate_limit {
            return Err(Error::DualUnbounded { iteration: i, norm: max_norm, limit: config.iterate_limit });
        }
    }

    let x_next = x.clone();
    Ok(ApigFpResult {
        result: ApigResult { x_final: x, x_next, status: Status::MaxIters, trace },
        info,
        state: warm,
        total_fp_iters: total_fp,
        max_iterate_norm: max_norm,
        abb_clamp_events: clamp_events,
    })
}

/// High-precision dual optimum: APIG-FP at constant `res = 1e-13` with tight stopping.
pub fn reference_solve(inst: &NetworkInstance) -> Result<ApigFpResult> {
    let config = ApigFpConfig {
        epsilon: 1e-9,
        termination: TerminationBound::Target,
        max_outer_iters: 20_000,
        fp_max_iters: super::dual::REFERENCE_CAP,
        ..ApigFpConfig::high_precision(super::dual::REFERENCE_RES)
    };
    apig_fp_run(inst, &config, &Vector::zeros(inst.m()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsgRecord {
    pub i: usize,
    pub x: Vector,
    pub dual_value: f64,
    pub fp_iters: usize,
}

/// Projected subgradient ascent `x <- max(0, x + lambda (i+1)^-delta grad d(x))`.
///
/// Gradients come from fixed-point solves at tolerance `res`. Returns one record
/// per gradient evaluation.
pub fn psg_run(
    inst: &NetworkInstance,
    x0: &Vector,
    lambda_base: f64,
    delta: f64,
    max_iters: usize,
    res: f64,
) -> Result<Vec<PsgRecord>> {
    if !(lambda_base > 0.0) || !(delta > 0.0) {
        return Err(Error::invalid("PSG needs lambda > 0 and delta > 0"));
    }
    inst.check_dual_point(x0)?;
    let mut x = x0.clone();
    let mut warm = FpState::cold(inst.k());
    let mut out = Vec::with_capacity(max_iters);
    for i in 0..max_iters {
        let eval = evaluate_dual(inst, &x, &warm, res, DEFAULT_FP_CAP)?;
        let g = eval.gradient.clone().expect("two-stage solve returns a gradient");
        out.push(PsgRecord { i, x: x.clone(), dual_value: eval.value, fp_iters: eval.fp_iters });
        let step = lambda_base * ((i + 1) as f64).powf(-delta);
        x = project_nonneg(&x + g * step);
        warm = eval.state;
    }
    Ok(out)
}

/// Quality of a dual point against high-precision references.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// `d(x)` at high precision.
    pub value: f64,
    /// `|d(x) - d_ref|` with `d(x)` evaluated at high precision.
    pub value_gap: f64,
    /// `|G_lambda(x, -grad d(x))|` with the high-precision gradient.
    pub stationarity: f64,
}

pub fn assess(inst: &NetworkInstance, x: &Vector, d_ref: f64, lambda: f64) -> Result<QualityReport> {
    let eval = reference_dual(inst, x)?;
    let g = -eval.gradient.expect("two-stage solve returns a gradient");
    let gm = gradient_mapping(&ProxFriendly::IndicatorNonneg, lambda, x, &g)?;
    Ok(QualityReport { value: eval.value, value_gap: (eval.value - d_ref).abs(), stationarity: gm.norm() })
}
