use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fixed_point::{solve_fp, solve_fp_stage1, FpState};
use super::instance::{CompressionModel, NetworkInstance};
use super::mappings::beamformers;
use crate::oracle::{InexactEval, SmoothOracle};
use crate::{Result, Vector};

/// Tolerance used for reference ("exact") dual evaluations.
pub const REFERENCE_RES: f64 = 1e-13;
/// Iteration cap used for reference evaluations.
pub const REFERENCE_CAP: usize = 1_000_000;

/// `d~(beta, x) = sum_k beta_k sigma_k^2 - sum_m x_m Pbar_m`.
pub fn dual_value_tilde(inst: &NetworkInstance, beta: &Vector, x: &Vector) -> f64 {
    beta.dot(inst.sigma2()) - x.dot(inst.p_bar())
}

/// `g(beta, p, x)_m = sum_k p_k |u_k^(m)|^2 + Q_mm - Pbar_m`, the realized minus budgeted power.
pub fn dual_gradient_tilde(inst: &NetworkInstance, beta: &Vector, p: &Vector, x: &Vector) -> Result<Vector> {
    inst.check_user_vector(p, "p")?;
    let u = beamformers(inst, x, beta)?;
    let mut g = realized_powers(&u, p) - inst.p_bar();
    if let Some(q) = inst.capacity().covariance(beta, x) {
        for m in 0..inst.m() {
            g[m] += q[(m, m)].re;
        }
    }
    Ok(g)
}

fn realized_powers(u: &DMatrix<Complex64>, p: &Vector) -> Vector {
    Vector::from_fn(u.nrows(), |m, _| (0..u.ncols()).map(|k| p[k] * u[(m, k)].norm_sqr()).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalSolution {
    /// Column `k` is `v_k = sqrt(p_k) u_k`.
    pub beamformers: DMatrix<Complex64>,
    pub powers: Vector,
    pub sinrs: Vector,
}

impl PrimalSolution {
    pub fn total_power(&self) -> f64 {
        self.powers.sum()
    }
}

/// Downlink beamformers, per-antenna powers and SINRs from the fixed points.
pub fn recover_primal(inst: &NetworkInstance, beta: &Vector, p: &Vector, x: &Vector) -> Result<PrimalSolution> {
    inst.check_user_vector(p, "p")?;
    let u = beamformers(inst, x, beta)?;
    let mut v = u.clone();
    for (k, mut col) in v.column_iter_mut().enumerate() {
        col *= Complex64::new(p[k].sqrt(), 0.0);
    }
    let powers = realized_powers(&u, p);
    let cross = inst.channels().adjoint() * &v;
    let k = inst.k();
    let sinrs = Vector::from_fn(k, |i, _| {
        let interference: f64 = (0..k).filter(|&j| j != i).map(|j| cross[(i, j)].norm_sqr()).sum();
        cross[(i, i)].norm_sqr() / (interference + inst.sigma2()[i])
    });
    Ok(PrimalSolution { beamformers: v, powers, sinrs })
}

/// An inexact evaluation of the dual at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEval {
    pub value: f64,
    pub gradient: Option<Vector>,
    pub state: FpState,
    pub fp_iters: usize,
}

/// Dual value and gradient from a two-stage solve with tolerance `res`.
pub fn evaluate_dual(inst: &NetworkInstance, x: &Vector, warm: &FpState, res: f64, cap: usize) -> Result<DualEval> {
    let (state, fp_iters) = solve_fp(inst, x, warm, res, cap)?;
    let value = dual_value_tilde(inst, &state.beta, x);
    let gradient = dual_gradient_tilde(inst, &state.beta, &state.p, x)?;
    Ok(DualEval { value, gradient: Some(gradient), state, fp_iters })
}

/// Dual value only, which needs stage 1 alone.
pub fn evaluate_dual_value(inst: &NetworkInstance, x: &Vector, warm: &FpState, res: f64, cap: usize) -> Result<DualEval> {
    let s1 = solve_fp_stage1(inst, x, &warm.beta, res / 2.0, cap)?;
    let value = dual_value_tilde(inst, &s1.value, x);
    let state = FpState { beta: s1.value, p: warm.p.clone(), res_beta: s1.residual, res_p: f64::INFINITY };
    Ok(DualEval { value, gradient: None, state, fp_iters: s1.iters })
}

/// High-precision dual value and gradient, cold-started.
pub fn reference_dual(inst: &NetworkInstance, x: &Vector) -> Result<DualEval> {
    evaluate_dual(inst, x, &FpState::cold(inst.k()), REFERENCE_RES, REFERENCE_CAP)
}

/// Minimization oracle for `f = -d` at a fixed FP tolerance, with warm starts.
#[derive(Debug, Clone)]
pub struct DualOracle<'a> {
    inst: &'a NetworkInstance,
    res: f64,
    cap: usize,
    warm: FpState,
    fp_iters: u64,
}

impl<'a> DualOracle<'a> {
    pub fn new(inst: &'a NetworkInstance, res: f64, cap: usize) -> Self {
        DualOracle { inst, res, cap, warm: FpState::cold(inst.k()), fp_iters: 0 }
    }

    pub fn total_fp_iters(&self) -> u64 {
        self.fp_iters
    }

    pub fn state(&self) -> &FpState {
        &self.warm
    }
}

impl SmoothOracle for DualOracle<'_> {
    fn dim(&self) -> usize {
        self.inst.m()
    }

    fn anchor(&mut self, x: &Vector, _iteration: usize, _lambda0: f64) -> Result<InexactEval> {
        let eval = evaluate_dual(self.inst, x, &self.warm, self.res, self.cap)?;
        self.warm = eval.state;
        self.fp_iters += eval.fp_iters as u64;
        Ok(InexactEval { f_value: -eval.value, gradient: eval.gradient.map(|g| -g), cost: eval.fp_iters as u64 })
    }

    fn trial(&mut self, x_trial: &Vector, _iteration: usize, _lambda: f64, _displacement: f64) -> Result<InexactEval> {
        let eval = evaluate_dual_value(self.inst, x_trial, &self.warm, self.res, self.cap)?;
        self.fp_iters += eval.fp_iters as u64;
        Ok(InexactEval { f_value: -eval.value, gradient: None, cost: eval.fp_iters as u64 })
    }
}
