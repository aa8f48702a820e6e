//! Two-stage fixed-point solve of the dual subproblem at a given `x`.
//!
//! Stage 1 iterates `beta <- I_x(beta)` until the Thompson step `mu(beta^(i), beta^(i+1))`
//! drops to `res1`. Stage 2 freezes the beamformers at the stage-1 output and iterates
//! `p <- J(p)` until `mu(p^(j), p^(j+1)) <= res2`.

use serde::{Deserialize, Serialize};

use super::instance::NetworkInstance;
use super::mappings::{beamformers, mapping_i, GainMatrix};
use super::thompson::thompson_metric;
use crate::{Error, Result, Vector};

/// Lower clamp keeping fixed-point iterates inside the open orthant.
pub const POSITIVITY_FLOOR: f64 = 1e-300;
/// Default iteration cap per stage.
pub const DEFAULT_FP_CAP: usize = 50_000;
const BLOWUP: f64 = 1e150;

/// Warm-start state carried between dual evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpState {
    pub beta: Vector,
    pub p: Vector,
    pub res_beta: f64,
    pub res_p: f64,
}

impl FpState {
    pub fn cold(k: usize) -> Self {
        FpState {
            beta: Vector::repeat(k, 1.0),
            p: Vector::repeat(k, 1.0),
            res_beta: f64::INFINITY,
            res_p: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpOutcome {
    pub value: Vector,
    pub iters: usize,
    /// Last Thompson step `mu(v^(i), v^(i+1))`.
    pub residual: f64,
}

fn floor_positive(v: Vector) -> Vector {
    v.map(|x| x.max(POSITIVITY_FLOOR))
}

fn check_start(start: &Vector, k: usize, what: &str) -> Result<()> {
    if start.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: start.len() });
    }
    if start.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!("{what} start must be strictly positive")));
    }
    Ok(())
}

fn iterate<F>(stage: u8, start: &Vector, res: f64, cap: usize, mut step: F) -> Result<FpOutcome>
where
    F: FnMut(&Vector) -> Result<Vector>,
{
    if res.is_nan() || res < 0.0 {
        return Err(Error::invalid("fixed-point tolerance must be nonnegative"));
    }
    let mut cur = start.clone();
    let mut residual = f64::INFINITY;
    for iters in 1..=cap {
        let next = floor_positive(step(&cur)?);
        if next.iter().any(|v| !v.is_finite() || *v > BLOWUP) {
            return Err(Error::FpDivergence { stage, iters, residual });
        }
        residual = thompson_metric(&cur, &next)?;
        cur = next;
        if residual <= res {
            return Ok(FpOutcome { value: cur, iters, residual });
        }
    }
    Err(Error::FpDivergence { stage, iters: cap, residual })
}

/// Iterates `beta <- I_x(beta)` from `beta0` until `mu(beta^(i), beta^(i+1)) <= res1`.
pub fn solve_fp_stage1(inst: &NetworkInstance, x: &Vector, beta0: &Vector, res1: f64, cap: usize) -> Result<FpOutcome> {
    inst.check_dual_point(x)?;
    check_start(beta0, inst.k(), "beta")?;
    iterate(1, beta0, res1, cap, |b| mapping_i(inst, x, b))
}

/// Iterates `p <- J_{beta_tilde, x}(p)` from `p0` until `mu(p^(j), p^(j+1)) <= res2`.
pub fn solve_fp_stage2(
    inst: &NetworkInstance,
    x: &Vector,
    beta_tilde: &Vector,
    p0: &Vector,
    res2: f64,
    cap: usize,
) -> Result<FpOutcome> {
    check_start(p0, inst.k(), "p")?;
    let u = beamformers(inst, x, beta_tilde)?;
    let gains = GainMatrix::new(inst, x, beta_tilde, &u)?;
    let gamma = inst.gamma_bar();
    iterate(2, p0, res2, cap, |p| Ok(gains.apply(gamma, p)))
}

/// Both stages with `res` split evenly between them.
pub fn solve_fp(inst: &NetworkInstance, x: &Vector, warm: &FpState, res: f64, cap: usize) -> Result<(FpState, usize)> {
    let s1 = solve_fp_stage1(inst, x, &warm.beta, res / 2.0, cap)?;
    let s2 = solve_fp_stage2(inst, x, &s1.value, &warm.p, res / 2.0, cap)?;
    let state = FpState { beta: s1.value, p: s2.value, res_beta: s1.residual, res_p: s2.residual };
    Ok((state, s1.iters + s2.iters))
}
