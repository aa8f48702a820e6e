//! Deterministic instance generation with feasibility screening.

use apig::apig::Status;
use apig::beamforming::{reference_dual, reference_solve, solve_fp_stage1, NetworkInstance, DEFAULT_FP_CAP};
use apig::problems::{make_lasso, make_nnls, make_nonconvex_quartic, TestProblem};
use apig::{Error as CoreError, Vector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ProblemKind, ScenarioConfig};

/// Multipliers above this count as an active per-antenna budget.
pub const ACTIVE_THRESHOLD: f64 = 1e-6;
/// Draws examined before the infeasible fraction is judged.
const MIN_DRAWS_FOR_VERDICT: usize = 20;
const MAX_INFEASIBLE_FRACTION: f64 = 0.9;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("{infeasible} of {draws} draws were infeasible: the SINR targets or power budgets are too aggressive")]
    TooManyInfeasible { infeasible: usize, draws: usize },
    #[error("accepted only {accepted} of {wanted} instances after {draws} draws ({inactive} had no active per-antenna budget)")]
    DrawLimit {
        accepted: usize,
        wanted: usize,
        draws: usize,
        inactive: usize,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// A beamforming instance together with its high-precision dual optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenedInstance {
    pub instance: NetworkInstance,
    pub x_ref: Vector,
    pub d_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BenchInstance {
    Beamforming(ScreenedInstance),
    Problem { problem: TestProblem },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub id: String,
    #[serde(flatten)]
    pub body: BenchInstance,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub instances: Vec<LabeledInstance>,
    pub draws: usize,
    pub infeasible_draws: usize,
    pub inactive_draws: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Infeasible,
    Inactive,
}

fn draw_seed(base: u64, j: usize) -> u64 {
    base.wrapping_add(j as u64)
}

fn label(idx: usize, seed: u64) -> String {
    format!("i{idx:03}-s{seed}")
}

/// Screens one beamforming draw: stage-1 probe at `x = 0`, then the reference solve.
pub fn screen(inst: NetworkInstance, require_active: bool) -> Result<ScreenedInstance, Verdict> {
    let k = inst.k();
    let zero = Vector::zeros(inst.m());
    if solve_fp_stage1(&inst, &zero, &Vector::repeat(k, 1.0), 1e-10, DEFAULT_FP_CAP).is_err() {
        return Err(Verdict::Infeasible);
    }
    let run = match reference_solve(&inst) {
        Ok(r) if r.status() == Status::Converged => r,
        _ => return Err(Verdict::Infeasible),
    };
    let x_ref = run.x_final().clone();
    if require_active && x_ref.amax() <= ACTIVE_THRESHOLD {
        return Err(Verdict::Inactive);
    }
    let d_ref = reference_dual(&inst, &x_ref).map_err(|_| Verdict::Infeasible)?.value;
    Ok(ScreenedInstance { instance: inst, x_ref, d_ref })
}

pub fn generate_instances(config: &ScenarioConfig) -> Result<GenerationReport, GenerationError> {
    let p = &config.instance;
    let n = config.n_instances;
    let base = config.base_seed;
    let problem = |make: &dyn Fn(u64) -> apig::Result<TestProblem>| -> Result<GenerationReport, GenerationError> {
        let instances = (0..n)
            .map(|j| {
                let seed = draw_seed(base, j);
                Ok(LabeledInstance { id: label(j, seed), body: BenchInstance::Problem { problem: make(seed)? } })
            })
            .collect::<Result<Vec<_>, CoreError>>()?;
        Ok(GenerationReport { instances, draws: n, ..Default::default() })
    };
    match config.problem_kind {
        ProblemKind::Nnls => problem(&|s| make_nnls(p.m, p.k, s)),
        ProblemKind::Lasso => problem(&|s| make_lasso(p.m, p.k, p.lambda_l1, s)),
        ProblemKind::Quartic => problem(&|s| make_nonconvex_quartic(p.k, s)),
        ProblemKind::Beamforming => generate_beamforming(config),
    }
}

fn generate_beamforming(config: &ScenarioConfig) -> Result<GenerationReport, GenerationError> {
    let p = &config.instance;
    let n = config.n_instances;
    let max_draws = 100 * n + 100;
    let batch = (2 * rayon::current_num_threads()).max(4);
    let mut report = GenerationReport::default();
    let mut next = 0usize;
    while report.instances.len() < n {
        if next >= max_draws {
            return Err(GenerationError::DrawLimit {
                accepted: report.instances.len(),
                wanted: n,
                draws: report.draws,
                inactive: report.inactive_draws,
            });
        }
        let end = (next + batch).min(max_draws);
        let outcomes: Vec<_> = (next..end)
            .into_par_iter()
            .map(|j| {
                let seed = draw_seed(config.base_seed, j);
                NetworkInstance::rayleigh(p.m, p.k, p.gamma_bar, p.p_bar, p.sigma2, seed)
                    .map(|inst| (seed, screen(inst, p.require_active)))
            })
            .collect();
        // Accept in draw order so the result does not depend on the thread count.
        for outcome in outcomes {
            let (seed, verdict) = outcome?;
            report.draws += 1;
            match verdict {
                Ok(screened) => {
                    let id = label(report.instances.len(), seed);
                    report.instances.push(LabeledInstance { id, body: BenchInstance::Beamforming(screened) });
                }
                Err(Verdict::Infeasible) => report.infeasible_draws += 1,
                Err(Verdict::Inactive) => report.inactive_draws += 1,
            }
            if report.draws >= MIN_DRAWS_FOR_VERDICT
                && report.infeasible_draws as f64 > MAX_INFEASIBLE_FRACTION * report.draws as f64
            {
                return Err(GenerationError::TooManyInfeasible {
                    infeasible: report.infeasible_draws,
                    draws: report.draws,
                });
            }
            if report.instances.len() == n {
                break;
            }
        }
        next = end;
    }
    Ok(report)
}
