//! Runs every configured algorithm on every instance.

use std::time::Instant;

use apig::apig::{run, stepsize_floor, ApigConfig, IterationRecord, Status};
use apig::beamforming::{apig_fp_run, assess, psg_run, ApigFpConfig, NetworkInstance};
use apig::oracle::{ErrorBudget, NoisyOracle, SmoothFunction};
use apig::problems::TestProblem;
use apig::prox::stationarity_residual;
use apig::{Error as CoreError, Vector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AlgorithmSpec, ScenarioConfig};
use crate::instances::{BenchInstance, LabeledInstance, ScreenedInstance};

/// Stationarity threshold of the admission gate, measured at `lambda = 1`.
pub const GATE_STATIONARITY: f64 = 1e-5;
/// Dual-value threshold of the admission gate.
pub const GATE_VALUE: f64 = 1e-6;
/// Fixed-point tolerance used by PSG gradient evaluations.
pub const PSG_RES: f64 = 1e-10;
/// PSG budget when no APIG-FP-A run is available on the instance.
pub const PSG_FALLBACK_BUDGET: usize = 100;

/// One row of the run CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub instance_id: String,
    pub algorithm: String,
    pub outer_iters: usize,
    pub total_fp_iters: u64,
    pub mean_fpi_per_outer: f64,
    pub final_delta: f64,
    pub final_dual_value: f64,
    pub status: String,
    pub wall_ms: f64,
}

impl RunRow {
    /// Runs that passed their quality checks.
    pub fn admitted(&self) -> bool {
        self.status == "converged"
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub row: RunRow,
    pub x_final: Option<Vector>,
    pub trace: Vec<IterationRecord>,
}

fn status_name(status: Status) -> &'static str {
    match status {
        Status::Converged => "converged",
        Status::MaxIters => "max_iters",
        Status::LsFailure => "ls_failure",
    }
}

fn error_status(e: &CoreError) -> String {
    match e {
        CoreError::FpDivergence { .. } => "fp_divergence".into(),
        CoreError::DualUnbounded { .. } => "dual_unbounded".into(),
        CoreError::DegenerateChannel { .. } => "degenerate_channel".into(),
        _ => "error".into(),
    }
}

fn failed_row(id: &str, alg: &str, status: String, wall_ms: f64) -> RunOutcome {
    RunOutcome {
        row: RunRow {
            instance_id: id.to_string(),
            algorithm: alg.to_string(),
            outer_iters: 0,
            total_fp_iters: 0,
            mean_fpi_per_outer: 0.0,
            final_delta: f64::NAN,
            final_dual_value: f64::NAN,
            status,
            wall_ms,
        },
        x_final: None,
        trace: Vec::new(),
    }
}

fn fp_config(spec: &AlgorithmSpec, config: &ScenarioConfig) -> Option<ApigFpConfig> {
    let base = match spec {
        AlgorithmSpec::ApigFpA { delta1, delta2 } => ApigFpConfig::absolute(*delta1, *delta2),
        AlgorithmSpec::ApigFpR { delta1, delta2, delta3 } => ApigFpConfig::relative(*delta1, *delta2, *delta3),
        AlgorithmSpec::Pg { res } => ApigFpConfig::high_precision(*res),
        _ => return None,
    };
    Some(ApigFpConfig { epsilon: config.epsilon, max_outer_iters: config.max_outer_iters, ..base })
}

fn run_fp(id: &str, spec: &AlgorithmSpec, config: &ScenarioConfig, screened: &ScreenedInstance) -> RunOutcome {
    let label = spec.label();
    let fp = fp_config(spec, config).expect("APIG-FP variant");
    let inst = &screened.instance;
    let start = Instant::now();
    let outcome = apig_fp_run(inst, &fp, &Vector::zeros(inst.m()));
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let res = match outcome {
        Ok(r) => r,
        Err(e) => return failed_row(id, &label, error_status(&e), wall_ms),
    };
    let mut status = status_name(res.status()).to_string();
    let quality = assess(inst, res.x_final(), screened.d_ref, 1.0).ok();
    let pass = quality.is_some_and(|q| q.stationarity <= GATE_STATIONARITY && q.value_gap <= GATE_VALUE);
    if res.status() == Status::Converged && !pass {
        status = "gate_failed".into();
    }
    let last = res.result.trace.last();
    RunOutcome {
        row: RunRow {
            instance_id: id.to_string(),
            algorithm: label,
            outer_iters: res.outer_iters(),
            total_fp_iters: res.total_fp_iters,
            mean_fpi_per_outer: res.mean_fp_per_outer(),
            final_delta: last.map_or(f64::NAN, |r| r.delta_g),
            final_dual_value: quality.map_or(f64::NAN, |q| q.value),
            status,
            wall_ms,
        },
        x_final: Some(res.x_final().clone()),
        trace: res.result.trace,
    }
}

/// Best cell of the PSG grid by final dual value, each cell given `budget` gradient evaluations.
fn run_psg(
    id: &str,
    lambdas: &[f64],
    deltas: &[f64],
    budget: usize,
    screened: &ScreenedInstance,
) -> RunOutcome {
    let inst: &NetworkInstance = &screened.instance;
    let start = Instant::now();
    let mut best: Option<(f64, u64, Vector)> = None;
    let mut last_err = None;
    for &lambda in lambdas {
        for &delta in deltas {
            match psg_run(inst, &Vector::zeros(inst.m()), lambda, delta, budget, PSG_RES) {
                Ok(records) => {
                    let Some(last) = records.last() else { continue };
                    let fp: u64 = records.iter().map(|r| r.fp_iters as u64).sum();
                    if best.as_ref().is_none_or(|b| last.dual_value > b.0) {
                        best = Some((last.dual_value, fp, last.x.clone()));
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let Some((value, fp, x)) = best else {
        let status = last_err.map_or_else(|| "error".to_string(), |e| error_status(&e));
        return failed_row(id, "PSG", status, wall_ms);
    };
    let (delta, value, status) = match assess(inst, &x, screened.d_ref, 1.0) {
        Ok(q) => {
            let pass = q.stationarity <= GATE_STATIONARITY && q.value_gap <= GATE_VALUE;
            (q.stationarity, q.value, if pass { "converged" } else { "gate_failed" })
        }
        Err(_) => (f64::NAN, value, "gate_failed"),
    };
    RunOutcome {
        row: RunRow {
            instance_id: id.to_string(),
            algorithm: "PSG".into(),
            outer_iters: budget,
            total_fp_iters: fp,
            mean_fpi_per_outer: fp as f64 / budget.max(1) as f64,
            final_delta: delta,
            final_dual_value: value,
            status: status.into(),
            wall_ms,
        },
        x_final: Some(x),
        trace: Vec::new(),
    }
}

/// Builds the framework configuration for an `apig` entry; `None` for beamforming entries.
pub fn apig_config(spec: &AlgorithmSpec, config: &ScenarioConfig) -> Option<apig::Result<ApigConfig>> {
    let AlgorithmSpec::Apig { line_search, theta, eta_g, a, b, eta_f, c, .. } = spec else {
        return None;
    };
    Some(ErrorBudget::new(*eta_g, *a, *b, *eta_f, *c, *theta).map(|budget| ApigConfig {
        theta: *theta,
        line_search: *line_search,
        budget,
        epsilon: config.epsilon,
        max_outer_iters: config.max_outer_iters,
        ..ApigConfig::default()
    }))
}

fn run_problem(id: &str, spec: &AlgorithmSpec, config: &ScenarioConfig, problem: &TestProblem, seed: u64) -> RunOutcome {
    let label = spec.label();
    let start = Instant::now();
    let outcome = apig_config(spec, config).expect("framework entry").and_then(|cfg| {
        let floor = stepsize_floor(&cfg, problem.lipschitz.unwrap_or(f64::INFINITY));
        let mut oracle = NoisyOracle::new(problem.smooth.clone(), problem.h.clone(), cfg.budget.clone(), seed, floor);
        run(&mut oracle, &problem.h, &cfg, &Vector::zeros(problem.dim()))
    });
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let res = match outcome {
        Ok(r) => r,
        Err(e) => return failed_row(id, &label, error_status(&e), wall_ms),
    };
    let mut status = status_name(res.status).to_string();
    if res.status == Status::Converged {
        let exact = problem.smooth.gradient(&res.x_final);
        let stat = stationarity_residual(&problem.h, 1.0, &res.x_final, &exact).unwrap_or(f64::INFINITY);
        if stat > 2.0 * config.epsilon {
            status = "gate_failed".into();
        }
    }
    let outer = res.outer_iters();
    let cost = res.total_inner_cost();
    RunOutcome {
        row: RunRow {
            instance_id: id.to_string(),
            algorithm: label,
            outer_iters: outer,
            total_fp_iters: cost,
            mean_fpi_per_outer: if outer == 0 { 0.0 } else { cost as f64 / outer as f64 },
            final_delta: res.trace.last().map_or(f64::NAN, |r| r.delta_g),
            final_dual_value: problem.objective(&res.x_final),
            status,
            wall_ms,
        },
        x_final: Some(res.x_final.clone()),
        trace: res.trace,
    }
}

fn run_instance(config: &ScenarioConfig, inst: &LabeledInstance, seed: u64) -> Vec<RunOutcome> {
    let id = inst.id.as_str();
    let mut out: Vec<RunOutcome> = Vec::with_capacity(config.algorithms.len());
    match &inst.body {
        BenchInstance::Beamforming(screened) => {
            for spec in &config.algorithms {
                if !matches!(spec, AlgorithmSpec::Psg { .. }) {
                    out.push(run_fp(id, spec, config, screened));
                }
            }
            let budget = out
                .iter()
                .find(|o| o.row.algorithm == "APIG-FP-A" && o.row.outer_iters > 0)
                .map_or(PSG_FALLBACK_BUDGET, |o| o.row.outer_iters);
            for spec in &config.algorithms {
                if let AlgorithmSpec::Psg { lambdas, deltas } = spec {
                    out.push(run_psg(id, lambdas, deltas, budget, screened));
                }
            }
        }
        BenchInstance::Problem { problem } => {
            for spec in &config.algorithms {
                out.push(run_problem(id, spec, config, problem, seed));
            }
        }
    }
    out
}

/// Runs the suite in parallel over instances. Rows come back in instance order, then
/// algorithm order with PSG last (its budget comes from the APIG-FP-A run).
pub fn run_suite(config: &ScenarioConfig, instances: &[LabeledInstance]) -> Vec<RunOutcome> {
    instances
        .par_iter()
        .enumerate()
        .flat_map_iter(|(j, inst)| run_instance(config, inst, config.base_seed ^ (j as u64).wrapping_mul(0x9E37_79B9)))
        .collect()
}
