//! Browser demo: three operations exported through wasm-bindgen, each returning JSON.
//!
//! * [`apig_path`]: APIG on a two-dimensional problem from a clicked start point.
//! * [`beamforming_trace`]: an APIG-FP run on a random network.
//! * [`thompson_contraction`]: the uplink fixed-point map contracting two starts together.

use apig::apig::{run, stepsize_floor, ApigConfig, LineSearch, Status};
use apig::beamforming::{apig_fp_run, mapping_i, solve_fp_stage1, thompson_metric, ApigFpConfig, NetworkInstance};
use apig::oracle::{EtaSequence, ErrorBudget, NoisyOracle};
use apig::problems::{make_nnls, make_nonconvex_quartic, TestProblem};
use apig::Vector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Grid {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub n: usize,
    /// Row-major objective values, row `j` at `y = lo[1] + j * step`.
    pub values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ApigPath {
    pub status: String,
    pub points: Vec<[f64; 2]>,
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub backtracks: Vec<usize>,
    pub objective: Vec<f64>,
    pub f_star: Option<f64>,
    pub x_star: Option<[f64; 2]>,
    pub grid: Grid,
}

fn two_d(problem: &str, seed: u64) -> apig::Result<(TestProblem, [f64; 2], [f64; 2])> {
    match problem {
        "quartic" => Ok((make_nonconvex_quartic(2, seed)?, [-2.2, -2.2], [2.2, 2.2])),
        "nnls" => {
            let p = make_nnls(6, 2, seed)?;
            let star = p.x_star.clone().unwrap_or_else(|| Vector::zeros(2));
            let reach = (2.0 * star.amax()).max(2.0);
            Ok((p, [-0.5, -0.5], [reach, reach]))
        }
        other => Err(apig::Error::InvalidArgument(format!("unknown problem {other:?}, expected quartic or nnls"))),
    }
}

fn grid(p: &TestProblem, lo: [f64; 2], hi: [f64; 2], n: usize) -> Grid {
    let step = |d: usize| (hi[d] - lo[d]) / (n - 1) as f64;
    let mut values = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = Vector::from_column_slice(&[lo[0] + i as f64 * step(0), lo[1] + j as f64 * step(1)]);
            values.push(apig::oracle::SmoothFunction::value(&p.smooth, &x));
        }
    }
    Grid { lo, hi, n, values }
}

fn status_name(s: Status) -> String {
    match s {
        Status::Converged => "converged",
        Status::MaxIters => "max_iters",
        Status::LsFailure => "ls_failure",
    }
    .to_string()
}

/// Runs APIG with a noisy oracle (`eta_g = noise (i+1)^-1.5`, `eta_f = noise (i+1)^-2`).
pub fn apig_path_impl(
    problem: &str,
    x0: [f64; 2],
    noise: f64,
    line_search: &str,
    seed: u64,
) -> apig::Result<ApigPath> {
    let (p, lo, hi) = two_d(problem, seed)?;
    let line_search = match line_search {
        "B1" | "b1" => LineSearch::B1,
        "B2" | "b2" => LineSearch::B2,
        other => return Err(apig::Error::InvalidArgument(format!("unknown line search {other:?}"))),
    };
    if !(noise >= 0.0) {
        return Err(apig::Error::InvalidArgument("noise must be nonnegative".into()));
    }
    let seq = |exponent| if noise == 0.0 { EtaSequence::Zero } else { EtaSequence::PowerLaw { scale: noise, exponent } };
    let budget = ErrorBudget::new(seq(1.5), 0.0, 0.0, seq(2.0), 0.0, 1e-4)?;
    let config = ApigConfig {
        line_search,
        budget: budget.clone(),
        epsilon: 1e-5,
        max_outer_iters: 2000,
        ..ApigConfig::default()
    };
    let floor = stepsize_floor(&config, p.lipschitz.unwrap_or(1.0));
    let mut oracle = NoisyOracle::new(p.smooth.clone(), p.h.clone(), budget, seed, floor);
    let res = run(&mut oracle, &p.h, &config, &Vector::from_column_slice(&x0))?;

    let mut points: Vec<[f64; 2]> = res.trace.iter().map(|r| [r.x[0], r.x[1]]).collect();
    if res.status != Status::Converged {
        points.push([res.x_next[0], res.x_next[1]]);
    }
    Ok(ApigPath {
        status: status_name(res.status),
        objective: res.trace.iter().map(|r| p.objective(&r.x)).collect(),
        lambdas: res.trace.iter().map(|r| r.lambda).collect(),
        deltas: res.trace.iter().map(|r| r.delta_g).collect(),
        backtracks: res.trace.iter().map(|r| r.ls_trials).collect(),
        points,
        f_star: p.f_star,
        x_star: p.x_star.as_ref().map(|x| [x[0], x[1]]),
        grid: grid(&p, lo, hi, 64),
    })
}

#[derive(Debug, Serialize)]
pub struct BeamformingTrace {
    pub status: String,
    pub dual_values: Vec<f64>,
    pub deltas: Vec<f64>,
    pub fp_iters: Vec<u64>,
    pub lambdas: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub antenna_budget: f64,
    pub total_fp_iters: u64,
}

/// APIG-FP on a Rayleigh instance; `variant` is `A`, `R` or `PG`.
pub fn beamforming_trace_impl(
    m: usize,
    k: usize,
    gamma_bar: f64,
    p_bar: f64,
    seed: u64,
    variant: &str,
) -> apig::Result<BeamformingTrace> {
    let inst = NetworkInstance::rayleigh(m, k, gamma_bar, p_bar, 4.0, seed)?;
    let config = match variant {
        "A" => ApigFpConfig::absolute(2.0, 1.2),
        "R" => ApigFpConfig::relative(1.0, 1.2, 1.0),
        "PG" => ApigFpConfig::high_precision(1e-10),
        other => return Err(apig::Error::InvalidArgument(format!("unknown variant {other:?}, expected A, R or PG"))),
    };
    let config = ApigFpConfig { max_outer_iters: 2000, ..config };
    let res = apig_fp_run(&inst, &config, &Vector::zeros(m))?;
    Ok(BeamformingTrace {
        status: status_name(res.status()),
        dual_values: res.info.iter().map(|i| i.dual_value).collect(),
        deltas: res.result.trace.iter().map(|r| r.delta_g).collect(),
        fp_iters: res.result.trace.iter().map(|r| r.inner_cost).collect(),
        lambdas: res.result.trace.iter().map(|r| r.lambda).collect(),
        multipliers: res.x_final().iter().copied().collect(),
        antenna_budget: p_bar,
        total_fp_iters: res.total_fp_iters,
    })
}

#[derive(Debug, Serialize)]
pub struct ContractionTrace {
    /// Thompson distance between the two iterate sequences.
    pub gap: Vec<f64>,
    /// Distance of each sequence to the fixed point.
    pub to_fixed_point: [Vec<f64>; 2],
    pub fixed_point: Vec<f64>,
    /// Largest observed one-step ratio `mu(I(a), I(b)) / mu(a, b)`.
    pub worst_ratio: f64,
}

/// Iterates the stage-1 map from two random starts spread over `10^±spread`.
pub fn thompson_contraction_impl(
    m: usize,
    k: usize,
    gamma_bar: f64,
    spread: f64,
    iters: usize,
    seed: u64,
) -> apig::Result<ContractionTrace> {
    if !(0.0..=12.0).contains(&spread) || iters > 10_000 {
        return Err(apig::Error::InvalidArgument("spread must lie in [0, 12] and iters be at most 10000".into()));
    }
    let inst = NetworkInstance::rayleigh(m, k, gamma_bar, 10.0, 1.0, seed)?;
    let x = Vector::zeros(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut start = || Vector::from_fn(k, |_, _| 10f64.powf(rng.random_range(-spread..=spread)));
    let (mut a, mut b) = (start(), start());
    let fixed = solve_fp_stage1(&inst, &x, &Vector::repeat(k, 1.0), 1e-13, 1_000_000)?.value;

    let mut gap = Vec::with_capacity(iters + 1);
    let mut to_fixed = [Vec::with_capacity(iters + 1), Vec::with_capacity(iters + 1)];
    let mut worst_ratio = 0.0f64;
    for step in 0..=iters {
        let d = thompson_metric(&a, &b)?;
        gap.push(d);
        to_fixed[0].push(thompson_metric(&a, &fixed)?);
        to_fixed[1].push(thompson_metric(&b, &fixed)?);
        if step == iters {
            break;
        }
        let (na, nb) = (mapping_i(&inst, &x, &a)?, mapping_i(&inst, &x, &b)?);
        let nd = thompson_metric(&na, &nb)?;
        if d > 1e-12 {
            worst_ratio = worst_ratio.max(nd / d);
        }
        a = na;
        b = nb;
    }
    Ok(ContractionTrace {
        gap,
        to_fixed_point: to_fixed,
        fixed_point: fixed.iter().copied().collect(),
        worst_ratio,
    })
}

fn to_json<T: Serialize>(out: apig::Result<T>) -> String {
    match out {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

#[wasm_bindgen]
pub fn apig_path(problem: &str, x0: f64, y0: f64, noise: f64, line_search: &str, seed: u32) -> String {
    to_json(apig_path_impl(problem, [x0, y0], noise, line_search, seed as u64))
}

#[wasm_bindgen]
pub fn beamforming_trace(m: usize, k: usize, gamma_bar: f64, p_bar: f64, seed: u32, variant: &str) -> String {
    to_json(beamforming_trace_impl(m, k, gamma_bar, p_bar, seed as u64, variant))
}

#[wasm_bindgen]
pub fn thompson_contraction(m: usize, k: usize, gamma_bar: f64, spread: f64, iters: usize, seed: u32) -> String {
    to_json(thompson_contraction_impl(m, k, gamma_bar, spread, iters, seed as u64))
}
