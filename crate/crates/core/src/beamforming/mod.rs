//! Downlink beamforming with per-antenna power budgets, solved through its
//! Lagrangian dual `max_{x >= 0} d(x)`.
//!
//! Evaluating `d` and its gradient requires the fixed points of two maps (see
//! [`mappings`]); solving them only to a tolerance `res` gives an inexact oracle whose
//! error scales with `res`.

mod dual;
mod fixed_point;
mod instance;
pub mod mappings;
mod solver;
mod thompson;

pub use dual::{
    dual_gradient_tilde, dual_value_tilde, evaluate_dual, evaluate_dual_value, recover_primal, reference_dual,
    DualEval, DualOracle, PrimalSolution, REFERENCE_CAP, REFERENCE_RES,
};
pub use fixed_point::{solve_fp, solve_fp_stage1, solve_fp_stage2, FpOutcome, FpState, DEFAULT_FP_CAP, POSITIVITY_FLOOR};
pub use instance::{CapacityMode, CompressionModel, NetworkInstance};
pub use mappings::{beamformer_u, beamformers, mapping_i, mapping_j, GainMatrix};
pub use solver::{
    apig_fp_run, assess, psg_run, reference_solve, ApigFpConfig, ApigFpResult, FpIterationInfo, PsgRecord,
    QualityReport, TerminationBound,
};
pub use thompson::thompson_metric;
