//! Scenario configuration, read from JSON or TOML (chosen by file extension).

use std::path::Path;

use apig::apig::LineSearch;
use apig::beamforming::CapacityMode;
use apig::oracle::EtaSequence;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Nnls,
    Lasso,
    Quartic,
    Beamforming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceParams {
    /// Antennas (beamforming) or rows (nnls, lasso).
    #[serde(default = "default_m")]
    pub m: usize,
    /// Users (beamforming) or columns / dimension (nnls, lasso, quartic).
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_gamma")]
    pub gamma_bar: f64,
    #[serde(default = "default_p_bar")]
    pub p_bar: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_lambda_l1")]
    pub lambda_l1: f64,
    #[serde(default)]
    pub capacity: CapacityMode,
    /// Redraw beamforming instances where no per-antenna budget binds.
    #[serde(default = "yes")]
    pub require_active: bool,
}

fn default_m() -> usize {
    7
}
fn default_k() -> usize {
    7
}
fn default_gamma() -> f64 {
    3.0
}
fn default_p_bar() -> f64 {
    12.0
}
fn default_sigma2() -> f64 {
    4.0
}
fn default_lambda_l1() -> f64 {
    0.5
}
fn yes() -> bool {
    true
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            m: default_m(),
            k: default_k(),
            gamma_bar: default_gamma(),
            p_bar: default_p_bar(),
            sigma2: default_sigma2(),
            lambda_l1: default_lambda_l1(),
            capacity: CapacityMode::Infinite,
            require_active: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    /// APIG-FP with absolute gradient inexactness.
    ApigFpA { delta1: f64, delta2: f64 },
    /// APIG-FP with relative gradient inexactness.
    ApigFpR { delta1: f64, delta2: f64, delta3: f64 },
    /// APIG-FP at a constant high-precision tolerance.
    Pg {
        #[serde(default = "default_pg_res")]
        res: f64,
    },
    /// Projected subgradient ascent; the best grid cell is reported.
    Psg {
        #[serde(default = "default_psg_grid")]
        lambdas: Vec<f64>,
        #[serde(default = "default_psg_grid")]
        deltas: Vec<f64>,
    },
    /// The APIG framework on nnls, lasso or quartic with an injected-noise oracle.
    Apig {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "default_ls")]
        line_search: LineSearch,
        #[serde(default = "default_theta")]
        theta: f64,
        #[serde(default = "zero_eta")]
        eta_g: EtaSequence,
        #[serde(default)]
        a: f64,
        #[serde(default)]
        b: f64,
        #[serde(default = "zero_eta")]
        eta_f: EtaSequence,
        #[serde(default)]
        c: f64,
    },
}

fn default_pg_res() -> f64 {
    1e-10
}
fn default_psg_grid() -> Vec<f64> {
    vec![1e-2, 1e-1, 1.0, 10.0]
}
fn default_ls() -> LineSearch {
    LineSearch::B1
}
fn default_theta() -> f64 {
    1e-4
}
fn zero_eta() -> EtaSequence {
    EtaSequence::Zero
}

impl AlgorithmSpec {
    pub fn label(&self) -> String {
        match self {
            AlgorithmSpec::ApigFpA { .. } => "APIG-FP-A".into(),
            AlgorithmSpec::ApigFpR { .. } => "APIG-FP-R".into(),
            AlgorithmSpec::Pg { .. } => "PG".into(),
            AlgorithmSpec::Psg { .. } => "PSG".into(),
            AlgorithmSpec::Apig { name, line_search, .. } => {
                name.clone().unwrap_or_else(|| format!("APIG-{line_search:?}"))
            }
        }
    }

    fn for_beamforming(&self) -> bool {
        !matches!(self, AlgorithmSpec::Apig { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub problem_kind: ProblemKind,
    #[serde(default)]
    pub instance: InstanceParams,
    pub algorithms: Vec<AlgorithmSpec>,
    pub n_instances: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer_iters: usize,
}

fn default_epsilon() -> f64 {
    1e-6
}
fn default_max_outer() -> usize {
    5_000
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let parsed: Self = if is_toml {
            toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        } else {
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        };
        parsed.validate()?;
        Ok(parsed)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.n_instances == 0 {
            return bad("n_instances must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_outer_iters == 0 {
            return bad("max_outer_iters must be positive".into());
        }
        let p = &self.instance;
        if p.m == 0 || p.k == 0 {
            return bad("instance dimensions must be positive".into());
        }
        let beamforming = self.problem_kind == ProblemKind::Beamforming;
        if beamforming && !(p.gamma_bar > 0.0 && p.p_bar > 0.0 && p.sigma2 > 0.0) {
            return bad("gamma_bar, p_bar and sigma2 must be positive".into());
        }
        if self.problem_kind == ProblemKind::Nnls && p.m < p.k {
            return bad(format!("nnls needs m >= k, got m = {}, k = {}", p.m, p.k));
        }
        if self.problem_kind == ProblemKind::Lasso && !(p.lambda_l1 > 0.0) {
            return bad("lambda_l1 must be positive".into());
        }
        for alg in &self.algorithms {
            if alg.for_beamforming() != beamforming {
                return bad(format!("algorithm {} does not apply to {:?}", alg.label(), self.problem_kind));
            }
            match alg {
                AlgorithmSpec::ApigFpA { delta1, delta2 } | AlgorithmSpec::ApigFpR { delta1, delta2, .. } => {
                    if !(*delta2 > 1.0) {
                        return bad(format!("{}: delta2 must exceed 1 for summability, got {delta2}", alg.label()));
                    }
                    if !(*delta1 >= 0.0) {
                        return bad(format!("{}: delta1 must be nonnegative", alg.label()));
                    }
                    if let AlgorithmSpec::ApigFpR { delta3, .. } = alg {
                        if !(*delta3 >= 0.0) {
                            return bad("APIG-FP-R: delta3 must be nonnegative".into());
                        }
                    }
                }
                AlgorithmSpec::Pg { res } => {
                    if !(*res > 0.0) {
                        return bad("PG: res must be positive".into());
                    }
                }
                AlgorithmSpec::Psg { lambdas, deltas } => {
                    if lambdas.is_empty() || deltas.is_empty() || lambdas.iter().chain(deltas).any(|v| !(*v > 0.0)) {
                        return bad("PSG grids must be non-empty and positive".into());
                    }
                }
                AlgorithmSpec::Apig { theta, eta_g, a, b, eta_f, c, .. } => {
                    apig::oracle::ErrorBudget::new(*eta_g, *a, *b, *eta_f, *c, *theta)
                        .map_err(|e| ConfigError::Invalid(format!("{}: {e}", alg.label())))?;
                }
            }
        }
        Ok(())
    }

    /// The standard comparison at `M = K = size` with its three algorithms plus PSG.
    pub fn standard_protocol(size: usize, n_instances: usize, base_seed: u64) -> Self {
        ScenarioConfig {
            problem_kind: ProblemKind::Beamforming,
            instance: InstanceParams { m: size, k: size, ..InstanceParams::default() },
            algorithms: vec![
                AlgorithmSpec::Pg { res: default_pg_res() },
                AlgorithmSpec::ApigFpA { delta1: 2.0, delta2: 1.2 },
                AlgorithmSpec::ApigFpR { delta1: 1.0, delta2: 1.2, delta3: 1.0 },
            ],
            n_instances,
            base_seed,
            epsilon: default_epsilon(),
            max_outer_iters: default_max_outer(),
        }
    }
}
