use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vector};

/// Fronthaul capacity model. Only the infinite-capacity case is implemented; it
/// contributes no compression noise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMode {
    #[default]
    Infinite,
}

/// Hook for finite-capacity compression terms.
pub trait CompressionModel {
    /// Extra diagonal `Lambda_x(beta)` added to the dual covariance, `None` when zero.
    fn lambda_diagonal(&self, beta: &Vector, x: &Vector) -> Option<Vector>;
    /// Compression covariance `Q`, `None` when zero.
    fn covariance(&self, beta: &Vector, x: &Vector) -> Option<DMatrix<Complex64>>;
}

impl CompressionModel for CapacityMode {
    fn lambda_diagonal(&self, _beta: &Vector, _x: &Vector) -> Option<Vector> {
        match self {
            CapacityMode::Infinite => None,
        }
    }

    fn covariance(&self, _beta: &Vector, _x: &Vector) -> Option<DMatrix<Complex64>> {
        match self {
            CapacityMode::Infinite => None,
        }
    }
}

/// Single-antenna BSs `m = 0..M` cooperatively serving single-antenna users `k = 0..K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct NetworkInstance {
    channels: DMatrix<Complex64>,
    sigma2: Vector,
    gamma_bar: Vector,
    p_bar: Vector,
    seed: u64,
    capacity: CapacityMode,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawComplex {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "K")]
    k: usize,
    channels: Vec<Vec<RawComplex>>,
    sigma2: Vec<f64>,
    gamma_bar: Vec<f64>,
    p_bar: Vec<f64>,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<RawInstance> for NetworkInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        if raw.channels.len() != raw.k {
            return Err(Error::DimensionMismatch { expected: raw.k, found: raw.channels.len() });
        }
        let mut h = DMatrix::zeros(raw.m, raw.k);
        for (k, col) in raw.channels.iter().enumerate() {
            if col.len() != raw.m {
                return Err(Error::DimensionMismatch { expected: raw.m, found: col.len() });
            }
            for (m, c) in col.iter().enumerate() {
                h[(m, k)] = Complex64::new(c.re, c.im);
            }
        }
        NetworkInstance::new(
            h,
            Vector::from_vec(raw.sigma2),
            Vector::from_vec(raw.gamma_bar),
            Vector::from_vec(raw.p_bar),
            raw.seed,
        )
    }
}

impl From<NetworkInstance> for RawInstance {
    fn from(inst: NetworkInstance) -> Self {
        let channels = inst
            .channels
            .column_iter()
            .map(|col| col.iter().map(|c| RawComplex { re: c.re, im: c.im }).collect())
            .collect();
        RawInstance {
            m: inst.m(),
            k: inst.k(),
            channels,
            sigma2: inst.sigma2.iter().copied().collect(),
            gamma_bar: inst.gamma_bar.iter().copied().collect(),
            p_bar: inst.p_bar.iter().copied().collect(),
            seed: inst.seed,
        }
    }
}

fn all_positive(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite() && *x > 0.0)
}

impl NetworkInstance {
    /// `channels` is `M x K` with column `k` holding `h_k`.
    pub fn new(channels: DMatrix<Complex64>, sigma2: Vector, gamma_bar: Vector, p_bar: Vector, seed: u64) -> Result<Self> {
        let (m, k) = channels.shape();
        if m == 0 || k == 0 {
            return Err(Error::invalid("instance needs M, K >= 1"));
        }
        for (len, want) in [(sigma2.len(), k), (gamma_bar.len(), k), (p_bar.len(), m)] {
            if len != want {
                return Err(Error::DimensionMismatch { expected: want, found: len });
            }
        }
        if channels.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("channel entries must be finite"));
        }
        if !all_positive(&sigma2) || !all_positive(&gamma_bar) || !all_positive(&p_bar) {
            return Err(Error::invalid("sigma2, gamma_bar and p_bar must be positive"));
        }
        Ok(NetworkInstance { channels, sigma2, gamma_bar, p_bar, seed, capacity: CapacityMode::Infinite })
    }

    /// Rayleigh fading: i.i.d. circularly-symmetric complex Gaussian entries with unit variance.
    pub fn rayleigh(m: usize, k: usize, gamma_bar: f64, p_bar: f64, sigma2: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).map_err(|e| Error::invalid(e.to_string()))?;
        let channels = DMatrix::from_fn(m, k, |_, _| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)));
        Self::new(channels, Vector::repeat(k, sigma2), Vector::repeat(k, gamma_bar), Vector::repeat(m, p_bar), seed)
    }

    pub fn m(&self) -> usize {
        self.channels.nrows()
    }

    pub fn k(&self) -> usize {
        self.channels.ncols()
    }

    pub fn channels(&self) -> &DMatrix<Complex64> {
        &self.channels
    }

    pub fn channel(&self, k: usize) -> DVector<Complex64> {
        self.channels.column(k).into_owned()
    }

    pub fn sigma2(&self) -> &Vector {
        &self.sigma2
    }

    pub fn gamma_bar(&self) -> &Vector {
        &self.gamma_bar
    }

    pub fn p_bar(&self) -> &Vector {
        &self.p_bar
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn capacity(&self) -> CapacityMode {
        self.capacity
    }

    /// Same instance with every budget replaced.
    pub fn with_p_bar(&self, p_bar: Vector) -> Result<Self> {
        Self::new(self.channels.clone(), self.sigma2.clone(), self.gamma_bar.clone(), p_bar, self.seed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub(crate) fn check_dual_point(&self, x: &Vector) -> Result<()> {
        if x.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), found: x.len() });
        }
        if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("dual point must be finite and nonnegative"));
        }
        Ok(())
    }

    pub(crate) fn check_user_vector(&self, v: &Vector, what: &str) -> Result<()> {
        if v.len() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), found: v.len() });
        }
        if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid(format!("{what} must be finite and nonnegative")));
        }
        Ok(())
    }
}
