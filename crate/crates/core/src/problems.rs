//! Small synthetic composite problems with exact oracles and reference optima.

use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::oracle::{ExactOracle, SmoothFunction};
use crate::prox::{gradient_mapping, Prox, ProxFriendly};
use crate::{Error, Result, Vector};

/// Half-width of the quartic's box domain.
pub const QUARTIC_BOX: f64 = 2.0;

/// The smooth part `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothPart {
    /// `1/2 |A x - b|^2`
    LeastSquares { a: DMatrix<f64>, b: Vector },
    /// `1/4 sum (x_j^2 - 1)^2 + tilt' x`
    Quartic { tilt: Vector },
}

impl SmoothFunction for SmoothPart {
    fn dim(&self) -> usize {
        match self {
            SmoothPart::LeastSquares { a, .. } => a.ncols(),
            SmoothPart::Quartic { tilt } => tilt.len(),
        }
    }

    fn value(&self, x: &Vector) -> f64 {
        match self {
            SmoothPart::LeastSquares { a, b } => 0.5 * (a * x - b).norm_squared(),
            SmoothPart::Quartic { tilt } => {
                x.iter().map(|&v| 0.25 * (v * v - 1.0).powi(2)).sum::<f64>() + tilt.dot(x)
            }
        }
    }

    fn gradient(&self, x: &Vector) -> Vector {
        match self {
            SmoothPart::LeastSquares { a, b } => a.tr_mul(&(a * x - b)),
            SmoothPart::Quartic { tilt } => x.map(|v| v * (v * v - 1.0)) + tilt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestProblem {
    pub name: String,
    pub seed: u64,
    pub smooth: SmoothPart,
    pub h: ProxFriendly,
    pub lipschitz: Option<f64>,
    pub f_star: Option<f64>,
    pub x_star: Option<Vector>,
    pub convex: bool,
}

impl TestProblem {
    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    /// `f(x) + h(x)`.
    pub fn objective(&self, x: &Vector) -> f64 {
        self.smooth.value(x) + self.h.value(x)
    }

    pub fn exact_oracle(&self) -> ExactOracle<SmoothPart> {
        ExactOracle(self.smooth.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Largest eigenvalue of `A'A`.
pub fn gram_norm(a: &DMatrix<f64>) -> f64 {
    let gram = a.tr_mul(a);
    gram.symmetric_eigenvalues().max()
}

/// Proximal gradient with constant stepsize `1 / L` until `|G_{1/L}| <= tol`.
///
/// Stops early once an iteration no longer moves the point, which bounds the
/// reachable accuracy by floating-point resolution.
pub fn reference_pg<F: SmoothFunction + ?Sized, H: Prox + ?Sized>(
    f: &F,
    h: &H,
    lipschitz: f64,
    x0: &Vector,
    tol: f64,
    max_iters: usize,
) -> Result<Vector> {
    if !(lipschitz > 0.0) {
        return Err(Error::invalid("reference solver needs a positive Lipschitz constant"));
    }
    let step = 1.0 / lipschitz;
    let mut x = h.prox(step, x0)?;
    for _ in 0..max_iters {
        let gm = gradient_mapping(h, step, &x, &f.gradient(&x))?;
        if gm.norm() <= tol || gm.prox_point == x {
            return Ok(gm.prox_point);
        }
        x = gm.prox_point;
    }
    Ok(x)
}

const REFERENCE_TOL: f64 = 1e-12;
const REFERENCE_ITERS: usize = 2_000_000;

fn least_squares(
    name: &str,
    m: usize,
    n: usize,
    seed: u64,
    h: ProxFriendly,
) -> Result<TestProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(&mut rng, m, n);
    let b = gaussian_vector(&mut rng, m);
    let lipschitz = gram_norm(&a);
    let smooth = SmoothPart::LeastSquares { a, b };
    let x_star = reference_pg(&smooth, &h, lipschitz, &Vector::zeros(n), REFERENCE_TOL, REFERENCE_ITERS)?;
    let f_star = smooth.value(&x_star) + h.value(&x_star);
    Ok(TestProblem {
        name: name.to_string(),
        seed,
        smooth,
        h,
        lipschitz: Some(lipschitz),
        f_star: Some(f_star),
        x_star: Some(x_star),
        convex: true,
    })
}

/// `1/2 |A x - b|^2` over `x >= 0` with Gaussian `A` (`m x n`) and `b`.
pub fn make_nnls(m: usize, n: usize, seed: u64) -> Result<TestProblem> {
    if n == 0 || m < n {
        return Err(Error::invalid(format!("nnls needs m >= n >= 1, got m = {m}, n = {n}")));
    }
    least_squares("nnls", m, n, seed, ProxFriendly::IndicatorNonneg)
}

/// `1/2 |A x - b|^2 + lambda_l1 |x|_1`.
pub fn make_lasso(m: usize, n: usize, lambda_l1: f64, seed: u64) -> Result<TestProblem> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("lasso needs m, n >= 1"));
    }
    least_squares("lasso", m, n, seed, ProxFriendly::l1(lambda_l1)?)
}

/// Minimizer of `1/4 (v^2 - 1)^2 + t v` on `[-r, r]`.
///
/// The derivative `v^3 - v + t` is increasing outside `[-1/sqrt 3, 1/sqrt 3]`, so every
/// interior critical point is bracketed on one of three monotone pieces.
fn quartic_scalar_min(t: f64, r: f64) -> f64 {
    let phi = |v: f64| 0.25 * (v * v - 1.0).powi(2) + t * v;
    let dphi = |v: f64| v * (v * v - 1.0) + t;
    let knee = 1.0 / 3f64.sqrt();
    let mut candidates = vec![-r, r];
    for (lo, hi) in [(-r, -knee), (-knee, knee), (knee, r)] {
        let (mut lo, mut hi) = (lo, hi);
        let (dlo, dhi) = (dphi(lo), dphi(hi));
        if dlo == 0.0 {
            candidates.push(lo);
            continue;
        }
        if dlo.signum() == dhi.signum() {
            continue;
        }
        let rising = dlo < 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (dphi(mid) < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        candidates.push(0.5 * (lo + hi));
    }
    candidates
        .into_iter()
        .min_by(|a, b| phi(*a).total_cmp(&phi(*b)))
        .unwrap_or(0.0)
}

/// `1/4 sum_j (x_j^2 - 1)^2 + tilt' x` over the box `[-2, 2]^n`, tilt entries `0.1 N(0, 1)`.
///
/// `L = 3 * 2^2 - 1 = 11` bounds the Hessian on the box. The reference optimum is the
/// separable global minimizer.
pub fn make_nonconvex_quartic(n: usize, seed: u64) -> Result<TestProblem> {
    if n == 0 {
        return Err(Error::invalid("quartic needs n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tilt = gaussian_vector(&mut rng, n) * 0.1;
    let x_star = tilt.map(|t| quartic_scalar_min(t, QUARTIC_BOX));
    let h = ProxFriendly::indicator_box(Vector::repeat(n, -QUARTIC_BOX), Vector::repeat(n, QUARTIC_BOX))?;
    let smooth = SmoothPart::Quartic { tilt };
    let f_star = smooth.value(&x_star);
    Ok(TestProblem {
        name: "quartic".to_string(),
        seed,
        smooth,
        h,
        lipschitz: Some(3.0 * QUARTIC_BOX * QUARTIC_BOX - 1.0),
        f_star: Some(f_star),
        x_star: Some(x_star),
        convex: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_quartic_min_is_a_critical_point() {
        for t in [-0.3, -0.05, 0.0, 0.02, 0.25] {
            let v = quartic_scalar_min(t, QUARTIC_BOX);
            assert!((v * (v * v - 1.0) + t).abs() < 1e-12, "t = {t}");
            assert!(v.abs() > 0.5);
        }
    }

    #[test]
    fn argument_errors() {
        assert!(make_nnls(3, 4, 0).is_err());
        assert!(make_lasso(3, 4, -1.0, 0).is_err());
        assert!(make_nonconvex_quartic(0, 0).is_err());
    }
}
