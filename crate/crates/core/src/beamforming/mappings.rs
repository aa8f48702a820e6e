//! The fixed-point maps of the dual subproblem.
//!
//! With `C = I + sum_k beta_k h_k h_k^H + Diag(x)`:
//!
//! - `I_x(beta)_k = gamma_k / (gamma_k + 1) / (h_k^H C^{-1} h_k)`,
//! - `u_k = C^{-1} h_k / |C^{-1} h_k|`,
//! - `J(p)_k = gamma_k (sum_{j != k} p_j |h_k^H u_j|^2 + sigma_k^2) / |h_k^H u_k|^2`.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use super::instance::{CompressionModel, NetworkInstance};
use crate::{Error, Result, Vector};

/// `C^{-1} H` for the covariance `C(beta, x)`, column `k` is `C^{-1} h_k`.
pub(crate) fn whitened_channels(inst: &NetworkInstance, x: &Vector, beta: &Vector) -> Result<DMatrix<Complex64>> {
    inst.check_dual_point(x)?;
    inst.check_user_vector(beta, "beta")?;
    let h = inst.channels();
    let m = inst.m();
    let weighted = DMatrix::from_fn(m, inst.k(), |r, c| h[(r, c)] * beta[c]);
    let mut cov = &weighted * h.adjoint();
    let extra = inst.capacity().lambda_diagonal(beta, x);
    for i in 0..m {
        let lam = extra.as_ref().map_or(0.0, |l| l[i]);
        cov[(i, i)] += Complex64::new(1.0 + x[i] + lam, 0.0);
    }
    // numerically Hermitian already; symmetrize to be safe with the factorization
    let cov = (&cov + cov.adjoint()) * Complex64::new(0.5, 0.0);
    let chol = Cholesky::new(cov).ok_or_else(|| Error::invalid("covariance is not positive definite"))?;
    Ok(chol.solve(h))
}

/// `I_x(beta)`.
pub fn mapping_i(inst: &NetworkInstance, x: &Vector, beta: &Vector) -> Result<Vector> {
    let z = whitened_channels(inst, x, beta)?;
    let h = inst.channels();
    let gamma = inst.gamma_bar();
    let mut out = Vector::zeros(inst.k());
    for k in 0..inst.k() {
        let quad = h.column(k).dotc(&z.column(k)).re;
        if !(quad > 0.0) {
            return Err(Error::DegenerateChannel { user: k });
        }
        out[k] = gamma[k] / (gamma[k] + 1.0) / quad;
    }
    Ok(out)
}

fn normalize_columns(z: DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let mut u = z;
    for (k, mut col) in u.column_iter_mut().enumerate() {
        let n = col.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateChannel { user: k });
        }
        // fix the common phase so the largest entry is real positive
        let pivot = col.iter().copied().max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr())).unwrap_or(Complex64::new(1.0, 0.0));
        let phase = pivot / pivot.norm();
        col /= phase * n;
    }
    Ok(u)
}

/// All unit-norm receive beamformers, column `k` is `u_k(beta, x)`.
pub fn beamformers(inst: &NetworkInstance, x: &Vector, beta: &Vector) -> Result<DMatrix<Complex64>> {
    normalize_columns(whitened_channels(inst, x, beta)?)
}

/// `u_k(beta, x)`.
pub fn beamformer_u(inst: &NetworkInstance, x: &Vector, beta: &Vector, k: usize) -> Result<DVector<Complex64>> {
    if k >= inst.k() {
        return Err(Error::invalid(format!("user index {k} out of range")));
    }
    Ok(beamformers(inst, x, beta)?.column(k).into_owned())
}

/// Interference structure of `J` for fixed beamformers.
#[derive(Debug, Clone)]
pub struct GainMatrix {
    /// `gains[(k, j)] = |h_k^H u_j|^2`.
    pub gains: DMatrix<f64>,
    /// `h_k^H Q h_k + sigma_k^2`.
    pub noise: Vector,
}

impl GainMatrix {
    pub fn new(inst: &NetworkInstance, x: &Vector, beta: &Vector, u: &DMatrix<Complex64>) -> Result<Self> {
        let h = inst.channels();
        let k = inst.k();
        let cross = h.adjoint() * u;
        let gains = cross.map(|c| c.norm_sqr());
        for j in 0..k {
            if !(gains[(j, j)] > 0.0) {
                return Err(Error::DegenerateChannel { user: j });
            }
        }
        let mut noise = inst.sigma2().clone();
        if let Some(q) = inst.capacity().covariance(beta, x) {
            for j in 0..k {
                let hk = h.column(j);
                noise[j] += hk.dotc(&(&q * hk)).re;
            }
        }
        Ok(GainMatrix { gains, noise })
    }

    pub fn apply(&self, gamma: &Vector, p: &Vector) -> Vector {
        let k = p.len();
        Vector::from_fn(k, |i, _| {
            let interference: f64 = (0..k).filter(|&j| j != i).map(|j| p[j] * self.gains[(i, j)]).sum();
            gamma[i] * (interference + self.noise[i]) / self.gains[(i, i)]
        })
    }
}

/// `J_{beta, x}(p)`.
pub fn mapping_j(inst: &NetworkInstance, x: &Vector, beta: &Vector, p: &Vector) -> Result<Vector> {
    inst.check_user_vector(p, "p")?;
    let u = beamformers(inst, x, beta)?;
    let gm = GainMatrix::new(inst, x, beta, &u)?;
    Ok(gm.apply(inst.gamma_bar(), p))
}
