use crate::{Error, Result, Vector};

/// Thompson's metric `max_k |ln p_k - ln q_k|` on the open positive orthant.
pub fn thompson_metric(p: &Vector, q: &Vector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    if p.iter().chain(q.iter()).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid("Thompson metric needs strictly positive finite entries"));
    }
    Ok(p.iter()
        .zip(q.iter())
        .map(|(a, b)| (a.ln() - b.ln()).abs())
        .fold(0.0, f64::max))
}
