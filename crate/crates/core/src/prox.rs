//! Proximal operators and the gradient mapping.
//!
//! For a closed convex `h` and a stepsize `lambda > 0`,
//! `prox(h, lambda, x) = argmin_y { |y - x|^2 / (2 lambda) + h(y) }` and the
//! gradient mapping is `G_lambda(x, d) = (x - prox(h, lambda, x - lambda d)) / lambda`.
//! `G_lambda(x, grad f(x)) = 0` exactly at stationary points of `f + h`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vector};

/// A convex function with an inexpensive proximal map.
///
/// Implement this to plug a custom nonsmooth term into the solvers.
pub trait Prox {
    /// `argmin_y { |y - x|^2 / (2 lambda) + h(y) }`.
    fn prox(&self, lambda: f64, x: &Vector) -> Result<Vector>;

    /// `h(x)`, `+inf` outside the domain.
    fn value(&self, x: &Vector) -> f64;
}

/// The closed-form nonsmooth terms used throughout the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProxFriendly {
    Zero,
    /// Indicator of the nonnegative orthant.
    IndicatorNonneg,
    /// Indicator of `{ lower <= x <= upper }`.
    IndicatorBox { lower: Vector, upper: Vector },
    /// `weight * |x|_1`.
    L1 { weight: f64 },
}

impl ProxFriendly {
    pub fn indicator_box(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::invalid("box requires lower <= upper componentwise"));
        }
        Ok(ProxFriendly::IndicatorBox { lower, upper })
    }

    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::invalid(format!("l1 weight must be finite and >= 0, got {weight}")));
        }
        Ok(ProxFriendly::L1 { weight })
    }

    /// Whether the domain of `h` is bounded (the box is the only such variant).
    pub fn bounded_domain(&self) -> bool {
        matches!(self, ProxFriendly::IndicatorBox { .. })
    }

    fn check_box_dim(&self, n: usize) -> Result<()> {
        if let ProxFriendly::IndicatorBox { lower, .. } = self {
            if lower.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: lower.len(),
                    found: n,
                });
            }
        }
        Ok(())
    }
}

impl Prox for ProxFriendly {
    fn prox(&self, lambda: f64, x: &Vector) -> Result<Vector> {
        if !(lambda > 0.0) {
            return Err(Error::invalid(format!("prox stepsize must be positive, got {lambda}")));
        }
        self.check_box_dim(x.len())?;
        let y = match self {
            ProxFriendly::Zero => x.clone(),
            ProxFriendly::IndicatorNonneg => x.map(|v| v.max(0.0)),
            ProxFriendly::IndicatorBox { lower, upper } => {
                Vector::from_iterator(x.len(), (0..x.len()).map(|j| x[j].clamp(lower[j], upper[j])))
            }
            ProxFriendly::L1 { weight } => {
                let t = lambda * weight;
                x.map(|v| v.signum() * (v.abs() - t).max(0.0))
            }
        };
        Ok(y)
    }

    fn value(&self, x: &Vector) -> f64 {
        match self {
            ProxFriendly::Zero => 0.0,
            ProxFriendly::IndicatorNonneg => {
                if x.iter().all(|&v| v >= 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFriendly::IndicatorBox { lower, upper } => {
                let inside = x.len() == lower.len()
                    && (0..x.len()).all(|j| x[j] >= lower[j] && x[j] <= upper[j]);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFriendly::L1 { weight } => weight * x.lp_norm(1),
        }
    }
}

/// `G_lambda(x, d)` together with the post-prox point `x(lambda)` it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMapping {
    pub value: Vector,
    pub stepsize: f64,
    pub prox_point: Vector,
}

impl GradientMapping {
    pub fn norm(&self) -> f64 {
        self.value.norm()
    }

    /// `|x(lambda) - x|`, which equals `lambda * |G_lambda(x, d)|`.
    pub fn displacement(&self) -> f64 {
        self.stepsize * self.value.norm()
    }
}

pub fn prox<H: Prox + ?Sized>(h: &H, lambda: f64, x: &Vector) -> Result<Vector> {
    h.prox(lambda, x)
}

pub fn gradient_mapping<H: Prox + ?Sized>(
    h: &H,
    lambda: f64,
    x: &Vector,
    d: &Vector,
) -> Result<GradientMapping> {
    if x.len() != d.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: d.len(),
        });
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("gradient mapping stepsize must be positive, got {lambda}")));
    }
    let prox_point = h.prox(lambda, &(x - d * lambda))?;
    let value = (x - &prox_point) / lambda;
    Ok(GradientMapping {
        value,
        stepsize: lambda,
        prox_point,
    })
}

/// `|G_lambda(x, grad f(x))|`; zero exactly at stationary points.
pub fn stationarity_residual<H: Prox + ?Sized>(
    h: &H,
    lambda: f64,
    x: &Vector,
    exact_grad: &Vector,
) -> Result<f64> {
    Ok(gradient_mapping(h, lambda, x, exact_grad)?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn prox_examples() {
        let y = ProxFriendly::IndicatorNonneg.prox(1.0, &v(&[-1.0, 2.0])).unwrap();
        assert_eq!(y, v(&[0.0, 2.0]));

        let unit = ProxFriendly::indicator_box(Vector::zeros(3), Vector::from_element(3, 1.0)).unwrap();
        let y = unit.prox(0.5, &v(&[-0.5, 0.5, 2.0])).unwrap();
        assert_eq!(y, v(&[0.0, 0.5, 1.0]));

        let y = ProxFriendly::l1(1.0).unwrap().prox(1.0, &v(&[2.0, -0.5])).unwrap();
        assert_eq!(y, v(&[1.0, 0.0]));
    }

    #[test]
    fn prox_rejects_bad_arguments() {
        assert!(ProxFriendly::Zero.prox(0.0, &v(&[1.0])).is_err());
        assert!(ProxFriendly::Zero.prox(-1.0, &v(&[1.0])).is_err());
        let unit = ProxFriendly::indicator_box(Vector::zeros(3), Vector::from_element(3, 1.0)).unwrap();
        assert!(matches!(
            unit.prox(1.0, &v(&[0.0, 0.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(ProxFriendly::indicator_box(v(&[1.0]), v(&[0.0])).is_err());
        assert!(ProxFriendly::l1(-0.1).is_err());
    }

    #[test]
    fn gradient_mapping_examples() {
        let gm = gradient_mapping(&ProxFriendly::IndicatorNonneg, 1.0, &v(&[1.0, 1.0]), &v(&[2.0, -1.0])).unwrap();
        assert_eq!(gm.value, v(&[1.0, -1.0]));
        assert_eq!(gm.prox_point, v(&[0.0, 2.0]));

        let gm = gradient_mapping(&ProxFriendly::Zero, 0.5, &v(&[7.0, -3.0]), &v(&[3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(gm.value, v(&[3.0, 4.0]), epsilon = 1e-12);

        let gm = gradient_mapping(&ProxFriendly::IndicatorNonneg, 1.0, &v(&[2.0, 3.0]), &v(&[0.0, 0.0])).unwrap();
        assert_eq!(gm.value, v(&[0.0, 0.0]));
    }

    #[test]
    fn stationarity_examples() {
        // f = |x|^2 / 2 at its minimizer
        let r = stationarity_residual(&ProxFriendly::Zero, 1.0, &v(&[0.0, 0.0]), &v(&[0.0, 0.0])).unwrap();
        assert_eq!(r, 0.0);

        // f = |x - (-1, 1)|^2 / 2 over x >= 0
        let target = v(&[-1.0, 1.0]);
        let x = v(&[0.0, 1.0]);
        let r = stationarity_residual(&ProxFriendly::IndicatorNonneg, 1.0, &x, &(&x - &target)).unwrap();
        assert_eq!(r, 0.0);

        let x = v(&[1.0, 1.0]);
        let r = stationarity_residual(&ProxFriendly::IndicatorNonneg, 1.0, &x, &(&x - &target)).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-15);
    }

    /// Grid scan of a 1-D convex objective on [lo, hi], then bisection on the sign of its
    /// one-sided derivatives inside the winning grid cell.
    fn scalar_argmin(
        phi: impl Fn(f64) -> f64,
        left_deriv: impl Fn(f64) -> f64,
        right_deriv: impl Fn(f64) -> f64,
        lo: f64,
        hi: f64,
    ) -> f64 {
        let n = 2000;
        let h = (hi - lo) / n as f64;
        let mut best = lo;
        for k in 0..=n {
            let t = lo + k as f64 * h;
            if phi(t) < phi(best) {
                best = t;
            }
        }
        let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if right_deriv(mid) < 0.0 {
                a = mid;
            } else if left_deriv(mid) > 0.0 {
                b = mid;
            } else {
                return mid;
            }
        }
        0.5 * (a + b)
    }

    fn brute_force_prox(h: &ProxFriendly, lambda: f64, x: &Vector) -> Vector {
        Vector::from_iterator(
            x.len(),
            (0..x.len()).map(|j| {
                let xj = x[j];
                let (lo, hi) = match h {
                    ProxFriendly::IndicatorNonneg => (0.0, xj.abs() + 10.0),
                    ProxFriendly::IndicatorBox { lower, upper } => (lower[j], upper[j]),
                    _ => (-xj.abs() - 10.0, xj.abs() + 10.0),
                };
                let w = match h {
                    ProxFriendly::L1 { weight } => *weight,
                    _ => 0.0,
                };
                let phi = |t: f64| (t - xj).powi(2) / (2.0 * lambda) + w * t.abs();
                let dl = |t: f64| (t - xj) / lambda + if t > 0.0 { w } else { -w };
                let dr = |t: f64| (t - xj) / lambda + if t >= 0.0 { w } else { -w };
                scalar_argmin(phi, dl, dr, lo, hi)
            }),
        )
    }

    fn vec_strategy(n: usize) -> impl Strategy<Value = Vector> {
        prop::collection::vec(-5.0f64..5.0, n).prop_map(Vector::from_vec)
    }

    fn prox_strategy(n: usize) -> impl Strategy<Value = ProxFriendly> {
        prop_oneof![
            Just(ProxFriendly::Zero),
            Just(ProxFriendly::IndicatorNonneg),
            (vec_strategy(n), prop::collection::vec(0.0f64..3.0, n)).prop_map(move |(lo, w)| {
                let hi = &lo + Vector::from_vec(w);
                ProxFriendly::indicator_box(lo, hi).unwrap()
            }),
            (0.0f64..3.0).prop_map(|w| ProxFriendly::l1(w).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn prox_is_nonexpansive(h in prox_strategy(4), x in vec_strategy(4), y in vec_strategy(4), lambda in 0.01f64..10.0) {
            let px = h.prox(lambda, &x).unwrap();
            let py = h.prox(lambda, &y).unwrap();
            prop_assert!((px - py).norm() <= (&x - &y).norm() * (1.0 + 1e-12) + 1e-15);
        }

        #[test]
        fn gradient_mapping_is_stable_in_direction(h in prox_strategy(4), x in vec_strategy(4), d1 in vec_strategy(4), d2 in vec_strategy(4), lambda in 0.01f64..10.0) {
            let g1 = gradient_mapping(&h, lambda, &x, &d1).unwrap();
            let g2 = gradient_mapping(&h, lambda, &x, &d2).unwrap();
            prop_assert!((g1.value - g2.value).norm() <= (&d1 - &d2).norm() * (1.0 + 1e-9) + 1e-12);
        }

        #[test]
        fn zero_prox_is_identity(x in vec_strategy(5), lambda in 1e-6f64..1e6) {
            prop_assert_eq!(ProxFriendly::Zero.prox(lambda, &x).unwrap(), x);
        }

        #[test]
        fn mapping_vanishes_iff_fixed_point(h in prox_strategy(3), x in vec_strategy(3), d in vec_strategy(3), lambda in 0.1f64..2.0) {
            let gm = gradient_mapping(&h, lambda, &x, &d).unwrap();
            let fixed = gm.prox_point == x;
            prop_assert_eq!(gm.value.iter().all(|&v| v == 0.0), fixed);
            // the fixed-point direction d = 0 at a feasible point of an indicator
            let feasible = h.prox(1.0, &x).unwrap();
            if !matches!(h, ProxFriendly::L1 { .. }) {
                let gm0 = gradient_mapping(&h, lambda, &feasible, &Vector::zeros(3)).unwrap();
                prop_assert!(gm0.value.iter().all(|&v| v == 0.0));
            }
        }

        #[test]
        fn prox_matches_scalar_brute_force(h in prox_strategy(3), x in vec_strategy(3), lambda in 0.05f64..5.0) {
            let fast = h.prox(lambda, &x).unwrap();
            let slow = brute_force_prox(&h, lambda, &x);
            prop_assert!((fast - slow).amax() <= 1e-8);
        }
    }
}
