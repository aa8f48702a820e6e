//! Inexact first-order oracles.
//!
//! The solvers never see `f` or its gradient directly. They query a
//! [`SmoothOracle`] that returns approximations whose errors are promised to
//! stay inside an [`ErrorBudget`]:
//!
//! ```text
//! |g - grad f(x)|^2 <= eta_g(i)^2 + (a^2 / lambda^2 + b^2) |x(lambda) - x|^2
//! |f_i - f(x)|      <= eta_f(i) + c / lambda * |x(lambda) - x|^2
//! ```
//!
//! [`NoisyOracle`] wraps an exact function and manufactures errors that honor
//! these bounds, which is how the test suites stress the line search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::prox::{gradient_mapping, Prox};
use crate::{Error, Result, Vector};

/// A nonnegative sequence `i -> eta_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EtaSequence {
    Zero,
    Constant { value: f64 },
    /// `scale * (i + 1)^(-exponent)`.
    PowerLaw { scale: f64, exponent: f64 },
}

impl EtaSequence {
    /// `10^(-delta1) * (i + 1)^(-delta2)`.
    pub fn from_deltas(delta1: f64, delta2: f64) -> Self {
        EtaSequence::PowerLaw {
            scale: 10f64.powf(-delta1),
            exponent: delta2,
        }
    }

    pub fn at(&self, i: usize) -> f64 {
        match *self {
            EtaSequence::Zero => 0.0,
            EtaSequence::Constant { value } => value,
            EtaSequence::PowerLaw { scale, exponent } => scale * ((i + 1) as f64).powf(-exponent),
        }
    }

    fn is_nonnegative(&self) -> bool {
        match *self {
            EtaSequence::Zero => true,
            EtaSequence::Constant { value } => value >= 0.0 && value.is_finite(),
            EtaSequence::PowerLaw { scale, exponent } => {
                scale >= 0.0 && scale.is_finite() && exponent.is_finite()
            }
        }
    }

    /// Whether the family guarantees `sum eta_i^power < inf`.
    pub fn is_summable_to_power(&self, power: f64) -> bool {
        match *self {
            EtaSequence::Zero => true,
            EtaSequence::Constant { value } => value == 0.0,
            EtaSequence::PowerLaw { scale, exponent } => scale == 0.0 || exponent * power > 1.0,
        }
    }

    /// Partial sum of `eta_i^power` for `i < n`.
    pub fn partial_sum(&self, n: usize, power: i32) -> f64 {
        (0..n).map(|i| self.at(i).powi(power)).sum()
    }
}

/// Error budget `(eta_g, a, b, eta_f, c)` for gradient and function evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    eta_g: EtaSequence,
    a: f64,
    b: f64,
    eta_f: EtaSequence,
    c: f64,
}

impl ErrorBudget {
    /// Validates `a in [0, 1)`, `b >= 0`, `c in [0, theta / 4]`, square-summable
    /// `eta_g` and summable `eta_f`.
    pub fn new(eta_g: EtaSequence, a: f64, b: f64, eta_f: EtaSequence, c: f64, theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a) {
            return Err(Error::invalid(format!("a must lie in [0, 1), got {a}")));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::invalid(format!("b must be finite and >= 0, got {b}")));
        }
        if !(c >= 0.0 && c <= theta / 4.0) {
            return Err(Error::invalid(format!("c must lie in [0, theta/4] = [0, {}], got {c}", theta / 4.0)));
        }
        if !eta_g.is_nonnegative() || !eta_f.is_nonnegative() {
            return Err(Error::invalid("error sequences must be nonnegative"));
        }
        if !eta_g.is_summable_to_power(2.0) {
            return Err(Error::invalid("eta_g must be square-summable"));
        }
        if !eta_f.is_summable_to_power(1.0) {
            return Err(Error::invalid("eta_f must be summable"));
        }
        Ok(ErrorBudget { eta_g, a, b, eta_f, c })
    }

    /// The all-zero budget of an exact oracle.
    pub fn exact() -> Self {
        ErrorBudget {
            eta_g: EtaSequence::Zero,
            a: 0.0,
            b: 0.0,
            eta_f: EtaSequence::Zero,
            c: 0.0,
        }
    }

    pub fn eta_g(&self, i: usize) -> f64 {
        self.eta_g.at(i)
    }

    pub fn eta_f(&self, i: usize) -> f64 {
        self.eta_f.at(i)
    }

    pub fn eta_g_sequence(&self) -> EtaSequence {
        self.eta_g
    }

    pub fn eta_f_sequence(&self) -> EtaSequence {
        self.eta_f
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Squared right-hand side of the gradient condition.
    pub fn gradient_bound_sq(&self, i: usize, lambda: f64, displacement: f64) -> f64 {
        self.eta_g(i).powi(2) + (self.a.powi(2) / lambda.powi(2) + self.b.powi(2)) * displacement.powi(2)
    }

    /// Right-hand side of the function condition.
    pub fn function_bound(&self, i: usize, lambda: f64, displacement: f64) -> f64 {
        self.eta_f(i) + self.c / lambda * displacement.powi(2)
    }
}

/// An approximate evaluation `(f_i, g^i)` and the inner work it took.
#[derive(Debug, Clone, PartialEq)]
pub struct InexactEval {
    pub f_value: f64,
    pub gradient: Option<Vector>,
    pub cost: u64,
}

/// A smooth function with exact value and gradient.
pub trait SmoothFunction {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
}

/// Source of inexact function and gradient information for the APIG driver.
///
/// Within outer iteration `i` the driver asks once for the anchor pair
/// `(f_i, g^i)` at `x^i` and then for `f_i(lambda)` at every trial point
/// `x^i(lambda)` of the backtracking loop.
pub trait SmoothOracle {
    fn dim(&self) -> usize;

    /// `(f_i, g^i)` at the current iterate; `lambda0` is the initial trial stepsize.
    fn anchor(&mut self, x: &Vector, iteration: usize, lambda0: f64) -> Result<InexactEval>;

    /// `f_i(lambda)` at `x^i(lambda)`, where `displacement = |x^i(lambda) - x^i|`.
    fn trial(&mut self, x_trial: &Vector, iteration: usize, lambda: f64, displacement: f64) -> Result<InexactEval>;
}

/// Exact evaluation of a [`SmoothFunction`].
#[derive(Debug, Clone)]
pub struct ExactOracle<F>(pub F);

impl<F: SmoothFunction> SmoothOracle for ExactOracle<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn anchor(&mut self, x: &Vector, _iteration: usize, _lambda0: f64) -> Result<InexactEval> {
        Ok(InexactEval {
            f_value: self.0.value(x),
            gradient: Some(self.0.gradient(x)),
            cost: 1,
        })
    }

    fn trial(&mut self, x_trial: &Vector, _iteration: usize, _lambda: f64, _displacement: f64) -> Result<InexactEval> {
        Ok(InexactEval {
            f_value: self.0.value(x_trial),
            gradient: None,
            cost: 1,
        })
    }
}

pub fn check_gradient_condition(err: &Vector, budget: &ErrorBudget, i: usize, lambda: f64, displacement: f64) -> bool {
    err.norm_squared() <= budget.gradient_bound_sq(i, lambda, displacement)
}

pub fn check_function_condition(err: f64, budget: &ErrorBudget, i: usize, lambda: f64, displacement: f64) -> bool {
    err.abs() <= budget.function_bound(i, lambda, displacement)
}

/// Most halvings of a proposed gradient error before falling back to the exact gradient.
const MAX_HALVINGS: usize = 60;

/// Perturbs `exact_grad` by a random error that satisfies the gradient condition at `lambda`,
/// with the displacement induced by the perturbed gradient itself.
///
/// Returns the noisy gradient and whether it was certified (always true on return).
pub fn inject_gradient_error<H: Prox + ?Sized>(
    exact_grad: &Vector,
    budget: &ErrorBudget,
    i: usize,
    h: &H,
    lambda: f64,
    x: &Vector,
    rng_seed: u64,
) -> Result<(Vector, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    inject_gradient_error_window(exact_grad, budget, i, h, (lambda, lambda), x, &mut rng)
}

/// Like [`inject_gradient_error`], but certifies the error for every trial stepsize in
/// `[lambda_lo, lambda_hi]` at once.
///
/// `|G_lambda|` is nonincreasing and `lambda |G_lambda|` nondecreasing in `lambda`, so
/// the `a` term is weakest at `lambda_hi` and the `b` term is weakest at `lambda_lo`.
pub fn inject_gradient_error_window<H: Prox + ?Sized, R: Rng + ?Sized>(
    exact_grad: &Vector,
    budget: &ErrorBudget,
    i: usize,
    h: &H,
    (lambda_lo, lambda_hi): (f64, f64),
    x: &Vector,
    rng: &mut R,
) -> Result<(Vector, bool)> {
    let n = exact_grad.len();
    let (lambda_lo, lambda_hi) = (lambda_lo.min(lambda_hi), lambda_hi.max(lambda_lo));
    let bound_sq = |g: &Vector| -> Result<f64> {
        let d_hi = gradient_mapping(h, lambda_hi, x, g)?.displacement();
        let d_lo = gradient_mapping(h, lambda_lo, x, g)?.displacement();
        Ok(budget.eta_g(i).powi(2)
            + (budget.a() / lambda_hi).powi(2) * d_hi.powi(2)
            + budget.b().powi(2) * d_lo.powi(2))
    };

    let proposal = bound_sq(exact_grad)?.sqrt();
    if n == 0 || proposal == 0.0 {
        return Ok((exact_grad.clone(), true));
    }
    let mut direction = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let dn = direction.norm();
    if dn == 0.0 {
        return Ok((exact_grad.clone(), true));
    }
    direction /= dn;
    let mut magnitude = rng.random::<f64>() * proposal;
    for _ in 0..MAX_HALVINGS {
        let noisy = exact_grad + &direction * magnitude;
        if magnitude * magnitude <= bound_sq(&noisy)? {
            return Ok((noisy, true));
        }
        magnitude *= 0.5;
    }
    Ok((exact_grad.clone(), true))
}

/// Adds a random error of magnitude `U(0, 1) * (eta_f(i) + c / lambda * displacement^2)`.
pub fn inject_function_error(
    exact_f: f64,
    budget: &ErrorBudget,
    i: usize,
    lambda: f64,
    displacement: f64,
    rng_seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let fraction: f64 = rng.random();
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    exact_f + sign * fraction * budget.function_bound(i, lambda, displacement)
}

/// splitmix64 finalizer, used to derive per-call seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalKind {
    Anchor,
    Trial,
}

/// Errors actually injected by a [`NoisyOracle`], kept for post-hoc verification.
#[derive(Debug, Clone)]
pub struct InjectedError {
    pub iteration: usize,
    pub kind: EvalKind,
    pub lambda: f64,
    pub f_error: f64,
    pub g_error: Option<Vector>,
}

/// Wraps an exact function and returns evaluations perturbed within an [`ErrorBudget`].
///
/// Gradient errors are certified for every stepsize in `[lambda_floor, lambda0]`, so the
/// gradient condition holds at whichever trial the line search accepts as long as the
/// accepted stepsize stays above `lambda_floor`. Anchor function values use only the
/// absolute part `eta_f(i)` of the budget, which is valid for every trial.
#[derive(Debug, Clone)]
pub struct NoisyOracle<F, H> {
    function: F,
    h: H,
    budget: ErrorBudget,
    seed: u64,
    lambda_floor: f64,
    log: Vec<InjectedError>,
}

impl<F: SmoothFunction, H: Prox> NoisyOracle<F, H> {
    pub fn new(function: F, h: H, budget: ErrorBudget, seed: u64, lambda_floor: f64) -> Self {
        NoisyOracle {
            function,
            h,
            budget,
            seed,
            lambda_floor,
            log: Vec::new(),
        }
    }

    pub fn budget(&self) -> &ErrorBudget {
        &self.budget
    }

    pub fn function(&self) -> &F {
        &self.function
    }

    pub fn injected(&self) -> &[InjectedError] {
        &self.log
    }

    fn call_seed(&self, i: usize, kind: EvalKind, lambda: f64) -> u64 {
        let tag = match kind {
            EvalKind::Anchor => 0x5151,
            EvalKind::Trial => 0xA3A3,
        };
        mix(mix(mix(self.seed ^ tag) ^ i as u64) ^ lambda.to_bits())
    }
}

impl<F: SmoothFunction, H: Prox> SmoothOracle for NoisyOracle<F, H> {
    fn dim(&self) -> usize {
        self.function.dim()
    }

    fn anchor(&mut self, x: &Vector, iteration: usize, lambda0: f64) -> Result<InexactEval> {
        let seed = self.call_seed(iteration, EvalKind::Anchor, lambda0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exact_f = self.function.value(x);
        let exact_g = self.function.gradient(x);
        let window = (self.lambda_floor.min(lambda0), lambda0);
        let (g, _) = inject_gradient_error_window(&exact_g, &self.budget, iteration, &self.h, window, x, &mut rng)?;
        let f = inject_function_error(exact_f, &self.budget, iteration, 1.0, 0.0, mix(seed));
        self.log.push(InjectedError {
            iteration,
            kind: EvalKind::Anchor,
            lambda: lambda0,
            f_error: f - exact_f,
            g_error: Some(&g - &exact_g),
        });
        Ok(InexactEval {
            f_value: f,
            gradient: Some(g),
            cost: 1,
        })
    }

    fn trial(&mut self, x_trial: &Vector, iteration: usize, lambda: f64, displacement: f64) -> Result<InexactEval> {
        let seed = self.call_seed(iteration, EvalKind::Trial, lambda);
        let exact_f = self.function.value(x_trial);
        let f = inject_function_error(exact_f, &self.budget, iteration, lambda, displacement, seed);
        self.log.push(InjectedError {
            iteration,
            kind: EvalKind::Trial,
            lambda,
            f_error: f - exact_f,
            g_error: None,
        });
        Ok(InexactEval {
            f_value: f,
            gradient: None,
            cost: 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::ProxFriendly;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn absolute(eta_g: f64, eta_f: f64) -> ErrorBudget {
        ErrorBudget {
            eta_g: EtaSequence::Constant { value: eta_g },
            a: 0.0,
            b: 0.0,
            eta_f: EtaSequence::Constant { value: eta_f },
            c: 0.0,
        }
    }

    #[test]
    fn gradient_condition_examples() {
        let budget = absolute(0.1, 0.0);
        assert!(check_gradient_condition(&v(&[0.0, 0.0]), &budget, 3, 1.0, 5.0));
        assert!(check_gradient_condition(&v(&[0.1, 0.0]), &budget, 0, 1.0, 0.0));
        assert!(!check_gradient_condition(&v(&[0.2, 0.0]), &budget, 0, 1.0, 0.0));
    }

    #[test]
    fn function_condition_examples() {
        let budget = ErrorBudget::new(
            EtaSequence::Zero,
            0.0,
            0.0,
            EtaSequence::PowerLaw { scale: 0.015625, exponent: 2.0 },
            0.0625,
            0.25,
        )
        .unwrap();
        // 0.015625 + 0.0625 / 0.25 * 0.5^2 = 0.078125
        assert!(check_function_condition(0.0, &budget, 0, 0.25, 0.5));
        assert!(check_function_condition(0.078125, &budget, 0, 0.25, 0.5));
        assert!(check_function_condition(-0.078125, &budget, 0, 0.25, 0.5));
        assert!(!check_function_condition(0.08, &budget, 0, 0.25, 0.5));
    }

    #[test]
    fn budget_validation() {
        let z = EtaSequence::Zero;
        assert!(ErrorBudget::new(z, 1.0, 0.0, z, 0.0, 0.5).is_err());
        assert!(ErrorBudget::new(z, 0.5, -1.0, z, 0.0, 0.5).is_err());
        assert!(ErrorBudget::new(z, 0.5, 0.0, z, 0.2, 0.5).is_err());
        assert!(ErrorBudget::new(z, 0.5, 0.0, z, 0.125, 0.5).is_ok());
        assert!(ErrorBudget::new(EtaSequence::PowerLaw { scale: -1.0, exponent: 2.0 }, 0.0, 0.0, z, 0.0, 0.5).is_err());
        // square-summable needs exponent > 1/2, summable needs exponent > 1
        assert!(ErrorBudget::new(EtaSequence::from_deltas(1.0, 0.6), 0.0, 0.0, z, 0.0, 0.5).is_ok());
        assert!(ErrorBudget::new(EtaSequence::from_deltas(1.0, 0.5), 0.0, 0.0, z, 0.0, 0.5).is_err());
        assert!(ErrorBudget::new(z, 0.0, 0.0, EtaSequence::from_deltas(1.0, 1.0), 0.0, 0.5).is_err());
        assert!(ErrorBudget::new(EtaSequence::Constant { value: 1e-3 }, 0.0, 0.0, z, 0.0, 0.5).is_err());
    }

    #[test]
    fn eta_from_deltas() {
        let s = EtaSequence::from_deltas(2.0, 1.2);
        assert!((s.at(0) - 1e-2).abs() < 1e-18);
        assert!((s.at(9) - 1e-2 * 10f64.powf(-1.2)).abs() < 1e-18);
    }

    #[test]
    fn zero_budget_injectors_are_identities() {
        let budget = ErrorBudget::exact();
        let g = v(&[1.0, -2.0, 3.0]);
        let x = v(&[0.5, 0.5, 0.5]);
        let (noisy, ok) = inject_gradient_error(&g, &budget, 0, &ProxFriendly::IndicatorNonneg, 1.0, &x, 9).unwrap();
        assert!(ok);
        assert_eq!(noisy, g);
        assert_eq!(inject_function_error(1.25, &budget, 0, 1.0, 2.0, 9), 1.25);
    }

    #[test]
    fn absolute_gradient_budget_is_respected() {
        let budget = absolute(0.5, 0.0);
        let g = v(&[1.0, -2.0]);
        let x = v(&[0.0, 3.0]);
        for seed in 0..50 {
            let (noisy, ok) = inject_gradient_error(&g, &budget, 0, &ProxFriendly::Zero, 1.0, &x, seed).unwrap();
            assert!(ok);
            assert!((&noisy - &g).norm() <= 0.5 + 1e-15);
        }
    }

    #[test]
    fn relative_gradient_budget_scales_with_noisy_gradient() {
        let budget = ErrorBudget::new(EtaSequence::Zero, 0.5, 0.0, EtaSequence::Zero, 0.0, 0.5).unwrap();
        let g = v(&[1.0, -2.0, 0.5]);
        let x = v(&[0.0, 3.0, 1.0]);
        let mut nonzero = 0;
        for seed in 0..50 {
            let (noisy, _) = inject_gradient_error(&g, &budget, 0, &ProxFriendly::Zero, 0.7, &x, seed).unwrap();
            let err = &noisy - &g;
            // with h = 0 the displacement is lambda * |g_noisy|
            assert!(err.norm() <= 0.5 * noisy.norm() * (1.0 + 1e-12));
            assert!(check_gradient_condition(&err, &budget, 0, 0.7, 0.7 * noisy.norm()));
            if err.norm() > 0.0 {
                nonzero += 1;
            }
        }
        assert!(nonzero > 40);
    }

    #[test]
    fn function_injector_bounds() {
        let sat = absolute(0.0, 0.1);
        for seed in 0..20 {
            let f = inject_function_error(2.0, &sat, 0, 1.0, 0.0, seed);
            assert!((f - 2.0).abs() <= 0.1);
        }
        assert_eq!(sat.function_bound(0, 1.0, 0.0), 0.1);

        let rel = ErrorBudget::new(EtaSequence::Zero, 0.0, 0.0, EtaSequence::Zero, 0.025, 0.5).unwrap();
        assert!((rel.function_bound(0, 2.0, 2.0) - 0.05).abs() < 1e-17);
        for seed in 0..20 {
            let f = inject_function_error(0.0, &rel, 0, 2.0, 2.0, seed);
            assert!(f.abs() <= 0.05);
        }
    }

    #[test]
    fn noisy_oracle_is_deterministic() {
        struct Quad;
        impl SmoothFunction for Quad {
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, x: &Vector) -> f64 {
                0.5 * x.norm_squared()
            }
            fn gradient(&self, x: &Vector) -> Vector {
                x.clone()
            }
        }
        let budget = ErrorBudget::new(EtaSequence::from_deltas(1.0, 1.0), 0.3, 0.2, EtaSequence::from_deltas(1.0, 2.0), 0.01, 0.1).unwrap();
        let mut o1 = NoisyOracle::new(Quad, ProxFriendly::Zero, budget.clone(), 5, 1e-3);
        let mut o2 = NoisyOracle::new(Quad, ProxFriendly::Zero, budget, 5, 1e-3);
        let x = v(&[1.0, 2.0]);
        assert_eq!(o1.anchor(&x, 3, 1.0).unwrap(), o2.anchor(&x, 3, 1.0).unwrap());
        assert_eq!(o1.trial(&x, 3, 0.5, 0.2).unwrap(), o2.trial(&x, 3, 0.5, 0.2).unwrap());
    }

    fn budget_strategy() -> impl Strategy<Value = ErrorBudget> {
        (0.0f64..0.5, 0.0f64..0.9, 0.0f64..2.0, 0.0f64..0.5, 0.0f64..0.1).prop_map(|(eg, a, b, ef, c)| {
            ErrorBudget::new(
                EtaSequence::PowerLaw { scale: eg, exponent: 1.0 },
                a,
                b,
                EtaSequence::PowerLaw { scale: ef, exponent: 2.0 },
                c,
                0.5,
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn injected_gradient_passes_its_own_check(
            budget in budget_strategy(),
            g in prop::collection::vec(-3.0f64..3.0, 4),
            x in prop::collection::vec(-3.0f64..3.0, 4),
            lambda in 0.01f64..5.0,
            i in 0usize..50,
            seed in any::<u64>(),
            nonneg in any::<bool>(),
        ) {
            let h = if nonneg { ProxFriendly::IndicatorNonneg } else { ProxFriendly::Zero };
            let g = Vector::from_vec(g);
            let x = h.prox(1.0, &Vector::from_vec(x)).unwrap();
            let (noisy, ok) = inject_gradient_error(&g, &budget, i, &h, lambda, &x, seed).unwrap();
            prop_assert!(ok);
            let disp = gradient_mapping(&h, lambda, &x, &noisy).unwrap().displacement();
            prop_assert!(check_gradient_condition(&(noisy - g), &budget, i, lambda, disp));
        }

        #[test]
        fn windowed_gradient_holds_across_window(
            budget in budget_strategy(),
            g in prop::collection::vec(-3.0f64..3.0, 3),
            x in prop::collection::vec(0.0f64..3.0, 3),
            lambda_hi in 0.1f64..5.0,
            shrink in prop::collection::vec(0.0f64..1.0, 5),
            seed in any::<u64>(),
        ) {
            let h = ProxFriendly::IndicatorNonneg;
            let g = Vector::from_vec(g);
            let x = Vector::from_vec(x);
            let lambda_lo = lambda_hi * 1e-3;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (noisy, _) = inject_gradient_error_window(&g, &budget, 0, &h, (lambda_lo, lambda_hi), &x, &mut rng).unwrap();
            let err = &noisy - &g;
            for s in shrink {
                let lambda = lambda_lo + s * (lambda_hi - lambda_lo);
                let disp = gradient_mapping(&h, lambda, &x, &noisy).unwrap().displacement();
                prop_assert!(err.norm_squared() <= budget.gradient_bound_sq(0, lambda, disp) * (1.0 + 1e-9) + 1e-15);
            }
        }

        #[test]
        fn injected_function_passes_its_own_check(
            budget in budget_strategy(),
            f in -10.0f64..10.0,
            lambda in 0.01f64..5.0,
            disp in 0.0f64..3.0,
            i in 0usize..50,
            seed in any::<u64>(),
        ) {
            let noisy = inject_function_error(f, &budget, i, lambda, disp, seed);
            prop_assert!(check_function_condition(noisy - f, &budget, i, lambda, disp * (1.0 + 1e-12)) || (noisy - f).abs() <= budget.function_bound(i, lambda, disp) * (1.0 + 1e-12));
        }
    }
}
