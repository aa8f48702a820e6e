use apig::apig::{run, stepsize_floor, ApigConfig, ApigResult, LineSearch, Status};
use apig::oracle::{
    check_gradient_condition, EtaSequence, ErrorBudget, EvalKind, ExactOracle, NoisyOracle, SmoothFunction,
};
use apig::problems::{make_nnls, make_nonconvex_quartic, SmoothPart};
use apig::prox::{stationarity_residual, Prox, ProxFriendly};
use apig::Vector;
use proptest::prelude::*;

#[derive(Clone)]
struct Shifted(Vector);

impl SmoothFunction for Shifted {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn value(&self, x: &Vector) -> f64 {
        0.5 * (x - &self.0).norm_squared()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        x - &self.0
    }
}

/// Checks `F(x+) - F(x) <= -(theta lambda / 2) |G|^2 + nu + 2 eta_f` on every record.
fn descent_violations<F: SmoothFunction, H: Prox>(f: &F, h: &H, res: &ApigResult, theta: f64, budget: &ErrorBudget) -> usize {
    let big_f = |x: &Vector| f.value(x) + h.value(x);
    let mut bad = 0;
    for (k, rec) in res.trace.iter().enumerate() {
        let next = res.trace.get(k + 1).map_or(&res.x_next, |r| &r.x);
        let lhs = big_f(next) - big_f(&rec.x);
        let rhs = -0.5 * theta * rec.lambda * rec.g_mapped_norm.powi(2) + rec.nu + 2.0 * budget.eta_f(rec.i);
        if lhs > rhs + 1e-10 * (1.0 + big_f(&rec.x).abs()) {
            bad += 1;
        }
    }
    bad
}

#[test]
fn shifted_quadratic_converges_with_descent() {
    let target = Vector::from_column_slice(&[3.0, -3.0]);
    let f = Shifted(target.clone());
    let config = ApigConfig { epsilon: 1e-8, ..ApigConfig::default() };
    let res = run(&mut ExactOracle(f.clone()), &ProxFriendly::Zero, &config, &Vector::zeros(2)).unwrap();
    assert_eq!(res.status, Status::Converged);
    assert!((&res.x_final - &target).norm() <= 1e-8);
    assert_eq!(descent_violations(&f, &ProxFriendly::Zero, &res, config.theta, &config.budget), 0);
}

/// Plain projected gradient with step `1/L`, run far past convergence.
fn projected_gradient(f: &SmoothPart, lipschitz: f64, n: usize) -> Vector {
    let mut x = Vector::zeros(n);
    for _ in 0..200_000 {
        let next = (&x - f.gradient(&x) / lipschitz).map(|v| v.max(0.0));
        if next == x {
            break;
        }
        x = next;
    }
    x
}

#[test]
fn noisy_nnls_matches_projected_gradient() {
    for seed in [1u64, 2, 3] {
        let p = make_nnls(20, 10, seed).unwrap();
        let budget = ErrorBudget::new(
            EtaSequence::PowerLaw { scale: 1e-2, exponent: 1.5 },
            0.0,
            0.0,
            EtaSequence::PowerLaw { scale: 1e-2, exponent: 1.5 },
            0.0,
            1e-4,
        )
        .unwrap();
        let config = ApigConfig { budget: budget.clone(), epsilon: 1e-6, ..ApigConfig::default() };
        let floor = stepsize_floor(&config, p.lipschitz.unwrap());
        let mut oracle = NoisyOracle::new(p.smooth.clone(), p.h.clone(), budget, seed, floor);
        let res = run(&mut oracle, &p.h, &config, &Vector::zeros(10)).unwrap();
        assert_eq!(res.status, Status::Converged, "seed {seed}");
        let x_ref = projected_gradient(&p.smooth, p.lipschitz.unwrap(), 10);
        assert!((&res.x_final - &x_ref).norm() <= 1e-4, "seed {seed}: {}", (&res.x_final - &x_ref).norm());
    }
}

#[test]
fn quartic_stops_at_a_stationary_point() {
    let eps = 1e-6;
    for seed in 0..5u64 {
        let p = make_nonconvex_quartic(20, seed).unwrap();
        let config = ApigConfig { epsilon: eps, ..ApigConfig::default() };
        let x0 = Vector::from_fn(20, |j, _| 0.3 * ((j as f64) - 9.5) / 10.0);
        let res = run(&mut p.exact_oracle(), &p.h, &config, &x0).unwrap();
        assert_eq!(res.status, Status::Converged);
        let r = stationarity_residual(&p.h, 1.0, &res.x_final, &p.smooth.gradient(&res.x_final)).unwrap();
        assert!(r <= 2.0 * eps, "seed {seed}: {r}");
    }
}

#[test]
fn b2_runs_converge_on_nnls() {
    let p = make_nnls(20, 10, 9).unwrap();
    let config = ApigConfig { line_search: LineSearch::B2, epsilon: 1e-8, ..ApigConfig::default() };
    let res = run(&mut p.exact_oracle(), &p.h, &config, &Vector::zeros(10)).unwrap();
    assert_eq!(res.status, Status::Converged);
    assert!((&res.x_final - p.x_star.as_ref().unwrap()).norm() <= 1e-6);
}

fn noisy_budget(scale: f64, a: f64, b: f64, c: f64) -> ErrorBudget {
    ErrorBudget::new(
        EtaSequence::PowerLaw { scale, exponent: 1.2 },
        a,
        b,
        EtaSequence::PowerLaw { scale, exponent: 1.5 },
        c,
        0.1,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn noisy_runs_honor_every_invariant(
        seed in 0u64..1000,
        scale in 1e-4f64..1e-1,
        a in 0.0f64..0.3,
        b in 0.0f64..0.3,
        c in 0.0f64..0.025,
        quartic in any::<bool>(),
    ) {
        let p = if quartic { make_nonconvex_quartic(6, seed).unwrap() } else { make_nnls(12, 6, seed).unwrap() };
        let lip = p.lipschitz.unwrap();
        let budget = noisy_budget(scale, a, b, c);
        let config = ApigConfig { theta: 0.1, budget: budget.clone(), epsilon: 1e-5, max_outer_iters: 3000, ..ApigConfig::default() };
        let floor = stepsize_floor(&config, lip);
        let mut oracle = NoisyOracle::new(p.smooth.clone(), p.h.clone(), budget.clone(), seed, floor);
        let res = run(&mut oracle, &p.h, &config, &Vector::zeros(6)).unwrap();

        prop_assert!(res.status != Status::LsFailure);
        prop_assert_eq!(descent_violations(&p.smooth, &p.h, &res, config.theta, &budget), 0);
        for rec in &res.trace {
            prop_assert!(rec.lambda >= floor * (1.0 - 1e-12) && rec.lambda <= config.lambda_max);
            prop_assert!(rec.ls_trials <= config.ls_cap());
        }
        if res.status == Status::Converged {
            prop_assert!(res.trace.last().unwrap().delta_g <= config.epsilon);
        }
        // Every anchor gradient error fits the budget at the stepsize that was accepted.
        let anchors = oracle.injected().iter().filter(|e| e.kind == EvalKind::Anchor);
        for (err, rec) in anchors.zip(&res.trace) {
            prop_assert_eq!(err.iteration, rec.i);
            let disp = rec.lambda * rec.g_mapped_norm;
            prop_assert!(check_gradient_condition(err.g_error.as_ref().unwrap(), &budget, rec.i, rec.lambda, disp));
        }
    }
}
