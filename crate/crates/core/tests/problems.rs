use apig::oracle::SmoothFunction;
use apig::problems::{make_lasso, make_nnls, make_nonconvex_quartic, SmoothPart, TestProblem};
use apig::prox::{gradient_mapping, stationarity_residual, Prox, ProxFriendly};
use apig::Vector;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problems() -> Vec<TestProblem> {
    vec![
        make_nnls(20, 10, 1).unwrap(),
        make_lasso(30, 12, 0.5, 2).unwrap(),
        make_nonconvex_quartic(8, 3).unwrap(),
    ]
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-half_width..half_width))
}

#[test]
fn nnls_construction() {
    let p = make_nnls(20, 10, 1).unwrap();
    assert!(p.convex);
    assert!(p.lipschitz.unwrap() > 0.0);
    let again = make_nnls(20, 10, 1).unwrap();
    assert_eq!(p.f_star, again.f_star);
    assert!(p.x_star.as_ref().unwrap().iter().all(|&v| v >= 0.0));
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in problems() {
        let n = p.dim();
        for _ in 0..100 {
            let x = random_point(&mut rng, n, 2.0);
            let g = p.smooth.gradient(&x);
            let h = 1e-6;
            let fd = Vector::from_fn(n, |j, _| {
                let mut e = Vector::zeros(n);
                e[j] = h;
                (p.smooth.value(&(&x + &e)) - p.smooth.value(&(&x - &e))) / (2.0 * h)
            });
            let rel = (&fd - &g).norm() / g.norm().max(1.0);
            assert!(rel <= 1e-6, "{}: rel err {rel}", p.name);
        }
    }
}

#[test]
fn lipschitz_bounds_the_finite_difference_hessian() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for p in problems() {
        let n = p.dim();
        let lip = p.lipschitz.unwrap();
        for _ in 0..100 {
            let x = random_point(&mut rng, n, 2.0);
            let h = 1e-5;
            let mut hess = DMatrix::zeros(n, n);
            for j in 0..n {
                let mut e = Vector::zeros(n);
                e[j] = h;
                let col = (p.smooth.gradient(&(&x + &e)) - p.smooth.gradient(&(&x - &e))) / (2.0 * h);
                hess.set_column(j, &col);
            }
            let sym = (&hess + hess.transpose()) * 0.5;
            let spectral = sym.symmetric_eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(spectral <= 1.01 * lip, "{}: {spectral} > 1.01 * {lip}", p.name);
        }
    }
}

#[test]
fn reference_optima_are_fixed_points() {
    for p in problems() {
        let x = p.x_star.clone().unwrap();
        let step = 1.0 / p.lipschitz.unwrap();
        let gm = gradient_mapping(&p.h, step, &x, &p.smooth.gradient(&x)).unwrap();
        assert!(gm.displacement() <= 1e-10, "{}: moved {}", p.name, gm.displacement());
        let r = stationarity_residual(&p.h, 1.0, &x, &p.smooth.gradient(&x)).unwrap();
        assert!(r <= 1e-8, "{}: residual {r}", p.name);
    }
}

#[test]
fn lasso_with_dominant_weight_is_zero() {
    let base = make_lasso(15, 6, 1.0, 4).unwrap();
    let (a, b) = match &base.smooth {
        SmoothPart::LeastSquares { a, b } => (a.clone(), b.clone()),
        _ => unreachable!(),
    };
    let threshold = a.tr_mul(&b).amax();
    let p = make_lasso(15, 6, 1.01 * threshold, 4).unwrap();
    assert!(p.x_star.unwrap().iter().all(|&v| v == 0.0));
}

/// Duality gap of the lasso at `x`, using the scaled residual as dual point.
fn lasso_gap(a: &DMatrix<f64>, b: &Vector, weight: f64, x: &Vector) -> f64 {
    let r = b - a * x;
    let primal = 0.5 * r.norm_squared() + weight * x.lp_norm(1);
    let corr = a.tr_mul(&r).amax();
    let scale = if corr > weight { weight / corr } else { 1.0 };
    let u = &r * scale;
    let dual = 0.5 * b.norm_squared() - 0.5 * (b - &u).norm_squared();
    primal - dual
}

#[test]
fn lasso_duality_gap_certificate() {
    for seed in 0..4 {
        let p = make_lasso(30, 12, 0.5, seed).unwrap();
        let SmoothPart::LeastSquares { a, b } = &p.smooth else { unreachable!() };
        let gap = lasso_gap(a, b, 0.5, p.x_star.as_ref().unwrap());
        assert!(gap <= 1e-8, "seed {seed}: gap {gap}");
        assert!(gap >= -1e-10);
    }
}

#[test]
fn lasso_sparsity_grows_with_weight() {
    let nnz = |w: f64| {
        let p = make_lasso(25, 15, w, 9).unwrap();
        p.x_star.unwrap().iter().filter(|v| v.abs() > 1e-9).count()
    };
    let counts: Vec<usize> = [0.1, 2.0, 8.0].iter().map(|&w| nnz(w)).collect();
    assert!(counts[0] >= counts[1] && counts[1] >= counts[2], "{counts:?}");
}

/// Newton on `v^3 - v + t` from `-sign(t)`, the basin of the lower well.
fn lower_well_root(t: f64) -> f64 {
    let mut v = if t > 0.0 { -1.0 } else { 1.0 };
    for _ in 0..50 {
        v -= (v * v * v - v + t) / (3.0 * v * v - 1.0);
    }
    v
}

#[test]
fn quartic_stationary_points_sit_near_unit_magnitude() {
    let p = make_nonconvex_quartic(10, 5).unwrap();
    assert!(!p.convex);
    assert!(p.h.bounded_domain());
    let SmoothPart::Quartic { tilt } = &p.smooth else { unreachable!() };
    let oracle = tilt.map(lower_well_root);
    let x_star = p.x_star.as_ref().unwrap();
    assert!((&oracle - x_star).amax() <= 1e-10);
    for v in x_star.iter() {
        assert!((v.abs() - 1.0).abs() < 0.2);
    }
    let r = stationarity_residual(&p.h, 1.0, &oracle, &p.smooth.gradient(&oracle)).unwrap();
    assert!(r <= 1e-8);
}

#[test]
fn quartic_is_bounded_on_the_box() {
    let p = make_nonconvex_quartic(5, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f_star = p.f_star.unwrap();
    for _ in 0..200 {
        let x = p.h.prox(1.0, &random_point(&mut rng, 5, 4.0)).unwrap();
        assert!(p.objective(&x) >= f_star - 1e-12);
    }
}

#[test]
fn problems_roundtrip_through_json() {
    for p in problems() {
        let back = TestProblem::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }
    let l1 = ProxFriendly::l1(0.5).unwrap();
    assert_eq!(serde_json::to_value(&l1).unwrap()["kind"], "l1");
}
