use gpcond::barrier::{DomainSpec, InteriorPoint};
use gpcond::condition::{self, Polytope};
use gpcond::ipm::{self, SolveParams};
use gpcond::reductions::{self, ScalingConvention, ScalingProblem};
use gpcond::GpInstance;
use gpcond_oracle::{self as oracle, generate, precise};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(seed: u64, n: usize, k: usize) -> GpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = generate::well_conditioned(&mut rng, n, k);
    GpInstance::from_parts(raw.exponents, raw.coefficients, raw.shift).unwrap()
}

fn interior_point(spec: &DomainSpec, rng: &mut ChaCha8Rng) -> InteriorPoint {
    let start = spec.default_start();
    let x = DVector::<f64>::from_fn(spec.m(), |_, _| rng.gen_range(-0.3..0.3));
    let z = start.z.map(|v| v * rng.gen_range(0.5..1.5));
    let t = start.t + rng.gen_range(0.0..0.5);
    let p = InteriorPoint { x, z, t };
    if spec.check_feasible(&p).is_ok() {
        p
    } else {
        start
    }
}

#[test]
fn objective_matches_high_precision() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..10 {
        let inst = random_instance(seed, 3, 6);
        let x = DVector::<f64>::from_fn(3, |_, _| rng.gen_range(-40.0..40.0));
        let exact = precise::log_sum_exp(inst.exponents(), inst.coefficients(), inst.shift(), &x);
        let got = inst.evaluate_objective(&x).unwrap();
        assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1.0), "{got} vs {exact}");
    }
}

#[test]
fn barrier_matches_high_precision() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for seed in 0..10 {
        let inst = random_instance(seed, 3, 5);
        for radius in [None, Some(3.0)] {
            let spec = match radius {
                Some(r) => DomainSpec::with_radius(&inst, r).unwrap(),
                None => DomainSpec::well_conditioned(&inst),
            };
            let p = interior_point(&spec, &mut rng);
            let exact = precise::barrier_value(
                inst.exponents(),
                inst.coefficients(),
                inst.shift(),
                spec.basis().matrix(),
                &p.x,
                &p.z,
                p.t,
                radius,
            )
            .unwrap();
            let got = spec.value(&p).unwrap();
            assert!((got - exact).abs() <= 1e-10 * exact.abs().max(1.0), "{got} vs {exact}");
        }
    }
}

#[test]
fn barrier_is_self_concordant_along_random_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for seed in 0..8 {
        let inst = random_instance(seed, 2, 4);
        let spec = DomainSpec::with_radius(&inst, 4.0).unwrap();
        let (m, k) = (spec.m(), spec.k());
        for _ in 0..10 {
            let p = interior_point(&spec, &mut rng);
            let v = p.to_vector();
            let h = DVector::<f64>::from_fn(v.len(), |_, _| rng.gen_range(-1.0..1.0));
            let hess = spec.hessian(&p).unwrap();
            let second = h.dot(&(&hess * &h));
            let h = h / second.sqrt();
            let eps = 1e-4;
            let at = |s: f64| {
                let q = InteriorPoint::from_vector(&(&v + &h * s), m, k);
                let hs = spec.hessian(&q).unwrap();
                h.dot(&(&hs * &h))
            };
            let third = (at(eps) - at(-eps)) / (2.0 * eps);
            worst = worst.max(third.abs() / 2.0);
        }
    }
    assert!(worst <= 1.0 + 1e-3, "self-concordance ratio {worst}");
}

#[test]
fn newton_decrement_of_gradient_is_bounded_by_complexity_parameter() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..8 {
        let inst = random_instance(seed, 3, 6);
        for spec in [DomainSpec::well_conditioned(&inst), DomainSpec::with_radius(&inst, 5.0).unwrap()] {
            for _ in 0..10 {
                let p = interior_point(&spec, &mut rng);
                let g = spec.gradient(&p).unwrap();
                let model = spec.local_model(&p).unwrap();
                let lambda2 = model.decrement(&g).powi(2);
                assert!(lambda2 <= spec.complexity_parameter() + 1e-8, "{lambda2} > nu");
            }
        }
    }
}

#[test]
fn facets_agree_with_support_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..15 {
        let n = rng.gen_range(1..=3);
        let k = rng.gen_range(3..=8);
        let raw = generate::integral(&mut rng, n, k);
        let poly = match Polytope::new(&raw.exponents) {
            Ok(p) => p,
            Err(gpcond::Error::PolytopeIsPoint) => continue,
            Err(e) => panic!("{e}"),
        };
        let supports: Vec<Vec<usize>> = poly.facets().iter().map(|f| f.support.clone()).collect();
        assert!(oracle::support_consistency(&raw.exponents, &supports, 200, 11));
    }
}

#[test]
fn solver_matches_reference_minimizer() {
    for seed in 0..6 {
        let inst = random_instance(100 + seed, 2, 5);
        let sol = ipm::solve_gp_wc(&inst, &SolveParams::new(1e-6)).unwrap();
        let reference = oracle::reference_minimize(inst.exponents(), inst.coefficients(), inst.shift(), 1e-12, None).unwrap();
        assert!(sol.report.f_theta - reference.f_star <= 1e-6);
        assert!(sol.report.f_theta - reference.f_star >= -1e-12);
    }
}

#[test]
fn scaling_agrees_with_sinkhorn() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = generate::positive_matrix(&mut rng, 4, 5);
    let r = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
    let c = DVector::from_element(5, 0.2);
    let sp = ScalingProblem::new(m.clone(), r.clone(), c.clone()).unwrap();
    let inst = reductions::matrix_scaling_instance(&sp).unwrap();
    let sol = ipm::solve_scaling(&inst, &SolveParams::new(0.5).with_epsilon(1e-7), ipm::SolveMode::WellConditioned).unwrap();
    let res = reductions::extract_scaling(&sp, &sol.x, ScalingConvention::Sum).unwrap();
    assert!(res.residual <= 1e-7);
    let (x, y, _) = oracle::sinkhorn(&m, &r, &c, 100_000, 1e-13).unwrap();
    let sk = DMatrix::from_fn(4, 5, |i, j| (x[i] + y[j]).exp() * m[(i, j)]);
    let scaled = &res.scaled / res.scaled.sum();
    let sk = &sk / sk.sum();
    assert!((scaled - sk).amax() <= 1e-6);
}

#[test]
fn balancing_agrees_with_osborne() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let m = generate::positive_matrix(&mut rng, 4, 4);
    let inst = reductions::matrix_balancing_instance(&m).unwrap();
    let sol = ipm::solve_scaling(&inst, &SolveParams::new(0.5).with_epsilon(1e-8), ipm::SolveMode::WellConditioned).unwrap();
    let ours = reductions::extract_balancing(&m, &sol.x).unwrap();
    assert!(ours.imbalance <= 1e-6, "imbalance {}", ours.imbalance);
    let (x, _) = oracle::osborne(&m, 100_000, 1e-12).unwrap();
    let theirs = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { m[(i, j)] * (x[i] - x[j]).exp() });
    let a = &ours.balanced / ours.balanced.sum();
    let b = &theirs / theirs.sum();
    let a = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { a[(i, j)] });
    assert!((a - b).amax() <= 1e-6);
}

#[test]
fn dual_distribution_reproduces_shift_at_optimum() {
    for seed in 0..5 {
        let inst = random_instance(200 + seed, 3, 7);
        let reference = oracle::reference_minimize(inst.exponents(), inst.coefficients(), inst.shift(), 1e-12, None).unwrap();
        let p = reductions::dual_distribution(&inst, &reference.x_star).unwrap();
        let mean = reductions::dual_mean(&inst, &p);
        assert!((mean - inst.shift()).norm() <= 1e-9);
        let kl = reductions::kl_divergence(&p, inst.coefficients());
        assert!((reference.f_star + kl).abs() <= 1e-9);
    }
}

#[test]
fn gradient_bound_matches_enclosing_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for seed in 0..5 {
        let inst = random_instance(300 + seed, 3, 6);
        let big_r = condition::compute_big_r_theta(inst.exponents(), inst.shift());
        for _ in 0..10 {
            let x = DVector::<f64>::from_fn(3, |_, _| rng.gen_range(-5.0..5.0));
            assert!(inst.gradient(&x).unwrap().norm() <= big_r + 1e-12);
        }
    }
}
