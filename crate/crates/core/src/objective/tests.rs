use super::*;
use crate::product::{FeasibleSet, ProductTangent};
use crate::random::{self, SuiteRng};
use crate::spd::{self, exp_map, log_map, OrderInterval, SymTangent};
use crate::system::{henon, henon_region, GridSpec, Henon};
use nalgebra::DVector;
use rand::Rng;
use std::sync::Arc;

const BASELINE: f64 = 1.951140849266661;

/// Independent largest singular value: √ of the top eigenvalue of MᵀM via
/// the 2×2 characteristic polynomial.
fn top_singular_2x2(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    let tr = g[(0, 0)] + g[(1, 1)];
    let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    ((tr + (tr * tr - 4.0 * det).sqrt()) / 2.0).sqrt()
}

/// Σ_k of ζ = p^{1/2} A p^{-1/2} through the full SVD (independent of the
/// closed form used on the hot path).
fn j2(p: &SpdPoint, a: &DMatrix<f64>, k: usize) -> f64 {
    let z = p.sqrt() * a * p.inv_sqrt();
    let mut sv: Vec<f64> = z.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv[..k].iter().map(|v| v.log2()).sum()
}

fn unit_tangent(rng: &mut SuiteRng, p: &SpdPoint) -> SymTangent {
    let h = random::tangent(rng, p.dim());
    let n = spd::norm(p, &h).unwrap();
    h.scale(1.0 / n)
}

fn gap_ok(p: &SpdPoint, a: &DMatrix<f64>, k: usize, rel: f64) -> bool {
    let sv = singular_values(&(p.sqrt() * a * p.inv_sqrt()));
    sv[k - 1] - sv[k] > rel * sv[0]
}

fn random_region_point(rng: &mut SuiteRng) -> Vec<f64> {
    henon_region().point_at(rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0)).to_vec()
}

fn henon_arc() -> Arc<dyn SmoothMap> {
    Arc::new(Henon::default())
}

/// Linear map with a constant Jacobian.
struct Linear(DMatrix<f64>);

impl SmoothMap for Linear {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let y = &self.0 * DVector::from_column_slice(x);
        out.copy_from_slice(y.as_slice());
    }
    fn jacobian_into(&self, _x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.0[(i, j)];
            }
        }
    }
}

#[test]
fn metric_at_examples() {
    let basis = MonomialBasis::new(2, 2).unwrap();
    let mut rng = random::rng(10);
    let p = random::spd(&mut rng, 2, 0.5);
    let zero = MetricParams::new(DVector::zeros(5), p.clone());
    assert!((metric_at(&zero, &basis, &[0.7, -1.2]).unwrap().mat() - p.mat()).norm() < 1e-15);

    // r(x) = x with x = ln 2
    let mut a = DVector::zeros(5);
    a[0] = 1.0;
    let params = MetricParams::new(a.clone(), p.clone());
    let m = metric_at(&params, &basis, &[2f64.ln(), 0.3]).unwrap();
    assert!((m.mat() - p.mat() * 2.0).norm() < 1e-14);

    let x = [0.4, -0.9];
    let r = basis.eval(a.as_slice(), &x).unwrap();
    let det = metric_at(&params, &basis, &x).unwrap().mat().determinant();
    assert!((det - (2.0 * r).exp() * p.mat().determinant()).abs() < 1e-12);

    a[0] = 1000.0;
    let huge = MetricParams::new(a, p);
    assert!(matches!(metric_at(&huge, &basis, &[1.0, 0.0]), Err(Error::NumericalDomain(_))));
}

#[test]
fn sigma_examples_at_origin() {
    let h = Henon::default();
    let basis = MonomialBasis::new(2, 4).unwrap();
    let id = MetricParams::identity(14, 2);
    let x = [0.0, 0.0];
    let s = |k, s| sigma_ks(&id, &basis, &h, &x, ObjectiveIndex::fractional(k, s, 2).unwrap()).unwrap();
    assert_eq!(s(0, 0.0), 0.0);
    assert!(s(1, 0.0).abs() < 1e-15);
    assert!((s(2, 0.0) - 0.3f64.log2()).abs() < 1e-14);
    assert!((s(2, 0.0) + 1.7370).abs() < 1e-4);
    // Σ_{k+s} = sΣ_{k+1} + (1−s)Σ_k
    let y = [0.8, -0.4];
    let direct = sigma_ks(&id, &basis, &h, &y, ObjectiveIndex::fractional(1, 0.3, 2).unwrap()).unwrap();
    let s1 = sigma_ks(&id, &basis, &h, &y, ObjectiveIndex::fractional(1, 0.0, 2).unwrap()).unwrap();
    let s2 = sigma_ks(&id, &basis, &h, &y, ObjectiveIndex::fractional(2, 0.0, 2).unwrap()).unwrap();
    assert!((direct - (0.3 * s2 + 0.7 * s1)).abs() < 1e-14);
}

#[test]
fn index_validation() {
    assert!(ObjectiveIndex::fractional(2, 0.5, 2).is_err());
    assert!(ObjectiveIndex::fractional(3, 0.0, 2).is_err());
    assert!(ObjectiveIndex::fractional(1, 1.0, 2).is_err());
    assert!(ObjectiveIndex::fractional(1, -0.1, 2).is_err());
    assert!(ObjectiveIndex::fractional(2, 0.0, 2).is_ok());
}

#[test]
fn split_equals_direct_on_random_inputs() {
    let h = henon(1.4, 0.3);
    let basis = MonomialBasis::new(2, 4).unwrap();
    let mut rng = random::rng(11);
    for _ in 0..500 {
        let a = DVector::from_fn(14, |_, _| rng.random_range(-0.3..0.3));
        let params = MetricParams::new(a, random::spd(&mut rng, 2, 0.7));
        let x = random_region_point(&mut rng);
        let idx = match rng.random_range(0..4) {
            0 => ObjectiveIndex::Restoration,
            1 => ObjectiveIndex::fractional(2, 0.0, 2).unwrap(),
            _ => ObjectiveIndex::fractional(rng.random_range(0..2), rng.random_range(0.0..1.0), 2).unwrap(),
        };
        // For restoration both paths take the max over k of their own Σ_k.
        let split = j_value(&params, &basis, &h, &x, idx).unwrap();
        let direct = sigma_ks(&params, &basis, &h, &x, idx).unwrap();
        assert!((split - direct).abs() < 1e-10, "{split} vs {direct}");
    }
}

#[test]
fn fast_kernel_matches_split_path() {
    let basis = MonomialBasis::new(2, 4).unwrap();
    let h = Henon::default();
    let mut rng = random::rng(12);
    for idx in [ObjectiveIndex::Restoration, ObjectiveIndex::fractional(1, 0.45, 2).unwrap()] {
        let prob = SingularValueProblem::on_region(
            henon_arc(),
            henon_region(),
            GridSpec::new(10, false).unwrap(),
            basis.clone(),
            idx,
        )
        .unwrap();
        for _ in 0..200 {
            let a = DVector::from_fn(14, |_, _| rng.random_range(-0.5..0.5));
            let params = MetricParams::new(a, random::spd(&mut rng, 2, 0.7));
            let x = random_region_point(&mut rng);
            let fast = prob.value_at(&params, &x).unwrap().0;
            let slow = j_value(&params, &basis, &h, &x, idx).unwrap();
            assert!((fast - slow).abs() < 1e-10);
        }
    }
}

#[test]
fn baseline_at_identity_metric() {
    let basis = MonomialBasis::new(2, 4).unwrap();
    let grid = GridSpec::new(1000, true).unwrap();
    let gm = maximize_over_region(
        &MetricParams::identity(14, 2),
        &basis,
        henon_arc(),
        &henon_region(),
        &grid,
        ObjectiveIndex::Restoration,
    )
    .unwrap();
    assert!((gm.value - BASELINE).abs() < 1e-9, "{}", gm.value);
    assert_eq!(gm.uv, Some((0.0, 0.0)));
    assert_eq!(gm.x, vec![-1.862, 1.96]);
    assert_eq!(gm.active_k, 1);

    let a_corner = Henon::default().jacobian(&[-1.862, 1.96]);
    assert!((top_singular_2x2(&a_corner).log2() - BASELINE).abs() < 1e-12);
}

#[test]
fn refined_value_dominates_coarse() {
    let basis = MonomialBasis::new(2, 2).unwrap();
    let mut rng = random::rng(13);
    let idx = ObjectiveIndex::fractional(1, 0.45, 2).unwrap();
    for _ in 0..5 {
        let params = MetricParams::new(
            DVector::from_fn(5, |_, _| rng.random_range(-0.3..0.3)),
            random::spd(&mut rng, 2, 0.5),
        );
        let coarse = maximize_over_region(&params, &basis, henon_arc(), &henon_region(), &GridSpec::new(40, false).unwrap(), idx)
            .unwrap();
        let refined = maximize_over_region(&params, &basis, henon_arc(), &henon_region(), &GridSpec::new(40, true).unwrap(), idx)
            .unwrap();
        assert!(refined.value >= coarse.value);
    }
}

#[test]
fn constant_objective_picks_first_point() {
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.0, 0.25]);
    let expected = top_singular_2x2(&a).log2();
    let map: Arc<dyn SmoothMap> = Arc::new(Linear(a));
    let basis = MonomialBasis::new(2, 1).unwrap();
    let region = henon_region();
    let gm = maximize_over_region(
        &MetricParams::identity(2, 2),
        &basis,
        map,
        &region,
        &GridSpec::new(20, true).unwrap(),
        ObjectiveIndex::fractional(1, 0.0, 2).unwrap(),
    )
    .unwrap();
    assert!((gm.value - expected).abs() < 1e-12);
    assert_eq!(gm.uv, Some((0.0, 0.0)));
}

#[test]
fn grid_max_independent_of_thread_count() {
    let basis = MonomialBasis::new(2, 4).unwrap();
    let mut rng = random::rng(14);
    let params = MetricParams::new(
        DVector::from_fn(14, |_, _| rng.random_range(-0.2..0.2)),
        random::spd(&mut rng, 2, 0.4),
    );
    let prob = SingularValueProblem::on_region(
        henon_arc(),
        henon_region(),
        GridSpec::new(120, true).unwrap(),
        basis,
        ObjectiveIndex::Restoration,
    )
    .unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| prob.maximize(&params).unwrap())
    };
    let one = run(1);
    for t in [2, 3, 7] {
        assert_eq!(run(t), one);
    }
}

#[test]
fn sylvester_solution_satisfies_equation() {
    let mut rng = random::rng(15);
    for n in [2, 3, 4] {
        let p = random::spd(&mut rng, n, 0.8);
        let e = random::sym_matrix(&mut rng, n, 1.0);
        let x = solve_sqrt_sylvester(&p, &e);
        let ps = p.sqrt();
        assert!((&ps * &x + &x * &ps - &e).norm() < 1e-12 * (1.0 + e.norm()));
    }
}

#[test]
fn subgrad_spd_matches_finite_differences() {
    let mut rng = random::rng(16);
    let eps = 1e-5;
    let mut tested = 0;
    while tested < 100 {
        let n = if tested % 2 == 0 { 2 } else { 3 };
        let p = random::spd(&mut rng, n, 0.6);
        let a = random::invertible(&mut rng, n);
        let k = rng.random_range(1..n);
        if !gap_ok(&p, &a, k, 0.05) {
            continue;
        }
        let (g, gap) = subgrad_spd(&p, &a, k).unwrap();
        assert!(gap > 0.0);
        for _ in 0..3 {
            let h = unit_tangent(&mut rng, &p);
            let fp = j2(&exp_map(&p, &h.scale(eps)).unwrap(), &a, k);
            let fm = j2(&exp_map(&p, &h.scale(-eps)).unwrap(), &a, k);
            let fd = (fp - fm) / (2.0 * eps);
            let an = spd::inner(&p, &g, &h).unwrap();
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "n={n} k={k}: fd {fd} vs {an}");
        }
        tested += 1;
    }
}

#[test]
fn subgrad_spd_full_index_is_zero() {
    let mut rng = random::rng(17);
    for n in [2, 3] {
        for _ in 0..10 {
            let p = random::spd(&mut rng, n, 0.6);
            let a = random::invertible(&mut rng, n);
            let (g, gap) = subgrad_spd(&p, &a, n).unwrap();
            assert!(g.mat().norm() < 1e-10);
            let sv = singular_values(&(p.sqrt() * &a * p.inv_sqrt()));
            assert!((gap - sv[n - 1]).abs() < 1e-12);
            // Σ_n is constant in p
            let q = random::spd(&mut rng, n, 0.6);
            assert!((j2(&p, &a, n) - j2(&q, &a, n)).abs() < 1e-10);
        }
        let (g0, gap0) = subgrad_spd(&SpdPoint::identity(n), &DMatrix::identity(n, n), 0).unwrap();
        assert_eq!(g0.mat().norm(), 0.0);
        assert_eq!(gap0, f64::INFINITY);
    }
}

#[test]
fn subgrad_spd_inequality() {
    let mut rng = random::rng(18);
    for _ in 0..5 {
        let n = 2 + rng.random_range(0..2);
        let p = random::spd(&mut rng, n, 0.5);
        let a = random::invertible(&mut rng, n);
        let k = 1;
        let (g, _) = subgrad_spd(&p, &a, k).unwrap();
        let f0 = j2(&p, &a, k);
        for _ in 0..200 {
            let q = random::spd(&mut rng, n, 1.0);
            let lin = f0 + spd::inner(&p, &g, &log_map(&p, &q).unwrap()).unwrap();
            assert!(j2(&q, &a, k) >= lin - 1e-9);
        }
    }
}

#[test]
fn lipschitz_constant_values_and_sampling() {
    assert!((lipschitz_constant(2) - 2.040279).abs() < 1e-6);
    assert!((lipschitz_constant(1) - 1.0 / LN_2).abs() < 1e-15);
    let mut rng = random::rng(19);
    for n in [2, 3] {
        let l = lipschitz_constant(n);
        for _ in 0..2000 {
            let a = random::invertible(&mut rng, n);
            let p = random::spd(&mut rng, n, 0.8);
            let q = random::spd(&mut rng, n, 0.8);
            let k = rng.random_range(1..=n);
            let d = spd::dist(&p, &q).unwrap();
            assert!((j2(&p, &a, k) - j2(&q, &a, k)).abs() <= l * d + 1e-10);
        }
    }
}

#[test]
fn wedin_bound_examples() {
    let mut rng = random::rng(20);
    let a = random::invertible(&mut rng, 2);
    let p = SpdPoint::identity(2);
    // ‖I‖_F² = n at p = I
    assert!((p.sqrt().norm() * p.inv_sqrt().norm() - 2.0).abs() < 1e-14);
    let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
    assert_eq!(wedin_error_bound(&p, &diag, &diag, 1).unwrap(), 0.0);
    assert!(matches!(wedin_error_bound(&p, &a, &a, 2), Err(Error::InvalidArgument(_))));
    let flat = DMatrix::<f64>::identity(2, 2);
    assert!(matches!(wedin_error_bound(&p, &flat, &flat, 1), Err(Error::GapViolation(_))));
}

#[test]
fn wedin_bound_dominates_subgradient_change() {
    let mut rng = random::rng(21);
    let mut tested = 0;
    while tested < 300 {
        let n = 2 + tested % 2;
        let p = random::spd(&mut rng, n, 0.5);
        let ax = random::invertible(&mut rng, n);
        let ay = &ax + random::gaussian_matrix(&mut rng, n, n) * 0.01;
        let k = rng.random_range(1..n);
        let b = match wedin_error_bound(&p, &ax, &ay, k) {
            Ok(b) => b,
            Err(Error::GapViolation(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        let (gx, _) = subgrad_spd(&p, &ax, k).unwrap();
        let (gy, _) = subgrad_spd(&p, &ay, k).unwrap();
        let diff = spd::norm(&p, &gx.sub(&gy)).unwrap();
        assert!(diff <= b + 1e-12, "diff {diff} > bound {b}");
        tested += 1;
    }
}

#[test]
fn sigma_vec_examples() {
    assert_eq!(sigma_vec(&DMatrix::identity(3, 3)).unwrap(), vec![0.0; 3]);
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
    assert_eq!(sigma_vec(&d).unwrap(), vec![2.0, 1.0]);
    assert!(sigma_vec(&DMatrix::zeros(2, 2)).is_err());
    let mut rng = random::rng(22);
    for _ in 0..50 {
        let v = sigma_vec(&random::invertible(&mut rng, 4)).unwrap();
        assert!(v.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn majorization_examples() {
    assert!(majorization_leq(&[1.0, 1.0], &[1.0, 1.0]).unwrap());
    assert!(majorization_leq(&[1.0, 1.0], &[2.0, 0.0]).unwrap());
    assert!(!majorization_leq(&[2.0, 0.0], &[1.0, 1.0]).unwrap());
    assert!(!majorization_leq(&[1.0, 0.0], &[1.0, 1.0]).unwrap());
    assert!(majorization_leq(&[0.0, 1.0], &[1.0, 0.0]).is_err());
}

#[test]
fn blended_sigma_vec_is_majorized() {
    let mut rng = random::rng(23);
    for _ in 0..200 {
        let n = 2 + rng.random_range(0..2);
        let a = random::invertible(&mut rng, n);
        let pts: Vec<SpdPoint> = (0..4).map(|_| random::spd(&mut rng, n, 0.7)).collect();
        let theta = [0.25, 0.5, 0.75][rng.random_range(0..3)];
        let (lhs, rhs) = blended_sigma_vec(&pts[0], &pts[1], &pts[2], &pts[3], &a, theta).unwrap();
        assert!(majorization_leq(&lhs, &rhs).unwrap(), "{lhs:?} vs {rhs:?}");
    }
}

#[test]
fn sigma_is_geodesically_convex() {
    let h = Henon::default();
    let basis = MonomialBasis::new(2, 2).unwrap();
    let mut rng = random::rng(24);
    for _ in 0..200 {
        let mk = |rng: &mut SuiteRng| {
            MetricParams::new(DVector::from_fn(5, |_, _| rng.random_range(-0.4..0.4)), random::spd(rng, 2, 0.6))
        };
        let (pp, qq) = (mk(&mut rng), mk(&mut rng));
        let theta = [0.25, 0.5, 0.75][rng.random_range(0..3)];
        let mid = MetricParams::new(
            &pp.a * (1.0 - theta) + &qq.a * theta,
            spd::geodesic(&pp.p, &qq.p, theta).unwrap(),
        );
        let x = random_region_point(&mut rng);
        let idx = ObjectiveIndex::fractional(rng.random_range(0..2), rng.random_range(0.0..1.0), 2).unwrap();
        let f = |m: &MetricParams| sigma_ks(m, &basis, &h, &x, idx).unwrap();
        assert!(f(&mid) <= (1.0 - theta) * f(&pp) + theta * f(&qq) + 1e-9);
    }
}

#[test]
fn restoration_active_index_at_corner() {
    let h = Henon::default();
    let basis = MonomialBasis::new(2, 4).unwrap();
    let id = MetricParams::identity(14, 2);
    let corner = [-1.862, 1.96];
    let cand: Vec<f64> = (0..=2)
        .map(|k| sigma_ks(&id, &basis, &h, &corner, ObjectiveIndex::fractional(k, 0.0, 2).unwrap()).unwrap())
        .collect();
    assert!(cand[1] > cand[0] && cand[1] > cand[2]);

    let prob = SingularValueProblem::on_region(
        henon_arc(),
        henon_region(),
        GridSpec::new(50, false).unwrap(),
        basis,
        ObjectiveIndex::Restoration,
    )
    .unwrap();
    let r = prob.subgradient(&id).unwrap();
    assert_eq!(r.active_k, 1);
    assert_eq!(r.maximizer, corner.to_vec());
    assert!(r.exact_flag);
    assert!((r.value - cand[1]).abs() < 1e-12);
}

#[test]
fn fractional_a_part_below_one() {
    let basis = MonomialBasis::new(2, 2).unwrap();
    let prob = SingularValueProblem::on_region(
        henon_arc(),
        henon_region(),
        GridSpec::new(30, false).unwrap(),
        basis.clone(),
        ObjectiveIndex::fractional(0, 0.6, 2).unwrap(),
    )
    .unwrap();
    let params = MetricParams::identity(5, 2);
    let r = prob.subgradient(&params).unwrap();
    let x = &r.maximizer;
    let fx = Henon::default().eval(x);
    let dm: Vec<f64> = basis
        .coeff_gradient(&fx)
        .unwrap()
        .iter()
        .zip(basis.coeff_gradient(x).unwrap())
        .map(|(u, v)| u - v)
        .collect();
    for (g, d) in r.grad.da.iter().zip(&dm) {
        assert!((g - 0.6 * d / (2.0 * LN_2)).abs() < 1e-14);
    }
}

#[test]
fn product_subgradient_inequality() {
    let basis = MonomialBasis::new(2, 2).unwrap();
    let set = FeasibleSet::new(1.0, OrderInterval::new(0.5, 2.0).unwrap()).unwrap();
    let mut rng = random::rng(25);
    for idx in [ObjectiveIndex::Restoration, ObjectiveIndex::fractional(1, 0.45, 2).unwrap()] {
        let prob = SingularValueProblem::on_region(
            henon_arc(),
            henon_region(),
            GridSpec::new(25, false).unwrap(),
            basis.clone(),
            idx,
        )
        .unwrap();
        let sample = |rng: &mut SuiteRng| {
            let dir = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let a = &dir * (rng.random_range(0.0..1.0) * set.ball_radius() / dir.norm());
            MetricParams::new(a, random::spd_in_interval(rng, 2, set.interval()))
        };
        let x = sample(&mut rng);
        let r = prob.subgradient(&x).unwrap();
        assert!(r.exact_flag);
        for _ in 0..500 {
            let q = sample(&mut rng);
            let step = ProductTangent { da: &q.a - &x.a, dp: log_map(&x.p, &q.p).unwrap() };
            let lin = r.value + r.grad.inner_at(&x, &step).unwrap();
            let fq = prob.maximize(&q).unwrap().value;
            assert!(fq >= lin - 1e-9, "{fq} < {lin}");
        }
    }
}

#[test]
fn points_domain_and_mismatch_errors() {
    let basis = MonomialBasis::new(2, 1).unwrap();
    let pts = vec![vec![0.0, 0.0], vec![-1.862, 1.96], vec![1.0, 0.5]];
    let prob =
        SingularValueProblem::new(henon_arc(), Domain::Points(pts), basis.clone(), ObjectiveIndex::Restoration).unwrap();
    let gm = prob.maximize(&MetricParams::identity(2, 2)).unwrap();
    assert_eq!(gm.x, vec![-1.862, 1.96]);
    assert!((gm.value - BASELINE).abs() < 1e-12);
    assert!(prob.maximize(&MetricParams::identity(3, 2)).is_err());
    assert!(SingularValueProblem::new(henon_arc(), Domain::Points(vec![]), basis, ObjectiveIndex::Restoration).is_err());
}
