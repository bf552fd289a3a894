use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C64 = C<f64>;

fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn genus2() -> PeriodMatrix<f64> {
    PeriodMatrix::from_rows(&[vec![cx(0.0, 1.0), cx(0.1, 0.1)], vec![cx(0.1, 0.1), cx(0.0, 2.0)]]).unwrap()
}

fn random_period_matrix(rng: &mut ChaCha8Rng, g: usize) -> PeriodMatrix<f64> {
    // Im Ω = AᵀA + 0.5·I, Re Ω symmetric in [−0.5, 0.5].
    let draws: Vec<f64> = (0..2 * g * g).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let a = Mat::from_fn(g, g, |i, j| draws[i * g + j]);
    let mut im = a.transpose().matmul(&a);
    for i in 0..g {
        im[(i, i)] += 0.5;
    }
    let mut re_part = Mat::from_fn(g, g, |i, j| draws[g * g + i * g + j]);
    for i in 0..g {
        for j in 0..i {
            re_part[(i, j)] = re_part[(j, i)];
        }
    }
    PeriodMatrix::new(Mat::from_fn(g, g, |i, j| cx(re_part[(i, j)], im[(i, j)]))).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, g: usize) -> Vec<C64> {
    (0..g).map(|_| cx(rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3))).collect()
}

/// Brute lattice sum over the box |n_i| ≤ w.
fn brute_theta(z: &[C64], omega: &PeriodMatrix<f64>, w: i64) -> C64 {
    let g = z.len();
    let mut n = vec![-w; g];
    let mut acc = C64::zero();
    loop {
        let nc: Vec<C64> = n.iter().map(|&k| cx(k as f64, 0.0)).collect();
        let om = omega.omega().matvec(&nc);
        let quad: C64 = om.iter().zip(&nc).map(|(a, b)| a * b).sum();
        let lin: C64 = z.iter().zip(&nc).map(|(a, b)| a * b).sum();
        acc += ((quad + lin * 2.0) * cx(0.0, std::f64::consts::PI)).exp();
        let mut i = 0;
        loop {
            if i == g {
                return acc;
            }
            n[i] += 1;
            if n[i] <= w {
                break;
            }
            n[i] = -w;
            i += 1;
        }
    }
}

#[test]
fn invariants_are_enforced() {
    assert!(PeriodMatrix::from_rows(&[vec![cx(0.0, 1.0), cx(0.1, 0.0)], vec![cx(0.2, 0.0), cx(0.0, 1.0)]]).is_err());
    assert!(PeriodMatrix::scalar(cx(0.0, -1.0)).is_err());
    assert!(matches!(PeriodMatrix::scalar(cx(0.0, 1e-9)), Err(Error::DegenerateImOmega(_))));
}

#[test]
fn value_at_i() {
    let om = PeriodMatrix::scalar(cx(0.0, 1.0)).unwrap();
    let t = theta(&[C64::zero()], &om, 1e-15).unwrap();
    let oracle = brute_theta(&[C64::zero()], &om, 30);
    assert!((t - oracle).norm() < 1e-15);
    assert!((t.re - 1.086_434_811_213_308).abs() < 1e-14 && t.im.abs() < 1e-16);
}

#[test]
fn matches_brute_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for g in 1..=3 {
        for _ in 0..5 {
            let om = random_period_matrix(&mut rng, g);
            let z = random_point(&mut rng, g);
            let t = theta(&z, &om, 1e-13).unwrap();
            let b = brute_theta(&z, &om, if g == 3 { 8 } else { 14 });
            assert!((t - b).norm() < 1e-12, "g={g}: {t} vs {b}");
        }
    }
}

#[test]
fn parity_and_periodicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for g in 1..=3 {
        let om = random_period_matrix(&mut rng, g);
        let z = random_point(&mut rng, g);
        let t = theta(&z, &om, 1e-15).unwrap();
        let neg: Vec<C64> = z.iter().map(|&w| -w).collect();
        assert!((theta(&neg, &om, 1e-15).unwrap() - t).norm() <= 1e-12);
        let shifted: Vec<C64> = z.iter().enumerate().map(|(i, &w)| w + (i as f64 + 1.0)).collect();
        assert!((theta(&shifted, &om, 1e-15).unwrap() - t).norm() <= 1e-12);
    }
}

#[test]
fn quasi_periodicity() {
    let om = genus2();
    let z = vec![cx(0.2, 0.1), cx(-0.3, 0.05)];
    let col: Vec<C64> = (0..2).map(|i| om.omega()[(i, 0)]).collect();
    let shifted: Vec<C64> = z.iter().zip(&col).map(|(a, b)| a + b).collect();
    let lhs = theta(&shifted, &om, 1e-15).unwrap();
    let factor = ((om.omega()[(0, 0)] + z[0] * 2.0) * cx(0.0, -std::f64::consts::PI)).exp();
    let rhs = factor * theta(&z, &om, 1e-15).unwrap();
    assert!((lhs - rhs).norm() <= 1e-10);
}

#[test]
fn doubling_radius_is_within_tolerance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..50 {
        let g = 1 + k % 3;
        let om = random_period_matrix(&mut rng, g);
        let z = random_point(&mut rng, g);
        let tol = 1e-10;
        let r = truncation_radius(&om, tol, 0);
        let a = theta_with_radius(&z, &om, r);
        let b = theta_with_radius(&z, &om, 2.0 * r);
        let t = theta(&z, &om, tol).unwrap();
        assert!((a - b).norm() <= tol);
        assert!((t - b).norm() <= tol);
    }
}

#[test]
fn characteristics_examples() {
    let om = PeriodMatrix::scalar(cx(0.3, 1.2)).unwrap();
    let z = vec![cx(0.1, 0.2)];
    let zero = Characteristics::zero(1);
    assert!((theta_char(&zero, &z, &om, 1e-14).unwrap() - theta(&z, &om, 1e-14).unwrap()).norm() < 1e-14);
    let odd = Characteristics::new(vec![0.5], vec![0.5]).unwrap();
    assert!(theta_char(&odd, &[C64::zero()], &om, 1e-14).unwrap().norm() < 1e-14);
}

#[test]
fn characteristics_two_routes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..20 {
        let g = 1 + k % 3;
        let om = random_period_matrix(&mut rng, g);
        let z = random_point(&mut rng, g);
        let xi = Characteristics::new(
            (0..g).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..g).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let a = theta_char(&xi, &z, &om, 1e-13).unwrap();
        let b = theta_char_shifted_jet(&xi, &z, &om, 0, 1e-13).unwrap().value;
        assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
    }
}

#[test]
fn characteristics_roundtrip_point() {
    let om = genus2();
    let xi = Characteristics::new(vec![0.3, -0.2], vec![0.1, 0.45]).unwrap();
    let z = xi.point(&om);
    let back = Characteristics::from_point(&z, &om);
    for (a, b) in back.a.iter().chain(&back.b).zip(xi.a.iter().chain(&xi.b)) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn gradient_vanishes_at_origin() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for g in 1..=3 {
        let om = random_period_matrix(&mut rng, g);
        let jet = theta_jet(&vec![C64::zero(); g], &om, 3, 1e-14).unwrap();
        assert!(jet.grad.iter().all(|d| d.norm() < 1e-13));
        assert!(jet.third.iter().all(|d| d.norm() < 1e-11));
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for g in 1..=2 {
        let om = random_period_matrix(&mut rng, g);
        let z = random_point(&mut rng, g);
        let jet = theta_jet(&z, &om, 3, 1e-15).unwrap();
        let h = 1e-4;
        let at = |dz: &[C64]| -> ThetaJet<f64> {
            let p: Vec<C64> = z.iter().zip(dz).map(|(a, b)| a + b).collect();
            theta_jet(&p, &om, 2, 1e-15).unwrap()
        };
        for i in 0..g {
            let mut e = vec![C64::zero(); g];
            e[i] = cx(h, 0.0);
            let minus: Vec<C64> = e.iter().map(|&x| -x).collect();
            let (jp, jm) = (at(&e), at(&minus));
            let d1 = (jp.value - jm.value) / (2.0 * h);
            assert!((d1 - jet.grad[i]).norm() <= 1e-5 * jet.grad[i].norm().max(1e-3) + 1e-9);
            for j in 0..g {
                let d2 = (jp.grad[j] - jm.grad[j]) / (2.0 * h);
                assert!((d2 - jet.hess[(i, j)]).norm() <= 1e-5 * jet.hess[(i, j)].norm().max(1.0));
                let d3 = (jp.hess[(j, j)] - jm.hess[(j, j)]) / (2.0 * h);
                let exact = jet.derivative(&[i, j, j]);
                assert!((d3 - exact).norm() <= 1e-5 * exact.norm().max(1.0));
            }
        }
        assert_eq!(theta_derivs(&z, &om, &[0], 1e-15).unwrap(), jet.grad[0]);
    }
}

#[test]
fn hessian_and_third_tensor_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let om = random_period_matrix(&mut rng, 3);
    let z = random_point(&mut rng, 3);
    let jet = theta_jet(&z, &om, 3, 1e-14).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert!((jet.hess[(i, j)] - jet.hess[(j, i)]).norm() <= 1e-12);
            for k in 0..3 {
                let a = jet.derivative(&[i, j, k]);
                assert!((a - jet.derivative(&[k, i, j])).norm() <= 1e-12 * a.norm().max(1.0));
                assert!((a - jet.derivative(&[j, k, i])).norm() <= 1e-12 * a.norm().max(1.0));
            }
        }
    }
}

#[test]
fn log_derivative_matches_fd() {
    let om = PeriodMatrix::scalar(cx(0.0, 1.0)).unwrap();
    let jet = theta_jet(&[C64::zero()], &om, 2, 1e-15).unwrap();
    let h = 1e-3;
    let f = |x: f64| theta(&[cx(x, 0.0)], &om, 1e-15).unwrap().ln();
    let fd = (-f(2.0 * h) + f(h) * 16.0 - f(0.0) * 30.0 + f(-h) * 16.0 - f(-2.0 * h)) / (12.0 * h * h);
    let d = (jet.log_derivative(&[0, 0]) - fd).norm();
    assert!(d < 1e-6, "{d}");
}

#[test]
fn modular_examples() {
    let om = PeriodMatrix::scalar(cx(0.0, 1.0)).unwrap();
    assert!(modular_check(&[C64::zero()], &om, 1e-15).unwrap().residual <= 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let om2 = PeriodMatrix::scalar(cx(0.0, 2.0)).unwrap();
    for _ in 0..5 {
        let z = random_point(&mut rng, 1);
        assert!(modular_check(&z, &om2, 1e-15).unwrap().residual <= 1e-10);
    }
    let g2 = PeriodMatrix::from_rows(&[vec![cx(0.0, 1.0), cx(0.1, 0.0)], vec![cx(0.1, 0.0), cx(0.0, 2.0)]]).unwrap();
    for _ in 0..3 {
        let z = random_point(&mut rng, 2);
        assert!(modular_check(&z, &g2, 1e-15).unwrap().residual <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn periodicity_property(x in -1.0f64..1.0, y in -0.4f64..0.4, m in -3i64..3) {
        let om = PeriodMatrix::scalar(cx(0.2, 0.9)).unwrap();
        let a = theta(&[cx(x, y)], &om, 1e-15).unwrap();
        let b = theta(&[cx(x + m as f64, y)], &om, 1e-15).unwrap();
        prop_assert!((a - b).norm() <= 1e-12);
    }
}
