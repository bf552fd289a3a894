use super::*;
use crate::quadrature::spectral_derivative;
use proptest::prelude::*;

type C64 = C<f64>;

fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn two_coeff() -> ExteriorMap<f64> {
    ExteriorMap::new(1.0, C64::zero(), vec![cx(0.2, 0.0), cx(0.1, 0.0)]).unwrap()
}

#[test]
fn eval_g_examples() {
    assert_eq!(ExteriorMap::<f64>::disk(1.0).eval_g(cx(2.0, 0.0)).unwrap(), cx(2.0, 0.0));
    assert!((ExteriorMap::<f64>::ellipse(1.0, 0.3).eval_g(cx(1.0, 0.0)).unwrap() - cx(1.3, 0.0)).norm() < 1e-15);
    let m = ExteriorMap::new(2.0, cx(1.0, 0.0), vec![cx(0.5, 0.0)]).unwrap();
    assert!((m.eval_g(cx(0.0, 1.0)).unwrap() - cx(1.0, 1.5)).norm() < 1e-15);
    assert!(m.eval_g(cx(0.5, 0.0)).is_err());
}

#[test]
fn rejects_bad_leading_coefficient() {
    assert!(ExteriorMap::new(0.0, C64::zero(), vec![]).is_err());
    assert!(ExteriorMap::new(-1.0, C64::zero(), vec![]).is_err());
}

#[test]
fn inverse_examples() {
    let id = ExteriorMap::<f64>::disk(1.0);
    assert!((id.eval_inverse(cx(3.0, 0.0), 1e-14).unwrap() - cx(3.0, 0.0)).norm() < 1e-14);
    let e = ExteriorMap::<f64>::ellipse(1.0, 0.3);
    assert!((e.eval_inverse(cx(2.15, 0.0), 1e-14).unwrap() - cx(2.0, 0.0)).norm() < 1e-13);
    let w = e.eval_inverse(cx(10.0, 0.0), 1e-12).unwrap();
    assert!((e.g_at(w) - cx(10.0, 0.0)).norm() <= 1e-12);
    // Oracle: on the real axis G is real and g is increasing for w > 1, so bisect.
    let (mut lo, mut hi) = (1.0, 20.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid + 0.3 / mid < 10.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((w - cx(lo, 0.0)).norm() < 1e-12);
}

#[test]
fn inverse_rejects_interior() {
    let e = ExteriorMap::<f64>::ellipse(1.0, 0.3);
    assert_eq!(e.eval_inverse(cx(0.1, 0.1), 1e-12), Err(Error::InteriorPoint));
}

#[test]
fn sample_examples() {
    let (z, _) = boundary_points(&ExteriorMap::<f64>::disk(1.0), 4);
    let want = [cx(1.0, 0.0), cx(0.0, 1.0), cx(-1.0, 0.0), cx(0.0, -1.0)];
    for (a, b) in z.iter().zip(want) {
        assert!((a - b).norm() < 1e-15);
    }
    let (z, _) = boundary_points(&ExteriorMap::<f64>::disk(2.0), 4);
    assert!((z[1] - cx(0.0, 2.0)).norm() < 1e-15);
    let s = sample(&ExteriorMap::<f64>::ellipse(1.0, 0.3), 256).unwrap();
    let exact = std::f64::consts::PI * 0.91;
    assert!((s.polygon_area() - exact).abs() / exact < 1e-3);
    assert!(sample(&ExteriorMap::<f64>::disk(1.0), 4).is_err());
    assert!(sample(&ExteriorMap::<f64>::disk(1.0), 96).is_err());
}

#[test]
fn samples_are_spectrally_consistent() {
    let s = sample(&two_coeff(), 128).unwrap();
    let d = spectral_derivative(s.z());
    let scale = s.dz().iter().fold(0.0f64, |m, x| m.max(x.norm()));
    for (a, b) in d.iter().zip(s.dz()) {
        assert!((a - b).norm() / scale < 1e-10);
    }
}

#[test]
fn univalence_examples() {
    assert!(check_univalent(&ExteriorMap::<f64>::disk(1.0), 4096).ok);
    assert!(check_univalent(&ExteriorMap::<f64>::ellipse(1.0, 0.3), 4096).ok);
    let bad = check_univalent(&ExteriorMap::<f64>::ellipse(1.0, 2.0), 4096);
    assert!(!bad.ok);
    assert!(bad.failure.is_some());
    // Origin outside: disk shifted away from 0.
    let shifted = ExteriorMap::new(1.0, cx(3.0, 0.0), vec![]).unwrap();
    assert_eq!(check_univalent(&shifted, 256).failure.unwrap().0, UnivalenceCriterion::WindingAboutOrigin);
}

#[test]
fn self_intersection_scan_oracle() {
    // A figure eight polygon crosses itself; a square does not.
    let eight: Vec<C64> = (0..64)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 64.0;
            cx(t.sin(), (2.0 * t).sin() * 0.5)
        })
        .collect();
    assert!(polygon_self_intersects(&eight));
    let square = [cx(0.0, 0.0), cx(1.0, 0.0), cx(1.0, 1.0), cx(0.0, 1.0)];
    assert!(!polygon_self_intersects(&square));
}

#[test]
fn point_location_examples() {
    let s = sample(&ExteriorMap::<f64>::disk(1.0), 256).unwrap();
    assert_eq!(point_location(&s, cx(0.0, 0.0)), Location::Interior);
    assert_eq!(point_location(&s, cx(5.0, 0.0)), Location::Exterior);
    assert_eq!(point_location(&s, cx(1.0, 0.0)), Location::NearBoundary);
}

#[test]
fn area_examples() {
    let pi = std::f64::consts::PI;
    assert!((area(&ExteriorMap::<f64>::disk(1.5)).unwrap() - pi * 2.25).abs() < 1e-14);
    for (map, exact) in [(ExteriorMap::<f64>::ellipse(1.0, 0.3), pi * 0.91), (two_coeff(), pi * (1.0 - 0.04 - 0.02))] {
        let a = area(&map).unwrap();
        assert!((a - exact).abs() < 1e-14);
        let q = sample(&map, 4096).unwrap().quadrature_area();
        assert!((a - q).abs() / a < 1e-10);
    }
    assert!(matches!(area(&ExteriorMap::<f64>::ellipse(1.0, 1.5)), Err(Error::NonpositiveArea(_))));
}

#[test]
fn faber_examples() {
    let lin = ExteriorMap::new(2.0, cx(0.5, -1.0), vec![]).unwrap();
    let f1 = faber(&lin, 1);
    assert_eq!(f1.coeffs, vec![cx(0.5, -1.0), cx(2.0, 0.0)]);
    let (r, u) = (1.3, 0.4);
    let f2 = faber(&ExteriorMap::<f64>::ellipse(r, u), 2);
    assert!((f2.coeffs[0] - cx(2.0 * r * u, 0.0)).norm() < 1e-15);
    assert!(f2.coeffs[1].norm() < 1e-15);
    assert!((f2.coeffs[2] - cx(r * r, 0.0)).norm() < 1e-15);
    assert_eq!(faber(&two_coeff(), 0).coeffs, vec![cx(1.0, 0.0)]);
}

#[test]
fn faber_leading_coefficient_and_defect_decay() {
    let map = ExteriorMap::new(1.2, cx(0.1, 0.05), vec![cx(0.2, 0.1), cx(0.05, -0.03)]).unwrap();
    for n in 1..=8 {
        let f = faber(&map, n);
        assert!((f.coeffs[n] - cx(1.2f64.powi(n as i32), 0.0)).norm() < 1e-12);
        let mut bound: f64 = 0.0;
        for rad in [5.0, 10.0, 20.0, 50.0] {
            let z = cx(rad, 0.0) * cis(0.7);
            let w = map.eval_inverse(z, 1e-13).unwrap();
            let defect = (f.eval(w) - z.powi(n as i32)).norm() * rad;
            if rad == 5.0 {
                bound = defect;
            }
            assert!(defect <= 2.0 * bound + 1e-9 * rad.powi(n as i32 + 1));
        }
    }
}

#[test]
fn deformation_form_examples() {
    let s = sample(&ExteriorMap::<f64>::disk(1.0), 64).unwrap();
    assert!(deformation_form(&ExteriorMap::<f64>::disk(1.0), 0, &s).iter().all(|&v| v == cx(0.0, 1.0)));
    let d1 = deformation_form(&ExteriorMap::<f64>::disk(1.0), 1, &s);
    for (k, v) in d1.iter().enumerate() {
        let s = cis(std::f64::consts::TAU * k as f64 / 64.0);
        assert!((v - cx(0.0, 1.0) * s).norm() < 1e-15);
    }
}

#[test]
fn krichever_duality_matrix() {
    let map = ExteriorMap::new(1.0, cx(0.05, 0.02), vec![cx(0.2, 0.05), cx(0.1, 0.0), cx(0.02, -0.01)]).unwrap();
    let s = sample(&map, 4096).unwrap();
    let table = duality_matrix(&map, 6, 4096).unwrap();
    let mut worst: f64 = 0.0;
    let mut route_gap: f64 = 0.0;
    for n in 0..=6 {
        let form = deformation_form(&map, n, &s);
        for m in 1..=6 {
            let h = s.step();
            let sum: C64 = s.z().iter().zip(&form).map(|(&z, &f)| z.powi(-(m as i32)) / m as f64 * f).sum();
            let d = sum * h / cx(0.0, std::f64::consts::TAU);
            let target = if m == n { 1.0 } else { 0.0 };
            worst = worst.max((d - cx(target, 0.0)).norm());
            route_gap = route_gap.max((d - table[(m - 1, n)]).norm());
        }
    }
    assert!(worst <= 1e-10, "duality defect {worst:e}");
    assert!(route_gap <= 1e-14, "{route_gap:e}");
}

#[test]
fn schiffer_examples() {
    let id = ExteriorMap::<f64>::disk(1.0);
    assert!((schiffer_kernel_ext(&id, cx(2.0, 0.0), cx(3.0, 0.0)).unwrap() - cx(1.0, 0.0)).norm() < 1e-14);
    let (z, w) = (cx(1.5, 2.0), cx(-2.5, 0.3));
    assert!((schiffer_kernel_ext(&id, z, w).unwrap() - (z - w).powi(-2)).norm() < 1e-14);
    assert_eq!(schiffer_kernel_ext(&id, z, z), Err(Error::CoincidentPoints));
}

/// −π ∂_z ∂_w of the Dirichlet Green function (2/π) log|(1 − G(z)conj(G(w)))/(G(z) − G(w))|.
fn schiffer_fd(map: &ExteriorMap<f64>, z: C64, w: C64) -> C64 {
    let green = |z: C64, w: C64| {
        let gz = map.eval_inverse(z, 1e-15).unwrap();
        let gw = map.eval_inverse(w, 1e-15).unwrap();
        2.0 / std::f64::consts::PI * ((C64::new(1.0, 0.0) - gz * gw.conj()) / (gz - gw)).norm().ln()
    };
    let h = 1e-3;
    let dirs = [(cx(1.0, 0.0), cx(0.5, 0.0)), (cx(0.0, 1.0), cx(0.0, -0.5))];
    let mut acc = C64::new(0.0, 0.0);
    for (e1, c1) in dirs {
        for (e2, c2) in dirs {
            let d = (green(z + e1 * h, w + e2 * h) - green(z + e1 * h, w - e2 * h) - green(z - e1 * h, w + e2 * h)
                + green(z - e1 * h, w - e2 * h))
                / (4.0 * h * h);
            acc += c1 * c2 * d;
        }
    }
    -acc * std::f64::consts::PI
}

#[test]
fn schiffer_matches_green_function_fd() {
    let e = ExteriorMap::<f64>::ellipse(1.0, 0.3);
    let (z, w) = (cx(3.0, 0.0), cx(-3.0, 0.0));
    let s = schiffer_kernel_ext(&e, z, w).unwrap();
    let fd = schiffer_fd(&e, z, w);
    assert!((s - fd).norm() < 1e-7, "{s} vs {fd}");
    let s2 = schiffer_kernel_ext(&e, cx(1.0, 2.5), cx(-0.5, -2.0)).unwrap();
    let fd2 = schiffer_fd(&e, cx(1.0, 2.5), cx(-0.5, -2.0));
    assert!((s2 - fd2).norm() < 1e-7);
}

#[test]
fn bergman_examples() {
    let id = ExteriorMap::<f64>::disk(1.0);
    let pi = std::f64::consts::PI;
    assert!((bergman_kernel_ext(&id, cx(2.0, 0.0), cx(2.0, 0.0)).unwrap() - cx(1.0 / (9.0 * pi), 0.0)).norm() < 1e-15);
    assert!((bergman_kernel_ext(&id, cx(2.0, 0.0), cx(3.0, 0.0)).unwrap() - cx(1.0 / (25.0 * pi), 0.0)).norm() < 1e-15);
}

#[test]
fn bergman_matches_orthonormal_series() {
    let e = ExteriorMap::<f64>::ellipse(1.0, 0.3);
    let z = cx(4.0, 0.0);
    let k = bergman_kernel_ext(&e, z, z).unwrap();
    let g = e.eval_inverse(z, 1e-15).unwrap();
    let dg = e.dg_at(g).inv();
    let series: C64 = (1..=40)
        .map(|n| {
            let u = (n as f64 / std::f64::consts::PI).sqrt() * g.powi(-n - 1) * dg;
            u * u.conj()
        })
        .sum();
    assert!((k - series).norm() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn inverse_roundtrip(rad in 1.6f64..30.0, ang in 0.0f64..std::f64::consts::TAU) {
        let map = two_coeff();
        let z = cx(rad, 0.0) * cis(ang);
        let w = map.eval_inverse(z, 1e-12).unwrap();
        prop_assert!(w.norm() > 1.0);
        prop_assert!((map.g_at(w) - z).norm() <= 1e-11);
    }

    #[test]
    fn schiffer_symmetric(a in 2.0f64..6.0, b in 2.0f64..6.0, t in 0.0f64..3.0) {
        let map = two_coeff();
        let z = cx(a, 0.0) * cis(t);
        let w = cx(-b, 0.5);
        let s1 = schiffer_kernel_ext(&map, z, w).unwrap();
        let s2 = schiffer_kernel_ext(&map, w, z).unwrap();
        prop_assert!((s1 - s2).norm() <= 1e-12 * s1.norm().max(1.0));
    }

    #[test]
    fn bergman_hermitian(a in 2.0f64..6.0, b in 2.0f64..6.0, t in 0.0f64..3.0) {
        let map = two_coeff();
        let z = cx(a, 0.0) * cis(t);
        let w = cx(0.3, b);
        let k1 = bergman_kernel_ext(&map, z, w).unwrap();
        let k2 = bergman_kernel_ext(&map, w, z).unwrap();
        prop_assert!((k1 - k2.conj()).norm() <= 1e-14);
    }
}

#[test]
fn works_in_single_precision() {
    let e = ExteriorMap::<f32>::ellipse(1.0, 0.3);
    let a = area(&e).unwrap();
    assert!((a - std::f32::consts::PI * 0.91).abs() < 1e-5);
    let w = e.eval_inverse(C::new(3.0f32, 0.5), 1e-5).unwrap();
    assert!((e.g_at(w) - C::new(3.0f32, 0.5)).norm() < 1e-5);
}
