//! Theta, instanton, genus-Ward and torus suites.

use super::{cjson, cvec, CheckEntry, Command, GenusInput, RunConfig, RunError, Section};
use crate::genus_partition::{
    bold_tau, complex_variance, corr_tensor_measured, fay_torus_check, min_window, mixed_block_samples,
    torus_laplacian, ward_genus_first, ward_genus_second, zinst_closed, zinst_primitive, zinst_qa, InstantonInput,
    MIXED_TOL,
};
use crate::scalar::c;
use crate::theta_core::{modular_check, theta, theta_char_routes, theta_jet, Characteristics, PeriodMatrix};
use crate::Complex64;

pub(crate) const SUITE: [Command; 4] = [Command::Theta, Command::Zinst, Command::WardGenus, Command::FayTorus];

/// Truncation target for theta sums inside checks.
const THETA_TOL: f64 = 1e-14;
const SYMMETRY_TOL: f64 = 1e-12;
const MODULAR_TOL_G1: f64 = 1e-10;
const MODULAR_TOL: f64 = 1e-8;
const CHAR_ROUTE_TOL: f64 = 1e-10;
const DERIVATIVE_REL_TOL: f64 = 1e-5;
const ZINST_REL_TOL: f64 = 1e-6;
const BOLD_SYMMETRY_TOL: f64 = 1e-10;
const WARD_FIRST_TOL: f64 = 1e-5;
const WARD_MIXED_TOL: f64 = 1e-6;
const LAPLACIAN_TOL: f64 = 1e-4;
const FAY_TOL: f64 = 1e-5;
const A_PERIOD_TOL: f64 = 1e-8;

/// The genus-one example Ω = 2i, ξ = (0.3, 0.1) and a genus-two example with coupled cycles.
pub(crate) fn builtin_inputs() -> Vec<GenusInput> {
    let one = PeriodMatrix::scalar(c(0.0, 2.0)).expect("valid period");
    let two = PeriodMatrix::from_rows(&[vec![c(0.2, 1.0), c(0.3, 0.1)], vec![c(0.3, 0.1), c(-0.1, 1.3)]])
        .expect("valid period matrix");
    vec![
        GenusInput { omega: one, xi: Characteristics { a: vec![0.3], b: vec![0.1] }, z: None },
        GenusInput { omega: two, xi: Characteristics { a: vec![0.2, 0.35], b: vec![0.1, -0.25] }, z: None },
    ]
}

pub(crate) fn run_command(cmd: Command, config: &RunConfig, g: &GenusInput) -> Result<Section, RunError> {
    match cmd {
        Command::Theta => theta_suite(g),
        Command::Zinst => zinst_suite(g),
        Command::WardGenus => ward_suite(config, g),
        Command::FayTorus => fay_suite(config, g),
        other => unreachable!("{other} is not a genus command"),
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn point(g: &GenusInput) -> Vec<Complex64> {
    g.z.clone().unwrap_or_else(|| g.xi.point(&g.omega))
}

fn theta_suite(g: &GenusInput) -> Result<Section, RunError> {
    let omega = &g.omega;
    let z = point(g);
    let genus = omega.genus();
    let mut s = Section::default();
    let value = theta(&z, omega, THETA_TOL)?;
    s.put("genus", genus);
    s.put("Z", cvec(&z));
    s.put("theta", cjson(value));

    let neg: Vec<Complex64> = z.iter().map(|w| -w).collect();
    let reflected = theta(&neg, omega, THETA_TOL)?;
    s.check(CheckEntry::new("theta.parity", reflected, value, rel(reflected, value), SYMMETRY_TOL));

    let (mut worst, mut worst_value) = (0.0, value);
    for j in 0..genus {
        let mut shifted = z.clone();
        shifted[j] += 1.0;
        let v = theta(&shifted, omega, THETA_TOL)?;
        if rel(v, value) >= worst {
            worst = rel(v, value);
            worst_value = v;
        }
    }
    s.check(CheckEntry::new("theta.periodicity", worst_value, value, worst, SYMMETRY_TOL));

    let modular = modular_check(&z, omega, THETA_TOL)?;
    let tol = if genus == 1 { MODULAR_TOL_G1 } else { MODULAR_TOL };
    s.check(CheckEntry::new("theta.modular", modular.lhs, modular.rhs, modular.residual, tol));

    let routes = theta_char_routes(&g.xi, &z, omega, THETA_TOL)?;
    s.put("theta_char", cjson(routes.prefactor));
    s.check(CheckEntry::new(
        "theta.char_routes",
        routes.prefactor,
        routes.shifted,
        rel(routes.prefactor, routes.shifted),
        CHAR_ROUTE_TOL,
    ));

    // Fourth-order central differences along each real axis.
    let jet = theta_jet(&z, omega, 1, THETA_TOL)?;
    let h = 1e-3;
    let (mut worst, mut pair) = (0.0, (value, value));
    for i in 0..genus {
        let at = |d: f64| {
            let mut p = z.clone();
            p[i] += d;
            theta(&p, omega, THETA_TOL)
        };
        let fd = (at(-2.0 * h)? - at(2.0 * h)? + (at(h)? - at(-h)?) * 8.0) / (12.0 * h);
        let analytic = jet.derivative(&[i]);
        let r = (fd - analytic).norm() / analytic.norm().max(1e-300);
        if r >= worst {
            worst = r;
            pair = (fd, analytic);
        }
    }
    s.put("gradient", cvec(&jet.grad));
    s.check(CheckEntry::new("theta.derivative_fd", pair.0, pair.1, worst, DERIVATIVE_REL_TOL));
    Ok(s)
}

fn zinst_suite(g: &GenusInput) -> Result<Section, RunError> {
    let input = InstantonInput::new(g.omega.clone(), g.xi.clone())?;
    let window = min_window(&g.omega);
    let primitive = zinst_primitive(&input, window)?;
    let qa = zinst_qa(&input, window)?;
    let closed = zinst_closed(&input, 1e-14)?;
    let tau = bold_tau(&input, 1e-13)?;
    let flipped = Characteristics { a: g.xi.a.iter().map(|x| -x).collect(), b: g.xi.b.iter().map(|x| -x).collect() };
    let tau_flipped = bold_tau(&InstantonInput::new(g.omega.clone(), flipped)?, 1e-13)?;

    let mut s = Section::default();
    s.put("window", window);
    s.put("primitive", cjson(primitive));
    s.put("qa", cjson(qa));
    s.put("closed", cjson(closed));
    s.put("bold_tau", tau.value);
    s.put("log_bold_tau", tau.log_value);
    let r = |a: Complex64| (a - closed).norm() / closed.norm();
    s.check(CheckEntry::new("zinst.primitive_vs_closed", primitive, closed, r(primitive), ZINST_REL_TOL));
    s.check(CheckEntry::new("zinst.qa_vs_closed", qa, closed, r(qa), ZINST_REL_TOL));
    s.check(CheckEntry::positive("zinst.bold_tau_positive", tau.value));
    s.check(CheckEntry::new(
        "zinst.bold_tau_reflection",
        tau_flipped.value,
        tau.value,
        (tau_flipped.value - tau.value).abs() / tau.value,
        BOLD_SYMMETRY_TOL,
    ));
    Ok(s)
}

fn ward_suite(config: &RunConfig, g: &GenusInput) -> Result<Section, RunError> {
    let h = config.genus_fd();
    let input = InstantonInput::new(g.omega.clone(), g.xi.clone())?;
    let genus = input.genus();
    let mut s = Section::default();
    let mut signs = Vec::new();
    for i in 0..genus {
        let w = ward_genus_first(&input, i, h)?;
        let worst = w.residual_fd_analytic.max(w.residual_fd_characteristic).max(w.residual_analytic_characteristic);
        s.check(CheckEntry::new(format!("ward_genus.first[{i}]"), w.fd, w.characteristic, worst, WARD_FIRST_TOL));
    }
    // Constancy of the mixed block is sampled at Z and three translates of it.
    let z = input.z().to_vec();
    let offsets = [c(0.0, 0.0), c(0.13, 0.07), c(-0.21, 0.11), c(0.05, -0.17)];
    let points: Vec<Vec<Complex64>> = offsets.iter().map(|&d| z.iter().map(|&w| w + d).collect()).collect();
    for i in 0..genus {
        for j in i..genus {
            let w = ward_genus_second(&input, i, j, h)?;
            s.check(CheckEntry::new(
                format!("ward_genus.holomorphic[{i},{j}]"),
                w.holo_fd,
                w.holo_analytic,
                w.holo_residual,
                WARD_FIRST_TOL,
            ));
            s.check(CheckEntry::new(
                format!("ward_genus.mixed_magnitude[{i},{j}]"),
                w.mixed_fd.norm(),
                w.mixed_magnitude,
                w.magnitude_residual,
                WARD_MIXED_TOL,
            ));
            let samples = mixed_block_samples(&g.omega, &points, i, j, h)?;
            let variance = complex_variance(&samples);
            s.check(CheckEntry::new(
                format!("ward_genus.mixed_constancy[{i},{j}]"),
                variance,
                0.0,
                variance,
                WARD_MIXED_TOL,
            ));
            signs.push(serde_json::json!({ "i": i, "j": j, "mixed": cjson(w.mixed_fd), "sign": w.mixed_sign }));
        }
    }
    s.put("mixed_block", signs);
    for (m, n) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
        let t = corr_tensor_measured(&g.omega, m, n, THETA_TOL)?;
        let worst = t.max_abs();
        s.check(CheckEntry::new(format!("ward_genus.corr_vanishing[{m},{n}]"), worst, 0.0, worst, MIXED_TOL));
    }
    Ok(s)
}

/// The torus is τ = Ω₁₁. Fay's formula is checked at z = Z₁ (default 0.5 + 0.3τ) and w = 0.2 + 0.1τ.
fn fay_suite(config: &RunConfig, g: &GenusInput) -> Result<Section, RunError> {
    let tau = g.omega.omega()[(0, 0)];
    let h = config.genus_fd();
    let mut s = Section::default();
    s.put("tau", cjson(tau));
    let mut worst = (0.0, 0.0);
    for k in 0..3 {
        let z = c(0.2 + 0.25 * k as f64, 0.0) + tau * (0.3 + 0.2 * k as f64);
        let lap = torus_laplacian(z, tau, h)?;
        let r = (lap + 1.0 / tau.im).abs();
        if r >= worst.0 {
            worst = (r, lap);
        }
    }
    s.check(CheckEntry::new("fay.laplacian", worst.1, -1.0 / tau.im, worst.0, LAPLACIAN_TOL));
    let z = g.z.as_ref().map_or(c(0.5, 0.0) + tau * 0.3, |v| v[0]);
    let w = c(0.2, 0.0) + tau * 0.1;
    let fay = fay_torus_check(tau, z, w, h)?;
    s.put("z", cjson(z));
    s.put("w", cjson(w));
    s.put("b", cjson(fay.b));
    s.put("s", cjson(fay.s));
    s.check(CheckEntry::new("fay.formula", fay.b, fay.s + std::f64::consts::PI / tau.im, fay.residual, FAY_TOL));
    s.check(CheckEntry::new("fay.a_period", fay.a_period, 0.0, fay.a_period.norm(), A_PERIOD_TOL));
    Ok(s)
}
