//! Genus one: the Green function of the flat torus ℂ/(ℤ + τℤ) and Fay's formula for it.

use super::wirtinger_second;
use crate::error::{Error, Result};
use crate::scalar::{c, ksum_c, Real, C};
use crate::theta_core::{theta_char, theta_char_shifted_jet, Characteristics, PeriodMatrix};

const THETA_TOL: f64 = 1e-15;

fn odd_characteristic<T: Real>() -> Characteristics<T> {
    Characteristics { a: vec![T::lit(0.5)], b: vec![T::lit(0.5)] }
}

fn period<T: Real>(tau: C<T>) -> Result<PeriodMatrix<T>> {
    if !(tau.im > T::zero()) {
        return Err(Error::InvalidInput("Im tau must be positive".into()));
    }
    PeriodMatrix::scalar(tau)
}

/// Distance from z to the nearest point of ℤ + τℤ.
fn lattice_distance<T: Real>(z: C<T>, tau: C<T>) -> T {
    let n = (z.im / tau.im).round();
    let rest = z - tau * n;
    let m = rest.re.round();
    let mut best = T::infinity();
    for dn in -1..=1 {
        for dm in -1..=1 {
            let p = tau * (n + T::from_i32(dn).unwrap()) + (m + T::from_i32(dm).unwrap());
            best = best.min((z - p).norm());
        }
    }
    best
}

/// log|θ[½,½](z|τ)|².
fn log_theta11_sq<T: Real>(z: C<T>, omega: &PeriodMatrix<T>) -> Result<T> {
    let th = theta_char(&odd_characteristic(), &[z], omega, T::lit(THETA_TOL))?;
    if th.norm() == T::zero() {
        return Err(Error::LatticePoint);
    }
    Ok(T::lit(2.0) * th.norm().ln())
}

/// The constant c(τ) that makes the Green function average to zero over a fundamental domain.
///
/// θ[½,½](z)e^{πiz} is a function of w = e^{2πiz}, so the mean of log|θ[½,½]|² over a
/// horizontal period is affine in Im z between consecutive rows of zeros (Jensen). Over the
/// rectangle [0,1]×[0, Im τ] its average is therefore the line mean at height Im τ/2.
pub fn torus_green_constant<T: Real>(tau: C<T>) -> Result<T> {
    let omega = period(tau)?;
    let half = tau.im / T::lit(2.0);
    // Trapezoid error decays like exp(−2πN·Im τ/2).
    let n = ((T::lit(40.0) / (T::PI() * tau.im)).ceil().to_usize().unwrap_or(64)).max(64);
    let nf = T::from_usize_lossy(n);
    let mut acc = Vec::with_capacity(n);
    for k in 0..n {
        let x = T::from_usize_lossy(k) / nf;
        acc.push(c(log_theta11_sq(c(x, half), &omega)?, T::zero()));
    }
    let line_mean = ksum_c(acc).re / nf;
    Ok(line_mean / T::PI() - T::lit(2.0) * tau.im / T::lit(3.0))
}

fn green_with<T: Real>(z: C<T>, tau: C<T>, omega: &PeriodMatrix<T>, constant: T) -> Result<T> {
    if lattice_distance(z, tau) < T::lit(1e-12) {
        return Err(Error::LatticePoint);
    }
    let y = z.im;
    Ok(-log_theta11_sq(z, omega)? / T::PI() + T::lit(2.0) / tau.im * y * y + constant)
}

/// G(z) = −(1/π)log|θ[½,½](z|τ)|² + (2/Im τ)(Im z)² + c(τ).
pub fn torus_green<T: Real>(z: C<T>, tau: C<T>) -> Result<T> {
    let omega = period(tau)?;
    let constant = torus_green_constant(tau)?;
    green_with(z, tau, &omega, constant)
}

/// Δ₀G = −∂_z∂_z̄G by the 5-point stencil of step h; equals −1/Im τ away from the lattice.
pub fn torus_laplacian<T: Real>(z: C<T>, tau: C<T>, h: T) -> Result<T> {
    let omega = period(tau)?;
    let constant = torus_green_constant(tau)?;
    let g = |p: C<T>| green_with(p, tau, &omega, constant);
    let (dx, dy) = (c(h, T::zero()), c(T::zero(), h));
    let lap = (g(z + dx)? + g(z - dx)? + g(z + dy)? + g(z - dy)? - T::lit(4.0) * g(z)?) / (h * h);
    Ok(-lap / T::lit(4.0))
}

/// Both sides of Fay's formula on the torus at u = z − w.
#[derive(Clone, Debug, PartialEq)]
pub struct FayReport<T> {
    /// B(z, w) = −(log θ[½,½])″(z − w).
    pub b: C<T>,
    /// S(z, w) = −π∂_z∂_w G(z − w), by finite differences of G.
    pub s: C<T>,
    /// |B − (S + π/Im τ)|.
    pub residual: T,
    /// ∫₀¹ B(x + i·Im τ/2) dx.
    pub a_period: C<T>,
}

pub fn fay_torus_check<T: Real>(tau: C<T>, z: C<T>, w: C<T>, fd_step: T) -> Result<FayReport<T>> {
    let omega = period(tau)?;
    if !(fd_step > T::zero()) {
        return Err(Error::InvalidInput("fd_step must be positive".into()));
    }
    let u = z - w;
    if lattice_distance(u, tau) < T::lit(1e-12) {
        return Err(Error::LatticePoint);
    }
    let xi = odd_characteristic();
    let kernel = |p: C<T>| -> Result<C<T>> {
        let jet = theta_char_shifted_jet(&xi, &[p], &omega, 2, T::lit(THETA_TOL))?;
        if jet.value.norm() == T::zero() {
            return Err(Error::LatticePoint);
        }
        Ok(-jet.log_derivative(&[0, 0]))
    };
    let b = kernel(u)?;
    let constant = torus_green_constant(tau)?;
    let g = |p: &[C<T>]| green_with(p[0], tau, &omega, constant);
    // ∂_z∂_w G(z − w) = −∂_u²G(u).
    let d2 = wirtinger_second(&g, &[u], 0, 0, false, fd_step)?;
    let s = d2 * T::PI();
    let residual = (b - (s + c(T::PI() / tau.im, T::zero()))).norm();

    let n = 64;
    let nf = T::from_usize_lossy(n);
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        samples.push(kernel(c(T::from_usize_lossy(k) / nf, tau.im / T::lit(2.0)))?);
    }
    let a_period = ksum_c(samples) / nf;
    Ok(FayReport { b, s, residual, a_period })
}
