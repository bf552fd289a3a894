//! Instanton partition sums over ℤ^{2g}, the bold tau-function, genus-g Ward checks,
//! log|θ|² correlation tensors and a genus-1 torus check of Fay's formula.

use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{det, sym_eigenvalues, Mat};
use crate::scalar::{c, ksum_c, re, KahanSumC, Real, C};
use crate::theta_core::{theta, theta_char, theta_char_shifted_jet, theta_jet, Characteristics, PeriodMatrix};

mod corr;
mod torus;

pub use corr::{corr_tensor, corr_tensor_measured, CorrTensor, MIXED_TOL};
pub use torus::{fay_torus_check, torus_green, torus_green_constant, torus_laplacian, FayReport};

/// Target for the Gaussian tail of the window sums, relative to the n = 0 term.
pub const TAIL_TOL: f64 = 1e-13;

/// Below this |θ[ξ](0|Ω)| the line bundle is treated as lying on the theta divisor.
pub const DIVISOR_TOL: f64 = 1e-12;

/// Theta truncation used inside finite-difference pipelines.
const FD_THETA_TOL: f64 = 1e-15;

/// Period matrix, characteristics and the point Z = Ωξ_a + ξ_b they determine.
#[derive(Clone, Debug, PartialEq)]
pub struct InstantonInput<T> {
    omega: PeriodMatrix<T>,
    xi: Characteristics<T>,
    z: Vec<C<T>>,
}

impl<T: Real> InstantonInput<T> {
    pub fn new(omega: PeriodMatrix<T>, xi: Characteristics<T>) -> Result<Self> {
        if xi.a.len() != omega.genus() {
            return Err(Error::InvalidInput("characteristics must have length g".into()));
        }
        if xi.a.iter().chain(&xi.b).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("characteristics must be finite".into()));
        }
        let z = xi.point(&omega);
        Ok(Self { omega, xi, z })
    }

    /// Input from a point Z; the characteristics are recovered and the round trip is checked.
    pub fn from_point(omega: PeriodMatrix<T>, z: &[C<T>]) -> Result<Self> {
        if z.len() != omega.genus() {
            return Err(Error::InvalidInput("Z must have length g".into()));
        }
        let xi = Characteristics::from_point(z, &omega);
        let input = Self::new(omega, xi)?;
        let scale = z.iter().fold(T::one(), |m, w| m.max(w.norm()));
        let err = input.z.iter().zip(z).fold(T::zero(), |m, (a, b)| m.max((a - b).norm()));
        if err > T::lit(1e-14) * scale * T::lit(4.0) {
            return Err(Error::InvalidInput(format!(
                "Z is inconsistent with (Omega, xi) by {:e}",
                err.to_f64().unwrap()
            )));
        }
        Ok(input)
    }

    pub fn genus(&self) -> usize {
        self.omega.genus()
    }

    pub fn omega(&self) -> &PeriodMatrix<T> {
        &self.omega
    }

    pub fn xi(&self) -> &Characteristics<T> {
        &self.xi
    }

    pub fn z(&self) -> &[C<T>] {
        &self.z
    }

    /// Y = (Im Ω)⁻¹.
    pub fn y(&self) -> &Mat<T> {
        self.omega.y()
    }
}

/// Σ_ij Y_ij u_i v_j (bilinear, no conjugation).
fn y_bilinear<T: Real>(y: &Mat<T>, u: &[C<T>], v: &[C<T>]) -> C<T> {
    let yv = y.map(re).matvec(v);
    u.iter().zip(&yv).fold(C::<T>::zero(), |acc, (&a, &b)| acc + a * b)
}

/// ⟨U, V⟩ = Σ Y_ij u_i conj(v_j).
fn y_hermitian<T: Real>(y: &Mat<T>, u: &[C<T>], v: &[C<T>]) -> C<T> {
    let vc: Vec<C<T>> = v.iter().map(|w| w.conj()).collect();
    y_bilinear(y, u, &vc)
}

/// Real part of the quadratic form (l, m) ↦ ⟨λ, λ⟩ with λ = −Ωl + m, as a 2g×2g matrix.
fn window_form<T: Real>(omega: &PeriodMatrix<T>) -> Mat<T> {
    let q = dispersion_q(omega);
    q.map(|z| z.re)
}

/// Q = [[Ω̄YΩ, −Ω̄Y], [−YΩ, Y]], so that ⟨λ, λ⟩ = (Qn, n) for n = (l, m).
pub fn dispersion_q<T: Real>(omega: &PeriodMatrix<T>) -> Mat<C<T>> {
    let g = omega.genus();
    let om = omega.omega();
    let omc = om.map(|z| z.conj());
    let y = omega.y().map(re);
    let oyo = omc.matmul(&y).matmul(om);
    let oy = omc.matmul(&y);
    let yo = y.matmul(om);
    Mat::from_fn(2 * g, 2 * g, |i, j| match (i < g, j < g) {
        (true, true) => oyo[(i, j)],
        (true, false) => -oy[(i, j - g)],
        (false, true) => -yo[(i - g, j)],
        (false, false) => y[(i - g, j - g)],
    })
}

/// Q_eff = Q − i[[0, I], [I, 0]]: the parity phase exp(−πi l·m) folded into the quadratic form.
pub fn effective_q<T: Real>(omega: &PeriodMatrix<T>) -> Mat<C<T>> {
    let g = omega.genus();
    let mut q = dispersion_q(omega);
    for i in 0..g {
        q[(i, i + g)] = q[(i, i + g)] - c(T::zero(), T::one());
        q[(i + g, i)] = q[(i + g, i)] - c(T::zero(), T::one());
    }
    q
}

/// Non-symmetric representative [[Ω̄YΩ, −ΩY], [−YΩ, Y]] of the Q_eff quadratic form; its
/// inverse is (i/2)[[Ω⁻¹, I], [I, Ω̄]].
pub fn effective_q_representative<T: Real>(omega: &PeriodMatrix<T>) -> Mat<C<T>> {
    let g = omega.genus();
    let mut q = effective_q(omega);
    for i in 0..g {
        q[(i, i + g)] = q[(i, i + g)] - c(T::zero(), T::one());
        q[(i + g, i)] = q[(i + g, i)] + c(T::zero(), T::one());
    }
    q
}

/// A = (ΩYZ̄ − Ω̄YZ, Y(Z − Z̄)).
pub fn linear_a<T: Real>(input: &InstantonInput<T>) -> Vec<C<T>> {
    let om = input.omega.omega();
    let y = input.y().map(re);
    let z = &input.z;
    let zc: Vec<C<T>> = z.iter().map(|w| w.conj()).collect();
    let yz = y.matvec(z);
    let yzc = y.matvec(&zc);
    let top_a = om.matvec(&yzc);
    let top_b = om.map(|w| w.conj()).matvec(&yz);
    let mut out: Vec<C<T>> = top_a.iter().zip(&top_b).map(|(a, b)| a - b).collect();
    out.extend(yz.iter().zip(&yzc).map(|(a, b)| a - b));
    out
}

/// Σ_{k > W} #{‖n‖_∞ = k}·exp(−(π/2)μk²) for n ∈ ℤ^d.
fn tail_bound(d: usize, mu: f64, window: usize) -> f64 {
    let mut total = 0.0;
    let mut k = window + 1;
    loop {
        let kf = k as f64;
        let shell = (2.0 * kf + 1.0).powi(d as i32) - (2.0 * kf - 1.0).powi(d as i32);
        let term = shell * (-std::f64::consts::FRAC_PI_2 * mu * kf * kf).exp();
        total += term;
        if term < 1e-30 * total.max(1e-300) || k > window + 10_000 {
            return total;
        }
        k += 1;
    }
}

/// Smallest window radius whose Gaussian tail is below [`TAIL_TOL`].
pub fn min_window<T: Real>(omega: &PeriodMatrix<T>) -> usize {
    let g = omega.genus();
    let mu = sym_eigenvalues(&window_form(omega))[0].to_f64().unwrap();
    let mut w = 1;
    while tail_bound(2 * g, mu, w) > TAIL_TOL {
        w += 1;
    }
    w
}

fn check_window<T: Real>(input: &InstantonInput<T>, window: usize) -> Result<()> {
    let minimum = min_window(&input.omega);
    if window < minimum {
        return Err(Error::WindowTooSmall { window, minimum });
    }
    Ok(())
}

/// Σ over n ∈ [−W, W]^{2g} of term(n); chunked over the first coordinate, summed in order.
fn window_sum<T: Real>(d: usize, window: usize, term: impl Fn(&[i64]) -> C<T> + Sync) -> C<T> {
    let w = window as i64;
    let partial: Vec<C<T>> = (-w..=w)
        .into_par_iter()
        .map(|first| {
            let mut n = vec![-w; d];
            n[0] = first;
            let mut acc = KahanSumC::new();
            loop {
                acc.add(term(&n));
                let mut i = 1;
                loop {
                    if i == d {
                        return acc.value();
                    }
                    n[i] += 1;
                    if n[i] <= w {
                        break;
                    }
                    n[i] = -w;
                    i += 1;
                }
            }
        })
        .collect();
    ksum_c(partial)
}

fn primitive_term<T: Real>(input: &InstantonInput<T>, n: &[i64]) -> C<T> {
    let g = input.genus();
    let y = input.y();
    let (l, m) = n.split_at(g);
    let lc: Vec<C<T>> = l.iter().map(|&k| re(T::from_i64(k).unwrap())).collect();
    let ol = input.omega.omega().matvec(&lc);
    let lambda: Vec<C<T>> = ol.iter().zip(m).map(|(&a, &k)| re(T::from_i64(k).unwrap()) - a).collect();
    let norm = y_hermitian(y, &lambda, &lambda);
    let cross = y_hermitian(y, &input.z, &lambda) - y_hermitian(y, &lambda, &input.z);
    let parity: i64 = l.iter().zip(m).map(|(a, b)| a * b).sum();
    let sign = if parity.rem_euclid(2) == 0 { T::one() } else { -T::one() };
    (-(norm * T::FRAC_PI_2()) - cross * T::PI()).exp() * sign
}

fn qa_term<T: Real>(q: &Mat<C<T>>, a: &[C<T>], n: &[i64]) -> C<T> {
    let nc: Vec<C<T>> = n.iter().map(|&k| re(T::from_i64(k).unwrap())).collect();
    let qn = q.matvec(&nc);
    let quad = qn.iter().zip(&nc).fold(C::<T>::zero(), |acc, (&x, &y)| acc + x * y);
    let lin = a.iter().zip(&nc).fold(C::<T>::zero(), |acc, (&x, &y)| acc + x * y);
    (-(quad * T::FRAC_PI_2()) - lin * T::PI()).exp()
}

/// One term exp(−(π/2)⟨λ,λ⟩ − π(⟨Z,λ⟩ − ⟨λ,Z⟩) − πi l·m) of the instanton sum, n = (l, m).
pub fn zinst_primitive_term<T: Real>(input: &InstantonInput<T>, n: &[i64]) -> Result<C<T>> {
    check_lattice_index(input, n)?;
    Ok(primitive_term(input, n))
}

/// One term exp(−(π/2)(Q_eff n, n) − π(A, n)) of the quadratic-form sum.
pub fn zinst_qa_term<T: Real>(input: &InstantonInput<T>, n: &[i64]) -> Result<C<T>> {
    check_lattice_index(input, n)?;
    Ok(qa_term(&effective_q(&input.omega), &linear_a(input), n))
}

fn check_lattice_index<T: Real>(input: &InstantonInput<T>, n: &[i64]) -> Result<()> {
    if n.len() != 2 * input.genus() {
        return Err(Error::InvalidInput("lattice index must have length 2g".into()));
    }
    Ok(())
}

/// Direct instanton sum over λ = −Ωl + m with the Hermitian form ⟨U,V⟩ = Σ Y_ij u_i conj(v_j).
pub fn zinst_primitive<T: Real>(input: &InstantonInput<T>, window: usize) -> Result<C<T>> {
    check_window(input, window)?;
    Ok(window_sum(2 * input.genus(), window, |n| primitive_term(input, n)))
}

/// The same sum written as Σ exp(−(π/2)(Q_eff n, n) − π(A, n)).
pub fn zinst_qa<T: Real>(input: &InstantonInput<T>, window: usize) -> Result<C<T>> {
    check_window(input, window)?;
    let q = effective_q(&input.omega);
    let a = linear_a(input);
    Ok(window_sum(2 * input.genus(), window, |n| qa_term(&q, &a, n)))
}

/// log(2^{g/2}/√det Y).
fn log_prefactor<T: Real>(omega: &PeriodMatrix<T>) -> T {
    let g = T::from_usize_lossy(omega.genus());
    let dy: T = det::<T, T>(omega.y());
    g / T::lit(2.0) * T::LN_2() - dy.ln() / T::lit(2.0)
}

/// (π/2)·Σ Y_ij (z_i − z̄_i)(z_j − z̄_j), real and ≤ 0.
fn drift_exponent<T: Real>(omega: &PeriodMatrix<T>, z: &[C<T>]) -> T {
    let d: Vec<C<T>> = z.iter().map(|w| w - w.conj()).collect();
    (y_bilinear(omega.y(), &d, &d) * T::FRAC_PI_2()).re
}

/// Closed form 2^{g/2}/√det Y·|θ[ξ](0|Ω)|², cross-checked against the exponent·|θ(Z|Ω)|² form.
pub fn zinst_closed<T: Real>(input: &InstantonInput<T>, tol: T) -> Result<C<T>> {
    let g = input.genus();
    let pre = log_prefactor(&input.omega).exp();
    let tc = theta_char(&input.xi, &vec![C::<T>::zero(); g], &input.omega, tol)?;
    let via_char = pre * tc.norm_sqr();
    let th = theta(&input.z, &input.omega, tol)?;
    let via_point = pre * drift_exponent(&input.omega, &input.z).exp() * th.norm_sqr();
    let residual = (via_char - via_point).abs();
    let bound = T::lit(10.0) * tol * via_char.abs().max(T::one());
    if residual > bound {
        return Err(Error::RouteMismatch {
            what: "closed instanton forms",
            residual: residual.to_f64().unwrap(),
            tol: bound.to_f64().unwrap(),
        });
    }
    Ok(re(via_char))
}

/// The bold tau-function and its logarithm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoldTau<T> {
    pub value: T,
    pub log_value: T,
}

/// 𝝉 = 2^{g/2}/√det Y·|θ[ξ](0|Ω)|²; fails on the theta divisor.
pub fn bold_tau<T: Real>(input: &InstantonInput<T>, tol: T) -> Result<BoldTau<T>> {
    let g = input.genus();
    let tc = theta_char(&input.xi, &vec![C::<T>::zero(); g], &input.omega, tol)?;
    let modulus = tc.norm();
    if modulus < T::lit(DIVISOR_TOL) {
        return Err(Error::OnThetaDivisor(modulus.to_f64().unwrap()));
    }
    let log_value = log_prefactor(&input.omega) + T::lit(2.0) * modulus.ln();
    let value = log_value.exp();
    assert!(value > T::zero(), "bold tau must be positive");
    Ok(BoldTau { value, log_value })
}

pub fn log_bold_tau<T: Real>(input: &InstantonInput<T>, tol: T) -> Result<T> {
    Ok(bold_tau(input, tol)?.log_value)
}

/// log 𝝉 as a function of the point Z (characteristics recovered from Z).
fn log_bold_tau_at<T: Real>(omega: &PeriodMatrix<T>, z: &[C<T>]) -> Result<T> {
    let input = InstantonInput::new(omega.clone(), Characteristics::from_point(z, omega))?;
    log_bold_tau(&input, T::lit(FD_THETA_TOL))
}

/// Fourth-order central first-difference weights at offsets −2, −1, 1, 2.
const D1: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -2.0 / 3.0), (1.0, 2.0 / 3.0), (2.0, -1.0 / 12.0)];

/// Direction of a real coordinate: index i, real (false) or imaginary (true) part.
type Coord = (usize, bool);

fn shifted<T: Real>(z: &[C<T>], moves: &[(Coord, T)]) -> Vec<C<T>> {
    let mut p = z.to_vec();
    for &((i, imag), h) in moves {
        p[i] = p[i] + if imag { c(T::zero(), h) } else { re(h) };
    }
    p
}

fn fd_first<T: Real>(f: &impl Fn(&[C<T>]) -> Result<T>, z: &[C<T>], a: Coord, h: T) -> Result<T> {
    let mut acc = T::zero();
    for (s, w) in D1 {
        acc = acc + T::lit(w) * f(&shifted(z, &[(a, T::lit(s) * h)]))?;
    }
    Ok(acc / h)
}

fn fd_second<T: Real>(f: &impl Fn(&[C<T>]) -> Result<T>, z: &[C<T>], a: Coord, b: Coord, h: T) -> Result<T> {
    let mut acc = T::zero();
    for (s, w) in D1 {
        for (t, v) in D1 {
            acc = acc + T::lit(w * v) * f(&shifted(z, &[(a, T::lit(s) * h), (b, T::lit(t) * h)]))?;
        }
    }
    Ok(acc / (h * h))
}

/// ∂/∂z_i of a real function, (∂_x − i∂_y)/2.
fn wirtinger_first<T: Real>(f: &impl Fn(&[C<T>]) -> Result<T>, z: &[C<T>], i: usize, h: T) -> Result<C<T>> {
    let dx = fd_first(f, z, (i, false), h)?;
    let dy = fd_first(f, z, (i, true), h)?;
    Ok(c(dx, -dy) / T::lit(2.0))
}

/// ∂²/∂z_i∂z_j (anti = false) or ∂²/∂z_i∂z̄_j (anti = true) of a real function.
fn wirtinger_second<T: Real>(
    f: &impl Fn(&[C<T>]) -> Result<T>,
    z: &[C<T>],
    i: usize,
    j: usize,
    anti: bool,
    h: T,
) -> Result<C<T>> {
    let xx = fd_second(f, z, (i, false), (j, false), h)?;
    let yy = fd_second(f, z, (i, true), (j, true), h)?;
    let xy = fd_second(f, z, (i, false), (j, true), h)?;
    let yx = fd_second(f, z, (i, true), (j, false), h)?;
    // (∂x_i − i∂y_i)(∂x_j ∓ i∂y_j)/4
    let val = if anti { c(xx + yy, xy - yx) } else { c(xx - yy, -(xy + yx)) };
    Ok(val / T::lit(4.0))
}

fn check_index<T: Real>(input: &InstantonInput<T>, idx: &[usize]) -> Result<()> {
    if idx.iter().any(|&i| i >= input.genus()) {
        return Err(Error::InvalidInput("index out of range".into()));
    }
    Ok(())
}

fn check_step<T: Real>(h: T) -> Result<()> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidInput("fd_step must be positive".into()));
    }
    Ok(())
}

/// Three routes to ∂log𝝉/∂z_i.
#[derive(Clone, Debug, PartialEq)]
pub struct WardGenusFirst<T> {
    pub index: usize,
    /// Wirtinger finite difference of log 𝝉.
    pub fd: C<T>,
    /// πΣ_j Y_ij(z_j − z̄_j) + ∂log θ(Z|Ω)/∂z_i.
    pub analytic: C<T>,
    /// ∂log θ[ξ](U|Ω)/∂u_i at U = 0.
    pub characteristic: C<T>,
    pub residual_fd_analytic: T,
    pub residual_fd_characteristic: T,
    pub residual_analytic_characteristic: T,
}

pub fn ward_genus_first<T: Real>(input: &InstantonInput<T>, i: usize, fd_step: T) -> Result<WardGenusFirst<T>> {
    check_index(input, &[i])?;
    check_step(fd_step)?;
    let g = input.genus();
    let omega = &input.omega;
    let tol = T::lit(FD_THETA_TOL);
    let f = |z: &[C<T>]| log_bold_tau_at(omega, z);
    let fd = wirtinger_first(&f, &input.z, i, fd_step)?;

    let jet = theta_jet(&input.z, omega, 1, tol)?;
    let d: Vec<C<T>> = input.z.iter().map(|w| w - w.conj()).collect();
    let drift = omega.y().map(re).matvec(&d)[i] * T::PI();
    let analytic = drift + jet.log_derivative(&[i]);

    let cj = theta_char_shifted_jet(&input.xi, &vec![C::<T>::zero(); g], omega, 1, tol)?;
    if cj.value.norm() < T::lit(DIVISOR_TOL) {
        return Err(Error::OnThetaDivisor(cj.value.norm().to_f64().unwrap()));
    }
    let characteristic = cj.log_derivative(&[i]);
    Ok(WardGenusFirst {
        index: i,
        fd,
        analytic,
        characteristic,
        residual_fd_analytic: (fd - analytic).norm(),
        residual_fd_characteristic: (fd - characteristic).norm(),
        residual_analytic_characteristic: (analytic - characteristic).norm(),
    })
}

/// Second-order genus Ward data for the pair (i, j).
#[derive(Clone, Debug, PartialEq)]
pub struct WardGenusSecond<T> {
    pub i: usize,
    pub j: usize,
    /// Finite-difference ∂²log𝝉/∂z_i∂z_j.
    pub holo_fd: C<T>,
    /// πY_ij + ∂²log θ(Z|Ω)/∂z_i∂z_j.
    pub holo_analytic: C<T>,
    pub holo_residual: T,
    /// Finite-difference ∂²log𝝉/∂z_i∂z̄_j.
    pub mixed_fd: C<T>,
    /// π·Y_ij, the expected magnitude of the mixed block.
    pub mixed_magnitude: T,
    /// ||mixed_fd| − π|Y_ij||.
    pub magnitude_residual: T,
    /// Measured sign of Re(mixed_fd)/(πY_ij): +1, −1, or 0 when Y_ij vanishes.
    pub mixed_sign: i32,
}

pub fn ward_genus_second<T: Real>(
    input: &InstantonInput<T>,
    i: usize,
    j: usize,
    fd_step: T,
) -> Result<WardGenusSecond<T>> {
    check_index(input, &[i, j])?;
    check_step(fd_step)?;
    let omega = &input.omega;
    let f = |z: &[C<T>]| log_bold_tau_at(omega, z);
    // Evaluated first so that the divisor check fires before the finite differences.
    f(&input.z)?;
    let holo_fd = wirtinger_second(&f, &input.z, i, j, false, fd_step)?;
    let mixed_fd = wirtinger_second(&f, &input.z, i, j, true, fd_step)?;
    let y_ij = omega.y()[(i, j)];
    let jet = theta_jet(&input.z, omega, 2, T::lit(FD_THETA_TOL))?;
    let holo_analytic = re(T::PI() * y_ij) + jet.log_derivative(&[i, j]);
    let mixed_magnitude = T::PI() * y_ij.abs();
    let mixed_sign = if mixed_magnitude < T::lit(1e-12) {
        0
    } else if mixed_fd.re * y_ij > T::zero() {
        1
    } else {
        -1
    };
    Ok(WardGenusSecond {
        i,
        j,
        holo_fd,
        holo_analytic,
        holo_residual: (holo_fd - holo_analytic).norm(),
        mixed_fd,
        mixed_magnitude,
        magnitude_residual: (mixed_fd.norm() - mixed_magnitude).abs(),
        mixed_sign,
    })
}

/// ∂²log𝝉/∂z_i∂z̄_j at each of the given points, for the constancy check.
pub fn mixed_block_samples<T: Real>(
    omega: &PeriodMatrix<T>,
    points: &[Vec<C<T>>],
    i: usize,
    j: usize,
    fd_step: T,
) -> Result<Vec<C<T>>> {
    check_step(fd_step)?;
    if i >= omega.genus() || j >= omega.genus() {
        return Err(Error::InvalidInput("index out of range".into()));
    }
    let f = |z: &[C<T>]| log_bold_tau_at(omega, z);
    points
        .iter()
        .map(|z| {
            if z.len() != omega.genus() {
                return Err(Error::InvalidInput("Z must have length g".into()));
            }
            wirtinger_second(&f, z, i, j, true, fd_step)
        })
        .collect()
}

/// Population variance Σ|x − x̄|²/n of complex samples.
pub fn complex_variance<T: Real>(xs: &[C<T>]) -> T {
    let n = T::from_usize_lossy(xs.len());
    let mean = ksum_c(xs.iter().copied()) / n;
    xs.iter().fold(T::zero(), |acc, x| acc + (x - mean).norm_sqr()) / n
}
