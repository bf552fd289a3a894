//! Riemann theta functions with controlled lattice truncation.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, inverse, sym_eigenvalues, Entry, Lu, Mat};
use crate::scalar::{c, re, KahanSumC, Real, C};

pub const MAX_GENUS: usize = 4;

/// Symmetric g×g period matrix with positive definite imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodMatrix<T> {
    omega: Mat<C<T>>,
    im: Mat<T>,
    y: Mat<T>,
    lambda_min: T,
}

impl<T: Real> PeriodMatrix<T> {
    pub fn new(omega: Mat<C<T>>) -> Result<Self> {
        let g = omega.rows;
        if !omega.is_square() || g == 0 || g > MAX_GENUS {
            return Err(Error::InvalidInput(format!("Omega must be square with 1 <= g <= {MAX_GENUS}")));
        }
        let scale = omega.data.iter().fold(T::one(), |m, z| m.max(z.norm()));
        for i in 0..g {
            for j in 0..i {
                if (omega[(i, j)] - omega[(j, i)]).norm() > T::lit(1e-14) * scale {
                    return Err(Error::InvalidInput("Omega must be symmetric".into()));
                }
            }
        }
        let im = omega.map(|z| z.im);
        if cholesky(&im).is_none() {
            return Err(Error::InvalidInput("Im Omega must be positive definite".into()));
        }
        let lambda_min = sym_eigenvalues(&im)[0];
        if lambda_min < T::lit(1e-8) {
            return Err(Error::DegenerateImOmega(lambda_min.to_f64().unwrap()));
        }
        let y = inverse(&im).expect("positive definite matrix is invertible");
        Ok(Self { omega, im, y, lambda_min })
    }

    pub fn from_rows(rows: &[Vec<C<T>>]) -> Result<Self> {
        Self::new(Mat::from_rows(rows))
    }

    /// Genus-1 period matrix (τ).
    pub fn scalar(tau: C<T>) -> Result<Self> {
        Self::new(Mat::from_rows(&[vec![tau]]))
    }

    pub fn genus(&self) -> usize {
        self.omega.rows
    }

    pub fn omega(&self) -> &Mat<C<T>> {
        &self.omega
    }

    pub fn im(&self) -> &Mat<T> {
        &self.im
    }

    /// Y = (Im Ω)⁻¹.
    pub fn y(&self) -> &Mat<T> {
        &self.y
    }

    pub fn lambda_min(&self) -> T {
        self.lambda_min
    }

    /// Ω·v for a real vector v.
    pub fn apply_real(&self, v: &[T]) -> Vec<C<T>> {
        self.omega.matvec(&v.iter().map(|&x| re(x)).collect::<Vec<_>>())
    }
}

/// Real characteristics ξ = (ξ_a, ξ_b).
#[derive(Clone, Debug, PartialEq)]
pub struct Characteristics<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Real> Characteristics<T> {
    pub fn new(a: Vec<T>, b: Vec<T>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidInput("xi_a and xi_b must have the same length".into()));
        }
        Ok(Self { a, b })
    }

    pub fn zero(g: usize) -> Self {
        Self { a: vec![T::zero(); g], b: vec![T::zero(); g] }
    }

    /// Z = Ωξ_a + ξ_b.
    pub fn point(&self, omega: &PeriodMatrix<T>) -> Vec<C<T>> {
        omega.apply_real(&self.a).into_iter().zip(&self.b).map(|(z, &b)| z + b).collect()
    }

    /// Characteristics of a point: ξ_a = Y·Im Z, ξ_b = Re Z − Re(Ω)ξ_a.
    pub fn from_point(z: &[C<T>], omega: &PeriodMatrix<T>) -> Self {
        let a = omega.y().matvec(&z.iter().map(|w| w.im).collect::<Vec<_>>());
        let oa = omega.apply_real(&a);
        let b = z.iter().zip(&oa).map(|(w, o)| w.re - o.re).collect();
        Self { a, b }
    }
}

/// Upper bound of Γ(s, x) for s ∈ ½ℕ, x > 0.
fn upper_gamma_bound<T: Real>(s2: usize, x: T) -> T {
    // s = s2/2; start from Γ(1, x) = e^{−x} or Γ(½, x) ≤ e^{−x}/√x and recur upward.
    let (mut s, mut val) =
        if s2.is_multiple_of(2) { (T::one(), (-x).exp()) } else { (T::lit(0.5), (-x).exp() / x.sqrt()) };
    let target = T::from_usize_lossy(s2) / T::lit(2.0);
    while s < target {
        val = s * val + x.powf(s) * (-x).exp();
        s = s + T::one();
    }
    val
}

/// Radius R with lattice tail Σ_{‖n+c‖ > R} exp(−π‖n+c‖²_{ImΩ}) ≤ tol (metric scaled by √π).
pub fn truncation_radius<T: Real>(omega: &PeriodMatrix<T>, tol: T, order: usize) -> T {
    let g = omega.genus();
    let rho = (T::PI() * omega.lambda_min()).sqrt();
    let gf = T::from_usize_lossy(g);
    let tol = tol * T::lit(1e-3);
    let mut r = rho;
    loop {
        let x = (r - rho / T::lit(2.0)).max(T::lit(1e-3));
        let bound = gf / T::lit(2.0) * (T::lit(2.0) / rho).powf(gf) * upper_gamma_bound(g, x * x);
        if bound <= tol {
            break;
        }
        r = r + T::lit(0.05);
    }
    // Derivative factors (2π|m|)^k grow polynomially; widen accordingly.
    r + T::from_usize_lossy(order)
}

/// Integer points n with π(n + shift)ᵀ ImΩ (n + shift) ≤ R².
pub fn lattice_points<T: Real>(omega: &PeriodMatrix<T>, shift: &[T], radius: T) -> Vec<Vec<i64>> {
    let g = omega.genus();
    let r2 = radius * radius / T::PI();
    let bounds: Vec<(i64, i64)> = (0..g)
        .map(|i| {
            let half = (r2 * omega.y()[(i, i)]).sqrt();
            ((-shift[i] - half).floor().to_i64().unwrap(), (-shift[i] + half).ceil().to_i64().unwrap())
        })
        .collect();
    let mut out = Vec::new();
    let mut n: Vec<i64> = bounds.iter().map(|b| b.0).collect();
    loop {
        let m: Vec<T> = n.iter().zip(shift).map(|(&k, &s)| T::from_i64(k).unwrap() + s).collect();
        let q = omega.im().matvec(&m).iter().zip(&m).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        if q <= r2 {
            out.push(n.clone());
        }
        let mut i = 0;
        loop {
            if i == g {
                return out;
            }
            n[i] += 1;
            if n[i] <= bounds[i].1 {
                break;
            }
            n[i] = bounds[i].0;
            i += 1;
        }
    }
}

/// θ together with its holomorphic derivatives up to order 3.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaJet<T> {
    pub order: usize,
    pub value: C<T>,
    pub grad: Vec<C<T>>,
    pub hess: Mat<C<T>>,
    /// third[(i·g + j)·g + k] = ∂³θ/∂z_i∂z_j∂z_k.
    pub third: Vec<C<T>>,
}

impl<T: Real> ThetaJet<T> {
    pub fn genus(&self) -> usize {
        self.grad.len()
    }

    /// ∂^α θ for a list of indices (length ≤ order).
    pub fn derivative(&self, idx: &[usize]) -> C<T> {
        let g = self.genus();
        assert!(idx.len() <= self.order, "derivative order exceeds the jet order");
        match idx {
            [] => self.value,
            [i] => self.grad[*i],
            [i, j] => self.hess[(*i, *j)],
            [i, j, k] => self.third[(i * g + j) * g + k],
            _ => unreachable!("jets stop at order 3"),
        }
    }

    /// ∂^α log θ from the jet (Faà di Bruno up to order 3).
    pub fn log_derivative(&self, idx: &[usize]) -> C<T> {
        let f = self.value;
        let d = |ix: &[usize]| self.derivative(ix) / f;
        match idx {
            [] => f.ln(),
            [i] => d(&[*i]),
            [i, j] => d(&[*i, *j]) - d(&[*i]) * d(&[*j]),
            [i, j, k] => {
                let (a, b, cc) = (d(&[*i]), d(&[*j]), d(&[*k]));
                d(&[*i, *j, *k]) - d(&[*i, *j]) * cc - d(&[*i, *k]) * b - d(&[*j, *k]) * a + a * b * cc * T::lit(2.0)
            }
            _ => panic!("log derivatives stop at order 3"),
        }
    }
}

/// Σ_n exp(πi((Ω m, m) + 2(m, W))) with m = n + offset, and its W-derivatives.
fn lattice_jet<T: Real>(omega: &PeriodMatrix<T>, offset: &[T], w: &[C<T>], order: usize, radius: T) -> ThetaJet<T> {
    let g = omega.genus();
    let im_w: Vec<T> = w.iter().map(|z| z.im).collect();
    let peak = omega.y().matvec(&im_w);
    let shift: Vec<T> = offset.iter().zip(&peak).map(|(&a, &p)| a + p).collect();
    let points = lattice_points(omega, &shift, radius);
    let two_pi_i = c(T::zero(), T::TAU());
    let mut value = KahanSumC::new();
    let mut grad = vec![KahanSumC::new(); g];
    let mut hess = vec![KahanSumC::new(); g * g];
    let mut third = vec![KahanSumC::new(); g * g * g];
    for n in points {
        let m: Vec<T> = n.iter().zip(offset).map(|(&k, &a)| T::from_i64(k).unwrap() + a).collect();
        let mc: Vec<C<T>> = m.iter().map(|&x| re(x)).collect();
        let om = omega.omega().matvec(&mc);
        let quad = om.iter().zip(&m).fold(C::<T>::zero(), |acc, (&a, &b)| acc + a * b);
        let lin = w.iter().zip(&m).fold(C::<T>::zero(), |acc, (&a, &b)| acc + a * b);
        let term = ((quad + lin * T::lit(2.0)) * c(T::zero(), T::PI())).exp();
        value.add(term);
        if order >= 1 {
            let f: Vec<C<T>> = m.iter().map(|&x| two_pi_i * x).collect();
            for i in 0..g {
                let ti = term * f[i];
                grad[i].add(ti);
                if order >= 2 {
                    for j in 0..g {
                        let tij = ti * f[j];
                        hess[i * g + j].add(tij);
                        if order >= 3 {
                            for k in 0..g {
                                third[(i * g + j) * g + k].add(tij * f[k]);
                            }
                        }
                    }
                }
            }
        }
    }
    ThetaJet {
        order,
        value: value.value(),
        grad: grad.iter().map(KahanSumC::value).collect(),
        hess: Mat { rows: g, cols: g, data: hess.iter().map(KahanSumC::value).collect() },
        third: third.iter().map(KahanSumC::value).collect(),
    }
}

fn check_dims<T: Real>(z: &[C<T>], omega: &PeriodMatrix<T>) -> Result<()> {
    if z.len() != omega.genus() {
        return Err(Error::InvalidInput(format!("Z has length {} but genus is {}", z.len(), omega.genus())));
    }
    Ok(())
}

/// Peak magnitude exp(π cᵀ ImΩ c), c = Y·Im Z, used to turn tol into a relative target.
fn peak_scale<T: Real>(z: &[C<T>], omega: &PeriodMatrix<T>) -> T {
    let im_z: Vec<T> = z.iter().map(|w| w.im).collect();
    let cvec = omega.y().matvec(&im_z);
    let q = omega.im().matvec(&cvec).iter().zip(&cvec).fold(T::zero(), |a, (&x, &y)| a + x * y);
    (T::PI() * q).exp().max(T::one())
}

fn radius_for<T: Real>(z: &[C<T>], omega: &PeriodMatrix<T>, tol: T, order: usize) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    Ok(truncation_radius(omega, tol / peak_scale(z, omega), order))
}

/// θ(Z|Ω) with absolute truncation error ≤ tol.
pub fn theta<T: Real>(z: &[C<T>], omega: &PeriodMatrix<T>, tol: T) -> Result<C<T>> {
    check_dims(z, omega)?;
    let radius = radius_for(z, omega, tol, 0)?;
    Ok(theta_with_radius(z, omega, radius))
}

/// θ summed over a caller-chosen truncation radius.
pub fn theta_with_radius<T: Real>(z: &[C<T>], omega: &PeriodMatrix<T>, radius: T) -> C<T> {
    lattice_jet(omega, &vec![T::zero(); omega.genus()], z, 0, radius).value
}

/// θ and all holomorphic derivatives up to `order` ≤ 3.
pub fn theta_jet<T: Real>(z: &[C<T>], omega: &PeriodMatrix<T>, order: usize, tol: T) -> Result<ThetaJet<T>> {
    check_dims(z, omega)?;
    if order > 3 {
        return Err(Error::InvalidInput("derivative order must be at most 3".into()));
    }
    let radius = radius_for(z, omega, tol, order)?;
    Ok(lattice_jet(omega, &vec![T::zero(); omega.genus()], z, order, radius))
}

/// ∂^α θ(Z|Ω) for a multi-index given as a list of coordinate indices (total degree ≤ 3).
pub fn theta_derivs<T: Real>(z: &[C<T>], omega: &PeriodMatrix<T>, alpha: &[usize], tol: T) -> Result<C<T>> {
    if alpha.iter().any(|&i| i >= omega.genus()) {
        return Err(Error::InvalidInput("derivative index out of range".into()));
    }
    Ok(theta_jet(z, omega, alpha.len(), tol)?.derivative(alpha))
}

/// exp(πi((Ωξ_a, ξ_a) + 2(ξ_a, Z + ξ_b))).
fn char_prefactor<T: Real>(xi: &Characteristics<T>, z: &[C<T>], omega: &PeriodMatrix<T>) -> C<T> {
    let oa = omega.apply_real(&xi.a);
    let quad = oa.iter().zip(&xi.a).fold(C::<T>::zero(), |acc, (&o, &a)| acc + o * a);
    let lin = z.iter().zip(&xi.a).zip(&xi.b).fold(C::<T>::zero(), |acc, ((&w, &a), &b)| acc + (w + b) * a);
    ((quad + lin * T::lit(2.0)) * c(T::zero(), T::PI())).exp()
}

/// Z + Ωξ_a + ξ_b.
fn char_shifted_point<T: Real>(xi: &Characteristics<T>, z: &[C<T>], omega: &PeriodMatrix<T>) -> Vec<C<T>> {
    let p = xi.point(omega);
    z.iter().zip(&p).map(|(&a, &b)| a + b).collect()
}

/// θ[ξ](Z|Ω) by the shifted lattice sum Σ exp(πi((Ω(n+ξ_a), n+ξ_a) + 2(n+ξ_a, Z+ξ_b))), with derivatives in Z.
pub fn theta_char_shifted_jet<T: Real>(
    xi: &Characteristics<T>,
    z: &[C<T>],
    omega: &PeriodMatrix<T>,
    order: usize,
    tol: T,
) -> Result<ThetaJet<T>> {
    check_dims(z, omega)?;
    let w: Vec<C<T>> = z.iter().zip(&xi.b).map(|(&a, &b)| a + b).collect();
    let shifted = char_shifted_point(xi, z, omega);
    let radius = radius_for(&shifted, omega, tol, order)?;
    Ok(lattice_jet(omega, &xi.a, &w, order, radius))
}

/// Both routes to θ[ξ](Z|Ω) and the agreement gate they must meet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaCharRoutes<T> {
    /// exp(πi((Ωξ_a, ξ_a) + 2(ξ_a, Z + ξ_b)))·θ(Z + ξ_b + Ωξ_a|Ω).
    pub prefactor: C<T>,
    /// The lattice sum over n + ξ_a.
    pub shifted: C<T>,
    pub residual: T,
    pub gate: T,
}

pub fn theta_char_routes<T: Real>(
    xi: &Characteristics<T>,
    z: &[C<T>],
    omega: &PeriodMatrix<T>,
    tol: T,
) -> Result<ThetaCharRoutes<T>> {
    check_dims(z, omega)?;
    if xi.a.len() != omega.genus() {
        return Err(Error::InvalidInput("characteristic length must equal the genus".into()));
    }
    let pre = char_prefactor(xi, z, omega);
    let point = char_shifted_point(xi, z, omega);
    let prefactor = pre * theta(&point, omega, tol)?;
    let shifted = theta_char_shifted_jet(xi, z, omega, 0, tol)?.value;
    // Truncation tolerance plus the rounding floor of sums whose terms peak at peak_scale.
    let rounding = T::epsilon() * T::lit(64.0) * peak_scale(&point, omega);
    let gate = T::lit(10.0) * tol.max(rounding) * pre.norm().max(T::one());
    Ok(ThetaCharRoutes { prefactor, shifted, residual: (prefactor - shifted).norm(), gate })
}

/// θ[ξ](Z|Ω) via the prefactor formula, cross-checked against the shifted lattice sum.
pub fn theta_char<T: Real>(xi: &Characteristics<T>, z: &[C<T>], omega: &PeriodMatrix<T>, tol: T) -> Result<C<T>> {
    let ThetaCharRoutes { prefactor: value, residual, gate, .. } = theta_char_routes(xi, z, omega, tol)?;
    if residual > gate {
        return Err(Error::RouteMismatch {
            what: "theta with characteristics",
            residual: residual.to_f64().unwrap(),
            tol: gate.to_f64().unwrap(),
        });
    }
    Ok(value)
}

/// Both sides of the modular transformation and their branch-insensitive residual.
#[derive(Clone, Debug, PartialEq)]
pub struct ModularCheck<T> {
    pub lhs: C<T>,
    pub rhs: C<T>,
    pub residual: T,
}

/// θ(−Ω⁻¹Z|−Ω⁻¹) against det(Ω/i)^{1/2}·exp(πi(Ω⁻¹Z, Z))·θ(Z|Ω), up to an overall sign.
pub fn modular_check<T: Real>(z: &[C<T>], omega: &PeriodMatrix<T>, tol: T) -> Result<ModularCheck<T>> {
    check_dims(z, omega)?;
    let g = omega.genus();
    let lu = Lu::new(omega.omega()).ok_or_else(|| Error::InvalidInput("Omega is singular".into()))?;
    let inv = lu.inverse();
    let dual = PeriodMatrix::new(inv.map(|w| -w))?;
    let inv_z = inv.matvec(z);
    let z_dual: Vec<C<T>> = inv_z.iter().map(|&w| -w).collect();
    let lhs = theta(&z_dual, &dual, tol)?;
    let i_pow = (0..g).fold(C::<T>::one(), |acc, _| acc * c(T::zero(), T::one()));
    let root = (lu.det() / i_pow).sqrt();
    let phase = inv_z.iter().zip(z).fold(C::<T>::zero(), |acc, (&a, &b)| acc + a * b);
    let rhs = root * (phase * c(T::zero(), T::PI())).exp() * theta(z, omega, tol)?;
    let residual = (lhs - rhs).modulus().min((lhs + rhs).modulus());
    Ok(ModularCheck { lhs, rhs, residual })
}

#[cfg(test)]
mod tests;
