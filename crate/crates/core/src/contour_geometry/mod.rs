//! Contours given by truncated exterior conformal maps g(w) = r·w + b₀ + Σ b_k w⁻ᵏ.

mod kernels;
mod laurent;

pub(crate) use kernels::inverse_with_derivative;
pub use kernels::{bergman_kernel_ext, schiffer_kernel_ext};
pub use laurent::Laurent;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{c, cis, ksum, ksum_c, Real, C};

/// Sample count used by internal univalence and location guards.
pub const GUARD_SAMPLES: usize = 1024;

/// Truncated Laurent data of the inverse exterior map.
#[derive(Clone, Debug, PartialEq)]
pub struct ExteriorMap<T> {
    r: T,
    b0: C<T>,
    coeffs: Vec<C<T>>,
}

impl<T: Real> ExteriorMap<T> {
    pub fn new(r: T, b0: C<T>, coeffs: Vec<C<T>>) -> Result<Self> {
        if !(r > T::zero()) || !r.is_finite() {
            return Err(Error::InvalidInput(format!("leading coefficient r must be positive and finite, got {r}")));
        }
        if !(b0.re.is_finite() && b0.im.is_finite()) || coeffs.iter().any(|b| !(b.re.is_finite() && b.im.is_finite())) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        Ok(Self { r, b0, coeffs })
    }

    /// Disk of the given radius centred at the origin.
    pub fn disk(radius: T) -> Self {
        Self::new(radius, C::<T>::zero(), Vec::new()).expect("positive radius")
    }

    /// Ellipse g(w) = r·w + u/w.
    pub fn ellipse(r: T, u: T) -> Self {
        Self::new(r, C::<T>::zero(), vec![c(u, T::zero())]).expect("positive r")
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn b0(&self) -> C<T> {
        self.b0
    }

    pub fn coeffs(&self) -> &[C<T>] {
        &self.coeffs
    }

    /// G′(∞) = 1/r.
    pub fn b_minus1(&self) -> T {
        T::one() / self.r
    }

    /// Copy with the coefficient list extended by zeros to length `n`.
    pub fn padded(&self, n: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < n {
            coeffs.resize(n, C::<T>::zero());
        }
        Self { coeffs, ..self.clone() }
    }

    /// Image of the contour under z → λz.
    pub fn scaled(&self, lambda: T) -> Self {
        Self { r: self.r * lambda, b0: self.b0 * lambda, coeffs: self.coeffs.iter().map(|&b| b * lambda).collect() }
    }

    /// Coefficient-wise complex conjugate (mirror image in the real axis).
    pub fn conj(&self) -> Self {
        Self { r: self.r, b0: self.b0.conj(), coeffs: self.coeffs.iter().map(|b| b.conj()).collect() }
    }

    /// Contour rotated by e^{iθ} about the origin, reparametrised so r stays real.
    pub fn rotated(&self, theta: T) -> Self {
        let b0 = self.b0 * cis(theta);
        let coeffs =
            self.coeffs.iter().enumerate().map(|(k, &b)| b * cis(theta * T::from_usize_lossy(k + 2))).collect();
        Self { r: self.r, b0, coeffs }
    }

    /// Scale of the contour, used to make tolerances relative.
    pub fn scale(&self) -> T {
        self.r + self.b0.norm() + self.coeffs.iter().map(|b| b.norm()).sum::<T>()
    }

    /// g(w) for any nonzero w.
    pub fn g_at(&self, w: C<T>) -> C<T> {
        let inv = w.inv();
        let mut tail = C::<T>::zero();
        for &b in self.coeffs.iter().rev() {
            tail = (tail + b) * inv;
        }
        w * self.r + self.b0 + tail
    }

    /// g′(w).
    pub fn dg_at(&self, w: C<T>) -> C<T> {
        let inv = w.inv();
        let mut acc = C::<T>::zero();
        for (k, &b) in self.coeffs.iter().enumerate().rev() {
            acc = (acc + b * T::from_usize_lossy(k + 1)) * inv;
        }
        c(self.r, T::zero()) - acc * inv
    }

    /// g″(w).
    pub fn d2g_at(&self, w: C<T>) -> C<T> {
        let inv = w.inv();
        let mut acc = C::<T>::zero();
        for (k, &b) in self.coeffs.iter().enumerate().rev() {
            let kk = T::from_usize_lossy(k + 1);
            acc = (acc + b * (kk * (kk + T::one()))) * inv;
        }
        acc * inv * inv
    }

    /// g(w), restricted to the closed exterior |w| ≥ 1.
    pub fn eval_g(&self, w: C<T>) -> Result<C<T>> {
        if w.norm() < T::one() - T::lit(64.0) * T::epsilon() {
            return Err(Error::InvalidInput(format!("eval_g needs |w| >= 1, got |w| = {}", w.norm())));
        }
        Ok(self.g_at(w))
    }

    /// G(z) = g⁻¹(z) for z exterior to the contour, with |g(w) − z| ≤ tol.
    pub fn eval_inverse(&self, z: C<T>, tol: T) -> Result<C<T>> {
        let tol = tol.max(T::lit(16.0) * T::epsilon() * (z.norm() + self.scale()));
        let seed = (z - self.b0) / self.r;
        let newton = self.newton_inverse(z, seed, tol, 50);
        let w = match newton {
            Some(w) if w.norm() > T::one() => w,
            _ => match self.continuation_inverse(z, tol) {
                Some(w) if w.norm() > T::one() => w,
                other => {
                    let contour = sample(self, GUARD_SAMPLES)?;
                    return match point_location(&contour, z) {
                        Location::Interior => Err(Error::InteriorPoint),
                        Location::NearBoundary => Err(Error::NearBoundary),
                        Location::Exterior => {
                            let residual = other.map_or(f64::INFINITY, |w| (self.g_at(w) - z).norm().to_f64().unwrap());
                            Err(Error::NonConvergence { what: "exterior map inversion", residual, iterations: 50 })
                        }
                    };
                }
            },
        };
        Ok(w)
    }

    fn newton_inverse(&self, z: C<T>, seed: C<T>, tol: T, cap: usize) -> Option<C<T>> {
        let mut w = seed;
        let mut res = (self.g_at(w) - z).norm();
        for _ in 0..cap {
            if res <= tol {
                return Some(w);
            }
            let d = self.dg_at(w);
            if d.norm() == T::zero() || !res.is_finite() {
                return None;
            }
            let step = (self.g_at(w) - z) / d;
            let mut lam = T::one();
            let mut accepted = false;
            for _ in 0..30 {
                let trial = w - step * lam;
                let r_trial = (self.g_at(trial) - z).norm();
                if r_trial < res {
                    w = trial;
                    res = r_trial;
                    accepted = true;
                    break;
                }
                lam = lam * T::lit(0.5);
            }
            if !accepted {
                break;
            }
        }
        (res <= tol).then_some(w)
    }

    /// Track the root along the ray from a far point, where G(z) ≈ (z − b₀)/r.
    fn continuation_inverse(&self, z: C<T>, tol: T) -> Option<C<T>> {
        let dir = z - self.b0;
        if dir.norm() == T::zero() {
            return None;
        }
        let far_radius = T::lit(100.0) * (self.scale() + T::one());
        let far = self.b0 + dir / dir.norm() * far_radius;
        let mut w = self.newton_inverse(far, (far - self.b0) / self.r, tol, 50)?;
        let steps = 200;
        for k in 1..=steps {
            let t = T::from_usize_lossy(k) / T::from_usize_lossy(steps);
            let zt = far + (z - far) * t;
            w = self.newton_inverse(zt, w, tol, 50)?;
        }
        Some(w)
    }

    /// Laurent polynomial of g.
    pub fn laurent(&self) -> Laurent<T> {
        let n = self.coeffs.len();
        let mut coeffs = vec![C::<T>::zero(); n + 2];
        for (k, &b) in self.coeffs.iter().enumerate() {
            coeffs[n - 1 - k] = b;
        }
        coeffs[n] = self.b0;
        coeffs[n + 1] = c(self.r, T::zero());
        Laurent { lo: -(n as i64), coeffs }
    }
}

/// Uniform boundary samples of a contour, counterclockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledContour<T> {
    z: Vec<C<T>>,
    dz: Vec<C<T>>,
}

impl<T: Real> SampledContour<T> {
    pub fn new(z: Vec<C<T>>, dz: Vec<C<T>>) -> Result<Self> {
        validate_sample_count(z.len())?;
        if z.len() != dz.len() {
            return Err(Error::InvalidInput("z and dz must have the same length".into()));
        }
        Ok(Self { z, dz })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn z(&self) -> &[C<T>] {
        &self.z
    }

    pub fn dz(&self) -> &[C<T>] {
        &self.dz
    }

    /// Trapezoid step 2π/M.
    pub fn step(&self) -> T {
        T::TAU() / T::from_usize_lossy(self.len())
    }

    /// (1/2πi)∮ f(z) dz by the trapezoid rule.
    pub fn contour_integral(&self, f: impl Fn(C<T>) -> C<T>) -> C<T> {
        let h = self.step();
        ksum_c(self.z.iter().zip(&self.dz).map(|(&z, &dz)| f(z) * dz)) * h / c(T::zero(), T::TAU())
    }

    /// (1/2i)∮ z̄ dz, the enclosed area by quadrature.
    pub fn quadrature_area(&self) -> T {
        let h = self.step();
        let s = ksum_c(self.z.iter().zip(&self.dz).map(|(&z, &dz)| z.conj() * dz));
        (s * h / c(T::zero(), T::lit(2.0))).re
    }

    /// Signed polygon area (shoelace).
    pub fn polygon_area(&self) -> T {
        let n = self.len();
        let s = ksum((0..n).map(|k| {
            let a = self.z[k];
            let b = self.z[(k + 1) % n];
            a.re * b.im - b.re * a.im
        }));
        s * T::lit(0.5)
    }
}

pub fn validate_sample_count(m: usize) -> Result<()> {
    if m < 64 || !m.is_power_of_two() {
        return Err(Error::InvalidInput(format!("sample count must be a power of two >= 64, got {m}")));
    }
    Ok(())
}

/// Raw samples g(e^{iσ_k}) and i·e^{iσ_k}·g′(e^{iσ_k}) for any M ≥ 1.
pub fn boundary_points<T: Real>(map: &ExteriorMap<T>, m: usize) -> (Vec<C<T>>, Vec<C<T>>) {
    let h = T::TAU() / T::from_usize_lossy(m);
    let i = c(T::zero(), T::one());
    (0..m)
        .map(|k| {
            let s = cis(h * T::from_usize_lossy(k));
            (map.g_at(s), i * s * map.dg_at(s))
        })
        .unzip()
}

pub fn sample<T: Real>(map: &ExteriorMap<T>, m: usize) -> Result<SampledContour<T>> {
    validate_sample_count(m)?;
    let (z, dz) = boundary_points(map, m);
    Ok(SampledContour { z, dz })
}

/// Relative position of a point and a sampled contour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Location {
    Interior,
    Exterior,
    NearBoundary,
}

/// Winding number of the sample polygon about z.
pub fn winding_number<T: Real>(points: &[C<T>], z: C<T>) -> i64 {
    let n = points.len();
    let total = ksum((0..n).map(|k| ((points[(k + 1) % n] - z) / (points[k] - z)).arg()));
    (total / T::TAU()).round().to_i64().unwrap_or(0)
}

fn segment_distance<T: Real>(a: C<T>, b: C<T>, p: C<T>) -> T {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == T::zero() {
        return (p - a).norm();
    }
    let t = ((p - a) * ab.conj()).re / len2;
    let t = t.max(T::zero()).min(T::one());
    (a + ab * t - p).norm()
}

pub fn point_location<T: Real>(contour: &SampledContour<T>, z: C<T>) -> Location {
    let n = contour.len();
    let spacing = contour.step() * contour.dz.iter().fold(T::zero(), |m, d| m.max(d.norm()));
    let dist = (0..n).fold(T::infinity(), |m, k| m.min(segment_distance(contour.z[k], contour.z[(k + 1) % n], z)));
    if dist < spacing {
        return Location::NearBoundary;
    }
    if winding_number(&contour.z, z) == 0 {
        Location::Exterior
    } else {
        Location::Interior
    }
}

/// Criterion that failed a univalence check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UnivalenceCriterion {
    DerivativeVanishes,
    SelfIntersection,
    WindingAboutOrigin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnivalenceReport {
    pub ok: bool,
    pub failure: Option<(UnivalenceCriterion, String)>,
}

impl UnivalenceReport {
    pub fn into_result(self) -> Result<()> {
        match self.failure {
            None => Ok(()),
            Some((crit, detail)) => Err(Error::UnivalenceFailure(format!("{crit:?}: {detail}"))),
        }
    }
}

fn orient<T: Real>(a: C<T>, b: C<T>, p: C<T>) -> T {
    (b - a).re * (p - a).im - (b - a).im * (p - a).re
}

fn segments_cross<T: Real>(a: C<T>, b: C<T>, p: C<T>, q: C<T>) -> bool {
    let d1 = orient(a, b, p);
    let d2 = orient(a, b, q);
    let d3 = orient(p, q, a);
    let d4 = orient(p, q, b);
    (d1 * d2 < T::zero()) && (d3 * d4 < T::zero())
}

/// True when the closed polygon has two non-adjacent edges that cross.
pub fn polygon_self_intersects<T: Real>(pts: &[C<T>]) -> bool {
    let n = pts.len();
    let bbox = |k: usize| {
        let a = pts[k];
        let b = pts[(k + 1) % n];
        (a.re.min(b.re), a.re.max(b.re), a.im.min(b.im), a.im.max(b.im))
    };
    let boxes: Vec<_> = (0..n).map(bbox).collect();
    for i in 0..n {
        let (ax0, ax1, ay0, ay1) = boxes[i];
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (bx0, bx1, by0, by1) = boxes[j];
            if ax1 < bx0 || bx1 < ax0 || ay1 < by0 || by1 < ay0 {
                continue;
            }
            if segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

/// Sampled (not certified) univalence test on |w| ≥ 1.
///
/// Criterion (a) also counts zeros of g′ outside the unit circle by the argument principle.
pub fn check_univalent<T: Real>(map: &ExteriorMap<T>, m: usize) -> UnivalenceReport {
    let fail = |crit, detail: String| UnivalenceReport { ok: false, failure: Some((crit, detail)) };
    let h = T::TAU() / T::from_usize_lossy(m);
    let circle: Vec<C<T>> = (0..m).map(|k| cis(h * T::from_usize_lossy(k))).collect();
    let dg: Vec<C<T>> = circle.iter().map(|&s| map.dg_at(s)).collect();
    let floor = T::lit(1e-10) * map.r();
    if let Some(k) = dg.iter().position(|d| !(d.norm() > floor)) {
        return fail(UnivalenceCriterion::DerivativeVanishes, format!("|g'| vanishes at sample {k}"));
    }
    let outside_zeros = -winding_number(&dg, C::<T>::zero());
    if outside_zeros != 0 {
        return fail(UnivalenceCriterion::DerivativeVanishes, format!("g' has {outside_zeros} zero(s) in |w| > 1"));
    }
    let pts: Vec<C<T>> = circle.iter().map(|&s| map.g_at(s)).collect();
    if polygon_self_intersects(&pts) {
        return fail(UnivalenceCriterion::SelfIntersection, "boundary polygon crosses itself".into());
    }
    let wind = winding_number(&pts, C::<T>::zero());
    if wind != 1 {
        return fail(UnivalenceCriterion::WindingAboutOrigin, format!("winding about 0 is {wind}"));
    }
    UnivalenceReport { ok: true, failure: None }
}

/// A(Ω) = π(r² − Σ k|b_k|²).
pub fn area<T: Real>(map: &ExteriorMap<T>) -> Result<T> {
    let deficit = ksum(map.coeffs().iter().enumerate().map(|(k, b)| T::from_usize_lossy(k + 1) * b.norm_sqr()));
    let a = T::PI() * (map.r() * map.r() - deficit);
    if a > T::zero() {
        Ok(a)
    } else {
        Err(Error::NonpositiveArea(a.to_f64().unwrap_or(f64::NAN)))
    }
}

/// F_n(w) = Σ c_j wʲ, the polynomial part of gⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct FaberPolynomial<T> {
    pub coeffs: Vec<C<T>>,
}

impl<T: Real> FaberPolynomial<T> {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, w: C<T>) -> C<T> {
        self.coeffs.iter().rev().fold(C::<T>::zero(), |acc, &a| acc * w + a)
    }

    pub fn deriv(&self, w: C<T>) -> C<T> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(C::<T>::zero(), |acc, (j, &a)| acc * w + a * T::from_usize_lossy(j))
    }
}

pub fn faber<T: Real>(map: &ExteriorMap<T>, n: usize) -> FaberPolynomial<T> {
    let gn = map.laurent().pow(n);
    FaberPolynomial { coeffs: (0..=n as i64).map(|j| gn.coeff(j)).collect() }
}

/// Values of ω̇⁽ⁿ⁾ per unit dσ at each sample: i for n = 0, else d F_n(e^{iσ})/dσ.
pub fn deformation_form<T: Real>(map: &ExteriorMap<T>, n: usize, contour: &SampledContour<T>) -> Vec<C<T>> {
    let i = c(T::zero(), T::one());
    let m = contour.len();
    if n == 0 {
        return vec![i; m];
    }
    let f = faber(map, n);
    let h = contour.step();
    (0..m)
        .map(|k| {
            let s = cis(h * T::from_usize_lossy(k));
            i * s * f.deriv(s)
        })
        .collect()
}

/// D_mn = (1/2πi)∮ (z⁻ᵐ/m)·ω̇⁽ⁿ⁾ for m = 1..=N (rows) and n = 0..=N (columns).
///
/// Duality with the moments makes this [0 | I].
pub fn duality_matrix<T: Real>(map: &ExteriorMap<T>, n: usize, m: usize) -> Result<Mat<C<T>>> {
    let contour = sample(map, m)?;
    let scale = c(T::zero(), -contour.step() / T::TAU());
    let forms: Vec<Vec<C<T>>> = (0..=n).map(|k| deformation_form(map, k, &contour)).collect();
    Ok(Mat::from_fn(n, n + 1, |row, col| {
        let p = -(row as i32 + 1);
        let weight = T::from_usize_lossy(row + 1);
        ksum_c(contour.z().iter().zip(&forms[col]).map(|(&z, &f)| z.powi(p) / weight * f)) * scale
    }))
}

#[cfg(test)]
mod tests;
