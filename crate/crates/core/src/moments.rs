//! Harmonic moments, the Cauchy-transform pair and Newton inversion of the moment map.

use num_traits::Zero;

use crate::contour_geometry::{
    area, check_univalent, point_location, sample, ExteriorMap, Location, SampledContour, GUARD_SAMPLES,
};
use crate::error::{Error, Result};
use crate::linalg::{solve, Mat};
use crate::scalar::{c, KahanSum, KahanSumC, Real, C};

pub const DEFAULT_SAMPLES: usize = 4096;

/// Exterior harmonic moments t₀ > 0 and t₁…t_N.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSet<T> {
    pub t0: T,
    pub t: Vec<C<T>>,
}

impl<T: Real> MomentSet<T> {
    pub fn new(t0: T, t: Vec<C<T>>) -> Result<Self> {
        if !(t0 > T::zero()) {
            return Err(Error::InvalidInput(format!("t0 must be positive, got {t0}")));
        }
        Ok(Self { t0, t })
    }

    /// Real coordinates [t₀, Re t₁, Im t₁, …].
    pub fn to_real(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(1 + 2 * self.t.len());
        out.push(self.t0);
        for z in &self.t {
            out.push(z.re);
            out.push(z.im);
        }
        out
    }

    pub fn from_real(x: &[T]) -> Self {
        let t = x[1..].chunks(2).map(|p| c(p[0], p[1])).collect();
        Self { t0: x[0], t }
    }
}

/// Interior moments v₀ and v₁…v_K.
#[derive(Clone, Debug, PartialEq)]
pub struct InteriorMoments<T> {
    pub v0: T,
    pub v: Vec<C<T>>,
}

/// (1/2πi)∮ zᵏ z̄ dz for k in `powers`, accumulated with compensation.
fn power_moments<T: Real>(contour: &SampledContour<T>, n: usize, inverse: bool) -> Vec<C<T>> {
    let mut acc = vec![KahanSumC::<T>::new(); n];
    for (&z, &dz) in contour.z().iter().zip(contour.dz()) {
        let base = if inverse { z.inv() } else { z };
        let weight = z.conj() * dz;
        let mut p = base;
        for a in acc.iter_mut() {
            a.add(p * weight);
            p = p * base;
        }
    }
    let scale = contour.step() / T::TAU();
    acc.iter().map(|a| a.value() * c(T::zero(), -scale)).collect()
}

/// t₀ = A/π and t_n = (1/2πin)∮ z⁻ⁿ z̄ dz for n = 1..=N by the trapezoid rule on M samples.
///
/// Only the area sign is checked here; callers that need the full univalence scan run it once.
pub fn exterior_moments<T: Real>(map: &ExteriorMap<T>, n: usize, m: usize) -> Result<MomentSet<T>> {
    let t0 = area(map)? / T::PI();
    let contour = sample(map, m)?;
    let raw = power_moments(&contour, n, true);
    let t = raw.into_iter().enumerate().map(|(k, v)| v / T::from_usize_lossy(k + 1)).collect();
    Ok(MomentSet { t0, t })
}

/// ∫_Ω log|z| d²z = Re[−(i/4)∮ z̄(log|z|² − 1) dz].
pub fn log_moment<T: Real>(contour: &SampledContour<T>) -> T {
    let mut acc = KahanSum::new();
    for (&z, &dz) in contour.z().iter().zip(contour.dz()) {
        // Real part of −(i/4)·z̄(log|z|² − 1)·dz is (1/4)·Im[z̄ dz]·(log|z|² − 1).
        acc.add((z.conj() * dz).im * (z.norm_sqr().ln() - T::one()));
    }
    acc.value() * contour.step() / T::lit(4.0)
}

pub(crate) fn require_origin_inside<T: Real>(contour: &SampledContour<T>) -> Result<()> {
    match point_location(contour, C::<T>::zero()) {
        Location::Interior => Ok(()),
        _ => Err(Error::OriginOutside),
    }
}

/// v₀ = (2/π)∫_Ω log|z| d²z and v_n = (1/2πi)∮ zⁿ z̄ dz for n = 1..=K.
pub fn interior_moments<T: Real>(map: &ExteriorMap<T>, k: usize, m: usize) -> Result<InteriorMoments<T>> {
    let contour = sample(map, m)?;
    require_origin_inside(&contour)?;
    let v0 = T::lit(2.0) / T::PI() * log_moment(&contour);
    Ok(InteriorMoments { v0, v: power_moments(&contour, k, false) })
}

/// Side of the contour for the Cauchy integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Interior,
    Exterior,
}

/// S±(z) = (1/2πi)∮ w̄/(w − z) dw.
pub fn cauchy_pair<T: Real>(contour: &SampledContour<T>, z: C<T>, side: Side) -> Result<C<T>> {
    match (point_location(contour, z), side) {
        (Location::NearBoundary, _) => return Err(Error::NearBoundary),
        (Location::Interior, Side::Exterior) => return Err(Error::InteriorPoint),
        (Location::Exterior, Side::Interior) => return Err(Error::ExteriorPoint),
        _ => {}
    }
    Ok(contour.contour_integral(|w| w.conj() / (w - z)))
}

/// Real Newton unknowns [r, Re b₀, Im b₀, Re b₁, Im b₁, …].
fn map_to_real<T: Real>(map: &ExteriorMap<T>) -> Vec<T> {
    let mut x = vec![map.r(), map.b0().re, map.b0().im];
    for b in map.coeffs() {
        x.push(b.re);
        x.push(b.im);
    }
    x
}

fn map_from_real<T: Real>(x: &[T]) -> Result<ExteriorMap<T>> {
    let coeffs = x[3..].chunks(2).map(|p| c(p[0], p[1])).collect();
    ExteriorMap::new(x[0], c(x[1], x[2]), coeffs)
}

fn moment_residual<T: Real>(x: &[T], target: &MomentSet<T>, m: usize) -> Result<Vec<T>> {
    let map = map_from_real(x)?;
    let got = exterior_moments(&map, target.t.len(), m)?;
    Ok(got.to_real().iter().zip(target.to_real()).map(|(&a, b)| a - b).collect())
}

fn sup_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Solve exterior_moments(map) = target for a map with the seed's coefficient count.
///
/// The target carries t₁…t_{N+1} for a seed with N coefficients.
pub fn map_from_moments<T: Real>(target: &MomentSet<T>, seed: &ExteriorMap<T>, tol: T) -> Result<ExteriorMap<T>> {
    map_from_moments_with(target, seed, tol, DEFAULT_SAMPLES)
}

pub fn map_from_moments_with<T: Real>(
    target: &MomentSet<T>,
    seed: &ExteriorMap<T>,
    tol: T,
    m: usize,
) -> Result<ExteriorMap<T>> {
    if target.t.len() != seed.coeffs().len() + 1 {
        return Err(Error::InvalidInput(format!(
            "moment count must be coefficient count + 1 ({} vs {})",
            target.t.len(),
            seed.coeffs().len() + 1
        )));
    }
    const CAP: usize = 50;
    let mut x = map_to_real(seed);
    let dim = x.len();
    let mut f = moment_residual(&x, target, m)?;
    let mut res = sup_norm(&f);
    let mut iterations = 0;
    while res > tol {
        if iterations == CAP {
            return Err(Error::NonConvergence {
                what: "moment inversion",
                residual: res.to_f64().unwrap(),
                iterations,
            });
        }
        iterations += 1;
        let mut jac = Mat::zeros(dim, dim);
        for j in 0..dim {
            let step = T::lit(1e-6) * (T::one() + x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] = xp[j] + step;
            xm[j] = xm[j] - step;
            let fp = moment_residual(&xp, target, m)?;
            let fm = moment_residual(&xm, target, m)?;
            for i in 0..dim {
                jac[(i, j)] = (fp[i] - fm[i]) / (step + step);
            }
        }
        let rhs: Vec<T> = f.iter().map(|&v| -v).collect();
        let dx = solve(&jac, &rhs).ok_or_else(|| Error::NonConvergence {
            what: "moment inversion (singular Jacobian)",
            residual: res.to_f64().unwrap(),
            iterations,
        })?;
        let mut lam = T::one();
        let mut accepted = false;
        for _ in 0..=8 {
            let trial: Vec<T> = x.iter().zip(&dx).map(|(&a, &d)| a + d * lam).collect();
            if let Ok(ft) = moment_residual(&trial, target, m) {
                let rt = sup_norm(&ft);
                if rt < res {
                    x = trial;
                    f = ft;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            lam = lam * T::lit(0.5);
        }
        if !accepted {
            return Err(Error::NonConvergence {
                what: "moment inversion (residual plateau)",
                residual: res.to_f64().unwrap(),
                iterations,
            });
        }
    }
    let map = map_from_real(&x)?;
    if iterations > 0 {
        if let Some((crit, detail)) = check_univalent(&map, GUARD_SAMPLES).failure {
            return Err(Error::UnivalenceLost(format!("{crit:?}: {detail}")));
        }
    }
    Ok(map)
}
