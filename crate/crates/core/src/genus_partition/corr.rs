//! Derivative tensors of log|θ(U|Ω)|² at U = 0.
//!
//! Pure holomorphic and pure antiholomorphic blocks come from the analytic theta jet.
//! Mixed entries are measured directly on the real function: log|θ|² is sampled on a
//! polydisc around 0, Fourier-filtered in the angles and fitted in the squared radii,
//! which isolates each Taylor coefficient of u^α ū^β.

use std::collections::HashMap;

use num_traits::Zero;
use rayon::prelude::*;

use super::DIVISOR_TOL;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{c, factorial, ksum_c, re, Real, C};
use crate::theta_core::{theta, theta_jet, PeriodMatrix, ThetaJet};

/// Largest allowed magnitude of an entry with both holomorphic and antiholomorphic indices.
pub const MIXED_TOL: f64 = 1e-8;

/// ∂^{m+n} log|θ(U|Ω)|² / ∂u_{i1}…∂u_{im} ∂ū_{j1}…∂ū_{jn} at U = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrTensor<T> {
    pub genus: usize,
    pub holo_count: usize,
    pub anti_count: usize,
    /// Row-major over (i1, …, im, j1, …, jn), each index in 0..genus.
    pub entries: Vec<C<T>>,
}

impl<T: Real> CorrTensor<T> {
    pub fn get(&self, holo: &[usize], anti: &[usize]) -> C<T> {
        assert_eq!(holo.len(), self.holo_count);
        assert_eq!(anti.len(), self.anti_count);
        self.entries[flat_index(self.genus, holo.iter().chain(anti))]
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }
}

fn flat_index<'a>(g: usize, idx: impl Iterator<Item = &'a usize>) -> usize {
    idx.fold(0, |acc, &i| acc * g + i)
}

fn unflatten(g: usize, len: usize, mut k: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = k % g;
        k /= g;
    }
    out
}

/// Polydisc sampling parameters (angles, radii) by number of active variables.
fn polydisc_shape(vars: usize) -> (usize, usize) {
    match vars {
        1 | 2 => (32, 8),
        3 => (16, 6),
        _ => (8, 4),
    }
}

fn radii<T: Real>(count: usize) -> Vec<T> {
    let (lo, hi) = (0.05, 0.26);
    (0..count).map(|r| T::lit(lo + (hi - lo) * r as f64 / (count - 1) as f64)).collect()
}

/// Inverse of V[r][j] = x_r^j, row j holding the coefficients of x^j in the Lagrange basis.
///
/// Expanding the products directly keeps Σ_r V⁻¹[j][r] = δ_j0 to rounding, which an LU
/// inverse of the ill-conditioned Vandermonde matrix does not.
pub(super) fn vandermonde_inverse<T: Real>(x: &[T]) -> Mat<T> {
    let n = x.len();
    let mut inv = Mat::zeros(n, n);
    for r in 0..n {
        let mut poly = vec![T::one()];
        let mut denom = T::one();
        for (k, &xk) in x.iter().enumerate().filter(|&(k, _)| k != r) {
            let mut next = vec![T::zero(); poly.len() + 1];
            for (j, &a) in poly.iter().enumerate() {
                next[j + 1] = next[j + 1] + a;
                next[j] = next[j] - a * xk;
            }
            poly = next;
            denom = denom * (x[r] - x[k]);
        }
        for (j, &a) in poly.iter().enumerate() {
            inv[(j, r)] = a / denom;
        }
    }
    inv
}

/// Samples of log|θ|² on a polydisc in the variables `vars`.
pub(super) struct Polydisc<T> {
    angles: usize,
    radii: Vec<T>,
    /// log|θ(0)|², subtracted from the samples so the constant cannot leak into other coefficients.
    center: T,
    /// Flat over (r_1, p_1, r_2, p_2, …), last variable fastest.
    values: Vec<T>,
    /// Rows of the inverse Vandermonde matrix in ε².
    vinv: Mat<T>,
}

impl<T: Real> Polydisc<T> {
    pub(super) fn sample(omega: &PeriodMatrix<T>, vars: &[usize], tol: T) -> Result<Self> {
        let g = omega.genus();
        let (angles, nr) = polydisc_shape(vars.len());
        let radii = radii::<T>(nr);
        let per = nr * angles;
        let total = per.pow(vars.len() as u32);
        let values: Vec<Result<T>> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut u = vec![C::<T>::zero(); g];
                let mut k = flat;
                for &v in vars.iter().rev() {
                    let slot = k % per;
                    k /= per;
                    let (r, p) = (slot / angles, slot % angles);
                    let phi = T::TAU() * T::from_usize_lossy(p) / T::from_usize_lossy(angles);
                    u[v] = c(radii[r] * phi.cos(), radii[r] * phi.sin());
                }
                let th = theta(&u, omega, tol)?;
                if th.norm() < T::lit(DIVISOR_TOL) {
                    return Err(Error::OnThetaDivisor(th.norm().to_f64().unwrap()));
                }
                Ok(T::lit(2.0) * th.norm().ln())
            })
            .collect();
        let center = T::lit(2.0) * theta(&vec![C::<T>::zero(); g], omega, tol)?.norm().ln();
        let values = values.into_iter().map(|v| v.map(|v| v - center)).collect::<Result<Vec<T>>>()?;
        let squares: Vec<T> = radii.iter().map(|&r| r * r).collect();
        let vinv = vandermonde_inverse(&squares);
        Ok(Self { angles, radii, center, values, vinv })
    }

    /// Taylor coefficient of Π u_k^{α_k} ū_k^{β_k}.
    pub(super) fn coefficient(&self, alpha: &[usize], beta: &[usize]) -> C<T> {
        let nv = alpha.len();
        let (na, nr) = (self.angles, self.radii.len());
        let per = na * nr;
        let s: Vec<i64> = alpha.iter().zip(beta).map(|(&a, &b)| a as i64 - b as i64).collect();
        let mu: Vec<usize> = alpha.iter().zip(beta).map(|(&a, &b)| a.min(b)).collect();
        let norm = T::from_usize_lossy(na.pow(nv as u32));
        let radial = nr.pow(nv as u32);
        let angular = na.pow(nv as u32);
        let terms: Vec<C<T>> = (0..radial)
            .map(|rflat| {
                let rs = unflatten(nr, nv, rflat);
                let mut weight = T::one();
                let mut scale = T::one();
                for k in 0..nv {
                    weight = weight * self.vinv[(mu[k], rs[k])];
                    scale = scale * self.radii[rs[k]].powi(s[k].unsigned_abs() as i32);
                }
                let fourier = ksum_c((0..angular).map(|aflat| {
                    let ps = unflatten(na, nv, aflat);
                    let mut flat = 0;
                    let mut phase = 0i64;
                    for k in 0..nv {
                        flat = flat * per + rs[k] * na + ps[k];
                        phase += s[k] * ps[k] as i64;
                    }
                    let phi = -T::TAU() * T::from_i64(phase.rem_euclid(na as i64)).unwrap() / T::from_usize_lossy(na);
                    c(phi.cos(), phi.sin()) * self.values[flat]
                })) / norm;
                fourier * (weight / scale)
            })
            .collect();
        let value = ksum_c(terms);
        if alpha.iter().chain(beta).all(|&k| k == 0) {
            value + re(self.center)
        } else {
            value
        }
    }
}

fn counts(vars: &[usize], idx: &[usize]) -> Vec<usize> {
    vars.iter().map(|v| idx.iter().filter(|&&i| i == *v).count()).collect()
}

fn analytic_entry<T: Real>(jet: &ThetaJet<T>, holo: &[usize], anti: &[usize]) -> C<T> {
    match (holo.is_empty(), anti.is_empty()) {
        (true, true) => re(T::lit(2.0) * jet.value.norm().ln()),
        (false, true) => jet.log_derivative(holo),
        (true, false) => jet.log_derivative(anti).conj(),
        (false, false) => unreachable!("mixed entries are measured"),
    }
}

/// The (m, n) tensor of log|θ(U|Ω)|² at U = 0, with m, n ≤ 3 and m + n ≤ 4.
///
/// Fails with `RouteMismatch` if any entry with m·n > 0 exceeds [`MIXED_TOL`].
pub fn corr_tensor<T: Real>(omega: &PeriodMatrix<T>, m: usize, n: usize, tol: T) -> Result<CorrTensor<T>> {
    let tensor = corr_tensor_measured(omega, m, n, tol)?;
    if m * n > 0 {
        let worst = tensor.max_abs();
        if worst > T::lit(MIXED_TOL) {
            return Err(Error::RouteMismatch {
                what: "mixed correlation entries",
                residual: worst.to_f64().unwrap(),
                tol: MIXED_TOL,
            });
        }
    }
    Ok(tensor)
}

/// As [`corr_tensor`], without the vanishing assertion on mixed entries.
pub fn corr_tensor_measured<T: Real>(omega: &PeriodMatrix<T>, m: usize, n: usize, tol: T) -> Result<CorrTensor<T>> {
    if m > 3 || n > 3 || m + n > 4 {
        return Err(Error::InvalidInput("counts must satisfy m, n <= 3 and m + n <= 4".into()));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let g = omega.genus();
    let zero = vec![C::<T>::zero(); g];
    let jet = theta_jet(&zero, omega, 3, tol)?;
    if jet.value.norm() < T::lit(DIVISOR_TOL) {
        return Err(Error::OnThetaDivisor(jet.value.norm().to_f64().unwrap()));
    }
    let sample_tol = tol.min(T::lit(1e-14));
    let mut discs: HashMap<Vec<usize>, Polydisc<T>> = HashMap::new();
    let mut cache: HashMap<(Vec<usize>, Vec<usize>), C<T>> = HashMap::new();
    let len = g.pow((m + n) as u32);
    let mut entries = Vec::with_capacity(len);
    for flat in 0..len {
        let idx = unflatten(g, m + n, flat);
        let (mut holo, mut anti) = (idx[..m].to_vec(), idx[m..].to_vec());
        holo.sort_unstable();
        anti.sort_unstable();
        let key = (holo.clone(), anti.clone());
        if let Some(&v) = cache.get(&key) {
            entries.push(v);
            continue;
        }
        let value = if m == 0 || n == 0 {
            analytic_entry(&jet, &holo, &anti)
        } else {
            let mut vars: Vec<usize> = holo.iter().chain(&anti).copied().collect();
            vars.sort_unstable();
            vars.dedup();
            if !discs.contains_key(&vars) {
                discs.insert(vars.clone(), Polydisc::sample(omega, &vars, sample_tol)?);
            }
            let (alpha, beta) = (counts(&vars, &holo), counts(&vars, &anti));
            let fact = alpha.iter().chain(&beta).fold(T::one(), |p, &k| p * factorial::<T>(k));
            discs[&vars].coefficient(&alpha, &beta) * fact
        };
        cache.insert(key, value);
        entries.push(value);
    }
    Ok(CorrTensor { genus: g, holo_count: m, anti_count: n, entries })
}
