//! Ward identities of the contour tau-function: first derivatives against interior moments,
//! second derivatives against the Schiffer and Bergman kernels, the metric they induce and
//! the explicit and integrated formulas for the exterior map.
//!
//! Derivatives in the moment coordinates (t₀, t₁, t̄₁, …) are taken by finite differences,
//! re-solving the map from perturbed moments each time. Second derivatives differentiate the
//! interior moments, which the first-order identity equates with ∂log τ/∂t_n.

use num_traits::Zero;
use rayon::prelude::*;

use crate::contour_geometry::{
    bergman_kernel_ext, boundary_points, check_univalent, inverse_with_derivative, ExteriorMap, GUARD_SAMPLES,
};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, Mat};
use crate::moments::{exterior_moments, interior_moments, map_from_moments_with, MomentSet, DEFAULT_SAMPLES};
use crate::scalar::{c, cis, ksum_c, re, Real, C};
use crate::tau_energy::log_tau_boundary;

/// Residual target for re-solving the map at perturbed moments.
const NEWTON_TOL: f64 = 1e-13;

/// Relative agreement required between steps h and 2h.
pub const RICHARDSON_GATE: f64 = 1e-3;

/// Default magnitude allowed for the last retained term of a truncated Laurent series.
pub const SERIES_TAIL_TOL: f64 = 1e-6;

/// Radii of the outer contour C₊ = g(|w| = ρ) used for the ρ-independence check.
pub const RHO_SWEEP: [f64; 3] = [1.3, 1.5, 2.0];

/// Finite-difference settings for the moment chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdSettings<T> {
    pub step: T,
    pub samples: usize,
}

impl<T: Real> Default for FdSettings<T> {
    fn default() -> Self {
        Self { step: T::lit(1e-4), samples: DEFAULT_SAMPLES }
    }
}

/// Real direction in moment space: t₀, Re t_n or Im t_n.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dir {
    T0,
    Re(usize),
    Im(usize),
}

/// Holomorphic and antiholomorphic derivatives of a vector observable.
type Wirtinger<T> = (Vec<C<T>>, Vec<C<T>>);

/// The map as a point of moment space (t₀, t₁, …, t_K), K = coefficient count + 1.
#[derive(Clone, Debug)]
pub struct MomentChart<T> {
    base: ExteriorMap<T>,
    moments: MomentSet<T>,
    samples: usize,
}

impl<T: Real> MomentChart<T> {
    /// Chart with at least `order` moment coordinates; the map is padded as needed.
    pub fn new(map: &ExteriorMap<T>, order: usize, samples: usize) -> Result<Self> {
        check_univalent(map, GUARD_SAMPLES).into_result()?;
        let base = map.padded(order.max(1) - 1);
        let moments = exterior_moments(&base, base.coeffs().len() + 1, samples)?;
        Ok(Self { base, moments, samples })
    }

    pub fn map(&self) -> &ExteriorMap<T> {
        &self.base
    }

    pub fn moments(&self) -> &MomentSet<T> {
        &self.moments
    }

    /// Number of complex coordinates t₁…t_K.
    pub fn order(&self) -> usize {
        self.moments.t.len()
    }

    fn solve_at(&self, dir: Dir, delta: T) -> Result<ExteriorMap<T>> {
        let mut target = self.moments.clone();
        match dir {
            Dir::T0 => target.t0 = target.t0 + delta,
            Dir::Re(n) => target.t[n - 1] = target.t[n - 1] + re(delta),
            Dir::Im(n) => target.t[n - 1] = target.t[n - 1] + c(T::zero(), delta),
        }
        map_from_moments_with(&target, &self.base, T::lit(NEWTON_TOL), self.samples)
    }

    /// Central difference of a vector observable along one real direction.
    fn central<F>(&self, f: &F, dir: Dir, h: T) -> Result<Vec<C<T>>>
    where
        F: Fn(&ExteriorMap<T>) -> Result<Vec<C<T>>> + Sync,
    {
        let sides: Vec<Result<Vec<C<T>>>> =
            [h, -h].par_iter().map(|&d| self.solve_at(dir, d).and_then(|m| f(&m))).collect();
        let mut sides = sides.into_iter();
        let plus = sides.next().unwrap()?;
        let minus = sides.next().unwrap()?;
        Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (h + h)).collect())
    }

    /// (∂/∂t_n, ∂/∂t̄_n) of a vector observable; for n = 0 both are ∂/∂t₀.
    fn wirtinger<F>(&self, f: &F, n: usize, h: T) -> Result<Wirtinger<T>>
    where
        F: Fn(&ExteriorMap<T>) -> Result<Vec<C<T>>> + Sync,
    {
        if n == 0 {
            let d = self.central(f, Dir::T0, h)?;
            return Ok((d.clone(), d));
        }
        let dre = self.central(f, Dir::Re(n), h)?;
        let dim = self.central(f, Dir::Im(n), h)?;
        let half = T::lit(0.5);
        let holo = dre.iter().zip(&dim).map(|(a, b)| (a - b * c(T::zero(), T::one())) * half).collect();
        let anti = dre.iter().zip(&dim).map(|(a, b)| (a + b * c(T::zero(), T::one())) * half).collect();
        Ok((holo, anti))
    }
}

fn interior_vector<T: Real>(map: &ExteriorMap<T>, n: usize, samples: usize) -> Result<Vec<C<T>>> {
    let v = interior_moments(map, n, samples)?;
    let mut out = vec![re(v.v0)];
    out.extend(v.v);
    Ok(out)
}

fn check_fd<T: Real>(fd: &FdSettings<T>) -> Result<()> {
    if !(fd.step > T::zero()) || !fd.step.is_finite() {
        return Err(Error::InvalidInput("fd_step must be positive".into()));
    }
    crate::contour_geometry::validate_sample_count(fd.samples)
}

/// One line of the first-order comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderEntry<T> {
    pub n: usize,
    /// ∂log τ/∂t_n by finite differences.
    pub fd: C<T>,
    /// Interior moment v_n.
    pub moment: C<T>,
    pub residual: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WardFirstReport<T> {
    pub entries: Vec<FirstOrderEntry<T>>,
    pub max_residual: T,
}

/// ∂log τ/∂t_n = v_n for n = 0..=N.
pub fn ward_first_order<T: Real>(map: &ExteriorMap<T>, n: usize, fd: &FdSettings<T>) -> Result<WardFirstReport<T>> {
    check_fd(fd)?;
    let chart = MomentChart::new(map, n, fd.samples)?;
    let samples = fd.samples;
    let log_tau = |m: &ExteriorMap<T>| -> Result<Vec<C<T>>> { Ok(vec![re(log_tau_boundary(m, samples)?.log_tau)]) };
    let moments = interior_vector(chart.map(), n, samples)?;
    let mut entries = Vec::with_capacity(n + 1);
    for (k, &moment) in moments.iter().enumerate().take(n + 1) {
        let (holo, _) = chart.wirtinger(&log_tau, k, fd.step)?;
        let residual = (holo[0] - moment).norm();
        entries.push(FirstOrderEntry { n: k, fd: holo[0], moment, residual });
    }
    let max_residual = entries.iter().fold(T::zero(), |m, e| m.max(e.residual));
    Ok(WardFirstReport { entries, max_residual })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainRuleReport<T> {
    /// d log τ(g_s)/ds.
    pub direct: T,
    /// v₀·dt₀/ds + Σ (v_n·dt_n/ds + conj(v_n)·dt̄_n/ds).
    pub predicted: T,
    pub residual: T,
}

/// Ward identities contracted along a one-parameter family of maps.
pub fn ward_chain_rule<T, F>(family: F, s0: T, fd: &FdSettings<T>) -> Result<ChainRuleReport<T>>
where
    T: Real,
    F: Fn(T) -> Result<ExteriorMap<T>>,
{
    check_fd(fd)?;
    let h = fd.step;
    let (plus, mid, minus) = (family(s0 + h)?, family(s0)?, family(s0 - h)?);
    let count = [&plus, &mid, &minus].iter().map(|m| m.coeffs().len()).max().unwrap() + 1;
    let lt = |m: &ExteriorMap<T>| log_tau_boundary(m, fd.samples).map(|r| r.log_tau);
    let direct = (lt(&plus)? - lt(&minus)?) / (h + h);
    let tp = exterior_moments(&plus, count, fd.samples)?;
    let tm = exterior_moments(&minus, count, fd.samples)?;
    let v = interior_vector(&mid, count, fd.samples)?;
    let mut predicted = v[0].re * (tp.t0 - tm.t0) / (h + h);
    for k in 0..count {
        let dt = (tp.t[k] - tm.t[k]) / (h + h);
        predicted = predicted + T::lit(2.0) * (v[k + 1] * dt).re;
    }
    Ok(ChainRuleReport { direct, predicted, residual: (direct - predicted).abs() })
}

/// Second derivatives of log τ in moment coordinates, order N.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianBlock<T> {
    pub order: usize,
    /// holo[(m−1, n−1)] = ∂²log τ/∂t_m∂t_n.
    pub holo: Mat<C<T>>,
    /// mixed[(m−1, n−1)] = ∂²log τ/∂t_m∂t̄_n.
    pub mixed: Mat<C<T>>,
    /// t0_row[n−1] = ∂²log τ/∂t₀∂t_n.
    pub t0_row: Vec<C<T>>,
    /// ∂²log τ/∂t₀².
    pub t0t0: T,
    /// max |∂v₀/∂t_n − ∂v_n/∂t₀|.
    pub t0_asymmetry: T,
    /// Largest relative change between steps h and 2h.
    pub richardson_gap: T,
}

impl<T: Real> HessianBlock<T> {
    pub fn holo_asymmetry(&self) -> T {
        let n = self.order;
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.holo[(i, j)] - self.holo[(j, i)]).norm());
            }
        }
        worst
    }

    pub fn mixed_non_hermiticity(&self) -> T {
        let n = self.order;
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.mixed[(i, j)] - self.mixed[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn richardson_ok(&self) -> bool {
        self.richardson_gap <= T::lit(RICHARDSON_GATE)
    }
}

fn relative_gap<T: Real>(a: &[C<T>], b: &[C<T>]) -> T {
    let scale = a.iter().fold(T::zero(), |m, z| m.max(z.norm())).max(T::lit(1e-3));
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((x - y).norm())) / scale
}

/// ∂²log τ/∂t₀² and ∂²log τ/∂t₀∂t_n for n = 1..=N (only t₀ is perturbed).
pub fn t0_derivatives<T: Real>(map: &ExteriorMap<T>, n: usize, fd: &FdSettings<T>) -> Result<(T, Vec<C<T>>, T)> {
    check_fd(fd)?;
    let chart = MomentChart::new(map, n, fd.samples)?;
    let f = |m: &ExteriorMap<T>| interior_vector(m, n, fd.samples);
    let d = chart.central(&f, Dir::T0, fd.step)?;
    let d2 = chart.central(&f, Dir::T0, fd.step * T::lit(2.0))?;
    Ok((d[0].re, d[1..].to_vec(), relative_gap(&d, &d2)))
}

/// Full Hessian block of order N by differentiating v₀…v_N in every moment direction.
pub fn hessian_block<T: Real>(map: &ExteriorMap<T>, n: usize, fd: &FdSettings<T>) -> Result<HessianBlock<T>> {
    check_fd(fd)?;
    if n == 0 {
        return Err(Error::InvalidInput("Hessian order must be at least 1".into()));
    }
    let chart = MomentChart::new(map, n, fd.samples)?;
    let f = |m: &ExteriorMap<T>| interior_vector(m, n, fd.samples);
    let mut holo_d = Vec::with_capacity(n + 1);
    let mut anti_d = Vec::with_capacity(n + 1);
    let mut gap = T::zero();
    for k in 0..=n {
        let (h1, a1) = chart.wirtinger(&f, k, fd.step)?;
        let (h2, a2) = chart.wirtinger(&f, k, fd.step * T::lit(2.0))?;
        gap = gap.max(relative_gap(&h1, &h2)).max(relative_gap(&a1, &a2));
        holo_d.push(h1);
        anti_d.push(a1);
    }
    // holo_d[k][j] = ∂v_j/∂t_k, anti_d[k][j] = ∂v_j/∂t̄_k.
    let holo = Mat::from_fn(n, n, |i, j| holo_d[i + 1][j + 1]);
    let mixed = Mat::from_fn(n, n, |i, j| anti_d[j + 1][i + 1]);
    let t0_row: Vec<C<T>> = (1..=n).map(|j| holo_d[0][j]).collect();
    let t0_asymmetry = (1..=n).fold(T::zero(), |m, j| m.max((holo_d[j][0] - holo_d[0][j]).norm()));
    Ok(HessianBlock { order: n, holo, mixed, t0_row, t0t0: holo_d[0][0].re, t0_asymmetry, richardson_gap: gap })
}

/// Powers g(ζ_j)^m for m = 1..=n at the given nodes, row j.
fn power_table<T: Real>(values: &[C<T>], n: usize) -> Mat<C<T>> {
    let mut out = Mat::zeros(values.len(), n);
    for (j, &z) in values.iter().enumerate() {
        let mut p = z;
        for m in 0..n {
            out[(j, m)] = p;
            p = p * z;
        }
    }
    out
}

fn check_quadrature_count(m: usize) -> Result<()> {
    if m < 16 {
        return Err(Error::InvalidInput("quadrature needs at least 16 nodes".into()));
    }
    Ok(())
}

/// (1/(2πi)²)∮∮_C (G′(z)G′(w)/(G(z) − G(w))² − 1/(z − w)²) zᵐ wⁿ dz dw for m, n = 1..=N.
///
/// In the disk variables ζ = G(z), η = G(w) on |ζ| = |η| = 1; the two node sets are offset
/// by half a step so the removable diagonal is never evaluated.
pub fn schiffer_matrix<T: Real>(map: &ExteriorMap<T>, n: usize, m: usize) -> Result<Mat<C<T>>> {
    check_quadrature_count(m)?;
    check_univalent(map, GUARD_SAMPLES).into_result()?;
    let mf = T::from_usize_lossy(m);
    let zeta: Vec<C<T>> = (0..m).map(|j| cis(T::TAU() * T::from_usize_lossy(j) / mf)).collect();
    let eta: Vec<C<T>> = (0..m).map(|j| cis(T::TAU() * (T::from_usize_lossy(j) + T::lit(0.5)) / mf)).collect();
    let gz: Vec<C<T>> = zeta.iter().map(|&w| map.g_at(w)).collect();
    let ge: Vec<C<T>> = eta.iter().map(|&w| map.g_at(w)).collect();
    let dgz: Vec<C<T>> = zeta.iter().map(|&w| map.dg_at(w)).collect();
    let dge: Vec<C<T>> = eta.iter().map(|&w| map.dg_at(w)).collect();
    let pz = power_table(&gz, n);
    let pe = power_table(&ge, n);
    // Row j of A·Pe, A_jk = kernel·ζ_j·η_k.
    let rows: Vec<Vec<C<T>>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![C::<T>::zero(); n];
            for k in 0..m {
                let d = zeta[j] - eta[k];
                let dz = gz[j] - ge[k];
                let kern = (d * d).inv() - dgz[j] * dge[k] / (dz * dz);
                let a = kern * zeta[j] * eta[k];
                for (q, slot) in acc.iter_mut().enumerate() {
                    *slot = *slot + a * pe[(k, q)];
                }
            }
            acc
        })
        .collect();
    let scale = (mf * mf).recip();
    Ok(Mat::from_fn(n, n, |p, q| ksum_c((0..m).map(|j| pz[(j, p)] * rows[j][q])) * scale))
}

/// −(1/(2πi)²)∮∮_{C₊} G′(z)conj(G′(w))/(1 − G(z)conj(G(w)))² zᵐ w̄ⁿ dz dw̄ for m, n = 1..=N,
/// with C₊ = g(|w| = ρ), evaluated in the disk variables.
pub fn bergman_matrix<T: Real>(map: &ExteriorMap<T>, n: usize, rho: T, m: usize) -> Result<Mat<C<T>>> {
    check_quadrature_count(m)?;
    check_rho(rho)?;
    check_univalent(map, GUARD_SAMPLES).into_result()?;
    let mf = T::from_usize_lossy(m);
    let zeta: Vec<C<T>> = (0..m).map(|j| cis(T::TAU() * T::from_usize_lossy(j) / mf) * rho).collect();
    let gz: Vec<C<T>> = zeta.iter().map(|&w| map.g_at(w)).collect();
    let p = power_table(&gz, n);
    let rows: Vec<Vec<C<T>>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![C::<T>::zero(); n];
            for k in 0..m {
                let x = zeta[j] * zeta[k].conj();
                let d = C::<T>::new(T::one(), T::zero()) - x;
                let a = x / (d * d);
                for (q, slot) in acc.iter_mut().enumerate() {
                    *slot = *slot + a * p[(k, q)].conj();
                }
            }
            acc
        })
        .collect();
    let scale = (mf * mf).recip();
    Ok(Mat::from_fn(n, n, |a, b| ksum_c((0..m).map(|j| p[(j, a)] * rows[j][b])) * scale))
}

fn check_rho<T: Real>(rho: T) -> Result<()> {
    if !(rho > T::one() && rho <= T::lit(4.0)) {
        return Err(Error::InvalidInput("rho must satisfy 1 < rho <= 4".into()));
    }
    Ok(())
}

/// Largest entrywise difference of the Bergman matrix across [`RHO_SWEEP`].
pub fn bergman_rho_spread<T: Real>(map: &ExteriorMap<T>, n: usize, m: usize) -> Result<T> {
    let mats = RHO_SWEEP.iter().map(|&r| bergman_matrix(map, n, T::lit(r), m)).collect::<Result<Vec<_>>>()?;
    let mut worst = T::zero();
    for a in &mats {
        worst = worst.max(crate::linalg::max_abs_diff(a, &mats[0]));
    }
    Ok(worst)
}

/// A finite-difference Hessian entry next to its kernel quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntryComparison<T> {
    pub fd: C<T>,
    pub quadrature: C<T>,
    pub residual: T,
}

fn check_indices(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("indices must be at least 1".into()));
    }
    Ok(())
}

/// ∂²log τ/∂t_m∂t_n: finite differences against the Schiffer double integral.
pub fn hessian_vs_schiffer<T: Real>(
    map: &ExteriorMap<T>,
    m: usize,
    n: usize,
    nodes: usize,
    fd: &FdSettings<T>,
) -> Result<EntryComparison<T>> {
    check_indices(m, n)?;
    let order = m.max(n);
    let block = hessian_block(map, order, fd)?;
    let quad = schiffer_matrix(map, order, nodes)?;
    let (a, b) = (block.holo[(m - 1, n - 1)], quad[(m - 1, n - 1)]);
    Ok(EntryComparison { fd: a, quadrature: b, residual: (a - b).norm() })
}

/// ∂²log τ/∂t_m∂t̄_n: finite differences against the Bergman double integral over C₊.
///
/// Also fails with `RouteMismatch` if the quadrature moves by more than 1e-8 across [`RHO_SWEEP`].
pub fn hessian_vs_bergman<T: Real>(
    map: &ExteriorMap<T>,
    m: usize,
    n: usize,
    rho: T,
    nodes: usize,
    fd: &FdSettings<T>,
) -> Result<EntryComparison<T>> {
    check_indices(m, n)?;
    let order = m.max(n);
    let spread = bergman_rho_spread(map, order, nodes)?;
    if spread > T::lit(1e-8) {
        return Err(Error::RouteMismatch {
            what: "Bergman integral across rho",
            residual: spread.to_f64().unwrap(),
            tol: 1e-8,
        });
    }
    let block = hessian_block(map, order, fd)?;
    let quad = bergman_matrix(map, order, rho, nodes)?;
    let (a, b) = (block.mixed[(m - 1, n - 1)], quad[(m - 1, n - 1)]);
    Ok(EntryComparison { fd: a, quadrature: b, residual: (a - b).norm() })
}

/// h^{m n̄} = −(1/(2πi)²)∮∮_{C₊} zᵐ w̄ⁿ K(z, w̄) dz dw̄ with the Bergman kernel K of the exterior.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricGram<T> {
    pub order: usize,
    pub h: Mat<C<T>>,
    /// Eigenvalues of h, ascending.
    pub eigenvalues: Vec<T>,
}

impl<T: Real> MetricGram<T> {
    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues[0]
    }
}

/// Gram matrix of the metric in the z-plane, on C₊ = g(|w| = ρ); fails unless positive definite.
pub fn metric_gram<T: Real>(map: &ExteriorMap<T>, n: usize, rho: T, nodes: usize) -> Result<MetricGram<T>> {
    check_quadrature_count(nodes)?;
    check_rho(rho)?;
    if n == 0 {
        return Err(Error::InvalidInput("metric order must be at least 1".into()));
    }
    check_univalent(map, GUARD_SAMPLES).into_result()?;
    let mf = T::from_usize_lossy(nodes);
    let step = T::TAU() / mf;
    let pts: Vec<(C<T>, C<T>)> = (0..nodes)
        .map(|j| {
            let w = cis(T::TAU() * T::from_usize_lossy(j) / mf) * rho;
            (map.g_at(w), map.dg_at(w) * w * c(T::zero(), step))
        })
        .collect();
    let zs: Vec<C<T>> = pts.iter().map(|p| p.0).collect();
    let p = power_table(&zs, n);
    let rows: Vec<Result<Vec<C<T>>>> = (0..nodes)
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![C::<T>::zero(); n];
            for k in 0..nodes {
                let kern = bergman_kernel_ext(map, pts[j].0, pts[k].0)?;
                let a = kern * pts[j].1 * pts[k].1.conj();
                for (q, slot) in acc.iter_mut().enumerate() {
                    *slot = *slot + a * p[(k, q)].conj();
                }
            }
            Ok(acc)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    // −1/(2πi)² = 1/(4π²).
    let scale = (T::lit(4.0) * T::PI() * T::PI()).recip();
    let h = Mat::from_fn(n, n, |a, b| ksum_c((0..nodes).map(|j| p[(j, a)] * rows[j][b])) * scale);
    let eigenvalues = hermitian_eigenvalues(&h);
    if !(eigenvalues[0] > T::zero()) {
        return Err(Error::RouteMismatch {
            what: "metric positive definiteness",
            residual: eigenvalues[0].to_f64().unwrap(),
            tol: 0.0,
        });
    }
    Ok(MetricGram { order: n, h, eigenvalues })
}

/// π·h against the finite-difference mixed Hessian.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricComparison<T> {
    pub gram: MetricGram<T>,
    pub mixed: Mat<C<T>>,
    /// max |π·h − mixed|.
    pub residual: T,
}

pub fn metric_vs_hessian<T: Real>(
    map: &ExteriorMap<T>,
    n: usize,
    rho: T,
    nodes: usize,
    fd: &FdSettings<T>,
) -> Result<MetricComparison<T>> {
    let gram = metric_gram(map, n, rho, nodes)?;
    let block = hessian_block(map, n, fd)?;
    let scaled = gram.h.map(|z| z * T::PI());
    let residual = crate::linalg::max_abs_diff(&scaled, &block.mixed);
    Ok(MetricComparison { gram, mixed: block.mixed, residual })
}

/// Laurent coefficients M₀…M_N of G′/G = Σ M_n z⁻ⁿ⁻¹, by quadrature on |z| = ρ_out outside C.
pub fn equilibrium_moments<T: Real>(map: &ExteriorMap<T>, n: usize, nodes: usize) -> Result<Vec<C<T>>> {
    check_quadrature_count(nodes)?;
    check_univalent(map, GUARD_SAMPLES).into_result()?;
    let (boundary, _) = boundary_points(map, GUARD_SAMPLES);
    let radius = boundary.iter().fold(T::zero(), |m, z| m.max(z.norm())) * T::lit(1.5);
    let mf = T::from_usize_lossy(nodes);
    let samples: Vec<(C<T>, C<T>)> = (0..nodes)
        .map(|j| {
            let z = cis(T::TAU() * T::from_usize_lossy(j) / mf) * radius;
            let (gz, dgz) = inverse_with_derivative(map, z)?;
            // (1/2πi)·dz = z·dσ/2π.
            Ok((z, z * dgz / gz / mf))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..=n).map(|k| ksum_c(samples.iter().map(|&(z, w)| w * z.powi(k as i32)))).collect())
}

/// log z − ½∂²log τ/∂t₀² − Σ_{n≤K} (z⁻ⁿ/n)∂²log τ/∂t₀∂t_n against log G(z).
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructReport<T> {
    pub reconstructed: C<T>,
    pub direct: C<T>,
    pub residual: T,
    pub last_term: T,
}

pub fn reconstruct_log_g<T: Real>(
    map: &ExteriorMap<T>,
    k: usize,
    z: C<T>,
    fd: &FdSettings<T>,
    tail_tol: T,
) -> Result<ReconstructReport<T>> {
    if k == 0 {
        return Err(Error::InvalidInput("truncation must be at least 1".into()));
    }
    let (gz, _) = inverse_with_derivative(map, z)?;
    let (t0t0, row, _) = t0_derivatives(map, k, fd)?;
    let terms: Vec<C<T>> =
        row.iter().enumerate().map(|(i, &h)| h * z.powi(-(i as i32 + 1)) / T::from_usize_lossy(i + 1)).collect();
    let last_term = terms[k - 1].norm();
    if last_term > tail_tol {
        return Err(Error::TailTooLarge { last: last_term.to_f64().unwrap(), tol: tail_tol.to_f64().unwrap() });
    }
    // Both sides share log z; compare the parts analytic at infinity.
    let log_z = z.ln();
    let reconstructed = log_z + re(-t0t0 / T::lit(2.0)) - ksum_c(terms);
    let direct = log_z + (gz / z).ln();
    Ok(ReconstructReport { reconstructed, direct, residual: (reconstructed - direct).norm(), last_term })
}

/// Both integrated identities with Hessian entries from the kernel quadratures.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratedReport<T> {
    /// log((G(z) − G(w))/(z − w)), or log G′(z) when z = w.
    pub lhs_holo: C<T>,
    pub rhs_holo: C<T>,
    pub residual_holo: T,
    /// log(G(z)conj(G(w))/(G(z)conj(G(w)) − 1)).
    pub lhs_mixed: C<T>,
    pub rhs_mixed: C<T>,
    pub residual_mixed: T,
}

pub fn integrated_identities<T: Real>(
    map: &ExteriorMap<T>,
    z: C<T>,
    w: C<T>,
    k: usize,
    rho: T,
    nodes: usize,
    tail_tol: T,
) -> Result<IntegratedReport<T>> {
    if k == 0 {
        return Err(Error::InvalidInput("truncation must be at least 1".into()));
    }
    let (gz, dgz) = inverse_with_derivative(map, z)?;
    let (gw, _) = inverse_with_derivative(map, w)?;
    let holo = schiffer_matrix(map, k, nodes)?;
    let mixed = bergman_matrix(map, k, rho, nodes)?;
    let zi: Vec<C<T>> = (1..=k).map(|m| z.powi(-(m as i32))).collect();
    let wi: Vec<C<T>> = (1..=k).map(|m| w.powi(-(m as i32))).collect();
    let mut h_terms = Vec::with_capacity(k * k);
    let mut m_terms = Vec::with_capacity(k * k);
    let mut last = T::zero();
    for a in 0..k {
        for b in 0..k {
            let mn = T::from_usize_lossy((a + 1) * (b + 1));
            let th = zi[a] * wi[b] * holo[(a, b)] / mn;
            let tm = zi[a] * wi[b].conj() * mixed[(a, b)] / mn;
            if a == k - 1 || b == k - 1 {
                last = last.max(th.norm()).max(tm.norm());
            }
            h_terms.push(th);
            m_terms.push(tm);
        }
    }
    if last > tail_tol {
        return Err(Error::TailTooLarge { last: last.to_f64().unwrap(), tol: tail_tol.to_f64().unwrap() });
    }
    let coincident = (z - w).norm() <= T::lit(1e-12) * (T::one() + z.norm());
    let lhs_holo = if coincident { dgz.ln() } else { ((gz - gw) / (z - w)).ln() };
    // ½∂²log τ/∂t₀² = log r.
    let rhs_holo = re(-map.r().ln()) + ksum_c(h_terms);
    let x = gz * gw.conj();
    let lhs_mixed = (x / (x - T::one())).ln();
    let rhs_mixed = ksum_c(m_terms);
    Ok(IntegratedReport {
        lhs_holo,
        rhs_holo,
        residual_holo: (lhs_holo - rhs_holo).norm(),
        lhs_mixed,
        rhs_mixed,
        residual_mixed: (lhs_mixed - rhs_mixed).norm(),
    })
}
