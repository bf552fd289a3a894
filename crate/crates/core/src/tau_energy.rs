//! log τ of a contour as a regularised logarithmic energy, the potential Φ and the one-point current.

use rayon::prelude::*;
use serde::Serialize;

use crate::contour_geometry::{
    area, check_univalent, point_location, sample, ExteriorMap, Location, SampledContour, UnivalenceCriterion,
    GUARD_SAMPLES,
};
use crate::error::{Error, Result};
use crate::moments::{log_moment, require_origin_inside};
use crate::quadrature::{log_chord_table, log_sin_weights};
use crate::scalar::{c, ksum, ksum_c, KahanSum, KahanSumC, Real, C};

/// ∬_{[0,1]²×[0,1]²} log|x − y|, the self-energy of a unit square.
pub const SQUARE_SELF_ENERGY: f64 = std::f64::consts::LN_2 / 3.0 + std::f64::consts::FRAC_PI_3 - 25.0 / 12.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TauMethod {
    BoundaryReduced,
    GridOracle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauReport<T> {
    pub log_tau: T,
    pub method: TauMethod,
    /// ∬_Ω∬_Ω log|z − w| d²z d²w.
    pub energy_e: T,
    /// ∫_Ω log|z| d²z.
    pub log_term_l: T,
    pub area: T,
    pub samples: Option<usize>,
    pub grid_n: Option<usize>,
}

impl<T: Real> TauReport<T> {
    fn assemble(method: TauMethod, energy_e: T, log_term_l: T, area: T) -> Self {
        let log_tau = -(energy_e - T::lit(2.0) * area * log_term_l) / (T::PI() * T::PI());
        Self { log_tau, method, energy_e, log_term_l, area, samples: None, grid_n: None }
    }
}

fn guard<T: Real>(map: &ExteriorMap<T>) -> Result<()> {
    match check_univalent(map, GUARD_SAMPLES).failure {
        None => Ok(()),
        Some((UnivalenceCriterion::WindingAboutOrigin, _)) => Err(Error::OriginOutside),
        Some((crit, detail)) => Err(Error::UnivalenceFailure(format!("{crit:?}: {detail}"))),
    }
}

/// Order of the two loops in the full double sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopOrder {
    RowsFirst,
    ColumnsFirst,
}

struct EnergyKernel<T> {
    chord: Vec<T>,
    weights: Vec<T>,
    h: T,
}

impl<T: Real> EnergyKernel<T> {
    fn new(m: usize) -> Self {
        Self { chord: log_chord_table(m), weights: log_sin_weights(m), h: T::TAU() / T::from_usize_lossy(m) }
    }

    /// Contribution of the ordered pair (j, k), j ≠ k.
    #[inline]
    fn pair(&self, contour: &SampledContour<T>, j: usize, k: usize) -> C<T> {
        let m = contour.len();
        let (z, dz) = (contour.z(), contour.dz());
        let diff = z[k] - z[j];
        let d = (k + m - j) % m;
        let f = diff.conj() * diff.conj() * dz[j] * dz[k];
        let smooth = diff.norm_sqr().ln() - self.chord[d] - T::lit(1.5);
        f * (smooth * self.h + self.weights[d])
    }
}

/// E = (1/16)∮∮ (w̄ − z̄)²(log|w − z|² − 3/2) dz dw.
///
/// The log singularity on the diagonal is split off and integrated with product weights,
/// which keeps the rule spectrally accurate.
pub fn energy_boundary<T: Real>(contour: &SampledContour<T>) -> T {
    let m = contour.len();
    let kernel = EnergyKernel::new(m);
    let rows: Vec<C<T>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut acc = KahanSumC::new();
            for k in j + 1..m {
                acc.add(kernel.pair(contour, j, k));
            }
            acc.value()
        })
        .collect();
    let total = ksum_c(rows);
    (total * (T::lit(2.0) * kernel.h) / T::lit(16.0)).re
}

/// The same double sum over all ordered pairs in a chosen loop order.
pub fn energy_boundary_ordered<T: Real>(contour: &SampledContour<T>, order: LoopOrder) -> T {
    let m = contour.len();
    let kernel = EnergyKernel::new(m);
    let mut acc = KahanSumC::new();
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            let (j, k) = match order {
                LoopOrder::RowsFirst => (a, b),
                LoopOrder::ColumnsFirst => (b, a),
            };
            acc.add(kernel.pair(contour, j, k));
        }
    }
    (acc.value() * kernel.h / T::lit(16.0)).re
}

/// log τ = −(E − 2A·L)/π² from boundary integrals on M samples.
pub fn log_tau_boundary<T: Real>(map: &ExteriorMap<T>, m: usize) -> Result<TauReport<T>> {
    guard(map)?;
    let contour = sample(map, m)?;
    require_origin_inside(&contour)?;
    let mut report =
        TauReport::assemble(TauMethod::BoundaryReduced, energy_boundary(&contour), log_moment(&contour), area(map)?);
    report.samples = Some(m);
    Ok(report)
}

/// Interior cells of a square grid as row runs: (row, first column, last column).
struct GridCells<T> {
    h: T,
    origin: C<T>,
    runs: Vec<(usize, usize, usize)>,
}

fn classify_cells<T: Real>(contour: &SampledContour<T>, n: usize) -> GridCells<T> {
    let z = contour.z();
    let (mut x0, mut x1, mut y0, mut y1) = (T::infinity(), -T::infinity(), T::infinity(), -T::infinity());
    for p in z {
        x0 = x0.min(p.re);
        x1 = x1.max(p.re);
        y0 = y0.min(p.im);
        y1 = y1.max(p.im);
    }
    let side = (x1 - x0).max(y1 - y0) * (T::one() + T::lit(1e-9));
    let h = side / T::from_usize_lossy(n);
    let origin = c((x0 + x1 - side) * T::lit(0.5), (y0 + y1 - side) * T::lit(0.5));
    let mut runs = Vec::new();
    for row in 0..n {
        let y = origin.im + h * (T::from_usize_lossy(row) + T::lit(0.5));
        // Crossings of the horizontal line through the cell centres; inside by even-odd parity.
        let mut xs: Vec<T> = Vec::new();
        for k in 0..z.len() {
            let (a, b) = (z[k], z[(k + 1) % z.len()]);
            if (a.im <= y) != (b.im <= y) {
                let t = (y - a.im) / (b.im - a.im);
                xs.push(a.re + (b.re - a.re) * t);
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in xs.chunks(2) {
            if pair.len() < 2 {
                continue;
            }
            let first = ((pair[0] - origin.re) / h - T::lit(0.5)).ceil().max(T::zero());
            let last = ((pair[1] - origin.re) / h - T::lit(0.5)).floor().min(T::from_usize_lossy(n - 1));
            if last >= first {
                runs.push((row, first.to_usize().unwrap(), last.to_usize().unwrap()));
            }
        }
    }
    GridCells { h, origin, runs }
}

/// Midpoint-rule oracle for log τ on a grid_n × grid_n box of square cells.
///
/// Pairs of distinct cells use log of the centre distance; each cell's self-pair uses the exact
/// square self-energy. Row runs and prefix sums make the double sum O(grid_n³).
pub fn log_tau_grid<T: Real>(map: &ExteriorMap<T>, grid_n: usize) -> Result<TauReport<T>> {
    guard(map)?;
    if grid_n < 4 {
        return Err(Error::InvalidInput(format!("grid_n must be at least 4, got {grid_n}")));
    }
    let contour = sample(map, 4096)?;
    require_origin_inside(&contour)?;
    let cells = classify_cells(&contour, grid_n);
    let h = cells.h;
    let n = grid_n;
    let kappa = T::lit(SQUARE_SELF_ENERGY);
    // prefix[dy][j + n] = Σ_{d=-n}^{j} f_dy(|d|), with f_dy(d) = log(h·√(d² + dy²)).
    let prefix: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|dy| {
            let mut acc = KahanSum::new();
            let mut out = Vec::with_capacity(2 * n + 1);
            for j in -(n as i64)..=(n as i64) {
                let d = j.unsigned_abs() as usize;
                let f = if d == 0 && dy == 0 {
                    h.ln() + kappa
                } else {
                    let r2 = T::from_usize_lossy(d * d + dy * dy);
                    h.ln() + T::lit(0.5) * r2.ln()
                };
                acc.add(f);
                out.push(acc.value());
            }
            out
        })
        .collect();
    let cum = |dy: usize, j: i64| -> T {
        if j < -(n as i64) {
            T::zero()
        } else {
            prefix[dy][(j + n as i64) as usize]
        }
    };
    let runs = &cells.runs;
    let rows: Vec<T> = runs
        .par_iter()
        .map(|&(r1, a1, b1)| {
            let mut acc = KahanSum::new();
            for &(r2, a2, b2) in runs {
                let dy = r1.abs_diff(r2);
                for x1 in a1..=b1 {
                    let hi = b2 as i64 - x1 as i64;
                    let lo = a2 as i64 - x1 as i64 - 1;
                    acc.add(cum(dy, hi) - cum(dy, lo));
                }
            }
            acc.value()
        })
        .collect();
    let h2 = h * h;
    let energy_e = ksum(rows) * h2 * h2;
    let count: usize = runs.iter().map(|&(_, a, b)| b - a + 1).sum();
    let mut l = KahanSum::new();
    for &(row, a, b) in runs {
        for col in a..=b {
            let centre =
                cells.origin + c(T::from_usize_lossy(col) + T::lit(0.5), T::from_usize_lossy(row) + T::lit(0.5)) * h;
            l.add(cell_log_average(centre, h));
        }
    }
    let mut report =
        TauReport::assemble(TauMethod::GridOracle, energy_e, l.value() * h2, T::from_usize_lossy(count) * h2);
    report.grid_n = Some(grid_n);
    Ok(report)
}

/// Mean of log|z| over a cell; refined near the origin where the midpoint value is poor.
fn cell_log_average<T: Real>(centre: C<T>, h: T) -> T {
    if centre.norm() > T::lit(2.0) * h {
        return centre.norm().ln();
    }
    let sub = 16;
    let hs = h / T::from_usize_lossy(sub);
    let start = centre - c(h, h) * T::lit(0.5);
    let mut acc = KahanSum::new();
    for i in 0..sub {
        for j in 0..sub {
            let p = start + c(T::from_usize_lossy(i) + T::lit(0.5), T::from_usize_lossy(j) + T::lit(0.5)) * hs;
            acc.add(p.norm().ln());
        }
    }
    acc.value() / T::from_usize_lossy(sub * sub)
}

fn exterior_contour<T: Real>(map: &ExteriorMap<T>, z: C<T>, m: usize) -> Result<SampledContour<T>> {
    let contour = sample(map, m)?;
    match point_location(&contour, z) {
        Location::Exterior => Ok(contour),
        Location::NearBoundary => Err(Error::NearBoundary),
        Location::Interior => Err(Error::InteriorPoint),
    }
}

/// Φ(z) = (2A/π)log|z| − (2/π)∫_Ω log|z − w| d²w for exterior z.
pub fn potential_phi<T: Real>(map: &ExteriorMap<T>, z: C<T>, m: usize) -> Result<T> {
    let contour = exterior_contour(map, z, m)?;
    let mut acc = KahanSum::new();
    for (&w, &dw) in contour.z().iter().zip(contour.dz()) {
        let d = w - z;
        acc.add((d.conj() * dw).im * (d.norm_sqr().ln() - T::one()));
    }
    let inner = acc.value() * contour.step() / T::lit(4.0);
    let two_over_pi = T::lit(2.0) / T::PI();
    Ok(two_over_pi * (area(map)? * z.norm().ln() - inner))
}

/// ∂Φ/∂z = A/(πz) − (i/2π)∮ (w̄ − z̄)/(w − z) dw, the z-derivative of the boundary reduction.
pub fn current_1pt<T: Real>(map: &ExteriorMap<T>, z: C<T>, m: usize) -> Result<C<T>> {
    let contour = exterior_contour(map, z, m)?;
    let integral =
        ksum_c(contour.z().iter().zip(contour.dz()).map(|(&w, &dw)| (w - z).conj() / (w - z) * dw)) * contour.step();
    Ok(c(area(map)? / T::PI(), T::zero()) / z - integral * c(T::zero(), T::one() / T::TAU()))
}

/// ∂Φ/∂z through S₋(z) + t₀/z.
pub fn current_1pt_cauchy<T: Real>(map: &ExteriorMap<T>, z: C<T>, m: usize) -> Result<C<T>> {
    let contour = exterior_contour(map, z, m)?;
    let s_minus = contour.contour_integral(|w| w.conj() / (w - z));
    Ok(s_minus + c(area(map)? / T::PI(), T::zero()) / z)
}
