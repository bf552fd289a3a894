//! Periodic quadrature helpers.

use num_traits::Zero;

use crate::scalar::{c, cis, Real, C};

/// Cosine table cos(2πk/M), k = 0..M.
fn cos_table<T: Real>(m: usize) -> Vec<T> {
    (0..m).map(|k| (T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(m)).cos()).collect()
}

/// Weights R_d with ∫₀^{2π} log(4 sin²((σ − τ)/2)) f(τ) dτ ≈ Σ_j R_{(i−j) mod M} f(τ_j).
///
/// Product-integration rule for the periodic log singularity; exact on trigonometric
/// polynomials of degree below M/2.
pub fn log_sin_weights<T: Real>(m: usize) -> Vec<T> {
    assert!(m >= 2 && m.is_multiple_of(2), "log weights need an even sample count");
    let n = m / 2;
    let table = cos_table::<T>(m);
    let nf = T::from_usize_lossy(n);
    (0..m)
        .map(|d| {
            let mut s = T::zero();
            for j in 1..n {
                s = s + table[(j * d) % m] / T::from_usize_lossy(j);
            }
            -T::TAU() / nf * s - T::PI() / (nf * nf) * table[(n * d) % m]
        })
        .collect()
}

/// log(4 sin²(πd/M)) for d = 1..M−1 (index 0 unused).
pub fn log_chord_table<T: Real>(m: usize) -> Vec<T> {
    (0..m)
        .map(|d| {
            if d == 0 {
                T::zero()
            } else {
                let s = (T::PI() * T::from_usize_lossy(d) / T::from_usize_lossy(m)).sin();
                (T::lit(4.0) * s * s).ln()
            }
        })
        .collect()
}

/// Derivative of a periodic sample sequence by its discrete Fourier series (Nyquist mode dropped).
pub fn spectral_derivative<T: Real>(z: &[C<T>]) -> Vec<C<T>> {
    let m = z.len();
    let mf = T::from_usize_lossy(m);
    let h = T::TAU() / mf;
    let half = (m / 2) as i64;
    let modes: Vec<(i64, C<T>)> = (-half + 1..half)
        .map(|k| {
            let kf = T::from_i64(k).unwrap();
            let ck = z
                .iter()
                .enumerate()
                .fold(C::<T>::zero(), |acc, (j, &zj)| acc + zj * cis(-kf * h * T::from_usize_lossy(j)))
                / mf;
            (k, ck)
        })
        .collect();
    (0..m)
        .map(|j| {
            let s = h * T::from_usize_lossy(j);
            modes.iter().fold(C::<T>::zero(), |acc, &(k, ck)| {
                let kf = T::from_i64(k).unwrap();
                acc + ck * c(T::zero(), kf) * cis(kf * s)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_weights_integrate_known_cases() {
        let m = 64;
        let w = log_sin_weights::<f64>(m);
        // ∫ log(4 sin²(τ/2)) dτ = 0 and ∫ log(4 sin²(τ/2)) cos(kτ) dτ = −2π/k.
        let total: f64 = w.iter().sum();
        assert!(total.abs() < 1e-13);
        for k in 1..10 {
            let s: f64 =
                (0..m).map(|j| w[(m - j) % m] * (k as f64 * std::f64::consts::TAU * j as f64 / m as f64).cos()).sum();
            assert!((s + std::f64::consts::TAU / k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_derivative_of_mode() {
        let m = 32;
        let z: Vec<C<f64>> = (0..m).map(|j| cis(3.0 * std::f64::consts::TAU * j as f64 / m as f64)).collect();
        let d = spectral_derivative(&z);
        for (j, v) in d.iter().enumerate() {
            assert!((v - C::new(0.0, 3.0) * z[j]).norm() < 1e-12);
        }
    }
}
