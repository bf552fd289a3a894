use num_traits::Zero;

use crate::scalar::{Real, C};

/// Finite Laurent polynomial Σ_{k=lo}^{lo+len-1} a_k w^k.
#[derive(Clone, Debug, PartialEq)]
pub struct Laurent<T> {
    pub lo: i64,
    pub coeffs: Vec<C<T>>,
}

impl<T: Real> Laurent<T> {
    pub fn one() -> Self {
        Self { lo: 0, coeffs: vec![C::new(T::one(), T::zero())] }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn coeff(&self, k: i64) -> C<T> {
        let idx = k - self.lo;
        if idx < 0 || idx >= self.coeffs.len() as i64 {
            C::<T>::zero()
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![C::<T>::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Self { lo: self.lo + other.lo, coeffs: out }
    }

    pub fn pow(&self, n: usize) -> Self {
        (0..n).fold(Self::one(), |acc, _| acc.mul(self))
    }

    pub fn eval(&self, w: C<T>) -> C<T> {
        let mut acc = C::<T>::zero();
        for &a in self.coeffs.iter().rev() {
            acc = acc * w + a;
        }
        acc * w.powi(self.lo as i32)
    }
}
