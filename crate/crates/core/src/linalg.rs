//! Small dense linear algebra for the g ≤ 4 theta work and the Newton solves.

use std::ops::{Add, Div, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::{Real, C};

/// Field element usable in the dense routines: real scalars and complex numbers.
pub trait Entry<T: Real>:
    Copy
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn modulus(self) -> T;
}

impl<T: Real> Entry<T> for T {
    fn modulus(self) -> T {
        self.abs()
    }
}

impl<T: Real> Entry<T> for Complex<T> {
    fn modulus(self) -> T {
        self.norm()
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Copy + Zero> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        Self::from_fn(n, m, |i, j| rows[i][j])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map<R: Copy + Zero>(&self, f: impl Fn(S) -> R) -> Mat<R> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl<S: Copy + Zero + One> Mat<S> {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Copy + Zero + Add<Output = S> + Mul<Output = S>> Mat<S> {
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(S::zero(), |acc, k| acc + self[(i, k)] * other[(k, j)])
        })
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| (0..self.cols).fold(S::zero(), |acc, k| acc + self[(i, k)] * v[k])).collect()
    }
}

/// LU factorisation with partial pivoting.
pub struct Lu<S> {
    lu: Mat<S>,
    perm: Vec<usize>,
    sign: bool,
}

impl<S> Lu<S> {
    pub fn new<T: Real>(a: &Mat<S>) -> Option<Self>
    where
        S: Entry<T>,
    {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = false;
        let scale = a.data.iter().fold(T::zero(), |m, x| m.max(x.modulus()));
        let tiny = scale * T::epsilon() * T::lit(1e-3);
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| lu[(i, k)].modulus().partial_cmp(&lu[(j, k)].modulus()).unwrap()).unwrap();
            if !(lu[(p, k)].modulus() > tiny) {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                sign = !sign;
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - f * v;
                }
            }
        }
        Some(Self { lu, perm, sign })
    }

    pub fn solve<T: Real>(&self, b: &[S]) -> Vec<S>
    where
        S: Entry<T>,
    {
        let n = self.lu.rows;
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] = x[i] - self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] = x[i] - self.lu[(i, j)] * x[j];
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub fn det<T: Real>(&self) -> S
    where
        S: Entry<T>,
    {
        let d = (0..self.lu.rows).fold(S::one(), |acc, i| acc * self.lu[(i, i)]);
        if self.sign {
            -d
        } else {
            d
        }
    }

    pub fn inverse<T: Real>(&self) -> Mat<S>
    where
        S: Entry<T>,
    {
        let n = self.lu.rows;
        let mut inv = Mat::zeros(n, n);
        for j in 0..n {
            let mut e = vec![S::zero(); n];
            e[j] = S::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

pub fn solve<T: Real, S: Entry<T>>(a: &Mat<S>, b: &[S]) -> Option<Vec<S>> {
    Lu::new(a).map(|lu| lu.solve(b))
}

pub fn inverse<T: Real, S: Entry<T>>(a: &Mat<S>) -> Option<Mat<S>> {
    Lu::new(a).map(|lu| lu.inverse())
}

pub fn det<T: Real, S: Entry<T>>(a: &Mat<S>) -> S {
    Lu::new(a).map_or(S::zero(), |lu| lu.det())
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Real>(a: &Mat<T>) -> Option<Mat<T>> {
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues<T: Real>(a: &Mat<T>) -> Vec<T> {
    let n = a.rows;
    let mut m = a.clone();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        let diag: T = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum();
        if off <= T::epsilon() * T::epsilon() * (diag + off) || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = cs * mkp - sn * mkq;
                    m[(k, q)] = sn * mkp + cs * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = cs * mpk - sn * mqk;
                    m[(q, k)] = sn * mpk + cs * mqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Eigenvalues of a Hermitian matrix via its real 2n×2n embedding (each appears twice; deduplicated).
pub fn hermitian_eigenvalues<T: Real>(a: &Mat<C<T>>) -> Vec<T> {
    let n = a.rows;
    let emb = Mat::from_fn(2 * n, 2 * n, |i, j| {
        let z = a[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let ev = sym_eigenvalues(&emb);
    ev.into_iter().step_by(2).collect()
}

pub fn max_abs_diff<T: Real, S: Entry<T>>(a: &Mat<S>, b: &Mat<S>) -> T {
    a.data.iter().zip(&b.data).fold(T::zero(), |m, (&x, &y)| m.max((x - y).modulus()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_and_inverts() {
        let a: Mat<f64> = Mat::from_rows(&[vec![4.0, 1.0, 2.0], vec![1.0, 3.0, 0.5], vec![2.0, 0.5, 5.0]]);
        let x = solve(&a, &[1.0, 2.0, 3.0]).unwrap();
        let back = a.matvec(&x);
        for (u, v) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((u - v).abs() < 1e-14);
        }
        let inv = inverse(&a).unwrap();
        assert!(max_abs_diff(&a.matmul(&inv), &Mat::identity(3)) < 1e-14);
        let d: f64 = det(&a);
        assert!((d - (4.0 * (15.0 - 0.25) - (5.0 - 1.0) + 2.0 * (0.5 - 6.0))).abs() < 1e-12);
    }

    #[test]
    fn singular_is_rejected() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(Lu::<f64>::new(&a).is_none());
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = Mat::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]);
        let l = cholesky(&a).unwrap();
        assert!(max_abs_diff(&l.matmul(&l.transpose()), &a) < 1e-15);
        assert!(cholesky(&Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]])).is_none());
    }

    #[test]
    fn jacobi_matches_two_by_two() {
        let a: Mat<f64> = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let ev: Vec<f64> = sym_eigenvalues(&a);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_embedding() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let a = Mat::from_rows(&[
            vec![Complex::new(2.0, 0.0), Complex::new(0.0, 1.0)],
            vec![Complex::new(0.0, -1.0), Complex::new(2.0, 0.0)],
        ]);
        let ev: Vec<f64> = hermitian_eigenvalues(&a);
        assert_eq!(ev.len(), 2);
        assert!((ev[0] - 1.0).abs() < 1e-13 && (ev[1] - 3.0).abs() < 1e-13);
    }
}
