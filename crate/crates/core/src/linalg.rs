//! Dense LU with partial pivoting for the small complex systems of the
//! Laplace-domain channel.

use num_complex::Complex;

use crate::scalar::Real;

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex::new(T::zero(), T::zero()); n * n];
        for i in 0..n {
            data[i * n + i] = Complex::new(T::one(), T::zero());
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex<T>) {
        self.data[row * self.n + col] = value;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex<T>]> {
        self.data.chunks(self.n)
    }

    /// Solves `A x = b`. Returns `None` when a pivot vanishes (exactly
    /// singular, or below `n·ε·max|A|` in magnitude).
    pub fn solve(&self, rhs: &[Complex<T>]) -> Option<Vec<Complex<T>>> {
        let n = self.n;
        assert_eq!(rhs.len(), n, "right-hand side length mismatch");
        let mut a = self.data.clone();
        let mut x = rhs.to_vec();
        let scale = a.iter().map(|z| z.norm()).fold(T::zero(), T::max);
        let tiny = scale * T::epsilon() * T::from_usize_lossy(n.max(1));

        for k in 0..n {
            let (pivot_row, pivot_mag) = (k..n)
                .map(|r| (r, a[r * n + k].norm()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot_mag > tiny) {
                return None;
            }
            if pivot_row != k {
                for c in 0..n {
                    a.swap(k * n + c, pivot_row * n + c);
                }
                x.swap(k, pivot_row);
            }
            let pivot = a[k * n + k];
            for r in k + 1..n {
                let factor = a[r * n + k] / pivot;
                if factor.re == T::zero() && factor.im == T::zero() {
                    continue;
                }
                for c in k + 1..n {
                    let upper = a[k * n + c];
                    a[r * n + c] -= factor * upper;
                }
                a[r * n + k] = Complex::new(T::zero(), T::zero());
                let xk = x[k];
                x[r] -= factor * xk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for c in k + 1..n {
                acc -= a[k * n + c] * x[c];
            }
            x[k] = acc / a[k * n + k];
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn solves_with_pivoting() {
        // zero leading entry forces a row swap
        let mut m = ComplexMatrix::identity(3);
        m.set(0, 0, c(0.0, 0.0));
        m.set(0, 1, c(2.0, 1.0));
        m.set(1, 0, c(1.0, -1.0));
        m.set(1, 2, c(0.5, 0.0));
        m.set(2, 1, c(0.0, 3.0));
        let x_true = vec![c(1.0, 2.0), c(-0.5, 0.25), c(3.0, -1.0)];
        let b: Vec<_> = m
            .rows()
            .map(|row| row.iter().zip(&x_true).map(|(a, x)| a * x).sum())
            .collect();
        let x = m.solve(&b).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert!((got - want).norm() < 1e-14);
        }
    }

    #[test]
    fn detects_singular() {
        let mut m = ComplexMatrix::<f64>::identity(2);
        m.set(0, 1, c(1.0, 0.0));
        m.set(1, 0, c(1.0, 0.0));
        assert!(m.solve(&[c(1.0, 0.0), c(1.0, 0.0)]).is_none());
    }

    #[test]
    fn identity_is_trivial() {
        let m = ComplexMatrix::<f32>::identity(1);
        let x = m.solve(&[Complex::new(2.5f32, -1.0)]).unwrap();
        assert_eq!(x[0], Complex::new(2.5, -1.0));
    }
}
