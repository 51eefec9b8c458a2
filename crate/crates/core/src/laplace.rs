//! Laplace-domain hitting probabilities.
//!
//! Three routes to the same transform are provided: the explicit rational
//! form for three receivers, the `N×N` linear system, and the recursion over
//! `(N-1)`-receiver subsystems. For uniform circular arrays the symmetric
//! closed forms collapse the system to a single rational expression.

use std::collections::HashMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geometry::{FarSystem, UcaGeometry};
use crate::linalg::ComplexMatrix;
use crate::scalar::Real;

/// Largest system accepted by [`laplace_hit_recursive`].
pub const MAX_RECURSIVE_RECEIVERS: usize = 12;

/// Laplace-domain hitting probabilities of every receiver at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceSample<T> {
    pub s: Complex<T>,
    pub values: Vec<Complex<T>>,
}

fn singular<T: Real>(s: Complex<T>) -> Error {
    Error::SingularMatrix {
        re: s.re.to_f64_lossy(),
        im: s.im.to_f64_lossy(),
    }
}

/// `s·P̄(s, x) = (a/x) exp(-(x - a) sqrt(s/D))`; the bounded kernel that
/// fills the off-diagonal of the channel matrix.
pub(crate) fn scaled_single<T: Real>(s: Complex<T>, x: T, a: T, d: T) -> Complex<T> {
    let root = (s / d).sqrt();
    (-(root * (x - a))).exp() * (a / x)
}

#[inline]
pub(crate) fn single<T: Real>(s: Complex<T>, x: T, a: T, d: T) -> Complex<T> {
    scaled_single(s, x, a, d) / s
}

/// Transform of the isolated-receiver hitting probability,
/// `P̄(s, x) = a/(s x) · exp(-(x - a) sqrt(s/D))`, on the principal branch.
pub fn pbar_laplace<T: Real>(s: Complex<T>, x: T, a: T, diffusion: T) -> Result<Complex<T>> {
    if !(x >= a) {
        return Err(Error::Domain(format!("distance {x} is inside the receiver radius {a}")));
    }
    if s.re == T::zero() && s.im == T::zero() {
        return Err(Error::Domain("transform is singular at s = 0".into()));
    }
    if !(a > T::zero() && diffusion > T::zero()) {
        return Err(Error::Domain("radius and diffusion must be positive".into()));
    }
    Ok(single(s, x, a, diffusion))
}

/// Channel matrix: unit diagonal, entry `(k, j)` equal to `s·P̄(s, R_jk)`.
pub fn assemble_a<T: Real>(s: Complex<T>, sys: &FarSystem<T>) -> ComplexMatrix<T> {
    let n = sys.len();
    let (a, d) = (sys.radius(), sys.diffusion());
    let mut m = ComplexMatrix::identity(n);
    for k in 0..n {
        for j in 0..n {
            if j != k {
                m.set(k, j, scaled_single(s, sys.pairwise_r_unchecked(j, k), a, d));
            }
        }
    }
    m
}

fn isolated_vector<T: Real>(s: Complex<T>, sys: &FarSystem<T>) -> Vec<Complex<T>> {
    let (a, d) = (sys.radius(), sys.diffusion());
    sys.distances().iter().map(|&r| single(s, r, a, d)).collect()
}

/// Solves the channel system for all receivers at once.
pub fn laplace_hit_vector<T: Real>(s: Complex<T>, sys: &FarSystem<T>) -> Result<LaplaceSample<T>> {
    if s.re == T::zero() && s.im == T::zero() {
        return Err(singular(s));
    }
    let rhs = isolated_vector(s, sys);
    let values = assemble_a(s, sys).solve(&rhs).ok_or_else(|| singular(s))?;
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(singular(s));
    }
    Ok(LaplaceSample { s, values })
}

/// Explicit three-receiver transform for receiver 0.
pub fn laplace_hit_3far<T: Real>(s: Complex<T>, sys: &FarSystem<T>) -> Result<Complex<T>> {
    laplace_hit_3far_for(s, sys, 0)
}

/// Explicit three-receiver transform for any target, by relabelling the
/// target as the first receiver.
pub fn laplace_hit_3far_for<T: Real>(s: Complex<T>, sys: &FarSystem<T>, target: usize) -> Result<Complex<T>> {
    if sys.len() != 3 {
        return Err(Error::WrongCount {
            expected: 3,
            actual: sys.len(),
        });
    }
    if target >= 3 {
        return Err(Error::IndexOutOfRange { index: target, len: 3 });
    }
    let (a, d) = (sys.radius(), sys.diffusion());
    let idx = [target, (target + 1) % 3, (target + 2) % 3];
    let p = |x: T| single(s, x, a, d);
    let r = |i: usize| sys.distances()[idx[i - 1]];
    let big_r = |i: usize, j: usize| sys.pairwise_r_unchecked(idx[i - 1], idx[j - 1]);

    let alpha = p(r(2)) * p(big_r(2, 1)) + p(r(3)) * p(big_r(3, 1));
    let beta = -p(r(1)) * p(big_r(2, 3)) * p(big_r(3, 2))
        + p(r(2)) * p(big_r(2, 3)) * p(big_r(3, 1))
        + p(r(3)) * p(big_r(3, 2)) * p(big_r(2, 1));
    let gamma = p(big_r(1, 2)) * p(big_r(2, 1)) + p(big_r(3, 2)) * p(big_r(2, 3)) + p(big_r(1, 3)) * p(big_r(3, 1));
    let delta = p(big_r(1, 2)) * p(big_r(2, 3)) * p(big_r(3, 1)) + p(big_r(1, 3)) * p(big_r(3, 2)) * p(big_r(2, 1));

    let s2 = s * s;
    let num = p(r(1)) - s * alpha + s2 * beta;
    let den = Complex::new(T::one(), T::zero()) - s2 * gamma + s2 * s * delta;
    if den.norm() == T::zero() {
        return Err(singular(s));
    }
    Ok(num / den)
}

/// Where a molecule starts: the transmitter, or the closest point of a
/// receiver (a molecule that would have been absorbed there).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Source {
    Origin,
    Near(u8),
}

struct Recursion<'a, T> {
    sys: &'a FarSystem<T>,
    s: Complex<T>,
    pairwise: Vec<Vec<T>>,
    memo: HashMap<(u16, u8, Source), Complex<T>>,
}

impl<T: Real> Recursion<'_, T> {
    fn isolated(&self, src: Source, target: usize) -> Complex<T> {
        let x = match src {
            Source::Origin => self.sys.distances()[target],
            Source::Near(k) => self.pairwise[k as usize][target],
        };
        single(self.s, x, self.sys.radius(), self.sys.diffusion())
    }

    fn between(&self, from: usize, to: usize) -> Complex<T> {
        single(self.s, self.pairwise[from][to], self.sys.radius(), self.sys.diffusion())
    }

    fn eval(&mut self, mask: u16, target: usize, src: Source) -> Result<Complex<T>> {
        let key = (mask, target as u8, src);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let one = Complex::new(T::one(), T::zero());
        let s = self.s;
        let value = match mask.count_ones() {
            1 => self.isolated(src, target),
            2 => {
                let other = (mask & !(1 << target)).trailing_zeros() as usize;
                let num = self.isolated(src, target) - s * self.isolated(src, other) * self.between(other, target);
                let den = one - s * s * self.between(target, other) * self.between(other, target);
                if den.norm() == T::zero() {
                    return Err(singular(s));
                }
                num / den
            }
            _ => {
                let removed = 15 - (mask & !(1 << target)).leading_zeros() as usize;
                let without_removed = mask & !(1 << removed);
                let without_target = mask & !(1 << target);
                let direct = self.eval(without_removed, target, src)?;
                let via_removed = self.eval(without_removed, target, Source::Near(removed as u8))?;
                let removed_direct = self.eval(without_target, removed, src)?;
                let removed_via_target = self.eval(without_target, removed, Source::Near(target as u8))?;
                let den = one - s * s * removed_via_target * via_removed;
                if den.norm() == T::zero() {
                    return Err(singular(s));
                }
                (direct - s * removed_direct * via_removed) / den
            }
        };
        self.memo.insert(key, value);
        Ok(value)
    }
}

/// Transform for `target` assembled recursively from two `(N-1)`-receiver
/// subsystems, the second with the source moved to a receiver's closest
/// point. Subsystem transforms are memoised per call.
pub fn laplace_hit_recursive<T: Real>(s: Complex<T>, target: usize, sys: &FarSystem<T>) -> Result<Complex<T>> {
    let n = sys.len();
    if n > MAX_RECURSIVE_RECEIVERS {
        return Err(Error::RecursionDepth {
            n,
            limit: MAX_RECURSIVE_RECEIVERS,
        });
    }
    if target >= n {
        return Err(Error::IndexOutOfRange { index: target, len: n });
    }
    if s.re == T::zero() && s.im == T::zero() {
        return Err(singular(s));
    }
    let mut rec = Recursion {
        sys,
        s,
        pairwise: sys.pairwise_table(),
        memo: HashMap::new(),
    };
    let full = ((1u32 << n) - 1) as u16;
    rec.eval(full, target, Source::Origin)
}

/// Rational closed form for a uniform circular array: the isolated transform
/// divided by `1 + Σ_m c_m s·P̄(s, R_m)`, where `c_m` counts the receivers in
/// neighbour class `m`.
pub fn laplace_hit_uca<T: Real>(s: Complex<T>, uca: &UcaGeometry<T>) -> Complex<T> {
    let (a, d) = (uca.radius, uca.diffusion);
    let mut den = Complex::new(T::one(), T::zero());
    for (m, &rm) in uca.neighbor_distances.iter().enumerate() {
        den += scaled_single(s, rm, a, d) * T::from_usize_lossy(uca.class_multiplicity(m + 1));
    }
    single(s, uca.distance, a, d) / den
}
