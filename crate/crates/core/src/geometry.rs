//! Receiver configurations: a point transmitter at the origin and `N`
//! fully-absorbing spheres of common radius.
//!
//! Units are fixed throughout the crate: lengths in µm, time in s and the
//! diffusion coefficient in µm²/s.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Point3<T> = [T; 3];

pub(crate) fn norm<T: Real>(p: &Point3<T>) -> T {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

pub(crate) fn distance<T: Real>(p: &Point3<T>, q: &Point3<T>) -> T {
    norm(&[p[0] - q[0], p[1] - q[1], p[2] - q[2]])
}

/// Validated system of absorbing receivers around a transmitter at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct FarSystem<T> {
    positions: Vec<Point3<T>>,
    radius: T,
    diffusion: T,
    distances: Vec<T>,
}

impl<T: Real> FarSystem<T> {
    /// Builds a system, rejecting overlapping spheres and a transmitter that
    /// sits on or inside a receiver.
    pub fn new(positions: Vec<Point3<T>>, radius: T, diffusion: T) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Parameter("at least one receiver is required".into()));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::Parameter(format!("radius must be positive, got {radius}")));
        }
        if !(diffusion > T::zero()) || !diffusion.is_finite() {
            return Err(Error::Parameter(format!(
                "diffusion coefficient must be positive, got {diffusion}"
            )));
        }
        if positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("receiver coordinates must be finite".into()));
        }
        let distances: Vec<T> = positions.iter().map(norm).collect();
        for (index, &r) in distances.iter().enumerate() {
            if r <= radius {
                return Err(Error::TransmitterInside {
                    index,
                    distance: r.to_f64_lossy(),
                    radius: radius.to_f64_lossy(),
                });
            }
        }
        let limit = radius + radius;
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                let separation = distance(&positions[i], &positions[j]);
                if separation <= limit {
                    return Err(Error::Overlap {
                        i,
                        j,
                        separation: separation.to_f64_lossy(),
                        limit: limit.to_f64_lossy(),
                    });
                }
            }
        }
        Ok(Self {
            positions,
            radius,
            diffusion,
            distances,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point3<T>] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> Result<&Point3<T>> {
        self.positions.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.len(),
        })
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn diffusion(&self) -> T {
        self.diffusion
    }

    /// Transmitter-to-centre distances `r_i`.
    pub fn distances(&self) -> &[T] {
        &self.distances
    }

    pub fn distance(&self, i: usize) -> Result<T> {
        self.check(i)?;
        Ok(self.distances[i])
    }

    fn check(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            })
        }
    }

    /// Point of receiver `i` closest to the transmitter: `(1 - a/r_i) x_i`.
    pub fn closest_point(&self, i: usize) -> Result<Point3<T>> {
        self.check(i)?;
        Ok(self.closest_point_unchecked(i))
    }

    pub(crate) fn closest_point_unchecked(&self, i: usize) -> Point3<T> {
        let k = T::one() - self.radius / self.distances[i];
        let x = &self.positions[i];
        [k * x[0], k * x[1], k * x[2]]
    }

    /// Distance `R_ij` from the closest point of receiver `i` to the centre
    /// of receiver `j`, from the law of cosines on `r_i - a`, `r_j` and the
    /// angle between the two centres.
    pub fn pairwise_r(&self, i: usize, j: usize) -> Result<T> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Err(Error::SameIndex(i));
        }
        Ok(self.pairwise_r_unchecked(i, j))
    }

    pub(crate) fn pairwise_r_unchecked(&self, i: usize, j: usize) -> T {
        let (xi, xj) = (&self.positions[i], &self.positions[j]);
        let (ri, rj) = (self.distances[i], self.distances[j]);
        let cos_phi = ((xi[0] * xj[0] + xi[1] * xj[1] + xi[2] * xj[2]) / (ri * rj))
            .max(-T::one())
            .min(T::one());
        let near = ri - self.radius;
        (near * near + rj * rj - (near + near) * rj * cos_phi)
            .max(T::zero())
            .sqrt()
    }

    /// Full `N×N` table of `R_ij`; the diagonal holds zeros.
    pub fn pairwise_table(&self) -> Vec<Vec<T>> {
        let n = self.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            T::zero()
                        } else {
                            self.pairwise_r_unchecked(i, j)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Same receivers with a different diffusion coefficient.
    pub fn with_diffusion(&self, diffusion: T) -> Result<Self> {
        Self::new(self.positions.clone(), self.radius, diffusion)
    }

    /// Receivers reordered so that new receiver `k` is old receiver `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::WrongCount {
                expected: self.len(),
                actual: order.len(),
            });
        }
        let positions = order
            .iter()
            .map(|&i| self.position(i).copied())
            .collect::<Result<Vec<_>>>()?;
        Self::new(positions, self.radius, self.diffusion)
    }

    /// True when every receiver is at the same distance from the origin,
    /// to relative tolerance `rel`.
    pub fn is_equidistant(&self, rel: T) -> bool {
        let r0 = self.distances[0];
        self.distances.iter().all(|&r| (r - r0).abs() <= rel * r0)
    }
}

/// Uniform circular array: `N` receivers on a ring of radius `d` in the
/// plane `x = w`, as seen from a transmitter at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct UcaGeometry<T> {
    pub count: usize,
    pub ring_radius: T,
    pub offset: T,
    pub radius: T,
    pub diffusion: T,
    /// Common transmitter distance `sqrt(w² + d²)`.
    pub distance: T,
    /// `R_m` for angular separation `2πm/N`, `m = 1..=δ`.
    pub neighbor_distances: Vec<T>,
}

impl<T: Real> UcaGeometry<T> {
    /// Number of distinct neighbour classes, `ceil((N-1)/2)`.
    pub fn neighbor_classes(&self) -> usize {
        neighbor_classes(self.count)
    }

    /// Multiplicity of each neighbour class: 2, except the diametrically
    /// opposite class of an even ring which has a single member.
    pub fn class_multiplicity(&self, m: usize) -> usize {
        let delta = self.neighbor_classes();
        assert!(m >= 1 && m <= delta, "neighbour class out of range");
        if self.count.is_multiple_of(2) && m == delta {
            1
        } else {
            2
        }
    }
}

pub fn neighbor_classes(n: usize) -> usize {
    n / 2
}

/// Receiver `n` (1-based) at `[w, d cos(2πn/N), d sin(2πn/N)]`.
pub fn uca_positions<T: Real>(count: usize, ring_radius: T, offset: T) -> Vec<Point3<T>> {
    let two_pi = T::PI() + T::PI();
    let n_f = T::from_usize_lossy(count);
    (1..=count)
        .map(|n| {
            let phi = two_pi * T::from_usize_lossy(n) / n_f;
            [offset, ring_radius * phi.cos(), ring_radius * phi.sin()]
        })
        .collect()
}

/// Builds a uniform circular array and its neighbour-distance classes.
pub fn build_uca<T: Real>(
    count: usize,
    ring_radius: T,
    offset: T,
    radius: T,
    diffusion: T,
) -> Result<(FarSystem<T>, UcaGeometry<T>)> {
    if count == 0 {
        return Err(Error::Parameter("a UCA needs at least one receiver".into()));
    }
    if count > 1 && !(ring_radius > T::zero()) {
        return Err(Error::Parameter(format!(
            "ring radius must be positive, got {ring_radius}"
        )));
    }
    let sys = FarSystem::new(uca_positions(count, ring_radius, offset), radius, diffusion)?;
    // receiver index N-1 sits at angle 0; its m-th neighbour is index m-1
    let anchor = count - 1;
    let neighbor_distances = (1..=neighbor_classes(count))
        .map(|m| sys.pairwise_r_unchecked(anchor, m - 1))
        .collect();
    let uca = UcaGeometry {
        count,
        ring_radius,
        offset,
        radius,
        diffusion,
        distance: (offset * offset + ring_radius * ring_radius).sqrt(),
        neighbor_distances,
    };
    Ok((sys, uca))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> FarSystem<f64> {
        FarSystem::new(
            vec![[20.0, 0.0, 0.0], [-20.0, 10.0, 0.0], [20.0, -15.0, 0.0]],
            3.0,
            100.0,
        )
        .unwrap()
    }

    #[test]
    fn builds_three_receiver_system() {
        let sys = fig2();
        let r = sys.distances();
        assert_eq!(r[0], 20.0);
        assert!((r[1] - 22.360679774997898).abs() < 1e-12);
        assert_eq!(r[2], 25.0);
    }

    #[test]
    fn rejects_transmitter_on_surface() {
        let err = FarSystem::new(vec![[10.0, 0.0, 0.0]], 10.0, 100.0).unwrap_err();
        assert!(matches!(err, Error::TransmitterInside { index: 0, .. }));
    }

    #[test]
    fn rejects_overlap() {
        let err = FarSystem::new(vec![[10.0, 0.0, 0.0], [12.0, 0.0, 0.0]], 3.0, 100.0).unwrap_err();
        assert!(matches!(err, Error::Overlap { i: 0, j: 1, .. }));
    }

    #[test]
    fn touching_spheres_are_rejected_but_near_touching_allowed() {
        assert!(FarSystem::new(vec![[10.0, 0.0, 0.0], [10.0, 6.0, 0.0]], 3.0, 1.0).is_err());
        assert!(FarSystem::new(vec![[10.0, 0.0, 0.0], [10.0, 6.000001, 0.0]], 3.0, 1.0).is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            FarSystem::new(vec![[10.0, 0.0, 0.0]], 0.0, 1.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            FarSystem::new(vec![[10.0, 0.0, 0.0]], 1.0, -1.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            FarSystem::<f64>::new(vec![], 1.0, 1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn closest_points() {
        let sys = FarSystem::new(vec![[20.0, 0.0, 0.0], [0.0, 20.0, 0.0]], 3.0, 1.0).unwrap();
        assert_eq!(sys.closest_point(0).unwrap(), [17.0, 0.0, 0.0]);
        let sys = FarSystem::new(vec![[0.0, 20.0, 0.0]], 4.0, 1.0).unwrap();
        assert_eq!(sys.closest_point(0).unwrap(), [0.0, 16.0, 0.0]);
        assert!(sys.closest_point(1).is_err());
    }

    #[test]
    fn pairwise_rejects_same_index() {
        assert_eq!(fig2().pairwise_r(1, 1), Err(Error::SameIndex(1)));
        assert!(fig2().pairwise_r(0, 3).is_err());
    }

    #[test]
    fn ring_neighbor_distances() {
        let (_, uca2) = build_uca::<f64>(2, 20.0, 0.0, 4.0, 100.0).unwrap();
        assert_eq!(uca2.neighbor_distances.len(), 1);
        assert!((uca2.neighbor_distances[0] - 36.0).abs() < 1e-12);

        let (_, uca3) = build_uca::<f64>(3, 20.0, 0.0, 4.0, 100.0).unwrap();
        assert!((uca3.neighbor_distances[0] - 31.24).abs() < 0.005);

        let (_, uca4) = build_uca::<f64>(4, 20.0, 0.0, 4.0, 100.0).unwrap();
        assert_eq!(uca4.neighbor_classes(), 2);
        assert!((uca4.neighbor_distances[0] - 25.61).abs() < 0.005);
        assert!((uca4.neighbor_distances[1] - 36.0).abs() < 1e-12);

        let (_, uca1) = build_uca::<f64>(1, 20.0, 0.0, 4.0, 100.0).unwrap();
        assert_eq!(uca1.neighbor_classes(), 0);
        assert!(uca1.neighbor_distances.is_empty());
    }

    #[test]
    fn neighbor_class_count_is_ceil_half() {
        for n in 1..40usize {
            assert_eq!(neighbor_classes(n), (n - 1).div_ceil(2));
        }
    }

    #[test]
    fn ring_multiplicities() {
        let (_, uca) = build_uca(6, 20.0, 10.0, 4.0, 100.0).unwrap();
        assert_eq!(uca.class_multiplicity(1), 2);
        assert_eq!(uca.class_multiplicity(3), 1);
        let (_, uca) = build_uca(7, 20.0, 10.0, 4.0, 100.0).unwrap();
        assert_eq!(uca.class_multiplicity(3), 2);
    }
}
