//! Interchangeable sources of `p_i(t)` for gain and link computations.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geometry::{FarSystem, UcaGeometry};
use crate::ilt::{ilt_vec, IltConfig};
use crate::laplace::{laplace_hit_recursive, laplace_hit_vector};
use crate::scalar::Real;
use crate::series::{hp_uca_series, pbar_unchecked, SeriesControl};

/// A way of computing every receiver's hitting probability at time `t`.
pub trait HitModel<T: Real>: Sync {
    fn system(&self) -> &FarSystem<T>;

    fn hit_probs(&self, t: T) -> Result<Vec<T>>;

    fn hit_prob(&self, i: usize, t: T) -> Result<T> {
        let n = self.system().len();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        Ok(self.hit_probs(t)?[i])
    }

    fn label(&self) -> &'static str;
}

fn zero_time<T: Real>(t: T, n: usize) -> Result<Option<Vec<T>>> {
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    Ok((t == T::zero()).then(|| vec![T::zero(); n]))
}

/// Ring closed form; every receiver gets the same value.
#[derive(Debug, Clone)]
pub struct UcaSeriesModel<T> {
    sys: FarSystem<T>,
    uca: UcaGeometry<T>,
    ctl: SeriesControl,
}

impl<T: Real> UcaSeriesModel<T> {
    pub fn new(sys: FarSystem<T>, uca: UcaGeometry<T>, ctl: SeriesControl) -> Self {
        Self { sys, uca, ctl }
    }

    pub fn uca(&self) -> &UcaGeometry<T> {
        &self.uca
    }
}

impl<T: Real> HitModel<T> for UcaSeriesModel<T> {
    fn system(&self) -> &FarSystem<T> {
        &self.sys
    }

    fn hit_probs(&self, t: T) -> Result<Vec<T>> {
        Ok(vec![hp_uca_series(t, &self.uca, &self.ctl)?; self.uca.count])
    }

    fn hit_prob(&self, i: usize, t: T) -> Result<T> {
        if i >= self.uca.count {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.uca.count,
            });
        }
        hp_uca_series(t, &self.uca, &self.ctl)
    }

    fn label(&self) -> &'static str {
        "series"
    }
}

#[derive(Debug, Clone)]
pub struct MatrixModel<T> {
    sys: FarSystem<T>,
    ilt: IltConfig,
}

impl<T: Real> MatrixModel<T> {
    pub fn new(sys: FarSystem<T>, ilt: IltConfig) -> Self {
        Self { sys, ilt }
    }
}

impl<T: Real> HitModel<T> for MatrixModel<T> {
    fn system(&self) -> &FarSystem<T> {
        &self.sys
    }

    fn hit_probs(&self, t: T) -> Result<Vec<T>> {
        if let Some(z) = zero_time(t, self.sys.len())? {
            return Ok(z);
        }
        ilt_vec(|s| laplace_hit_vector(s, &self.sys).map(|v| v.values), t, &self.ilt)
    }

    fn label(&self) -> &'static str {
        "ilt_matrix"
    }
}

#[derive(Debug, Clone)]
pub struct RecursiveModel<T> {
    sys: FarSystem<T>,
    ilt: IltConfig,
}

impl<T: Real> RecursiveModel<T> {
    pub fn new(sys: FarSystem<T>, ilt: IltConfig) -> Self {
        Self { sys, ilt }
    }
}

impl<T: Real> HitModel<T> for RecursiveModel<T> {
    fn system(&self) -> &FarSystem<T> {
        &self.sys
    }

    fn hit_probs(&self, t: T) -> Result<Vec<T>> {
        let n = self.sys.len();
        if let Some(z) = zero_time(t, n)? {
            return Ok(z);
        }
        ilt_vec(
            |s: Complex<T>| (0..n).map(|i| laplace_hit_recursive(s, i, &self.sys)).collect(),
            t,
            &self.ilt,
        )
    }

    fn hit_prob(&self, i: usize, t: T) -> Result<T> {
        let n = self.sys.len();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        if zero_time(t, n)?.is_some() {
            return Ok(T::zero());
        }
        Ok(ilt_vec(|s| Ok(vec![laplace_hit_recursive(s, i, &self.sys)?]), t, &self.ilt)?[0])
    }

    fn label(&self) -> &'static str {
        "ilt_recursive"
    }
}

/// Ignores mutual influence: each receiver sees `p̄(t, r_i)`.
#[derive(Debug, Clone)]
pub struct IsolatedModel<T> {
    sys: FarSystem<T>,
}

impl<T: Real> IsolatedModel<T> {
    pub fn new(sys: FarSystem<T>) -> Self {
        Self { sys }
    }
}

impl<T: Real> HitModel<T> for IsolatedModel<T> {
    fn system(&self) -> &FarSystem<T> {
        &self.sys
    }

    fn hit_probs(&self, t: T) -> Result<Vec<T>> {
        if let Some(z) = zero_time(t, self.sys.len())? {
            return Ok(z);
        }
        let (a, d) = (self.sys.radius(), self.sys.diffusion());
        Ok(self
            .sys
            .distances()
            .iter()
            .map(|&r| pbar_unchecked(t, r, a, d))
            .collect())
    }

    fn label(&self) -> &'static str {
        "isolated"
    }
}

/// Ring series where it converges within budget, matrix inversion where
/// it does not (tightly packed rings, or large `N` at late times).
#[derive(Debug, Clone)]
pub struct AutoModel<T> {
    series: UcaSeriesModel<T>,
    matrix: MatrixModel<T>,
}

impl<T: Real> AutoModel<T> {
    pub fn new(sys: FarSystem<T>, uca: UcaGeometry<T>, ctl: SeriesControl, ilt: IltConfig) -> Self {
        Self {
            series: UcaSeriesModel::new(sys.clone(), uca, ctl),
            matrix: MatrixModel::new(sys, ilt),
        }
    }
}

impl<T: Real> HitModel<T> for AutoModel<T> {
    fn system(&self) -> &FarSystem<T> {
        self.series.system()
    }

    fn hit_probs(&self, t: T) -> Result<Vec<T>> {
        match self.series.hit_probs(t) {
            Err(Error::NonConvergence { .. } | Error::CombinatorialBlowup { .. }) => self.matrix.hit_probs(t),
            other => other,
        }
    }

    fn label(&self) -> &'static str {
        "auto"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_uca;

    #[test]
    fn models_agree_on_a_ring() {
        let (sys, uca) = build_uca::<f64>(4, 20.0, 10.0, 4.0, 100.0).unwrap();
        let series = UcaSeriesModel::new(sys.clone(), uca, SeriesControl::default());
        let matrix = MatrixModel::new(sys.clone(), IltConfig::default());
        let rec = RecursiveModel::new(sys.clone(), IltConfig::default());
        let iso = IsolatedModel::new(sys);
        for t in [0.5, 1.0, 4.0] {
            let s = series.hit_probs(t).unwrap();
            let m = matrix.hit_probs(t).unwrap();
            let r = rec.hit_prob(2, t).unwrap();
            assert!((s[2] - m[2]).abs() < 1e-6);
            assert!((r - m[2]).abs() < 1e-9);
            assert!(iso.hit_prob(2, t).unwrap() > s[2]);
        }
        assert_eq!(series.hit_probs(0.0).unwrap(), vec![0.0; 4]);
        assert!(matrix.hit_prob(4, 1.0).is_err());
        assert!(matrix.hit_probs(-1.0).is_err());
    }

    #[test]
    fn auto_falls_back_when_series_gives_up() {
        let (sys, uca) = build_uca::<f64>(4, 6.0, 10.0, 4.0, 100.0).unwrap();
        let tight = SeriesControl {
            max_terms: 3,
            ..SeriesControl::default()
        };
        let auto = AutoModel::new(sys.clone(), uca.clone(), tight, IltConfig::default());
        assert!(UcaSeriesModel::new(sys.clone(), uca, tight).hit_probs(2.0).is_err());
        let m = MatrixModel::new(sys, IltConfig::default()).hit_probs(2.0).unwrap();
        assert_eq!(auto.hit_probs(2.0).unwrap(), m);
    }
}
