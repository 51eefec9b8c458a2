//! Time-grid evaluation of hitting probabilities.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{FarSystem, UcaGeometry};
use crate::ilt::{ilt_vec, IltConfig};
use crate::laplace::{laplace_hit_recursive, laplace_hit_vector};
use crate::scalar::Real;
use crate::series::{hp_uca_series, pbar_unchecked, SeriesControl};

/// Which computation produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveMethod {
    Series,
    IltMatrix,
    IltRecursive,
    Particle,
    /// Each receiver treated as if alone.
    Isolated,
}

impl CurveMethod {
    pub fn tag(self) -> &'static str {
        match self {
            CurveMethod::Series => "series",
            CurveMethod::IltMatrix => "ilt_matrix",
            CurveMethod::IltRecursive => "ilt_recursive",
            CurveMethod::Particle => "particle",
            CurveMethod::Isolated => "isolated",
        }
    }
}

/// Per-receiver hitting probability sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HitProbCurve<T> {
    pub times: Vec<T>,
    /// `per_receiver[i][k]` is receiver `i` at `times[k]`.
    pub per_receiver: Vec<Vec<T>>,
    pub method: CurveMethod,
}

impl<T: Real> HitProbCurve<T> {
    pub fn receivers(&self) -> usize {
        self.per_receiver.len()
    }

    /// Values of every receiver at grid index `k`.
    pub fn column(&self, k: usize) -> Vec<T> {
        self.per_receiver.iter().map(|row| row[k]).collect()
    }

    /// Lists violations of range, monotonicity, dominance by the isolated
    /// curve and conservation, each with `slack` tolerance. Empty when the
    /// curve is physically consistent with `sys`.
    pub fn violations(&self, sys: &FarSystem<T>, slack: T) -> Vec<String> {
        let mut out = Vec::new();
        for (i, row) in self.per_receiver.iter().enumerate() {
            for (k, (&t, &p)) in self.times.iter().zip(row).enumerate() {
                if !(p >= -slack && p <= T::one() + slack) {
                    out.push(format!("receiver {i}: p({t}) = {p} outside [0, 1]"));
                }
                let cap = pbar_unchecked(t, sys.distances()[i], sys.radius(), sys.diffusion());
                if p > cap + slack {
                    out.push(format!("receiver {i}: p({t}) = {p} exceeds isolated {cap}"));
                }
                if k > 0 && p + slack < row[k - 1] {
                    out.push(format!("receiver {i}: decreases at t = {t}"));
                }
            }
        }
        for k in 0..self.times.len() {
            let total = self.column(k).into_iter().fold(T::zero(), |a, b| a + b);
            if total > T::one() + slack {
                out.push(format!("total {total} exceeds 1 at t = {}", self.times[k]));
            }
        }
        out
    }
}

fn check_grid<T: Real>(times: &[T]) -> Result<()> {
    if times.iter().any(|t| !(*t >= T::zero()) || !t.is_finite()) {
        return Err(Error::Domain("time grid must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Evaluates `f` on every grid point in parallel and transposes the
/// result into per-receiver rows.
fn tabulate<T, F>(times: &[T], n: usize, method: CurveMethod, f: F) -> Result<HitProbCurve<T>>
where
    T: Real,
    F: Fn(T) -> Result<Vec<T>> + Sync,
{
    check_grid(times)?;
    let columns: Vec<Vec<T>> = times
        .par_iter()
        .map(|&t| if t == T::zero() { Ok(vec![T::zero(); n]) } else { f(t) })
        .collect::<Result<_>>()?;
    let per_receiver = (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    Ok(HitProbCurve {
        times: times.to_vec(),
        per_receiver,
        method,
    })
}

/// Matrix method followed by numerical inversion at every grid point.
pub fn hp_numeric<T: Real>(times: &[T], sys: &FarSystem<T>, cfg: &IltConfig) -> Result<HitProbCurve<T>> {
    cfg.validate()?;
    tabulate(times, sys.len(), CurveMethod::IltMatrix, |t| {
        ilt_vec(|s| laplace_hit_vector(s, sys).map(|v| v.values), t, cfg)
    })
}

/// Same as [`hp_numeric`] with the recursive Laplace form per receiver.
pub fn hp_numeric_recursive<T: Real>(times: &[T], sys: &FarSystem<T>, cfg: &IltConfig) -> Result<HitProbCurve<T>> {
    cfg.validate()?;
    let n = sys.len();
    tabulate(times, n, CurveMethod::IltRecursive, |t| {
        ilt_vec(
            |s: Complex<T>| (0..n).map(|i| laplace_hit_recursive(s, i, sys)).collect(),
            t,
            cfg,
        )
    })
}

/// Ring series evaluated on a grid; all receivers share one curve.
pub fn hp_uca_curve<T: Real>(times: &[T], uca: &UcaGeometry<T>, ctl: &SeriesControl) -> Result<HitProbCurve<T>> {
    tabulate(times, uca.count, CurveMethod::Series, |t| {
        Ok(vec![hp_uca_series(t, uca, ctl)?; uca.count])
    })
}

/// Isolated-receiver baselines `p̄(t, r_i)`.
pub fn pbar_curve<T: Real>(times: &[T], sys: &FarSystem<T>) -> Result<HitProbCurve<T>> {
    tabulate(times, sys.len(), CurveMethod::Isolated, |t| {
        Ok(sys
            .distances()
            .iter()
            .map(|&r| pbar_unchecked(t, r, sys.radius(), sys.diffusion()))
            .collect())
    })
}

/// Probability mass that receiver `i` loses to its neighbours,
/// `p̄(t, r_i) - p_i(t)`. Clipped into `[0, p̄]` to absorb inversion noise.
pub fn mutual_influence<T: Real>(t: T, i: usize, sys: &FarSystem<T>, cfg: &IltConfig) -> Result<T> {
    let r = sys.distance(i)?;
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    let alone = pbar_unchecked(t, r, sys.radius(), sys.diffusion());
    if sys.len() == 1 {
        return Ok(T::zero());
    }
    let p = ilt_vec(|s| laplace_hit_vector(s, sys).map(|v| v.values), t, cfg)?[i];
    Ok((alone - p).max(T::zero()).min(alone))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_uca;
    use crate::series::pbar_time;

    fn fig2() -> FarSystem<f64> {
        FarSystem::new(
            vec![[20.0, 0.0, 0.0], [-20.0, 10.0, 0.0], [20.0, -15.0, 0.0]],
            3.0,
            100.0,
        )
        .unwrap()
    }

    #[test]
    fn single_receiver_matches_closed_form() {
        let sys = FarSystem::new(vec![[20.0, 0.0, 0.0]], 3.0, 100.0).unwrap();
        let times = [0.0f64, 0.05, 0.3, 1.0, 4.0, 30.0];
        let curve = hp_numeric(&times, &sys, &IltConfig::default()).unwrap();
        assert_eq!(curve.method, CurveMethod::IltMatrix);
        for (&t, &p) in times.iter().zip(&curve.per_receiver[0]) {
            let want = if t == 0.0 {
                0.0
            } else {
                pbar_time(t, 20.0, 3.0, 100.0).unwrap()
            };
            assert!((p - want).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn matrix_and_recursive_curves_agree() {
        let sys = fig2();
        let times = [0.2, 0.6, 1.0, 3.0];
        let cfg = IltConfig::talbot();
        let m = hp_numeric(&times, &sys, &cfg).unwrap();
        let r = hp_numeric_recursive(&times, &sys, &cfg).unwrap();
        for (a, b) in m.per_receiver.iter().flatten().zip(r.per_receiver.iter().flatten()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(m.violations(&sys, 1e-7).is_empty(), "{:?}", m.violations(&sys, 1e-7));
    }

    #[test]
    fn relabelling_permutes_output() {
        let sys = fig2();
        let order = [2, 0, 1];
        let perm = sys.permuted(&order).unwrap();
        let times = [0.5, 2.0];
        let cfg = IltConfig::default();
        let a = hp_numeric(&times, &sys, &cfg).unwrap();
        let b = hp_numeric(&times, &perm, &cfg).unwrap();
        for (new, &old) in order.iter().enumerate() {
            for k in 0..times.len() {
                assert!((b.per_receiver[new][k] - a.per_receiver[old][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_must_increase() {
        let sys = fig2();
        assert!(hp_numeric(&[1.0, 0.5], &sys, &IltConfig::default()).is_err());
        assert!(hp_numeric(&[-1.0], &sys, &IltConfig::default()).is_err());
    }

    #[test]
    fn uca_series_curve_matches_matrix() {
        let (sys, uca) = build_uca::<f64>(6, 20.0, 10.0, 4.0, 100.0).unwrap();
        let times = [0.2, 1.0, 5.0];
        let s = hp_uca_curve(&times, &uca, &SeriesControl::default()).unwrap();
        let m = hp_numeric(&times, &sys, &IltConfig::default()).unwrap();
        for i in 0..6 {
            for k in 0..times.len() {
                assert!((s.per_receiver[i][k] - m.per_receiver[i][k]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn mutual_influence_limits() {
        let cfg = IltConfig::default();
        let single = FarSystem::new(vec![[20.0, 0.0, 0.0]], 3.0, 100.0).unwrap();
        assert_eq!(mutual_influence(1.0, 0, &single, &cfg).unwrap(), 0.0);

        let far = FarSystem::new(vec![[20.0, 0.0, 0.0], [-2e4, 0.0, 0.0]], 3.0, 100.0).unwrap();
        assert!(mutual_influence(1.0, 0, &far, &cfg).unwrap() < 1e-6);

        let sys = fig2();
        let gap = mutual_influence(1.0, 0, &sys, &cfg).unwrap();
        let alone = pbar_time(1.0, 20.0, 3.0, 100.0).unwrap();
        assert!(gap > 0.0 && gap < alone);
        let p = hp_numeric(&[1.0], &sys, &cfg).unwrap().per_receiver[0][0];
        assert!((alone - p - gap).abs() < 1e-12);
    }
}
