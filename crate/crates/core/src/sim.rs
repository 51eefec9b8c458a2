//! Monte Carlo reference: Brownian molecules released at the origin and
//! absorbed by the first sphere they land in.
//!
//! Absorption is tested at step endpoints only. Paths that graze a sphere
//! within a step are missed, which biases every estimate slightly low; the
//! bias shrinks like `sqrt(dt)`.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::curve::{CurveMethod, HitProbCurve};
use crate::error::{Error, Result};
use crate::geometry::FarSystem;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub dt: T,
    pub t_max: T,
    pub trials: u64,
    pub seed: u64,
    /// Steps between recorded grid points.
    pub record_stride: usize,
    /// Replaces the system's diffusion coefficient. Zero is allowed here and
    /// freezes every molecule at the origin.
    pub diffusion: Option<T>,
}

impl<T: Real> SimConfig<T> {
    pub fn new(t_max: T, trials: u64, seed: u64) -> Self {
        Self {
            dt: T::lit(1e-4),
            t_max,
            trials,
            seed,
            record_stride: 1,
            diffusion: None,
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round().to_usize().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::Parameter(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return Err(Error::Parameter(format!(
                "horizon {} must be at least one time step {}",
                self.t_max, self.dt
            )));
        }
        if self.trials == 0 {
            return Err(Error::Parameter("need at least one trial".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::Parameter("record stride must be positive".into()));
        }
        if self.steps() > u32::MAX as usize {
            return Err(Error::Parameter("too many time steps".into()));
        }
        if let Some(d) = self.diffusion {
            if !(d >= T::zero() && d.is_finite()) {
                return Err(Error::Parameter(format!(
                    "diffusion override must be non-negative, got {d}"
                )));
            }
        }
        Ok(())
    }
}

/// Cumulative absorption counts on the recorded grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<T> {
    /// `0, h, 2h, ...` with `h = record_stride·dt`.
    pub times: Vec<T>,
    /// `counts[i][k]`: trials absorbed by receiver `i` up to `times[k]`.
    pub counts: Vec<Vec<u64>>,
    pub trials: u64,
    pub seed: u64,
}

/// Proportion estimate with a normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitEstimate<T> {
    pub p: T,
    pub half_width: T,
    /// Count was 0 or equal to the trial count; the interval collapses.
    pub degenerate: bool,
}

/// Multiplier for the interval half-width (three standard errors).
pub const CI_Z: f64 = 3.0;

/// First absorption of one trial as (receiver, step), steps counted from 1.
fn trial<T: Real>(seed: u64, index: u64, centres: &[[T; 3]], a2: T, sigma: T, steps: usize) -> Option<(usize, usize)>
where
    StandardNormal: Distribution<T>,
{
    if sigma == T::zero() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut p = [T::zero(); 3];
    for step in 1..=steps {
        for c in &mut p {
            *c += sigma * rng.sample::<T, _>(StandardNormal);
        }
        let mut hit = None;
        for (j, x) in centres.iter().enumerate() {
            let d2 = (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2) + (p[2] - x[2]).powi(2);
            if d2 <= a2 {
                debug_assert!(hit.is_none(), "spheres overlap");
                hit = Some(j);
                if !cfg!(debug_assertions) {
                    break;
                }
            }
        }
        if let Some(j) = hit {
            return Some((j, step));
        }
    }
    None
}

/// Runs `cfg.trials` independent trials. Trial `k` draws from stream `k`
/// of a generator seeded with `cfg.seed`, so results do not depend on the
/// thread count.
pub fn run_particle_sim<T: Real>(sys: &FarSystem<T>, cfg: &SimConfig<T>) -> Result<SimResult<T>>
where
    StandardNormal: Distribution<T>,
{
    cfg.validate()?;
    let n = sys.len();
    let steps = cfg.steps();
    let d = cfg.diffusion.unwrap_or(sys.diffusion());
    let sigma = (T::lit(2.0) * d * cfg.dt).sqrt();
    let a2 = sys.radius() * sys.radius();
    let centres = sys.positions();

    // per-receiver histogram of absorption step
    let histogram = (0..cfg.trials)
        .into_par_iter()
        .fold(
            || vec![0u64; n * (steps + 1)],
            |mut h, k| {
                if let Some((j, step)) = trial(cfg.seed, k, centres, a2, sigma, steps) {
                    h[j * (steps + 1) + step] += 1;
                }
                h
            },
        )
        .reduce(
            || vec![0u64; n * (steps + 1)],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let stride = cfg.record_stride;
    let points = steps / stride + 1;
    let times = (0..points).map(|k| T::from_usize_lossy(k * stride) * cfg.dt).collect();
    let counts = (0..n)
        .map(|j| {
            let row = &histogram[j * (steps + 1)..(j + 1) * (steps + 1)];
            let mut acc = 0u64;
            let mut out = Vec::with_capacity(points);
            for (step, &c) in row.iter().enumerate() {
                acc += c;
                if step % stride == 0 {
                    out.push(acc);
                }
            }
            out
        })
        .collect();
    Ok(SimResult {
        times,
        counts,
        trials: cfg.trials,
        seed: cfg.seed,
    })
}

impl<T: Real> SimResult<T> {
    /// Grid index of time `t`, which must lie on the recorded grid.
    pub fn index_of(&self, t: T) -> Result<usize> {
        let last = *self.times.last().expect("grid is never empty");
        if !(t >= T::zero()) || t > last * (T::one() + T::lit(1e-9)) {
            return Err(Error::OutsideGrid {
                t: t.to_f64_lossy(),
                t_max: last.to_f64_lossy(),
            });
        }
        if self.times.len() == 1 {
            return Ok(0);
        }
        let h = self.times[1];
        let k = (t / h).round().to_usize().unwrap_or(0).min(self.times.len() - 1);
        if (self.times[k] - t).abs() > h * T::lit(1e-6) {
            return Err(Error::Domain(format!("time {t} is not on the recorded grid")));
        }
        Ok(k)
    }

    pub fn to_curve(&self) -> HitProbCurve<T> {
        let trials = T::lit(self.trials as f64);
        HitProbCurve {
            times: self.times.clone(),
            per_receiver: self
                .counts
                .iter()
                .map(|row| row.iter().map(|&c| T::lit(c as f64) / trials).collect())
                .collect(),
            method: CurveMethod::Particle,
        }
    }

    /// Plain CSV: `t,count_1,..,count_N` after a `#` line with seed and
    /// trial count.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# seed={} trials={}", self.seed, self.trials)?;
        write!(w, "t")?;
        for i in 1..=self.counts.len() {
            write!(w, ",count_{i}")?;
        }
        writeln!(w)?;
        for (k, t) in self.times.iter().enumerate() {
            write!(w, "{t}")?;
            for row in &self.counts {
                write!(w, ",{}", row[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Estimate and 3σ half-width for receiver `i` at time `t`.
pub fn hit_prob_estimate<T: Real>(res: &SimResult<T>, i: usize, t: T) -> Result<HitEstimate<T>> {
    let row = res.counts.get(i).ok_or(Error::IndexOutOfRange {
        index: i,
        len: res.counts.len(),
    })?;
    let k = res.index_of(t)?;
    Ok(proportion_ci(row[k], res.trials))
}

pub fn proportion_ci<T: Real>(count: u64, trials: u64) -> HitEstimate<T> {
    let n = T::lit(trials as f64);
    let p = T::lit(count as f64) / n;
    HitEstimate {
        p,
        half_width: T::lit(CI_Z) * (p * (T::one() - p) / n).sqrt(),
        degenerate: count == 0 || count == trials,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single() -> FarSystem<f64> {
        FarSystem::new(vec![[5.0, 0.0, 0.0]], 3.0, 100.0).unwrap()
    }

    #[test]
    fn interval_arithmetic() {
        let e: HitEstimate<f64> = proportion_ci(3441, 100_000);
        assert!((e.p - 0.03441).abs() < 1e-15);
        let want = 3.0 * (0.03441f64 * 0.96559 / 1e5).sqrt();
        assert!((e.half_width - want).abs() < 1e-15);
        assert!((e.half_width - 0.00173).abs() < 5e-6);
        assert!(!e.degenerate);
        let zero: HitEstimate<f64> = proportion_ci(0, 10);
        assert_eq!((zero.p, zero.half_width, zero.degenerate), (0.0, 0.0, true));
        let all: HitEstimate<f64> = proportion_ci(10, 10);
        assert_eq!((all.p, all.half_width, all.degenerate), (1.0, 0.0, true));
    }

    #[test]
    fn frozen_molecules_never_hit() {
        let mut cfg = SimConfig::new(0.01, 50, 1);
        cfg.diffusion = Some(0.0);
        let res = run_particle_sim(&single(), &cfg).unwrap();
        assert!(res.counts[0].iter().all(|&c| c == 0));
    }

    #[test]
    fn reproducible_and_monotone() {
        let mut cfg = SimConfig::new(0.05, 400, 7);
        cfg.record_stride = 10;
        let a = run_particle_sim(&single(), &cfg).unwrap();
        let b = run_particle_sim(&single(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.times.len(), 51);
        assert!(a.counts[0].windows(2).all(|w| w[0] <= w[1]));
        assert!(*a.counts[0].last().unwrap() > 0);
        cfg.seed = 8;
        assert_ne!(run_particle_sim(&single(), &cfg).unwrap(), a);
    }

    #[test]
    fn grid_lookup() {
        let mut cfg = SimConfig::new(0.01, 10, 1);
        cfg.record_stride = 10;
        let res = run_particle_sim(&single(), &cfg).unwrap();
        assert_eq!(res.index_of(0.005).unwrap(), 5);
        assert!(res.index_of(0.02).is_err());
        assert!(res.index_of(0.0055).is_err());
        assert!(hit_prob_estimate(&res, 1, 0.005).is_err());
    }

    #[test]
    fn config_checks() {
        let base = SimConfig::<f64>::new(1.0, 10, 0);
        assert!(SimConfig { dt: 0.0, ..base }.validate().is_err());
        assert!(SimConfig { t_max: 1e-5, ..base }.validate().is_err());
        assert!(SimConfig { trials: 0, ..base }.validate().is_err());
        assert!(SimConfig {
            record_stride: 0,
            ..base
        }
        .validate()
        .is_err());
        assert!(base.validate().is_ok());
    }

    #[test]
    fn csv_dump() {
        let mut cfg = SimConfig::new(0.0002, 5, 3);
        cfg.diffusion = Some(0.0);
        let res = run_particle_sim(&single(), &cfg).unwrap();
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# seed=3 trials=5\nt,count_1\n0,0\n0.0001,0\n0.0002,0\n");
    }
}
