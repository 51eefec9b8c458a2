//! Numerical inverse Laplace transforms.
//!
//! Two independent algorithms are provided: the fixed Talbot contour
//! (Abate & Valkó, 2004), which samples the transform on a deformed Bromwich
//! contour wrapped around the negative real axis, and the Gaver–Stehfest
//! functional, which needs the transform on the positive real axis only.
//! `CrossChecked` runs both and refuses to answer when they disagree.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IltMethod {
    Talbot,
    Stehfest,
    CrossChecked,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IltConfig {
    pub method: IltMethod,
    /// Contour nodes for fixed Talbot (at least 16).
    pub talbot_nodes: usize,
    /// Gaver–Stehfest order (even, 8..=18).
    pub stehfest_terms: usize,
    /// Maximum `|talbot - stehfest| / max(1, |talbot|)` before a
    /// cross-checked inversion fails.
    pub agreement_tol: f64,
}

impl Default for IltConfig {
    fn default() -> Self {
        Self {
            method: IltMethod::CrossChecked,
            talbot_nodes: 32,
            stehfest_terms: 14,
            agreement_tol: 1e-5,
        }
    }
}

impl IltConfig {
    pub fn talbot() -> Self {
        Self {
            method: IltMethod::Talbot,
            ..Self::default()
        }
    }

    pub fn stehfest() -> Self {
        Self {
            method: IltMethod::Stehfest,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.talbot_nodes < 16 {
            return Err(Error::Parameter(format!(
                "talbot needs at least 16 nodes, got {}",
                self.talbot_nodes
            )));
        }
        if !self.stehfest_terms.is_multiple_of(2) || !(8..=18).contains(&self.stehfest_terms) {
            return Err(Error::Parameter(format!(
                "stehfest order must be even and in [8, 18], got {}",
                self.stehfest_terms
            )));
        }
        if !(self.agreement_tol > 0.0) {
            return Err(Error::Parameter("agreement tolerance must be positive".into()));
        }
        Ok(())
    }
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if t > T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("inversion time must be positive, got {t}")))
    }
}

fn evaluation_error<T: Real>(s: Complex<T>, err: Error) -> Error {
    match err {
        e @ Error::Evaluation { .. } => e,
        other => Error::Evaluation {
            re: s.re.to_f64_lossy(),
            im: s.im.to_f64_lossy(),
            reason: other.to_string(),
        },
    }
}

/// Fixed-Talbot inversion of a vector-valued transform.
pub fn ilt_talbot_vec<T, F>(mut f: F, t: T, nodes: usize) -> Result<Vec<T>>
where
    T: Real,
    F: FnMut(Complex<T>) -> Result<Vec<Complex<T>>>,
{
    check_time(t)?;
    if nodes < 16 {
        return Err(Error::Parameter(format!("talbot needs at least 16 nodes, got {nodes}")));
    }
    let m = T::from_usize_lossy(nodes);
    let r = T::lit(2.0) * m / (T::lit(5.0) * t);

    let s0 = Complex::new(r, T::zero());
    let f0 = f(s0).map_err(|e| evaluation_error(s0, e))?;
    let w0 = T::lit(0.5) * (r * t).exp();
    let mut acc: Vec<T> = f0.iter().map(|v| v.re * w0).collect();

    for k in 1..nodes {
        let theta = T::from_usize_lossy(k) * T::PI() / m;
        let cot = theta.cos() / theta.sin();
        let s = Complex::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - T::one()) * cot;
        let weight = (s * t).exp() * Complex::new(T::one(), sigma);
        let fk = f(s).map_err(|e| evaluation_error(s, e))?;
        if fk.len() != acc.len() {
            return Err(Error::Parameter("transform changed output length".into()));
        }
        for (a, v) in acc.iter_mut().zip(&fk) {
            *a += (weight * v).re;
        }
    }
    let scale = r / m;
    Ok(acc.into_iter().map(|a| a * scale).collect())
}

/// Gaver–Stehfest weights `V_1..V_n`, computed in exact rational arithmetic
/// and rounded once.
pub fn stehfest_weights(n: usize) -> Result<&'static [f64]> {
    static CACHE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    if !n.is_multiple_of(2) || !(2..=30).contains(&n) {
        return Err(Error::Parameter(format!("stehfest order must be even, got {n}")));
    }
    let cache = CACHE.get_or_init(|| (0..=15).map(|h| exact_weights(2 * h)).collect());
    Ok(&cache[n / 2])
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn exact_weights(n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let half = n / 2;
    (1..=n)
        .map(|k| {
            let mut sum = BigRational::zero();
            for j in k.div_ceil(2)..=k.min(half) {
                let num = BigInt::from(j).pow(half as u32) * factorial(2 * j);
                let den =
                    factorial(half - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k);
                sum += BigRational::new(num, den);
            }
            if (k + half) % 2 == 1 {
                sum = -sum;
            }
            sum.to_f64().expect("finite weight")
        })
        .collect()
}

/// Gaver–Stehfest inversion of a vector-valued transform sampled on the
/// positive real axis.
pub fn ilt_stehfest_vec<T, F>(mut f: F, t: T, terms: usize) -> Result<Vec<T>>
where
    T: Real,
    F: FnMut(T) -> Result<Vec<T>>,
{
    check_time(t)?;
    if !terms.is_multiple_of(2) || !(8..=18).contains(&terms) {
        return Err(Error::Parameter(format!(
            "stehfest order must be even and in [8, 18], got {terms}"
        )));
    }
    let weights = stehfest_weights(terms)?;
    let step = T::LN_2() / t;
    let mut acc: Option<Vec<T>> = None;
    for (k, &w) in weights.iter().enumerate() {
        let s = step * T::from_usize_lossy(k + 1);
        let fk = f(s).map_err(|e| evaluation_error(Complex::new(s, T::zero()), e))?;
        let w = T::lit(w);
        match acc.as_mut() {
            None => acc = Some(fk.into_iter().map(|v| v * w).collect()),
            Some(a) => {
                if a.len() != fk.len() {
                    return Err(Error::Parameter("transform changed output length".into()));
                }
                for (x, v) in a.iter_mut().zip(fk) {
                    *x += v * w;
                }
            }
        }
    }
    Ok(acc.unwrap_or_default().into_iter().map(|x| x * step).collect())
}

/// Inverts a vector-valued transform according to `cfg.method`.
pub fn ilt_vec<T, F>(mut f: F, t: T, cfg: &IltConfig) -> Result<Vec<T>>
where
    T: Real,
    F: FnMut(Complex<T>) -> Result<Vec<Complex<T>>>,
{
    cfg.validate()?;
    fn on_real_axis<T: Real>(
        f: &mut impl FnMut(Complex<T>) -> Result<Vec<Complex<T>>>,
    ) -> impl FnMut(T) -> Result<Vec<T>> + '_ {
        move |s| Ok(f(Complex::new(s, T::zero()))?.into_iter().map(|v| v.re).collect())
    }
    match cfg.method {
        IltMethod::Stehfest => ilt_stehfest_vec(on_real_axis(&mut f), t, cfg.stehfest_terms),
        IltMethod::Talbot => ilt_talbot_vec(&mut f, t, cfg.talbot_nodes),
        IltMethod::CrossChecked => {
            let talbot = ilt_talbot_vec(&mut f, t, cfg.talbot_nodes)?;
            let stehfest = ilt_stehfest_vec(on_real_axis(&mut f), t, cfg.stehfest_terms)?;
            let tol = T::lit(cfg.agreement_tol);
            for (&a, &b) in talbot.iter().zip(&stehfest) {
                if !((a - b).abs() <= tol * a.abs().max(T::one())) {
                    return Err(Error::Disagreement {
                        t: t.to_f64_lossy(),
                        talbot: a.to_f64_lossy(),
                        stehfest: b.to_f64_lossy(),
                    });
                }
            }
            Ok(talbot)
        }
    }
}

/// Fixed-Talbot inversion of a scalar transform.
pub fn ilt_talbot<T, F>(mut f: F, t: T, cfg: &IltConfig) -> Result<T>
where
    T: Real,
    F: FnMut(Complex<T>) -> Result<Complex<T>>,
{
    Ok(ilt_talbot_vec(|s| f(s).map(|v| vec![v]), t, cfg.talbot_nodes)?[0])
}

/// Gaver–Stehfest inversion of a real transform.
pub fn ilt_stehfest<T, F>(mut f: F, t: T, cfg: &IltConfig) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    Ok(ilt_stehfest_vec(|s| f(s).map(|v| vec![v]), t, cfg.stehfest_terms)?[0])
}

/// Scalar inversion according to `cfg.method`.
pub fn ilt<T, F>(mut f: F, t: T, cfg: &IltConfig) -> Result<T>
where
    T: Real,
    F: FnMut(Complex<T>) -> Result<Complex<T>>,
{
    Ok(ilt_vec(|s| f(s).map(|v| vec![v]), t, cfg)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplace::pbar_laplace;

    fn step(s: Complex<f64>) -> Result<Complex<f64>> {
        Ok(s.inv())
    }

    fn ramp(s: Complex<f64>) -> Result<Complex<f64>> {
        Ok((s * s).inv())
    }

    #[test]
    fn talbot_step_and_ramp() {
        let cfg = IltConfig::talbot();
        assert!((ilt_talbot(step, 5.0, &cfg).unwrap() - 1.0).abs() < 1e-8);
        assert!((ilt_talbot(ramp, 3.0, &cfg).unwrap() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn stehfest_step_and_ramp() {
        let cfg = IltConfig::stehfest();
        assert!((ilt_stehfest(|s: f64| Ok(1.0 / s), 5.0, &cfg).unwrap() - 1.0).abs() < 1e-5);
        assert!((ilt_stehfest(|s: f64| Ok(1.0 / (s * s)), 3.0, &cfg).unwrap() - 3.0).abs() < 1e-5);
    }

    #[test]
    fn isolated_receiver_inverse() {
        // (3/20) erfc(17/20), mpmath
        let want = 0.034_399_791_358_747_12;
        let f = |s: Complex<f64>| pbar_laplace(s, 20.0, 3.0, 100.0);
        let talbot = ilt_talbot(f, 1.0, &IltConfig::talbot()).unwrap();
        assert!((talbot - want).abs() < 1e-8, "talbot {talbot}");
        let stehfest = ilt_stehfest(|s| f(Complex::new(s, 0.0)).map(|v| v.re), 1.0, &IltConfig::stehfest()).unwrap();
        assert!((stehfest - want).abs() < 1e-5, "stehfest {stehfest}");
        let checked = ilt(f, 1.0, &IltConfig::default()).unwrap();
        assert_eq!(checked, talbot);
    }

    #[test]
    fn stehfest_weights_sum_to_zero() {
        for n in (8..=18).step_by(2) {
            let w = stehfest_weights(n).unwrap();
            assert_eq!(w.len(), n);
            // the functional maps a constant transform 1/s to 1
            let terms: Vec<f64> = w.iter().enumerate().map(|(k, v)| v / (k as f64 + 1.0)).collect();
            let sum: f64 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|v| v.abs()).sum();
            assert!((sum - 1.0).abs() < 1e-14 * scale, "n = {n}: {sum}");
            assert!(w.iter().sum::<f64>().abs() < 1e-6 * w.iter().map(|v| v.abs()).sum::<f64>());
        }
        // tabulated weights for n = 10
        let want = [
            1.0 / 12.0,
            -385.0 / 12.0,
            1279.0,
            -46871.0 / 3.0,
            505465.0 / 6.0,
            -473915.0 / 2.0,
            1127735.0 / 3.0,
            -1020215.0 / 3.0,
            328125.0 / 2.0,
            -65625.0 / 2.0,
        ];
        for (got, want) in stehfest_weights(10).unwrap().iter().zip(want) {
            assert!((got - want).abs() <= 1e-15 * want.abs());
        }
    }

    #[test]
    fn disagreement_is_reported() {
        // a transform that differs on and off the real axis
        let cfg = IltConfig::default();
        let err = ilt(
            |s: Complex<f64>| Ok(if s.im == 0.0 { s.inv() * 2.0 } else { s.inv() }),
            1.0,
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Disagreement { .. }));
    }

    #[test]
    fn evaluation_errors_carry_the_node() {
        let err = ilt_talbot(
            |s: Complex<f64>| {
                if s.im != 0.0 {
                    Err(Error::SingularMatrix { re: s.re, im: s.im })
                } else {
                    Ok(s.inv())
                }
            },
            1.0,
            &IltConfig::talbot(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Evaluation { .. }));
    }

    #[test]
    fn config_validation() {
        let mut cfg = IltConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.talbot_nodes = 8;
        assert!(cfg.validate().is_err());
        cfg = IltConfig {
            stehfest_terms: 13,
            ..IltConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.stehfest_terms = 20;
        assert!(cfg.validate().is_err());
        assert!(ilt(step, 0.0, &IltConfig::default()).is_err());
    }

    #[test]
    fn near_zero_time_gives_zero() {
        let f = |s: Complex<f64>| pbar_laplace(s, 20.0, 3.0, 100.0);
        let v = ilt(f, 1e-4, &IltConfig::default()).unwrap();
        assert!(v.abs() < 1e-12);
    }
}
