//! Array gain and the on-off keying link with K-of-N hard-decision fusion.
//!
//! Slot counts are modelled as Poisson. Both local error probabilities sum
//! the Poisson mass over `0..=η`, so a count equal to `η` is treated as
//! "bit 0" for the miss probability and also excluded from the false-alarm
//! probability. That boundary convention is kept as is.

use crate::error::{Error, Result};
use crate::geometry::UcaGeometry;
use crate::model::HitModel;
use crate::scalar::Real;
use crate::series::pbar_unchecked;
use crate::special::{ln_binomial, ln_factorial};

/// Relative spread of transmitter distances tolerated by [`array_gain`].
pub const EQUIDISTANT_TOL: f64 = 1e-9;

/// Equal-gain combining gain `Σ p_i(t) / p̄(t, r)` of receivers that all
/// sit at distance `r` from the transmitter.
pub fn array_gain<T: Real, M: HitModel<T> + ?Sized>(t: T, model: &M) -> Result<T> {
    let sys = model.system();
    let r = sys.distances()[0];
    for (i, &ri) in sys.distances().iter().enumerate() {
        if (ri - r).abs() > T::lit(EQUIDISTANT_TOL) * r {
            return Err(Error::AsymmetricSystem {
                index: i,
                distance: ri.to_f64_lossy(),
                reference: r.to_f64_lossy(),
            });
        }
    }
    if !(t > T::zero()) {
        return Err(Error::Domain(format!("gain needs t > 0, got {t}")));
    }
    let alone = pbar_unchecked(t, r, sys.radius(), sys.diffusion());
    if alone == T::zero() {
        return Err(Error::Domain(format!(
            "isolated hitting probability underflows at t = {t}"
        )));
    }
    let total = model.hit_probs(t)?.into_iter().fold(T::zero(), |a, b| a + b);
    Ok(total / alone)
}

/// Long-time gain of a ring: `N / (1 + Σ_m c_m a / R_m)` with class
/// multiplicities `c_m`.
pub fn asymptotic_gain<T: Real>(uca: &UcaGeometry<T>) -> T {
    let loss = uca
        .neighbor_distances
        .iter()
        .enumerate()
        .map(|(m, &rm)| T::from_usize_lossy(uca.class_multiplicity(m + 1)) * uca.radius / rm)
        .fold(T::zero(), |a, b| a + b);
    T::from_usize_lossy(uca.count) / (T::one() + loss)
}

/// Per-slot absorption fractions `h[m] = p((m+1)T_b) - p(m T_b)` for every
/// receiver. A running maximum is applied to `p` first so that inversion
/// noise cannot produce negative taps; partial sums still telescope.
pub fn channel_taps_all<T: Real, M: HitModel<T> + ?Sized>(model: &M, slot: T, num_slots: usize) -> Result<Vec<Vec<T>>> {
    if num_slots == 0 {
        return Err(Error::Parameter("need at least one slot".into()));
    }
    if !(slot > T::zero()) {
        return Err(Error::Parameter(format!("slot duration must be positive, got {slot}")));
    }
    let n = model.system().len();
    let mut prev = vec![T::zero(); n];
    let mut taps = vec![Vec::with_capacity(num_slots); n];
    for m in 1..=num_slots {
        let p = model.hit_probs(T::from_usize_lossy(m) * slot)?;
        for i in 0..n {
            let cur = p[i].max(prev[i]);
            taps[i].push(cur - prev[i]);
            prev[i] = cur;
        }
    }
    Ok(taps)
}

pub fn channel_taps<T: Real, M: HitModel<T> + ?Sized>(
    model: &M,
    i: usize,
    slot: T,
    num_slots: usize,
) -> Result<Vec<T>> {
    let n = model.system().len();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    Ok(channel_taps_all(model, slot, num_slots)?.swap_remove(i))
}

/// On-off keying parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OokParams<T> {
    /// Molecules released for a 1 bit.
    pub molecules: u64,
    /// Prior probability of a 1 bit.
    pub prior_one: T,
    pub slot: T,
    /// 1-based slot whose count is used for the decision.
    pub decision_slot: usize,
}

impl<T: Real> OokParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.molecules == 0 {
            return Err(Error::Parameter("need at least one molecule per bit".into()));
        }
        if !(self.prior_one >= T::zero() && self.prior_one <= T::one()) {
            return Err(Error::Parameter(format!(
                "prior must lie in [0, 1], got {}",
                self.prior_one
            )));
        }
        if !(self.slot > T::zero()) {
            return Err(Error::Parameter(format!(
                "slot duration must be positive, got {}",
                self.slot
            )));
        }
        if self.decision_slot == 0 {
            return Err(Error::Parameter("decision slot index starts at 1".into()));
        }
        Ok(())
    }
}

/// Mean slot counts `(λ0, λ1)` given the transmitted bit, from the taps of
/// one receiver. Needs at least `l` taps.
pub fn slot_means<T: Real>(taps: &[T], molecules: u64, prior_one: T, decision_slot: usize) -> Result<(T, T)> {
    if decision_slot == 0 {
        return Err(Error::Parameter("decision slot index starts at 1".into()));
    }
    if taps.len() < decision_slot {
        return Err(Error::WrongCount {
            expected: decision_slot,
            actual: taps.len(),
        });
    }
    let m = T::lit(molecules as f64);
    let isi = taps[1..decision_slot].iter().fold(T::zero(), |a, &b| a + b);
    let lambda0 = prior_one * m * isi;
    Ok((lambda0, m * taps[0] + lambda0))
}

fn ln_poisson_pmf(n: u64, lambda: f64) -> f64 {
    n as f64 * lambda.ln() - lambda - ln_factorial(n as usize)
}

/// `Σ_{n=lo}^{hi} pmf(n)`; terms are summed from the mode outwards.
fn poisson_mass(lo: u64, hi: Option<u64>, lambda: f64) -> f64 {
    let mode = lambda.floor() as u64;
    let start = mode.clamp(lo, hi.unwrap_or(u64::MAX));
    let mut sum = 0.0;
    // upward from start
    let mut n = start;
    loop {
        if hi.is_some_and(|h| n > h) {
            break;
        }
        let term = ln_poisson_pmf(n, lambda).exp();
        sum += term;
        if n > mode && term <= sum * 1e-18 {
            break;
        }
        n += 1;
    }
    // downward from start - 1
    let mut n = start;
    while n > lo {
        n -= 1;
        let term = ln_poisson_pmf(n, lambda).exp();
        sum += term;
        if n < mode && term <= sum * 1e-18 {
            break;
        }
    }
    sum
}

/// Poisson CDF `P(X ≤ η)`.
pub fn poisson_cdf(eta: u64, lambda: f64) -> f64 {
    assert!(
        lambda >= 0.0 && lambda.is_finite(),
        "Poisson mean must be finite and non-negative"
    );
    if lambda == 0.0 {
        return 1.0;
    }
    // sum whichever side holds less mass, for accuracy in the far tail
    if (eta as f64) < lambda {
        poisson_mass(0, Some(eta), lambda).min(1.0)
    } else {
        (1.0 - poisson_mass(eta + 1, None, lambda)).max(0.0)
    }
}

/// Poisson survival `P(X > η)`.
pub fn poisson_sf(eta: u64, lambda: f64) -> f64 {
    assert!(
        lambda >= 0.0 && lambda.is_finite(),
        "Poisson mean must be finite and non-negative"
    );
    if lambda == 0.0 {
        return 0.0;
    }
    if (eta as f64) < lambda {
        (1.0 - poisson_mass(0, Some(eta), lambda)).max(0.0)
    } else {
        poisson_mass(eta + 1, None, lambda).min(1.0)
    }
}

/// Local miss and false-alarm probabilities for threshold `η`.
pub fn local_error_probs<T: Real>(lambda0: T, lambda1: T, eta: u64) -> (T, T) {
    let pm = poisson_cdf(eta, lambda1.to_f64_lossy());
    let pf = poisson_sf(eta, lambda0.to_f64_lossy());
    (T::lit(pm), T::lit(pf))
}

/// Fusion centre declares 1 when at least `k` of `n` receivers do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FusionRule {
    k: usize,
    n: usize,
}

impl FusionRule {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Parameter(format!(
                "fusion needs 1 <= K <= N, got K = {k}, N = {n}"
            )));
        }
        Ok(Self { k, n })
    }

    pub fn or(n: usize) -> Result<Self> {
        Self::new(1, n)
    }

    pub fn and(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn majority(n: usize) -> Result<Self> {
        Self::new(n / 2 + 1, n)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// `Σ_{k ∈ range} C(n,k) p^k (1-p)^(n-k)`, coefficients in log space.
fn binomial_mass(n: usize, p: f64, range: impl Iterator<Item = usize>) -> f64 {
    range
        .map(|k| ln_binomial(n, k).exp() * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
        .sum()
}

/// Global `(Q_m, Q_f)` for identical local decisions.
pub fn fusion_error_probs<T: Real>(pm: T, pf: T, rule: FusionRule) -> (T, T) {
    let (pm, pf) = (pm.to_f64_lossy(), pf.to_f64_lossy());
    let (k, n) = (rule.k, rule.n);
    // miss: fewer than K receivers detect, each detecting w.p. 1 - P_m
    let qm = binomial_mass(n, 1.0 - pm, 0..k);
    let qf = binomial_mass(n, pf, k..=n);
    (T::lit(qm.clamp(0.0, 1.0)), T::lit(qf.clamp(0.0, 1.0)))
}

/// Distribution of the number of successes of independent, non-identical
/// Bernoulli trials.
fn poisson_binomial(ps: &[f64]) -> Vec<f64> {
    let mut dist = vec![1.0];
    for &p in ps {
        let mut next = vec![0.0; dist.len() + 1];
        for (j, &d) in dist.iter().enumerate() {
            next[j] += d * (1.0 - p);
            next[j + 1] += d * p;
        }
        dist = next;
    }
    dist
}

/// Global `(Q_m, Q_f)` when each receiver has its own local probabilities.
pub fn fusion_error_probs_heterogeneous<T: Real>(pm: &[T], pf: &[T], rule: FusionRule) -> Result<(T, T)> {
    if pm.len() != rule.n || pf.len() != rule.n {
        return Err(Error::WrongCount {
            expected: rule.n,
            actual: pm.len().min(pf.len()),
        });
    }
    let detect: Vec<f64> = pm.iter().map(|p| 1.0 - p.to_f64_lossy()).collect();
    let alarm: Vec<f64> = pf.iter().map(|p| p.to_f64_lossy()).collect();
    let qm: f64 = poisson_binomial(&detect)[..rule.k].iter().sum();
    let qf: f64 = poisson_binomial(&alarm)[rule.k..].iter().sum();
    Ok((T::lit(qm.clamp(0.0, 1.0)), T::lit(qf.clamp(0.0, 1.0))))
}

pub fn bit_error_prob<T: Real>(prior_one: T, qm: T, qf: T) -> T {
    prior_one * qm + (T::one() - prior_one) * qf
}

/// Everything the threshold sweep needs: per-receiver slot means.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkInputs<T> {
    pub params: OokParams<T>,
    pub taps: Vec<Vec<T>>,
    pub lambda0: Vec<T>,
    pub lambda1: Vec<T>,
}

impl<T: Real> LinkInputs<T> {
    /// Taps over the first `l` slots and the resulting slot means.
    pub fn from_model<M: HitModel<T> + ?Sized>(model: &M, params: OokParams<T>) -> Result<Self> {
        params.validate()?;
        let taps = channel_taps_all(model, params.slot, params.decision_slot)?;
        Self::from_taps(taps, params)
    }

    pub fn from_taps(taps: Vec<Vec<T>>, params: OokParams<T>) -> Result<Self> {
        params.validate()?;
        if taps.is_empty() {
            return Err(Error::Parameter("need at least one receiver".into()));
        }
        let mut lambda0 = Vec::with_capacity(taps.len());
        let mut lambda1 = Vec::with_capacity(taps.len());
        for h in &taps {
            let (l0, l1) = slot_means(h, params.molecules, params.prior_one, params.decision_slot)?;
            lambda0.push(l0);
            lambda1.push(l1);
        }
        Ok(Self {
            params,
            taps,
            lambda0,
            lambda1,
        })
    }

    pub fn receivers(&self) -> usize {
        self.taps.len()
    }

    /// Full link evaluation at threshold `η`. Identical receivers use the
    /// binomial tail; otherwise the Poisson-binomial distribution.
    pub fn evaluate(&self, rule: FusionRule, eta: u64) -> Result<LinkModel<T>> {
        if rule.n != self.receivers() {
            return Err(Error::WrongCount {
                expected: self.receivers(),
                actual: rule.n,
            });
        }
        let (pm, pf): (Vec<T>, Vec<T>) = self
            .lambda0
            .iter()
            .zip(&self.lambda1)
            .map(|(&l0, &l1)| local_error_probs(l0, l1, eta))
            .unzip();
        let identical = pm.iter().all(|&p| p == pm[0]) && pf.iter().all(|&p| p == pf[0]);
        let (qm, qf) = if identical {
            fusion_error_probs(pm[0], pf[0], rule)
        } else {
            fusion_error_probs_heterogeneous(&pm, &pf, rule)?
        };
        Ok(LinkModel {
            taps: self.taps.clone(),
            lambda0: self.lambda0.clone(),
            lambda1: self.lambda1.clone(),
            eta,
            miss: pm,
            false_alarm: pf,
            global_miss: qm,
            global_false_alarm: qf,
            error_prob: bit_error_prob(self.params.prior_one, qm, qf),
        })
    }

    pub fn error_prob(&self, rule: FusionRule, eta: u64) -> Result<T> {
        Ok(self.evaluate(rule, eta)?.error_prob)
    }

    /// `P_e` for `η = 0..=eta_max`.
    pub fn ber_curve(&self, rule: FusionRule, eta_max: u64) -> Result<Vec<T>> {
        (0..=eta_max).map(|eta| self.error_prob(rule, eta)).collect()
    }
}

/// Evaluated link at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel<T> {
    pub taps: Vec<Vec<T>>,
    pub lambda0: Vec<T>,
    pub lambda1: Vec<T>,
    pub eta: u64,
    pub miss: Vec<T>,
    pub false_alarm: Vec<T>,
    pub global_miss: T,
    pub global_false_alarm: T,
    pub error_prob: T,
}

/// Exhaustive sweep of `η ∈ [0, eta_max]`; the first minimum wins.
pub fn optimal_threshold<T: Real>(inputs: &LinkInputs<T>, rule: FusionRule, eta_max: u64) -> Result<(u64, T)> {
    if eta_max == 0 {
        return Err(Error::Parameter("threshold sweep needs eta_max >= 1".into()));
    }
    let curve = inputs.ber_curve(rule, eta_max)?;
    let mut best = (0, curve[0]);
    for (eta, &pe) in curve.iter().enumerate().skip(1) {
        if pe < best.1 {
            best = (eta as u64, pe);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_uca;
    use crate::model::{IsolatedModel, UcaSeriesModel};
    use crate::series::SeriesControl;

    /// Poisson CDF by naive summation of `e^-λ λ^n / n!`.
    fn naive_cdf(eta: u64, lambda: f64) -> f64 {
        let mut term = (-lambda).exp();
        let mut sum = term;
        for n in 1..=eta {
            term *= lambda / n as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn poisson_reference_value() {
        let want = (-5.0f64).exp() * (1.0 + 5.0 + 12.5 + 125.0 / 6.0);
        assert!((poisson_cdf(3, 5.0) - want).abs() < 1e-15);
        assert!((want - 0.2650).abs() < 1e-4);
        assert_eq!(poisson_cdf(0, 0.0), 1.0);
        assert_eq!(poisson_sf(4, 0.0), 0.0);
    }

    #[test]
    fn poisson_cdf_sf_complement() {
        for lambda in [0.1, 1.0, 7.5, 30.0, 50.0] {
            for eta in [0u64, 1, 5, 20, 60, 200] {
                let s = poisson_cdf(eta, lambda) + poisson_sf(eta, lambda);
                assert!((s - 1.0).abs() < 1e-13);
                assert!((poisson_cdf(eta, lambda) - naive_cdf(eta, lambda)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn local_probability_edges() {
        let (pm, _) = local_error_probs(0.0f64, 0.0, 3);
        assert_eq!(pm, 1.0);
        let (_, pf) = local_error_probs(0.0f64, 4.0, 0);
        assert_eq!(pf, 0.0);
    }

    #[test]
    fn fusion_edges() {
        let (pm, pf) = (0.3f64, 0.2f64);
        let (qm, qf) = fusion_error_probs(pm, pf, FusionRule::new(1, 1).unwrap());
        assert!((qm - pm).abs() < 1e-15 && (qf - pf).abs() < 1e-15);
        let (qm, qf) = fusion_error_probs(pm, pf, FusionRule::or(4).unwrap());
        assert!((qm - pm.powi(4)).abs() < 1e-15);
        assert!((qf - (1.0 - (1.0 - pf).powi(4))).abs() < 1e-15);
        let (qm, qf) = fusion_error_probs(pm, pf, FusionRule::and(4).unwrap());
        assert!((qm - (1.0 - (1.0 - pm).powi(4))).abs() < 1e-15);
        assert!((qf - pf.powi(4)).abs() < 1e-15);
        assert_eq!(FusionRule::majority(4).unwrap().k(), 3);
        assert_eq!(FusionRule::majority(5).unwrap().k(), 3);
        assert!(FusionRule::new(0, 3).is_err());
        assert!(FusionRule::new(4, 3).is_err());
    }

    #[test]
    fn heterogeneous_reduces_to_binomial() {
        let rule = FusionRule::majority(5).unwrap();
        let (qm, qf) = fusion_error_probs(0.15f64, 0.05, rule);
        let (hm, hf) = fusion_error_probs_heterogeneous(&[0.15f64; 5], &[0.05; 5], rule).unwrap();
        assert!((qm - hm).abs() < 1e-15 && (qf - hf).abs() < 1e-15);
        assert!(fusion_error_probs_heterogeneous(&[0.1; 4], &[0.1; 5], rule).is_err());
    }

    #[test]
    fn bit_error_arithmetic() {
        assert_eq!(bit_error_prob(0.5f64, 0.0, 0.0), 0.0);
        assert_eq!(bit_error_prob(1.0f64, 0.25, 0.75), 0.25);
        assert!((bit_error_prob(0.5f64, 0.1, 0.3) - 0.2).abs() < 1e-16);
    }

    #[test]
    fn slot_mean_edges() {
        let taps = [0.1f64, 0.05, 0.02];
        assert_eq!(slot_means(&taps, 100, 0.5f64, 1).unwrap(), (0.0, 10.0));
        let (l0, l1) = slot_means(&taps, 100, 0.0, 3).unwrap();
        assert_eq!(l0, 0.0);
        assert!((l1 - 10.0).abs() < 1e-12);
        let (l0, l1) = slot_means(&taps, 100, 0.5, 3).unwrap();
        assert!((l0 - 3.5).abs() < 1e-12 && (l1 - 13.5).abs() < 1e-12);
        assert!(slot_means(&taps, 100, 0.5, 4).is_err());
    }

    #[test]
    fn ring_gains() {
        let ctl = SeriesControl::default();
        let (sys1, uca1) = build_uca::<f64>(1, 20.0, 10.0, 4.0, 100.0).unwrap();
        let m1 = UcaSeriesModel::new(sys1, uca1.clone(), ctl);
        assert!((array_gain(1.0, &m1).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(asymptotic_gain(&uca1), 1.0);

        let (sys, uca) = build_uca::<f64>(4, 20.0, 0.0, 4.0, 100.0).unwrap();
        let g_inf = asymptotic_gain(&uca);
        let model = UcaSeriesModel::new(sys, uca, ctl);
        let g = array_gain(1e4, &model).unwrap();
        assert!((g - g_inf).abs() < 0.01 * g_inf);
    }

    #[test]
    fn gain_rejects_asymmetric_system() {
        let sys = crate::geometry::FarSystem::new(vec![[20.0, 0.0, 0.0], [0.0, 30.0, 0.0]], 3.0, 100.0).unwrap();
        assert!(matches!(
            array_gain(1.0, &IsolatedModel::new(sys)),
            Err(Error::AsymmetricSystem { index: 1, .. })
        ));
    }

    #[test]
    fn taps_telescope() {
        let (sys, uca) = build_uca::<f64>(4, 10.0, 25.0, 4.0, 100.0).unwrap();
        let model = UcaSeriesModel::new(sys, uca, SeriesControl::default());
        let taps = channel_taps(&model, 0, 5.0, 12).unwrap();
        let p = |t: f64| model.hit_prob(0, t).unwrap();
        assert_eq!(taps[0], p(5.0));
        let sum: f64 = taps.iter().sum();
        assert!((sum - p(60.0)).abs() < 1e-15);
        assert!(taps.iter().all(|&h| h >= 0.0));
    }

    #[test]
    fn no_information_channel() {
        // λ1 = λ0: the best a detector can do is always guess the likelier bit
        let params = OokParams {
            molecules: 100,
            prior_one: 0.3,
            slot: 1.0,
            decision_slot: 1,
        };
        let inputs = LinkInputs::from_taps(vec![vec![0.0f64]], params).unwrap();
        let (_, pe) = optimal_threshold(&inputs, FusionRule::or(1).unwrap(), 20).unwrap();
        assert!((pe - 0.3).abs() < 1e-15);
    }
}
