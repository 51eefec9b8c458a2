//! Time-domain hitting probabilities from the erfc series.
//!
//! Every closed form here is an alternating series whose layer `n` carries a
//! geometric weight `Wⁿ` and an erfc factor whose argument grows linearly in
//! `n`. The erfc decay eventually beats any geometric growth, so summation
//! stops once a rigorous tail bound drops below the tolerance.

use crate::error::{Error, Result};
use crate::geometry::UcaGeometry;
use crate::scalar::Real;
use crate::special::{erfc, ln_binomial, ln_factorial};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Absolute tolerance on the truncated tail.
    pub tol: f64,
    pub max_terms: usize,
    /// Upper limit on the number of compositions enumerated by the
    /// general-`N` ring series.
    pub enumeration_budget: u128,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_terms: 200,
            enumeration_budget: 50_000_000,
        }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Parameter(format!(
                "series tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_terms == 0 {
            return Err(Error::Parameter("series needs at least one term".into()));
        }
        Ok(())
    }
}

/// Hitting probability of an isolated receiver,
/// `p̄(t, r) = (a/r) erfc((r - a)/sqrt(4Dt))`. Defined as 0 at `t = 0`.
pub fn pbar_time<T: Real>(t: T, r: T, a: T, diffusion: T) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    if !(a > T::zero() && diffusion > T::zero()) {
        return Err(Error::Domain("radius and diffusion must be positive".into()));
    }
    if !(r >= a) {
        return Err(Error::Domain(format!("distance {r} is inside the receiver radius {a}")));
    }
    Ok(pbar_unchecked(t, r, a, diffusion))
}

pub(crate) fn pbar_unchecked<T: Real>(t: T, r: T, a: T, diffusion: T) -> T {
    if t == T::zero() {
        return if r == a { T::one() } else { T::zero() };
    }
    a / r * erfc((r - a) / spread(t, diffusion))
}

fn spread<T: Real>(t: T, diffusion: T) -> T {
    (T::lit(4.0) * diffusion * t).sqrt()
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if t >= T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be non-negative, got {t}")))
    }
}

/// Sums `layer(0), layer(1), ...` until the bound on the remaining layers
/// falls below `ctl.tol`. `bound(n)` must dominate `|layer(n)|` and have a
/// non-increasing ratio `bound(n+1)/bound(n)`.
fn sum_layers<T: Real>(
    mut layer: impl FnMut(usize) -> Result<T>,
    bound: impl Fn(usize) -> T,
    ctl: &SeriesControl,
) -> Result<T> {
    ctl.validate()?;
    let tol = T::lit(ctl.tol);
    let mut sum = T::zero();
    for n in 0..ctl.max_terms {
        sum += layer(n)?;
        let next = bound(n + 1);
        if next == T::zero() {
            return Ok(sum);
        }
        let ratio = bound(n + 2) / next;
        if ratio < T::one() && next / (T::one() - ratio) <= tol {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        terms: ctl.max_terms,
        last_bound: bound(ctl.max_terms).to_f64_lossy(),
    })
}

/// Two-receiver series for receiver 1 in the presence of receiver 2.
#[allow(clippy::too_many_arguments)]
pub fn hp_2far<T: Real>(t: T, r1: T, r2: T, r12: T, r21: T, a: T, diffusion: T, ctl: &SeriesControl) -> Result<T> {
    check_time(t)?;
    if [r1, r2, r12, r21].iter().any(|&x| !(x > a)) {
        return Err(Error::Domain("all distances must exceed the receiver radius".into()));
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    let sd = spread(t, diffusion);
    let ratio = a * a / (r12 * r21);
    let first = |n: usize| {
        let nf = T::from_usize_lossy(n);
        ratio.powi(n as i32) * a / r1 * erfc((r1 - a + nf * (r21 - a) + nf * (r12 - a)) / sd)
    };
    let second = |n: usize| {
        let nf = T::from_usize_lossy(n);
        ratio.powi(n as i32) * a * a / (r2 * r21) * erfc((r2 - a + (nf + T::one()) * (r21 - a) + nf * (r12 - a)) / sd)
    };
    sum_layers(|n| Ok(first(n) - second(n)), |n| first(n) + second(n), ctl)
}

/// Series for `b` mutually equidistant neighbours at common distance `R`
/// (`b = 1`: two-receiver ring, `b = 2`: symmetric triple, `b = 3`:
/// tetrahedral vertex):
/// `(a/r) Σ (-b a/R)ⁿ erfc((r - a + n(R - a))/sqrt(4Dt))`.
#[allow(clippy::too_many_arguments)]
pub fn hp_equidistant_series<T: Real>(
    t: T,
    r: T,
    big_r: T,
    b: u32,
    a: T,
    diffusion: T,
    ctl: &SeriesControl,
) -> Result<T> {
    check_time(t)?;
    if !(1..=3).contains(&b) {
        return Err(Error::Parameter(format!("neighbour count must be 1, 2 or 3, got {b}")));
    }
    if !(big_r > a) || !(r > a) {
        return Err(Error::Domain("distances must exceed the receiver radius".into()));
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    let sd = spread(t, diffusion);
    let w = T::from_u32(b).expect("small integer") * a / big_r;
    let magnitude = |n: usize| {
        let nf = T::from_usize_lossy(n);
        a / r * w.powi(n as i32) * erfc((r - a + nf * (big_r - a)) / sd)
    };
    sum_layers(
        |n| Ok(if n % 2 == 0 { magnitude(n) } else { -magnitude(n) }),
        magnitude,
        ctl,
    )
}

/// Per-receiver hitting probability of a uniform circular array.
///
/// `N ≤ 3` reduce to the equidistant series, `N = 4, 5` use the binomial
/// double sum, and larger rings enumerate weak compositions of each layer
/// over the `δ` neighbour classes with log-space multinomial weights.
pub fn hp_uca_series<T: Real>(t: T, uca: &UcaGeometry<T>, ctl: &SeriesControl) -> Result<T> {
    check_time(t)?;
    let (a, d, r) = (uca.radius, uca.diffusion, uca.distance);
    match uca.count {
        0 => Err(Error::Parameter("empty ring".into())),
        1 => Ok(pbar_unchecked(t, r, a, d)),
        2 => hp_equidistant_series(t, r, uca.neighbor_distances[0], 1, a, d, ctl),
        3 => hp_equidistant_series(t, r, uca.neighbor_distances[0], 2, a, d, ctl),
        4 | 5 => ring_binomial(t, uca, ctl),
        _ => ring_multinomial(t, uca, ctl),
    }
}

/// `ln(c_m a / R_m)` per neighbour class and the slowest erfc increment.
fn class_weights<T: Real>(uca: &UcaGeometry<T>) -> (Vec<f64>, Vec<T>, T) {
    let a = uca.radius;
    let ln_w = uca
        .neighbor_distances
        .iter()
        .enumerate()
        .map(|(m, &rm)| {
            (T::from_usize_lossy(uca.class_multiplicity(m + 1)) * a / rm)
                .to_f64_lossy()
                .ln()
        })
        .collect();
    let steps: Vec<T> = uca.neighbor_distances.iter().map(|&rm| rm - a).collect();
    let min_step = steps.iter().copied().fold(T::infinity(), T::min);
    (ln_w, steps, min_step)
}

fn ring_bound<T: Real>(uca: &UcaGeometry<T>, ln_total: f64, min_step: T, sd: T) -> impl Fn(usize) -> T + '_ {
    let (a, r) = (uca.radius, uca.distance);
    move |n: usize| {
        let e = erfc((r - a + T::from_usize_lossy(n) * min_step) / sd);
        if e == T::zero() {
            return T::zero();
        }
        let ln = (n as f64) * ln_total + (a / r).to_f64_lossy().ln() + e.to_f64_lossy().ln();
        T::lit(ln.exp())
    }
}

fn ln_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn ring_binomial<T: Real>(t: T, uca: &UcaGeometry<T>, ctl: &SeriesControl) -> Result<T> {
    if t == T::zero() {
        return Ok(T::zero());
    }
    let (a, r) = (uca.radius, uca.distance);
    let sd = spread(t, uca.diffusion);
    let (ln_w, steps, min_step) = class_weights(uca);
    let bound = ring_bound(uca, ln_sum_exp(&ln_w), min_step, sd);
    let prefactor = (a / r).to_f64_lossy().ln();
    sum_layers(
        |n| {
            let mut layer = T::zero();
            for k in 0..=n {
                let arg = r - a + T::from_usize_lossy(k) * steps[0] + T::from_usize_lossy(n - k) * steps[1];
                let e = erfc(arg / sd);
                if e == T::zero() {
                    continue;
                }
                let ln = prefactor + ln_binomial(n, k) + k as f64 * ln_w[0] + (n - k) as f64 * ln_w[1];
                layer += T::lit(ln.exp()) * e;
            }
            Ok(if n % 2 == 0 { layer } else { -layer })
        },
        bound,
        ctl,
    )
}

/// Steps through the weak compositions of `n` into `parts` parts, starting
/// from `[n, 0, ..., 0]` and ending at `[0, ..., 0, n]`.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Vec<usize>,
    done: bool,
}

impl Compositions {
    pub fn new(n: usize, parts: usize) -> Self {
        assert!(parts > 0, "compositions need at least one part");
        let mut current = vec![0; parts];
        current[0] = n;
        Self { current, done: false }
    }

    /// Number of weak compositions of `n` into `parts` parts,
    /// `C(n + parts - 1, parts - 1)`, saturating.
    pub fn count(n: usize, parts: usize) -> u128 {
        let mut c: u128 = 1;
        for i in 1..parts as u128 {
            c = c.saturating_mul(n as u128 + i) / i;
        }
        c
    }

    /// Next composition, or `None` when exhausted.
    pub fn next_composition(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        // the caller sees the current state first; advancing happens lazily
        Some(&self.current)
    }

    fn advance(&mut self) {
        let last_idx = self.current.len() - 1;
        let last = self.current[last_idx];
        self.current[last_idx] = 0;
        match (0..last_idx).rev().find(|&j| self.current[j] > 0) {
            Some(j) => {
                self.current[j] -= 1;
                self.current[j + 1] = last + 1;
            }
            None => self.done = true,
        }
    }
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.next_composition()?.to_vec();
        self.advance();
        Some(out)
    }
}

fn ring_multinomial<T: Real>(t: T, uca: &UcaGeometry<T>, ctl: &SeriesControl) -> Result<T> {
    if t == T::zero() {
        return Ok(T::zero());
    }
    let (a, r) = (uca.radius, uca.distance);
    let sd = spread(t, uca.diffusion);
    let (ln_w, steps, min_step) = class_weights(uca);
    let classes = ln_w.len();
    let bound = ring_bound(uca, ln_sum_exp(&ln_w), min_step, sd);
    let prefactor = (a / r).to_f64_lossy().ln();
    let mut enumerated: u128 = 0;
    sum_layers(
        |n| {
            enumerated = enumerated.saturating_add(Compositions::count(n, classes));
            if enumerated > ctl.enumeration_budget {
                return Err(Error::CombinatorialBlowup {
                    needed: enumerated,
                    budget: ctl.enumeration_budget,
                });
            }
            let ln_n_fact = ln_factorial(n);
            let mut layer = T::zero();
            let mut comps = Compositions::new(n, classes);
            while let Some(k) = comps.next_composition() {
                let mut arg = r - a;
                let mut ln = prefactor + ln_n_fact;
                for (m, &km) in k.iter().enumerate() {
                    if km > 0 {
                        arg += T::from_usize_lossy(km) * steps[m];
                        ln += km as f64 * ln_w[m] - ln_factorial(km);
                    }
                }
                let e = erfc(arg / sd);
                if e > T::zero() {
                    layer += T::lit(ln.exp()) * e;
                }
                comps.advance();
            }
            Ok(if n % 2 == 0 { layer } else { -layer })
        },
        bound,
        ctl,
    )
}
