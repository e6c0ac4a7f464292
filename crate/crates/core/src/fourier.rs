//! Fourier-series representation of the density.
//!
//! In the scattering picture the density obeys the renewal equation
//! `rho = eta + lambda ∫∫ eta(x', t') rho(x - x', t - t')` where `eta` is the
//! unscattered front `exp(-lambda t)/2 [δ(x+vt) + δ(x-vt)]`. Fourier-Laplace
//! transforming gives `rho^ = eta^ / (1 - lambda eta^)` with
//! `eta^(nu, w) = (w + lambda) / ((w + lambda)² + (2 pi nu v)²)`, and the
//! Laplace inversion yields the characteristic function
//!
//! `rho~(nu, t) = exp(-lambda t/2) [cos √a + (lambda t/2) sin √a / √a]`,
//! `a = ((2 pi nu v)² - (lambda/2)²) t²`,
//!
//! real on both sides of `a = 0`.
//!
//! A bullet starting to the right adds the odd part
//! `i exp(-lambda t/2) (2 pi nu v t) sin √a / √a`, so its series carries sine
//! terms as well; the cosine terms are those of the isotropic law.
//!
//! Because the density lives on `[-vt, vt]`, its `2vt`-periodic extension has
//! Fourier coefficients `rho~(h / 2vt, t)`. Those include the unreversed
//! front, whose coefficients `(-1)^h exp(-lambda t/2)` never decay; the
//! resulting ripple does not shrink with more harmonics. Subtracting them
//! leaves a series for the continuous part alone.
//!
//! The moment route rebuilds the same coefficients from the even moments
//! `<x^{2m}> = exp(-lambda t) (vt)^{2m} 1F1(m+1, 2m+1; lambda t)` through the
//! Maclaurin series of the characteristic function; bullets also need the odd
//! moments `<x^{2m+1}> = exp(-lambda t) (vt)^{2m+1} 1F1(m+1, 2m+2; lambda t)`
//! of a right bullet. That series alternates
//! with terms far larger than its sum; evaluate it with
//! [`Extended`](crate::Extended) when harmonics beyond a handful are needed.

use std::sync::Arc;

use crate::domain::{check_time, Atom, InitialCondition, MixedDensity, ModelParams};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::specfun::{cos_sqrt, hyp1f1_moment, hyp1f1_odd_moment, sinc_sqrt, CompensatedSum};

/// `exp(-L)[cos √a + L sinc √a]` with `L = lambda t / 2` and
/// `a = phase² - L²`, `phase = 2 pi nu v t`.
fn transform_at_phase<T: Real>(phase: T, half_lt: T) -> T {
    let a = phase * phase - half_lt * half_lt;
    (-half_lt).exp() * (cos_sqrt(a) + half_lt * sinc_sqrt(a))
}

/// Characteristic function `rho~(nu, t)` of the full isotropic law.
pub fn char_fn<T: Real>(nu: T, t: T, params: &ModelParams<T>) -> Result<T> {
    check_time(t)?;
    let phase = T::two() * T::PI() * nu * params.speed() * t;
    Ok(transform_at_phase(phase, params.lambda() * t * T::half()))
}

/// Fourier coefficient `rho~(h / 2vt, t)` of the periodised full density.
///
/// Uses the phase `pi h` directly, so it agrees with
/// `char_fn(h / 2vt, t)` to rounding.
pub fn harmonic<T: Real>(h: u32, t: T, params: &ModelParams<T>) -> T {
    let phase = T::PI() * T::lit(f64::from(h));
    transform_at_phase(phase, params.lambda() * t * T::half())
}

/// Sine coefficient of a right bullet, `exp(-lambda t/2) pi h sinc √a` with
/// `a = (pi h)² - (lambda t/2)²`. A left bullet has the opposite sign.
pub fn bullet_sine<T: Real>(h: u32, t: T, params: &ModelParams<T>) -> T {
    let half_lt = params.lambda() * t * T::half();
    let phase = T::PI() * T::lit(f64::from(h));
    (-half_lt).exp() * phase * sinc_sqrt(phase * phase - half_lt * half_lt)
}

/// Coefficient of the periodised front pair, `(-1)^h exp(-lambda t/2)`.
pub fn front_coefficient<T: Real>(h: u32, t: T, params: &ModelParams<T>) -> T {
    let s = params.survival(t);
    if h.is_multiple_of(2) {
        s
    } else {
        -s
    }
}

/// Coefficients `c_0..=c_H` of a cosine series on `[-vt, vt]`, plus sine
/// coefficients `s_1..=s_H` for a bullet start.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients<T> {
    ic: InitialCondition,
    t: T,
    params: ModelParams<T>,
    values: Vec<T>,
    /// Empty for the isotropic law; otherwise `sines[h]` with `sines[0] = 0`.
    sines: Vec<T>,
    front_subtracted: bool,
}

impl<T: Real> FourierCoefficients<T> {
    /// Exact coefficients from the characteristic function.
    pub fn exact(
        ic: InitialCondition,
        t: T,
        params: &ModelParams<T>,
        h_max: u32,
        front_subtracted: bool,
    ) -> Result<Self> {
        check_time(t)?;
        let sines = match ic.bullet() {
            None => Vec::new(),
            Some(dir) => (0..=h_max).map(|h| dir.sign::<T>() * bullet_sine(h, t, params)).collect(),
        };
        let values = (0..=h_max)
            .map(|h| {
                let c = harmonic(h, t, params);
                if front_subtracted {
                    c - front_coefficient(h, t, params)
                } else {
                    c
                }
            })
            .collect();
        Ok(Self {
            ic,
            t,
            params: *params,
            values,
            sines,
            front_subtracted,
        })
    }

    /// Coefficients rebuilt from the first `moments + 1` even moments.
    ///
    /// Returns the coefficients together with the worst cancellation report
    /// across harmonics.
    pub fn from_moments(
        ic: InitialCondition,
        t: T,
        params: &ModelParams<T>,
        h_max: u32,
        moments: usize,
        front_subtracted: bool,
    ) -> Result<(Self, MomentSum<T>)> {
        check_time(t)?;
        let mut worst: Option<MomentSum<T>> = None;
        let mut track = |sum: MomentSum<T>| {
            if worst.is_none_or(|w| sum.relative_rounding() > w.relative_rounding()) {
                worst = Some(sum);
            }
        };
        let mut values = Vec::with_capacity(h_max as usize + 1);
        for h in 0..=h_max {
            let sum = coeff_from_moments(h, t, params, moments)?;
            let c = if front_subtracted {
                sum.value - front_coefficient(h, t, params)
            } else {
                sum.value
            };
            values.push(c);
            track(sum);
        }
        let mut sines = Vec::new();
        if let Some(dir) = ic.bullet() {
            sines.push(T::zero());
            for h in 1..=h_max {
                let sum = sine_from_moments(h, t, params, moments)?;
                sines.push(dir.sign::<T>() * sum.value);
                track(sum);
            }
        }
        let coefficients = Self {
            ic,
            t,
            params: *params,
            values,
            sines,
            front_subtracted,
        };
        Ok((coefficients, worst.expect("at least the h = 0 coefficient")))
    }

    pub fn ic(&self) -> InitialCondition {
        self.ic
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn sines(&self) -> &[T] {
        &self.sines
    }

    pub fn front_subtracted(&self) -> bool {
        self.front_subtracted
    }

    pub fn h_max(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    /// Partial sum with harmonics `1..=h`; zero outside `[-vt, vt]`.
    pub fn eval_partial(&self, x: T, h: u32) -> T {
        let reach = self.params.reach(self.t);
        if x.abs() > reach {
            return T::zero();
        }
        let theta = T::PI() * x / reach;
        let h = (h as usize).min(self.values.len() - 1);
        let mut sum = CompensatedSum::new();
        sum.add(self.values[0]);
        for (k, &c) in self.values.iter().enumerate().take(h + 1).skip(1) {
            let angle = theta * T::count(k);
            sum.add(T::two() * c * angle.cos());
            if let Some(&s) = self.sines.get(k) {
                sum.add(T::two() * s * angle.sin());
            }
        }
        sum.value() / (T::two() * reach)
    }

    /// Rounds every coefficient to another scalar type.
    pub fn cast<U: Real>(&self) -> FourierCoefficients<U> {
        let conv = |v: &T| U::lit(v.to_f64_lossy());
        FourierCoefficients {
            ic: self.ic,
            t: U::lit(self.t.to_f64_lossy()),
            params: self.params.cast(),
            values: self.values.iter().map(conv).collect(),
            sines: self.sines.iter().map(conv).collect(),
            front_subtracted: self.front_subtracted,
        }
    }

    /// The law these coefficients describe: front atoms are attached when
    /// the front was subtracted.
    pub fn into_density(self, harmonics: Harmonics) -> Result<MixedDensity<T>> {
        if harmonics == Harmonics::Fixed(0) {
            return Err(Error::InvalidParams("need at least one harmonic".into()));
        }
        let front = self.front_subtracted.then_some(self.ic);
        series_density(self, harmonics, front)
    }

    pub fn eval(&self, x: T) -> T {
        self.eval_partial(x, self.h_max())
    }

    /// `(1/2vt) sum_{h=-H}^{H} c_h²`, the Parseval partial sum of the
    /// cosine part.
    pub fn parseval(&self, h: u32) -> T {
        let reach = self.params.reach(self.t);
        let h = (h as usize).min(self.values.len() - 1);
        let tail = self.values[1..=h].iter().fold(T::zero(), |acc, &c| acc + c * c);
        (self.values[0] * self.values[0] + T::two() * tail) / (T::two() * reach)
    }
}

/// Series with `h_max` harmonics for the full density, periodised front
/// included.
pub fn fourier_series_full<T: Real>(x: T, t: T, params: &ModelParams<T>, h_max: u32) -> Result<T> {
    Ok(FourierCoefficients::exact(InitialCondition::Isotropic, t, params, h_max, false)?.eval(x))
}

/// Series with `h_max` harmonics for the continuous part only.
pub fn fourier_series_continuous<T: Real>(x: T, t: T, params: &ModelParams<T>, h_max: u32) -> Result<T> {
    Ok(FourierCoefficients::exact(InitialCondition::Isotropic, t, params, h_max, true)?.eval(x))
}

/// Harmonic count chosen once per density when none is given. Starting
/// from `base`, the count is doubled until consecutive partial sums differ
/// by less than `tol` on probe points of the bands `0.75 vt <= |x| <= vt`,
/// stopping at `max`. A single count for the whole support keeps the law
/// exactly normalised.
///
/// Only front-subtracted series escalate: with the front folded in, the
/// partial sums never settle near `±vt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveHarmonics {
    pub base: u32,
    pub tol: f64,
    pub max: u32,
}

impl Default for AdaptiveHarmonics {
    fn default() -> Self {
        Self {
            base: 10,
            tol: 1e-6,
            max: 1 << 12,
        }
    }
}

impl AdaptiveHarmonics {
    const PROBES: usize = 32;

    pub fn select<T: Real>(&self, coefficients: &FourierCoefficients<T>) -> u32 {
        let cap = self.max.min(coefficients.h_max()).max(1);
        let mut h = self.base.clamp(1, cap);
        if !coefficients.front_subtracted {
            return h;
        }
        let reach = coefficients.params.reach(coefficients.t);
        let probes: Vec<T> = (0..=Self::PROBES)
            .flat_map(|k| {
                let x = reach * T::lit(0.75 + 0.25 * k as f64 / Self::PROBES as f64);
                [x, -x]
            })
            .collect();
        let partial = |h: u32| -> Vec<T> { probes.iter().map(|&x| coefficients.eval_partial(x, h)).collect() };
        let mut values = partial(h);
        while h < cap {
            h = (2 * h).min(cap);
            let next = partial(h);
            let settled = next.iter().zip(&values).all(|(a, b)| (*a - *b).abs() < T::lit(self.tol));
            values = next;
            if settled {
                break;
            }
        }
        h
    }
}

/// How many harmonics a Fourier density uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Harmonics {
    Fixed(u32),
    Adaptive(AdaptiveHarmonics),
}

fn front_atoms<T: Real>(ic: InitialCondition, t: T, params: &ModelParams<T>) -> Vec<Atom<T>> {
    match ic.bullet() {
        None => MixedDensity::front_pair(t, params, params.survival(t)),
        Some(dir) => vec![Atom {
            position: dir.sign::<T>() * params.reach(t),
            weight: params.survival(t),
        }],
    }
}

fn series_density<T: Real>(
    coefficients: FourierCoefficients<T>,
    harmonics: Harmonics,
    front: Option<InitialCondition>,
) -> Result<MixedDensity<T>> {
    let (t, params) = (coefficients.t, coefficients.params);
    let atoms = front.map_or_else(Vec::new, |ic| front_atoms(ic, t, &params));
    let h = match harmonics {
        Harmonics::Fixed(h) => h,
        Harmonics::Adaptive(a) => {
            let h = a.select(&coefficients);
            log::debug!("adaptive harmonic count {h}");
            h
        }
    };
    let coefficients = Arc::new(coefficients);
    MixedDensity::new(t, params, atoms, move |x| coefficients.eval_partial(x, h))
}

fn harmonic_budget(harmonics: Harmonics) -> Result<u32> {
    match harmonics {
        Harmonics::Fixed(0) => Err(Error::InvalidParams("need at least one harmonic".into())),
        Harmonics::Fixed(h) => Ok(h),
        Harmonics::Adaptive(a) => Ok(a.max.max(a.base)),
    }
}

/// Full-series law. The front is smeared into the cosine series, so there
/// are no atoms and the continuous part may dip below zero.
pub fn fourier_full_density<T: Real>(
    ic: InitialCondition,
    t: T,
    params: &ModelParams<T>,
    harmonics: Harmonics,
) -> Result<MixedDensity<T>> {
    FourierCoefficients::exact(ic, t, params, harmonic_budget(harmonics)?, false)?.into_density(harmonics)
}

/// Front-subtracted series plus the explicit front atoms.
pub fn fourier_continuous_density<T: Real>(
    ic: InitialCondition,
    t: T,
    params: &ModelParams<T>,
    harmonics: Harmonics,
) -> Result<MixedDensity<T>> {
    FourierCoefficients::exact(ic, t, params, harmonic_budget(harmonics)?, true)?.into_density(harmonics)
}

/// Even moment `<x^{2m}>` of the full law (atoms included).
pub fn moment<T: Real>(m: usize, t: T, params: &ModelParams<T>) -> Result<T> {
    check_time(t)?;
    let lt = params.lambda() * t;
    let reach = params.reach(t);
    Ok((-lt).exp() * reach.powi(2 * m as i32) * hyp1f1_moment(m, lt)?)
}

/// Odd moment `<x^{2m+1}>` of a right bullet (atom included). A left bullet
/// has the opposite sign and the isotropic law has none.
pub fn odd_moment<T: Real>(m: usize, t: T, params: &ModelParams<T>) -> Result<T> {
    check_time(t)?;
    let lt = params.lambda() * t;
    let reach = params.reach(t);
    Ok((-lt).exp() * reach.powi(2 * m as i32 + 1) * hyp1f1_odd_moment(m, lt)?)
}

/// Result of a truncated alternating moment sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSum<T> {
    /// The sum, scaled to a Fourier coefficient.
    pub value: T,
    /// Largest partial sum magnitude on the same scale.
    pub peak: T,
}

impl<T: Real> MomentSum<T> {
    /// Estimated relative rounding error, `peak · eps / |value|`.
    pub fn relative_rounding(&self) -> T {
        self.peak * T::epsilon() / self.value.abs()
    }

    /// Raised when cancellation may have cost more than six decimal digits
    /// at `f64` precision, i.e. `relative_rounding > 1e6 · eps_f64`. For
    /// `f64` this is `peak > 1e6 · |value|`.
    pub fn precision_loss(&self) -> bool {
        let limit = T::lit(1e6 * f64::EPSILON);
        !(self.relative_rounding() <= limit)
    }
}

/// Running partial sums `S_0..=S_M` of
/// `S_M = sum_{m=0}^{M} (-1)^m (pi h)^{2m} / (2m)! · 1F1(m+1, 2m+1; lambda t)`.
pub fn moment_partial_sums<T: Real>(h: u32, t: T, params: &ModelParams<T>, moments: usize) -> Result<Vec<T>> {
    alternating_partial_sums(h, t, params, moments, false)
}

/// Running partial sums of
/// `sum_{m=0}^{M} (-1)^m (pi h)^{2m+1} / (2m+1)! · 1F1(m+1, 2m+2; lambda t)`.
pub fn odd_moment_partial_sums<T: Real>(h: u32, t: T, params: &ModelParams<T>, moments: usize) -> Result<Vec<T>> {
    alternating_partial_sums(h, t, params, moments, true)
}

fn alternating_partial_sums<T: Real>(
    h: u32,
    t: T,
    params: &ModelParams<T>,
    moments: usize,
    odd: bool,
) -> Result<Vec<T>> {
    check_time(t)?;
    let lt = params.lambda() * t;
    let phase = T::PI() * T::lit(f64::from(h));
    let phase_sq = phase * phase;
    let shift = usize::from(odd);
    let mut out = Vec::with_capacity(moments + 1);
    let mut sum = CompensatedSum::new();
    // (pi h)^{2m+shift} / (2m+shift)!, with the alternating sign folded in.
    let mut weight = if odd { phase } else { T::one() };
    for m in 0..=moments {
        if m > 0 {
            weight = -weight * phase_sq / (T::count(2 * m - 1 + shift) * T::count(2 * m + shift));
        }
        if weight == T::zero() {
            out.push(sum.value());
            continue;
        }
        let kummer = if odd {
            hyp1f1_odd_moment(m, lt)?
        } else {
            hyp1f1_moment(m, lt)?
        };
        sum.add(weight * kummer);
        out.push(sum.value());
    }
    Ok(out)
}

/// Fourier coefficient `h` from the first `moments + 1` even moments,
/// `exp(-lambda t) S_M`.
pub fn coeff_from_moments<T: Real>(h: u32, t: T, params: &ModelParams<T>, moments: usize) -> Result<MomentSum<T>> {
    if moments == 0 {
        return Err(Error::InvalidParams("need at least one moment beyond the zeroth".into()));
    }
    scaled_moment_sum(h, t, params, moment_partial_sums(h, t, params, moments)?)
}

/// Right-bullet sine coefficient `h` from the first `moments + 1` odd
/// moments.
pub fn sine_from_moments<T: Real>(h: u32, t: T, params: &ModelParams<T>, moments: usize) -> Result<MomentSum<T>> {
    if moments == 0 {
        return Err(Error::InvalidParams("need at least one moment beyond the zeroth".into()));
    }
    scaled_moment_sum(h, t, params, odd_moment_partial_sums(h, t, params, moments)?)
}

fn scaled_moment_sum<T: Real>(h: u32, t: T, params: &ModelParams<T>, partials: Vec<T>) -> Result<MomentSum<T>> {
    let scale = (-params.lambda() * t).exp();
    let peak = partials.iter().fold(T::zero(), |acc, s| acc.max(s.abs()));
    let value = *partials.last().expect("moments + 1 partial sums");
    let out = MomentSum {
        value: scale * value,
        peak: scale * peak,
    };
    if out.precision_loss() {
        log::warn!(
            "moment sum for h = {h} cancels from {:e} down to {:e}; expect ~{:.1e} relative error",
            out.peak.to_f64_lossy(),
            out.value.to_f64_lossy(),
            out.relative_rounding().to_f64_lossy()
        );
    }
    Ok(out)
}

/// Right-hand side of the moment identity,
/// `exp(lambda t/2) [cos √a + (lambda t/2) sinc √a]`, `a = (pi h)² - (lambda t/2)²`.
pub fn identity_rhs<T: Real>(h: u32, t: T, params: &ModelParams<T>) -> T {
    let half_lt = params.lambda() * t * T::half();
    let phase = T::PI() * T::lit(f64::from(h));
    let a = phase * phase - half_lt * half_lt;
    half_lt.exp() * (cos_sqrt(a) + half_lt * sinc_sqrt(a))
}

/// Denominator floor for [`identity_residual`].
pub const RESIDUAL_FLOOR: f64 = 1e-12;

fn relative_gap<T: Real>(lhs: T, rhs: T) -> T {
    (lhs - rhs).abs() / rhs.abs().max(T::lit(RESIDUAL_FLOOR))
}

/// `|S_M - rhs| / max(|rhs|, floor)` for the moment identity.
pub fn identity_residual<T: Real>(h: u32, t: T, params: &ModelParams<T>, moments: usize) -> Result<T> {
    if moments == 0 {
        return Err(Error::InvalidParams("need at least one moment beyond the zeroth".into()));
    }
    let partials = moment_partial_sums(h, t, params, moments)?;
    Ok(relative_gap(partials[moments], identity_rhs(h, t, params)))
}

/// Default cap on the moment count searched by [`required_moments`].
pub const REQUIRED_MOMENTS_CAP: usize = 500;

/// Smallest `M >= 1` whose truncated moment sum meets relative error
/// `eps_r` at every time in `times`.
pub fn required_moments<T: Real>(
    h: u32,
    eps_r: f64,
    times: &[T],
    params: &ModelParams<T>,
    cap: usize,
) -> Result<usize> {
    if !(eps_r > 0.0) {
        return Err(Error::InvalidParams(format!("eps_r must be positive, got {eps_r}")));
    }
    if times.is_empty() {
        return Err(Error::InvalidParams("time grid is empty".into()));
    }
    let cap = cap.max(1);
    let mut residuals = vec![T::zero(); cap + 1];
    for &t in times {
        let partials = moment_partial_sums(h, t, params, cap)?;
        let rhs = identity_rhs(h, t, params);
        for (slot, &s) in residuals.iter_mut().zip(&partials) {
            *slot = slot.max(relative_gap(s, rhs));
        }
    }
    let eps = T::lit(eps_r);
    match (1..=cap).find(|&m| residuals[m] <= eps) {
        Some(m) => Ok(m),
        None => Err(Error::NotAchievable {
            h,
            eps: eps_r,
            cap,
            best: residuals[1..].iter().fold(f64::INFINITY, |b, r| b.min(r.to_f64_lossy())),
        }),
    }
}

/// Density series built from moment-derived coefficients, front included.
pub fn series_from_moments_full<T: Real>(x: T, t: T, params: &ModelParams<T>, h_max: u32, moments: usize) -> Result<T> {
    Ok(FourierCoefficients::from_moments(InitialCondition::Isotropic, t, params, h_max, moments, false)?.0.eval(x))
}

/// Continuous part from moment-derived coefficients with the front's
/// `(-1)^h exp(-lambda t/2)` removed harmonic by harmonic.
pub fn series_from_moments_continuous<T: Real>(
    x: T,
    t: T,
    params: &ModelParams<T>,
    h_max: u32,
    moments: usize,
) -> Result<T> {
    Ok(FourierCoefficients::from_moments(InitialCondition::Isotropic, t, params, h_max, moments, true)?.0.eval(x))
}

/// Moment-route law: front atoms plus the moment-derived continuous series.
pub fn moments_continuous_density<T: Real>(
    ic: InitialCondition,
    t: T,
    params: &ModelParams<T>,
    h_max: u32,
    moments: usize,
) -> Result<(MixedDensity<T>, MomentSum<T>)> {
    let (c, worst) = FourierCoefficients::from_moments(ic, t, params, h_max, moments, true)?;
    Ok((c.into_density(Harmonics::Fixed(h_max))?, worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{bullet_continuous, goldstein_pdf};
    use crate::domain::{quadrature, Direction};
    use crate::Extended;
    use approx::assert_relative_eq;
    use num_traits::Float;

    fn unit() -> ModelParams<f64> {
        ModelParams::unit()
    }

    #[test]
    fn char_fn_at_zero_is_one() {
        let p = ModelParams::new(1.7, 0.4).unwrap();
        for t in [0.1, 1.0, 5.21, 15.21, 100.0] {
            assert_relative_eq!(char_fn(0.0, t, &p).unwrap(), 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn char_fn_bounded_at_high_frequency() {
        let p = unit();
        let t = 3.0;
        let bound = (-t / 2.0f64).exp() * (1.0 + t / 2.0);
        for k in 1..200 {
            let nu = 10.0 * k as f64;
            assert!(char_fn(nu, t, &p).unwrap().abs() <= bound);
        }
    }

    #[test]
    fn char_fn_matches_numerical_transform_of_closed_form() {
        // lambda = v = 1, t = 2, nu = 0.3: cosine transform of rho_G plus the
        // atoms' contribution exp(-lambda t/2) cos(2 pi nu vt).
        let (p, t, nu) = (unit(), 2.0, 0.3);
        let two_pi_nu = 2.0 * std::f64::consts::PI * nu;
        let cont = quadrature(|x| goldstein_pdf(x, t, &p).unwrap() * (two_pi_nu * x).cos(), -2.0, 2.0, 1e-14).unwrap();
        let atoms = (-1.0f64).exp() * (two_pi_nu * 2.0).cos();
        assert_relative_eq!(char_fn(nu, t, &p).unwrap(), cont + atoms, max_relative = 1e-12);
    }

    #[test]
    fn char_fn_continuous_across_branch_point() {
        // 2 pi nu v = lambda / 2
        let p = ModelParams::new(1.3, 0.8).unwrap();
        let nu0 = p.lambda() / (4.0 * std::f64::consts::PI * p.speed());
        let delta = 1e-8;
        for t in [0.5, 2.0, 7.0] {
            let l = p.reversal_rate() * t;
            // cos(sqrt a) and sin(sqrt a)/sqrt a are entire in a, so the slope is finite.
            let slope = -2.0 * std::f64::consts::PI * p.speed() * t * (-l).exp() * (l + l * l / 3.0);
            let below = char_fn(nu0 - delta, t, &p).unwrap();
            let above = char_fn(nu0 + delta, t, &p).unwrap();
            let at = char_fn(nu0, t, &p).unwrap();
            assert!((above - below - 2.0 * delta * slope).abs() < 1e-10, "t={t}");
            assert!((at - 0.5 * (above + below)).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn harmonic_equals_char_fn() {
        let p = ModelParams::new(1.0, 1.3).unwrap();
        let t = 5.21;
        for h in 0..40u32 {
            let nu = f64::from(h) / (2.0 * p.reach(t));
            let a = harmonic(h, t, &p);
            let b = char_fn(nu, t, &p).unwrap();
            assert!((a - b).abs() <= 1e-15, "h={h}: {a} vs {b}");
        }
    }

    #[test]
    fn zeroth_coefficient_is_total_mass() {
        let p = unit();
        for t in [0.5, 5.21] {
            let c = FourierCoefficients::exact(InitialCondition::Isotropic, t, &p, 3, false).unwrap();
            assert_relative_eq!(c.values()[0], 1.0, max_relative = 1e-14);
            assert!(c.values().iter().all(|v| v.abs() <= 1.0 + 1e-15));
            let f = FourierCoefficients::exact(InitialCondition::Isotropic, t, &p, 3, true).unwrap();
            assert_relative_eq!(f.values()[0], 1.0 - p.survival(t), max_relative = 1e-14);
        }
    }

    #[test]
    fn front_coefficients() {
        let p = unit();
        let t = 5.21;
        for h in 0..6u32 {
            let sign = if h % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(front_coefficient(h, t, &p), sign * (-t / 2.0f64).exp());
        }
        // Ten time units later the ripple is e^{-5} smaller.
        let ratio = front_coefficient(3, 15.21, &p) / front_coefficient(3, 5.21, &p);
        assert_relative_eq!(ratio, (-5.0f64).exp(), max_relative = 1e-14);
        assert!((ratio - 0.0067).abs() < 1e-4);
    }

    #[test]
    fn continuous_series_converges_to_goldstein() {
        let p = unit();
        let t = 5.21;
        let c = FourierCoefficients::exact(InitialCondition::Isotropic, t, &p, 2000, true).unwrap();
        for k in 0..=20 {
            let x = -0.9 * t + 1.8 * t * k as f64 / 20.0;
            assert_relative_eq!(c.eval(x), goldstein_pdf(x, t, &p).unwrap(), max_relative = 1e-6);
        }
    }

    #[test]
    fn series_vanish_off_support() {
        let p = unit();
        assert_eq!(fourier_series_full(6.0, 5.21, &p, 15).unwrap(), 0.0);
        assert_eq!(fourier_series_continuous(-6.0, 5.21, &p, 15).unwrap(), 0.0);
    }

    #[test]
    fn full_series_is_continuous_series_plus_periodised_front() {
        let p = unit();
        let t = 2.0;
        let h = 25;
        let reach = p.reach(t);
        for k in 0..=10 {
            let x = -reach + 2.0 * reach * k as f64 / 10.0;
            let front: f64 = (1..=h)
                .map(|j| 2.0 * front_coefficient(j, t, &p) * (std::f64::consts::PI * f64::from(j) * x / reach).cos())
                .sum::<f64>()
                + p.survival(t);
            let full = fourier_series_full(x, t, &p, h).unwrap();
            let cont = fourier_series_continuous(x, t, &p, h).unwrap();
            assert_relative_eq!(full, cont + front / (2.0 * reach), epsilon = 1e-13);
        }
    }

    #[test]
    fn parseval_partial_sums_increase_toward_l2_norm() {
        let p = unit();
        let t = 5.21;
        let c = FourierCoefficients::exact(InitialCondition::Isotropic, t, &p, 400, true).unwrap();
        let target = quadrature(|x| goldstein_pdf(x, t, &p).unwrap().powi(2), -t, t, 1e-14).unwrap();
        let mut prev = 0.0;
        for h in [1, 2, 5, 10, 50, 400] {
            let s = c.parseval(h);
            assert!(s >= prev);
            prev = s;
        }
        assert_relative_eq!(prev, target, max_relative = 1e-7);
    }

    #[test]
    fn adaptive_harmonics_near_front() {
        let p = unit();
        let t = 5.21;
        let a = AdaptiveHarmonics::default();
        let c = FourierCoefficients::exact(InitialCondition::Isotropic, t, &p, a.max, true).unwrap();
        let h = a.select(&c);
        assert!(h > a.base && h <= a.max, "{h}");
        assert!((c.eval_partial(0.97 * t, h) - c.eval_partial(0.97 * t, h / 2)).abs() < a.tol);
        let d = fourier_continuous_density(InitialCondition::Isotropic, t, &p, Harmonics::Adaptive(a)).unwrap();
        let x = 0.97 * t;
        let g = goldstein_pdf(x, t, &p).unwrap();
        assert!((d.continuous(x) - g).abs() < 1e-5, "edge {} vs {g}", d.continuous(x));
        assert_relative_eq!(d.total_mass(1e-12).unwrap(), 1.0, epsilon = 1e-12);
        let full = FourierCoefficients::exact(InitialCondition::Isotropic, t, &p, a.max, false).unwrap();
        assert_eq!(a.select(&full), a.base);
    }

    #[test]
    fn fourier_densities_have_unit_mass() {
        let p = unit();
        for t in [0.5, 1.0, 5.21, 15.21] {
            let cont = fourier_continuous_density(InitialCondition::Isotropic, t, &p, Harmonics::Fixed(10)).unwrap();
            assert_relative_eq!(cont.total_mass(1e-12).unwrap(), 1.0, epsilon = 1e-8);
            let full = fourier_full_density(InitialCondition::Isotropic, t, &p, Harmonics::Fixed(15)).unwrap();
            assert!(full.atoms().is_empty());
            assert_relative_eq!(full.total_mass(1e-12).unwrap(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn moment_basics() {
        let p = ModelParams::<f64>::new(0.9, 1.4).unwrap();
        for t in [0.5, 2.0, 5.21] {
            assert_relative_eq!(moment(0, t, &p).unwrap(), 1.0, max_relative = 1e-14);
            for m in 1..12 {
                let v = moment(m, t, &p).unwrap();
                assert!(v > 0.0 && v <= p.reach(t).powi(2 * m as i32));
            }
        }
    }

    #[test]
    fn second_moment_matches_quadrature() {
        let (p, t) = (unit(), 2.0);
        let reach = p.reach(t);
        let cont = quadrature(|x| x * x * goldstein_pdf(x, t, &p).unwrap(), -reach, reach, 1e-14).unwrap();
        let atoms = reach * reach * p.survival(t);
        assert_relative_eq!(moment(1, t, &p).unwrap(), cont + atoms, max_relative = 1e-12);
        // Telegraph-process variance (2v²/lambda)(t - (1 - e^{-lambda t})/lambda).
        let known = 2.0 * (t - (1.0 - (-t).exp()));
        assert_relative_eq!(moment(1, t, &p).unwrap(), known, max_relative = 1e-13);
    }

    #[test]
    fn moment_coefficient_at_zero_harmonic() {
        let p = unit();
        for t in [0.5, 5.21] {
            for m in [1, 5, 69] {
                let s = coeff_from_moments(0, t, &p, m).unwrap();
                assert_relative_eq!(s.value, 1.0, max_relative = 1e-14);
                assert!(!s.precision_loss());
            }
            assert!(identity_residual(0, t, &p, 1).unwrap() < 1e-14);
        }
        assert!(coeff_from_moments(1, 1.0, &p, 0).is_err());
    }

    #[test]
    fn f64_moment_sums_flag_cancellation() {
        let p = unit();
        let s = coeff_from_moments(15, 1.0, &p, 69).unwrap();
        assert!(s.precision_loss());
        let low = coeff_from_moments(1, 1.0, &p, 30).unwrap();
        assert!(!low.precision_loss());
    }

    #[test]
    fn extended_moment_sums_reproduce_coefficients() {
        let p = ModelParams::<Extended>::unit();
        for &t in &[0.5, 2.0, 15.21] {
            let t = Extended::from(t);
            for h in [1u32, 7, 15] {
                let s = coeff_from_moments(h, t, &p, 69).unwrap();
                assert!(!s.precision_loss());
                let exact = harmonic(h, t, &p);
                let rel = ((s.value - exact) / exact).abs();
                assert!(rel.hi() < 1e-6, "h={h} t={t}: rel {rel}");
            }
        }
    }

    #[test]
    fn required_moments_edge_cases() {
        let p = ModelParams::<Extended>::unit();
        let times = [Extended::from(1.0)];
        assert_eq!(required_moments(0, 1e-12, &times, &p, 500).unwrap(), 1);
        assert!(required_moments(3, 0.0, &times, &p, 500).is_err());
        assert!(required_moments(3, 1e-6, &[], &p, 500).is_err());
        let err = required_moments(15, 1e-6, &times, &p, 20).unwrap_err();
        assert!(matches!(err, Error::NotAchievable { h: 15, cap: 20, .. }));
    }

    #[test]
    fn bullet_series_converges_to_bullet_closed_form() {
        let p = ModelParams::new(1.0, 0.6).unwrap();
        let t = 3.0;
        for (ic, dir) in [
            (InitialCondition::BulletRight, Direction::Right),
            (InitialCondition::BulletLeft, Direction::Left),
        ] {
            // The periodized bullet density jumps at the front, so the error decays like 1/H.
            let worst = |h: u32| {
                let c = FourierCoefficients::exact(ic, t, &p, h, true).unwrap();
                (0..=16)
                    .map(|k| {
                        let x = p.reach(t) * (-0.8 + 1.6 * k as f64 / 16.0);
                        (c.eval(x) - bullet_continuous(x, t, &p, dir).unwrap()).abs()
                    })
                    .fold(0.0, f64::max)
            };
            let (coarse, fine) = (worst(500), worst(4000));
            assert!(fine < 1e-3, "{fine}");
            assert!(fine < coarse / 4.0, "{coarse} {fine}");
        }
    }

    #[test]
    fn bullet_sine_matches_numerical_transform() {
        let (p, t) = (unit(), 2.3);
        let reach = p.reach(t);
        for h in [1u32, 3, 8] {
            let k = std::f64::consts::PI * f64::from(h) / reach;
            let cont = quadrature(
                |x| bullet_continuous(x, t, &p, Direction::Right).unwrap() * (k * x).sin(),
                -reach,
                reach,
                1e-14,
            )
            .unwrap();
            assert_relative_eq!(bullet_sine(h, t, &p), cont, max_relative = 1e-10);
        }
    }

    #[test]
    fn odd_moments_match_quadrature() {
        let (p, t) = (ModelParams::<f64>::new(1.2, 0.9).unwrap(), 2.0);
        let reach = p.reach(t);
        for m in 0..4 {
            let k = 2 * m as i32 + 1;
            let cont = quadrature(
                |x| x.powi(k) * bullet_continuous(x, t, &p, Direction::Right).unwrap(),
                -reach,
                reach,
                1e-14,
            )
            .unwrap();
            let expected = cont + reach.powi(k) * p.survival(t);
            assert_relative_eq!(odd_moment(m, t, &p).unwrap(), expected, max_relative = 1e-11);
        }
    }

    #[test]
    fn sine_coefficients_from_moments() {
        let p = ModelParams::<Extended>::unit();
        let t = Extended::from(5.21);
        for h in [1u32, 6, 15] {
            let s = sine_from_moments(h, t, &p, 69).unwrap();
            let exact = bullet_sine(h, t, &p);
            assert!(((s.value - exact) / exact).abs().hi() < 1e-6, "h={h}");
        }
    }

    #[test]
    fn bullet_densities_have_unit_mass() {
        let p = unit();
        for ic in [InitialCondition::BulletRight, InitialCondition::BulletLeft] {
            let d = fourier_continuous_density(ic, 5.21, &p, Harmonics::Fixed(10)).unwrap();
            assert_eq!(d.atoms().len(), 1);
            assert_relative_eq!(d.total_mass(1e-12).unwrap(), 1.0, epsilon = 1e-8);
        }
    }
}
