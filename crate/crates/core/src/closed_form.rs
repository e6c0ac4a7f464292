//! Bessel-function closed forms for the continuous part of the density.
//!
//! These carry no truncation choices beyond the Bessel series themselves and
//! serve as the reference the other methods are checked against. The front
//! term `vt / sqrt(v²t² - x²) · I1(z)` is evaluated as
//! `vt · (lambda / 2v) · I1(z)/z`, which stays finite at `|x| = vt`.

use crate::domain::{check_time, Atom, Direction, MixedDensity, ModelParams};
use crate::error::Result;
use crate::scalar::Real;
use crate::specfun::{bessel_i0, i1_over_z};

/// Bessel argument `(lambda / 2v) sqrt(v²t² - x²)`, clamped at the front.
fn bessel_arg<T: Real>(x: T, t: T, params: &ModelParams<T>) -> T {
    let reach = params.reach(t);
    let gap = ((reach - x) * (reach + x)).max(T::zero());
    params.lambda() / (T::two() * params.speed()) * gap.sqrt()
}

/// Continuous part of the isotropic density (Goldstein's solution).
pub fn goldstein_pdf<T: Real>(x: T, t: T, params: &ModelParams<T>) -> Result<T> {
    check_time(t)?;
    let reach = params.reach(t);
    if x.abs() > reach {
        return Ok(T::zero());
    }
    let (lambda, v) = (params.lambda(), params.speed());
    let z = bessel_arg(x, t, params);
    let prefactor = lambda * params.survival(t) / (T::lit(4.0) * v);
    let front = reach * lambda / (T::two() * v) * i1_over_z(z)?;
    Ok(prefactor * (bessel_i0(z)? + front))
}

/// Continuous part of the bullet density; the walker starts moving in `dir`.
pub fn bullet_continuous<T: Real>(x: T, t: T, params: &ModelParams<T>, dir: Direction) -> Result<T> {
    check_time(t)?;
    let reach = params.reach(t);
    if x.abs() > reach {
        return Ok(T::zero());
    }
    let (lambda, v) = (params.lambda(), params.speed());
    let half_rate = lambda * T::half();
    let w = bessel_arg(x, t, params);
    let ahead = reach + dir.sign::<T>() * x;
    let bracket = half_rate / v * bessel_i0(w)? + half_rate * half_rate * ahead / (v * v) * i1_over_z(w)?;
    Ok(T::half() * params.survival(t) * bracket)
}

/// Full isotropic law: unreversed atoms `exp(-lambda t/2)/2` at `±vt` plus
/// [`goldstein_pdf`].
pub fn goldstein_density<T: Real>(t: T, params: &ModelParams<T>) -> Result<MixedDensity<T>> {
    check_time(t)?;
    goldstein_pdf(T::zero(), t, params)?;
    let p = *params;
    let atoms = MixedDensity::front_pair(t, params, params.survival(t));
    MixedDensity::new(t, p, atoms, move |x| goldstein_pdf(x, t, &p).unwrap_or_else(|_| T::nan()))
}

/// Full bullet law: one atom `exp(-lambda t/2)` on the leading front plus
/// [`bullet_continuous`].
pub fn bullet_pdf_closed<T: Real>(t: T, params: &ModelParams<T>, dir: Direction) -> Result<MixedDensity<T>> {
    check_time(t)?;
    bullet_continuous(T::zero(), t, params, dir)?;
    let p = *params;
    let atom = Atom {
        position: dir.sign::<T>() * params.reach(t),
        weight: params.survival(t),
    };
    MixedDensity::new(t, p, vec![atom], move |x| {
        bullet_continuous(x, t, &p, dir).unwrap_or_else(|_| T::nan())
    })
}
