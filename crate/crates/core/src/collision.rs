//! Expansion in the number of direction reversals.
//!
//! Conditioned on `r` reversals in `[0, t]`, the reversal times are the
//! order statistics of `r` uniform points and the position is
//! `±v(2 t_j - t)` with `j = ⌊(r+1)/2⌋`. Mixing the conditional densities
//! with Poisson(`lambda t / 2`) weights gives the full law. Reversal counts
//! `2n - 1` and `2n` share the same conditional density, so the isotropic
//! series is indexed by the pair `n`.
//!
//! All weights are assembled in log space; `(lambda t/2)^{2n-1} / (n-1)!²`
//! overflows `f64` long before the product with `exp(-lambda t/2)` does.

use crate::domain::{check_time, Atom, Direction, MixedDensity, ModelParams, TruncationPolicy};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::specfun::log_factorial;

fn lf<T: Real>(n: usize) -> T {
    T::lit(log_factorial(n))
}

/// `s = (v²t² - x²) / (vt)²`, clamped to `[0, 1]`.
fn squeeze<T: Real>(x: T, reach: T) -> T {
    let u = x / reach;
    ((T::one() - u) * (T::one() + u)).max(T::zero()).min(T::one())
}

/// Density of the `j`-th smallest of `r` uniform times on `[0, t]`.
pub fn order_stat_pdf<T: Real>(r: usize, j: usize, tj: T, t: T) -> Result<T> {
    check_time(t)?;
    if r == 0 || j == 0 || j > r {
        return Err(Error::Domain(format!("order statistic needs 1 <= j <= r, got r={r}, j={j}")));
    }
    if !(tj >= T::zero() && tj <= t) {
        return Ok(T::zero());
    }
    let u = tj / t;
    let ln_coef = lf::<T>(r) - lf::<T>(j - 1) - lf::<T>(r - j);
    Ok(ln_coef.exp() * (T::one() - u).powi((r - j) as i32) * u.powi((j - 1) as i32) / t)
}

/// Density of one gap between neighbours when `r` points are dropped
/// uniformly on `[0, vt]`.
pub fn gap_pdf<T: Real>(r: usize, d: T, t: T, params: &ModelParams<T>) -> Result<T> {
    check_time(t)?;
    if r == 0 {
        return Err(Error::Domain("gap density needs r >= 1".into()));
    }
    let reach = params.reach(t);
    if !(d >= T::zero() && d <= reach) {
        return Ok(T::zero());
    }
    Ok(T::count(r) / reach * (T::one() - d / reach).powi(r as i32 - 1))
}

/// Isotropic density conditioned on exactly `r >= 1` reversals.
///
/// Computed through the pair index `n = ⌈r/2⌉` as
/// `(2n-1)! / ((n-1)!² 2^{2n-1} vt) · s^{n-1}`, so `rho_r(2n-1) == rho_r(2n)`
/// bit for bit.
pub fn rho_r<T: Real>(r: usize, x: T, t: T, params: &ModelParams<T>) -> Result<T> {
    check_time(t)?;
    if r == 0 {
        return Err(Error::Domain(
            "r = 0 is the pure front atom pair, not a density".into(),
        ));
    }
    let reach = params.reach(t);
    if x.abs() > reach {
        return Ok(T::zero());
    }
    let n = r.div_ceil(2);
    let ln_coef = lf::<T>(2 * n - 1) - T::two() * lf::<T>(n - 1) - T::count(2 * n - 1) * T::LN_2() - reach.ln();
    Ok(ln_coef.exp() * squeeze(x, reach).powi(n as i32 - 1))
}

/// Right-bullet density conditioned on exactly `c >= 1` reversals.
///
/// With `u = (vt + x) / 2vt` this is `c! / (a! b!) · u^b (1-u)^a / 2vt`
/// where `a = ⌊(c-1)/2⌋` and `b = ⌊c/2⌋`: for even `c` the walker has spent
/// one more leg moving right than left, so mass leans toward `+vt`. The
/// left-bullet kernel is the reflection `x -> -x`.
pub fn rho_bullet_c<T: Real>(c: usize, x: T, t: T, params: &ModelParams<T>) -> Result<T> {
    check_time(t)?;
    if c == 0 {
        return Err(Error::Domain(
            "c = 0 is the unreversed atom, not a density".into(),
        ));
    }
    let reach = params.reach(t);
    if x.abs() > reach {
        return Ok(T::zero());
    }
    let (a, b) = ((c - 1) / 2, c / 2);
    let u = ((reach + x) / (T::two() * reach)).max(T::zero()).min(T::one());
    let ln_coef = lf::<T>(c) - lf::<T>(a) - lf::<T>(b);
    Ok(ln_coef.exp() * u.powi(b as i32) * (T::one() - u).powi(a as i32) / (T::two() * reach))
}

/// Sums `term(0), term(1), ...` under `policy`. Adaptive summation only
/// starts counting quiet terms past `peak`, where the terms are known to
/// decrease.
fn sum_policy<T: Real>(policy: &TruncationPolicy, peak: usize, term: impl Fn(usize) -> T) -> Result<T> {
    match *policy {
        TruncationPolicy::FixedTerms(n) => Ok((0..n).fold(T::zero(), |acc, k| acc + term(k))),
        TruncationPolicy::Adaptive(tol) => {
            let mut sum = T::zero();
            let mut quiet = 0;
            let mut last = T::zero();
            for k in 0..tol.max_terms() {
                last = term(k);
                sum = sum + last;
                if k >= peak && tol.is_negligible(last, sum) {
                    quiet += 1;
                    if quiet >= 3 {
                        return Ok(sum);
                    }
                } else {
                    quiet = 0;
                }
            }
            Err(Error::Truncation {
                terms: tol.max_terms(),
                last_term: last.to_f64_lossy().abs(),
            })
        }
    }
}

fn peak_index<T: Real>(t: T, params: &ModelParams<T>) -> usize {
    (params.lambda() * t * T::half()).ceil().to_usize().unwrap_or(usize::MAX - 1) + 1
}

/// Continuous part of the isotropic density from the pair-indexed series.
pub fn isotropic_continuous<T: Real>(x: T, t: T, params: &ModelParams<T>, policy: &TruncationPolicy) -> Result<T> {
    check_time(t)?;
    let reach = params.reach(t);
    if x.abs() > reach {
        return Ok(T::zero());
    }
    let half_lt = params.lambda() * t * T::half();
    let s = squeeze(x, reach);
    let ln_half_lt = half_lt.ln();
    let ln_reach = reach.ln();
    sum_policy(policy, peak_index(t, params), |k| {
        let n = k + 1;
        let nn = T::count(n);
        let ln_mag = -half_lt + T::count(2 * n - 1) * (ln_half_lt - T::LN_2()) - T::two() * lf::<T>(n - 1)
            + (T::one() + half_lt / (T::two() * nn)).ln()
            - ln_reach;
        ln_mag.exp() * s.powi(n as i32 - 1)
    })
}

/// Isotropic law from the reversal expansion: atoms `exp(-lambda t/2)/2` at
/// `±vt` plus [`isotropic_continuous`].
///
/// Convergence is checked at `x = 0`, where every term is largest, so
/// evaluation elsewhere cannot exhaust the budget.
pub fn isotropic_density<T: Real>(t: T, params: &ModelParams<T>, policy: TruncationPolicy) -> Result<MixedDensity<T>> {
    isotropic_continuous(T::zero(), t, params, &policy)?;
    let p = *params;
    let atoms = MixedDensity::front_pair(t, params, params.survival(t));
    MixedDensity::new(t, p, atoms, move |x| {
        isotropic_continuous(x, t, &p, &policy).unwrap_or_else(|_| T::nan())
    })
}

/// Direct Poisson mixture `sum_{r=1}^{r_max} P(r) rho_r`, without the
/// pairing. Used to cross-check the pair-indexed series.
pub fn isotropic_poisson_sum<T: Real>(x: T, t: T, params: &ModelParams<T>, r_max: usize) -> Result<T> {
    let half_lt = params.lambda() * t * T::half();
    let mut sum = T::zero();
    for r in 1..=r_max {
        let w = (-half_lt + T::count(r) * half_lt.ln() - lf::<T>(r)).exp();
        sum = sum + w * rho_r(r, x, t, params)?;
    }
    Ok(sum)
}

/// Poisson mixture of the bullet kernels, `sum_{c=1}^{c_max} P(c) rho_{b,c}`.
pub fn bullet_poisson_sum<T: Real>(x: T, t: T, params: &ModelParams<T>, c_max: usize, dir: Direction) -> Result<T> {
    let half_lt = params.lambda() * t * T::half();
    let xr = dir.sign::<T>() * x;
    let mut sum = T::zero();
    for c in 1..=c_max {
        let w = (-half_lt + T::count(c) * half_lt.ln() - lf::<T>(c)).exp();
        sum = sum + w * rho_bullet_c(c, xr, t, params)?;
    }
    Ok(sum)
}

/// Continuous part of the bullet density from the resummed series
///
/// `exp(-lambda t/2) [ lambda/4v + sum_{n>=1} (vt+x)/(vt)² · (lambda t/4)^{2n}/n!²
///   · s^{n-1} (n + lambda (vt-x)/4v) ]`
///
/// for a right bullet (`x -> -x` for left). This is the Bessel closed form
/// expanded term by term.
pub fn bullet_continuous_series<T: Real>(
    x: T,
    t: T,
    params: &ModelParams<T>,
    policy: &TruncationPolicy,
    dir: Direction,
) -> Result<T> {
    check_time(t)?;
    let reach = params.reach(t);
    if x.abs() > reach {
        return Ok(T::zero());
    }
    let (lambda, v) = (params.lambda(), params.speed());
    let half_lt = lambda * t * T::half();
    let xr = dir.sign::<T>() * x;
    let s = squeeze(xr, reach);
    let ahead = reach + xr;
    let behind_rate = lambda * (reach - xr) / (T::lit(4.0) * v);
    let ln_quarter_lt = (half_lt * T::half()).ln();
    let two_ln_reach = T::two() * reach.ln();
    sum_policy(policy, peak_index(t, params), |n| {
        if n == 0 {
            return (-half_lt).exp() * lambda / (T::lit(4.0) * v);
        }
        let ln_mag = -half_lt + T::count(2 * n) * ln_quarter_lt - T::two() * lf::<T>(n) - two_ln_reach;
        ln_mag.exp() * ahead * s.powi(n as i32 - 1) * (T::count(n) + behind_rate)
    })
}

/// Bullet law from the reversal expansion: one atom `exp(-lambda t/2)` on
/// the leading front plus [`bullet_continuous_series`].
pub fn bullet_density_series<T: Real>(
    t: T,
    params: &ModelParams<T>,
    policy: TruncationPolicy,
    dir: Direction,
) -> Result<MixedDensity<T>> {
    bullet_continuous_series(T::zero(), t, params, &policy, dir)?;
    let p = *params;
    let atom = Atom {
        position: dir.sign::<T>() * params.reach(t),
        weight: params.survival(t),
    };
    MixedDensity::new(t, p, vec![atom], move |x| {
        bullet_continuous_series(x, t, &p, &policy, dir).unwrap_or_else(|_| T::nan())
    })
}

/// The bullet series with a `4 (vt)^{2n}` normalisation, `(vt - x)` leading
/// factor and `lambda (vt + x)/4v` inner term, summed over `n < n_terms`.
///
/// This variant does not reproduce the bullet law: its terms carry the wrong
/// powers of `vt` and the mirrored orientation. It is kept only so the size
/// of that discrepancy can be measured against [`bullet_continuous_series`].
pub fn bullet_series_printed<T: Real>(x: T, t: T, params: &ModelParams<T>, n_terms: usize) -> Result<T> {
    check_time(t)?;
    let reach = params.reach(t);
    if x.abs() > reach {
        return Ok(T::zero());
    }
    let (lambda, v) = (params.lambda(), params.speed());
    let half_lt = lambda * t * T::half();
    let s = squeeze(x, reach);
    let four = T::lit(4.0);
    let mut sum = T::zero();
    for n in 0..n_terms {
        let term = if n == 0 {
            // (vt-x)/4 · s^{-1} · lambda (vt+x)/4v with s = (vt-x)(vt+x)/(vt)²
            lambda * reach * reach / (T::lit(16.0) * v)
        } else {
            let ln_mag = T::count(2 * n) * (half_lt.ln() - reach.ln()) - T::two() * lf::<T>(n);
            (reach - x) / four * ln_mag.exp() * s.powi(n as i32 - 1) * (T::count(n) + lambda * (reach + x) / (four * v))
        };
        sum = sum + term;
    }
    Ok((-half_lt).exp() * sum)
}
