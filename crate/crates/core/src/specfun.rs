//! Special-function kernels used by the analytic solutions.
//!
//! Everything here is a positive-term power series except the `√y` pair,
//! which branches on the sign of `y` so callers never touch complex numbers.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Stopping rule for the positive-term series.
///
/// A sum stops once three consecutive terms satisfy
/// `|term| < abs + rel * |partial sum|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalTolerance {
    rel: f64,
    abs: f64,
    max_terms: usize,
}

impl EvalTolerance {
    pub fn new(rel: f64, abs: f64, max_terms: usize) -> Result<Self> {
        if !(rel > 0.0 && rel.is_finite()) || !(abs >= 0.0 && abs.is_finite()) || max_terms == 0 {
            return Err(Error::InvalidParams(format!(
                "tolerance needs rel > 0, abs >= 0, max_terms >= 1 (got rel={rel}, abs={abs}, max_terms={max_terms})"
            )));
        }
        Ok(Self { rel, abs, max_terms })
    }

    pub fn rel(&self) -> f64 {
        self.rel
    }

    pub fn abs(&self) -> f64 {
        self.abs
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn with_max_terms(self, max_terms: usize) -> Result<Self> {
        Self::new(self.rel, self.abs, max_terms)
    }

    #[inline]
    pub(crate) fn is_negligible<T: Real>(&self, term: T, sum: T) -> bool {
        term.abs() < T::lit(self.abs) + T::lit(self.rel) * sum.abs()
    }
}

impl Default for EvalTolerance {
    fn default() -> Self {
        Self {
            rel: 1e-15,
            abs: 1e-300,
            max_terms: 10_000,
        }
    }
}

/// Number of consecutive negligible terms required before stopping.
const QUIET_TERMS: usize = 3;

/// Sums `first + next(0, first) + ...` where `next(k, term_k)` yields term
/// `k + 1`. Stops with the three-quiet-terms rule, never before index
/// `min_terms`.
pub(crate) fn sum_series<T: Real>(
    first: T,
    tol: &EvalTolerance,
    min_terms: usize,
    mut next: impl FnMut(usize, T) -> T,
) -> Result<T> {
    let mut sum = first;
    let mut term = first;
    let mut quiet = usize::from(tol.is_negligible(first, sum) && min_terms == 0);
    for k in 0..tol.max_terms() {
        if quiet >= QUIET_TERMS {
            return Ok(sum);
        }
        term = next(k, term);
        sum = sum + term;
        if k + 1 >= min_terms && tol.is_negligible(term, sum) {
            quiet += 1;
        } else {
            quiet = 0;
        }
    }
    if quiet >= QUIET_TERMS {
        return Ok(sum);
    }
    Err(Error::Truncation {
        terms: tol.max_terms(),
        last_term: term.to_f64_lossy().abs(),
    })
}

fn check_bessel_arg<T: Real>(z: T) -> Result<()> {
    if !z.is_finite() || z < T::zero() {
        return Err(Error::Domain(format!(
            "Bessel argument must be finite and nonnegative, got {z}"
        )));
    }
    Ok(())
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0<T: Real>(z: T) -> Result<T> {
    check_bessel_arg(z)?;
    let q = z * z / T::lit(4.0);
    sum_series(T::one(), &T::series_tolerance(), 0, |j, term| {
        let j1 = T::count(j + 1);
        term * q / (j1 * j1)
    })
}

/// `I1(z) / z`, finite at the origin where it equals 1/2.
pub fn i1_over_z<T: Real>(z: T) -> Result<T> {
    check_bessel_arg(z)?;
    let q = z * z / T::lit(4.0);
    sum_series(T::half(), &T::series_tolerance(), 0, |j, term| {
        term * q / (T::count(j + 1) * T::count(j + 2))
    })
}

/// Modified Bessel function of the first kind, order one.
pub fn bessel_i1<T: Real>(z: T) -> Result<T> {
    Ok(z * i1_over_z(z)?)
}

fn kummer<T: Real>(a: usize, b: usize, z: T) -> Result<T> {
    if !z.is_finite() || z < T::zero() {
        return Err(Error::Domain(format!(
            "1F1({a}, {b}; z) is only evaluated for finite z >= 0, got {z}"
        )));
    }
    if a == b {
        return Ok(z.exp());
    }
    let (a, b) = (T::count(a), T::count(b));
    sum_series(T::one(), &T::series_tolerance(), 0, |c, term| {
        let c = T::count(c);
        term * z * (a + c) / ((c + T::one()) * (b + c))
    })
}

/// Kummer function restricted to the family `1F1(m + 1, 2m + 1; z)`,
/// which is what the even moments of the flight need.
pub fn hyp1f1_moment<T: Real>(m: usize, z: T) -> Result<T> {
    kummer(m + 1, 2 * m + 1, z)
}

/// `1F1(m + 1, 2m + 2; z)`, the family behind the odd moments of a bullet.
pub fn hyp1f1_odd_moment<T: Real>(m: usize, z: T) -> Result<T> {
    kummer(m + 1, 2 * m + 2, z)
}

/// `cos(√y)` continued to `cosh(√-y)` for negative `y`.
pub fn cos_sqrt<T: Real>(y: T) -> T {
    if y > T::zero() {
        y.sqrt().cos()
    } else if y < T::zero() {
        (-y).sqrt().cosh()
    } else {
        T::one()
    }
}

/// Below this `|y|` the `sin(√y)/√y` pair is summed from its Taylor series.
const SINC_TAYLOR_BELOW: f64 = 1e-2;

/// `sin(√y)/√y` continued to `sinh(√-y)/√-y`; equals 1 at `y = 0`.
pub fn sinc_sqrt<T: Real>(y: T) -> T {
    if y.abs() < T::lit(SINC_TAYLOR_BELOW) {
        // sum_k (-y)^k / (2k+1)!
        let mut sum = T::one();
        let mut term = T::one();
        let mut k = 0usize;
        loop {
            term = -term * y / (T::count(2 * k + 2) * T::count(2 * k + 3));
            sum = sum + term;
            k += 1;
            if term.abs() <= T::epsilon() * sum.abs() || k > 40 {
                return sum;
            }
        }
    }
    if y > T::zero() {
        let u = y.sqrt();
        u.sin() / u
    } else {
        let u = (-y).sqrt();
        u.sinh() / u
    }
}

const LOG_FACTORIAL_TABLE_LEN: usize = 256;

fn log_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut exact: u64 = 1;
        (0..LOG_FACTORIAL_TABLE_LEN)
            .map(|n| {
                if n <= 20 {
                    if n > 1 {
                        exact *= n as u64;
                    }
                    (exact as f64).ln()
                } else {
                    libm::lgamma(n as f64 + 1.0)
                }
            })
            .collect()
    })
}

/// `ln(n!)`; exact integer factorials up to 20, `lgamma` above.
pub fn log_factorial(n: usize) -> f64 {
    match log_factorial_table().get(n) {
        Some(&v) => v,
        None => libm::lgamma(n as f64 + 1.0),
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation = self.compensation + ((self.sum - t) + x);
        } else {
            self.compensation = self.compensation + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.compensation
    }
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self::new()
    }
}
