//! Double-double arithmetic: an unevaluated sum `hi + lo` of two `f64`
//! with `|lo| <= ulp(hi) / 2`, giving about 32 significant digits.
//!
//! Products use FMA error-free transforms and quotients use three-step long
//! division, so the basic operations are accurate to a few units of
//! `2^-104`. `exp`, `ln`, `sin`, `cos` and the hyperbolic functions are
//! evaluated at full precision; the inverse trigonometric and hyperbolic
//! functions refine an `f64` estimate with one Newton step or go through
//! `ln`, and are accurate to roughly `1e-30` relative.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, Num, One, ToPrimitive, Zero};

#[derive(Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: Self = Self::new(0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0);
    pub const EPSILON: Self = Self::new(4.930380657631324e-32, 0.0);

    const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    /// Builds `hi + lo`, renormalising the pair.
    pub fn from_parts(hi: f64, lo: f64) -> Self {
        let (h, l) = two_sum(hi, lo);
        Self::checked(h, l)
    }

    #[inline]
    fn checked(hi: f64, lo: f64) -> Self {
        if hi.is_finite() {
            Self { hi, lo }
        } else {
            Self { hi, lo: 0.0 }
        }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    fn scale2(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Self::new(self.hi * f, self.lo * f)
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (h, l) = quick_two_sum(p, e + self.lo * b);
        Self::checked(h, l)
    }

    fn square(self) -> Self {
        self * self
    }

    /// `exp(x) - 1` for `|x| <= ln 2 / 2`.
    fn expm1_reduced(r: Self) -> Self {
        const HALVINGS: i32 = 10;
        let s = r.scale2(-HALVINGS);
        // Taylor series of exp(s) - 1; |s| < 4e-4 so 10 terms reach 1e-35.
        let mut term = s;
        let mut sum = s;
        for k in 2..=12 {
            term = term * s / Self::from(k as f64);
            sum += term;
            if term.hi.abs() < 1e-36 * sum.hi.abs() {
                break;
            }
        }
        // (1 + p)^2 - 1 = p (2 + p)
        for _ in 0..HALVINGS {
            sum = sum * (sum + Self::from(2.0));
        }
        sum
    }

    /// Splits `x = k ln 2 + r` with `|r| <= ln 2 / 2`.
    fn reduce_ln2(self) -> (i32, Self) {
        let k = (self.hi / std::f64::consts::LN_2).round();
        (k as i32, self - <Self as FloatConst>::LN_2().mul_f64(k))
    }

    fn ldexp(self, k: i32) -> Self {
        // Two steps keep 2^k representable when the result is near the
        // extremes of the exponent range.
        let half = k / 2;
        self.scale2(half).scale2(k - half)
    }

    /// Taylor sums of `sin` and `cos` for `|r| <= pi/4`.
    fn sin_cos_reduced(r: Self) -> (Self, Self) {
        let r2 = r.square();
        let mut sin = r;
        let mut cos = Self::ONE;
        let mut term_s = r;
        let mut term_c = Self::ONE;
        for k in 1..=30 {
            let k2 = (2 * k) as f64;
            term_c = -(term_c * r2) / Self::from((k2 - 1.0) * k2);
            term_s = -(term_s * r2) / Self::from(k2 * (k2 + 1.0));
            cos += term_c;
            sin += term_s;
            if term_c.hi.abs() < 1e-36 && term_s.hi.abs() < 1e-36 * sin.hi.abs().max(1e-300) {
                break;
            }
        }
        (sin, cos)
    }

    /// `ln x = 2 atanh((x-1)/(x+1))`, keeping relative accuracy near 1.
    fn ln_near_one(x: Self) -> Self {
        Self::atanh_series((x - Self::ONE) / (x + Self::ONE)).scale2(1)
    }

    /// `atanh z = sum z^{2k+1} / (2k+1)` for `|z| <= 1/3`.
    fn atanh_series(z: Self) -> Self {
        let z2 = z.square();
        let mut power = z;
        let mut sum = z;
        for k in 1..80 {
            power *= z2;
            let term = power / Self::from((2 * k + 1) as f64);
            sum += term;
            if term.hi.abs() <= 1e-34 * sum.hi.abs() {
                break;
            }
        }
        sum
    }

    fn digits(self, significant: usize) -> (bool, Vec<u8>, i32) {
        let negative = self.hi.is_sign_negative();
        let mut x = self.abs();
        if x.hi == 0.0 {
            return (negative, vec![0; significant], 0);
        }
        let mut exp10 = x.hi.log10().floor() as i32;
        x /= Self::from(10.0).powi(exp10);
        if x.hi >= 10.0 {
            x /= Self::from(10.0);
            exp10 += 1;
        } else if x.hi < 1.0 {
            x *= Self::from(10.0);
            exp10 -= 1;
        }
        let mut out = Vec::with_capacity(significant + 1);
        for _ in 0..=significant {
            let d = x.hi.floor().clamp(0.0, 9.0);
            out.push(d as u8);
            x = (x - Self::from(d)) * Self::from(10.0);
        }
        // round on the extra digit
        if out.pop().is_some_and(|d| d >= 5) {
            let mut i = out.len();
            loop {
                if i == 0 {
                    out.insert(0, 1);
                    out.pop();
                    exp10 += 1;
                    break;
                }
                i -= 1;
                if out[i] == 9 {
                    out[i] = 0;
                } else {
                    out[i] += 1;
                    break;
                }
            }
        }
        (negative, out, exp10)
    }

    fn write_sci(self, f: &mut fmt::Formatter<'_>, significant: usize) -> fmt::Result {
        if !self.hi.is_finite() {
            return write!(f, "{}", self.hi);
        }
        let (negative, digits, exp10) = self.digits(significant.max(1));
        if negative {
            f.write_str("-")?;
        }
        write!(f, "{}", digits[0])?;
        if digits.len() > 1 {
            f.write_str(".")?;
            for d in &digits[1..] {
                write!(f, "{d}")?;
            }
        }
        write!(f, "e{exp10}")
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::new(x, 0.0)
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleDouble({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_sci(f, f.precision().map_or(32, |p| p + 1))
    }
}

impl fmt::LowerExp for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_sci(f, f.precision().map_or(32, |p| p + 1))
    }
}

impl Neg for DoubleDouble {
    type Output = Self;

    fn neg(self) -> Self {
        Self::new(-self.hi, -self.lo)
    }
}

impl Add for DoubleDouble {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        if !s1.is_finite() {
            return Self::from(s1);
        }
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (h, l) = quick_two_sum(s1, s2 + t2);
        Self::checked(h, l)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        if !p.is_finite() {
            return Self::from(p);
        }
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (h, l) = quick_two_sum(p, e);
        Self::checked(h, l)
    }
}

impl Div for DoubleDouble {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        if !q1.is_finite() || rhs.hi.is_infinite() {
            return Self::from(q1);
        }
        let r = self - rhs.mul_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs.mul_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (h, l) = quick_two_sum(q1, q2);
        Self::new(h, l) + Self::from(q3)
    }
}

impl Rem for DoubleDouble {
    type Output = Self;

    fn rem(self, rhs: Self) -> Self {
        self - (self / rhs).trunc() * rhs
    }
}

impl AddAssign for DoubleDouble {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for DoubleDouble {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for DoubleDouble {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl DivAssign for DoubleDouble {
    fn div_assign(&mut self, rhs: Self) {
        *self = *self / rhs;
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        Self::ZERO
    }

    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        Self::ONE
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = num_traits::ParseFloatError;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Self::from)
    }
}

impl ToPrimitive for DoubleDouble {
    fn to_i64(&self) -> Option<i64> {
        let t = self.trunc();
        let hi = t.hi.to_i64()?;
        hi.checked_add(t.lo as i64)
    }

    fn to_u64(&self) -> Option<u64> {
        let t = self.trunc();
        let v = t.hi.to_i128()? + t.lo as i128;
        u64::try_from(v).ok()
    }

    fn to_f64(&self) -> Option<f64> {
        Some(self.hi + self.lo)
    }
}

impl FromPrimitive for DoubleDouble {
    fn from_i64(n: i64) -> Option<Self> {
        let hi = n as f64;
        let lo = (i128::from(n) - hi as i128) as f64;
        Some(Self::from_parts(hi, lo))
    }

    fn from_u64(n: u64) -> Option<Self> {
        let hi = n as f64;
        let lo = (i128::from(n) - hi as i128) as f64;
        Some(Self::from_parts(hi, lo))
    }

    fn from_f64(x: f64) -> Option<Self> {
        Some(Self::from(x))
    }

    fn from_f32(x: f32) -> Option<Self> {
        Some(Self::from(f64::from(x)))
    }
}

impl num_traits::NumCast for DoubleDouble {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        n.to_f64().map(<Self as From<f64>>::from)
    }
}

macro_rules! dd_const {
    ($($name:ident = $hi:expr, $lo:expr;)*) => {
        // The high words are the f64 constants, spelled out next to their low words.
        #[allow(clippy::approx_constant)]
        impl FloatConst for DoubleDouble {
            $(
                #[inline]
                fn $name() -> Self {
                    Self::new($hi, $lo)
                }
            )*
        }
    };
}

dd_const! {
    E = 2.718281828459045, 1.4456468917292502e-16;
    FRAC_1_PI = 0.3183098861837907, -1.9678676675182486e-17;
    FRAC_1_SQRT_2 = 0.7071067811865476, -4.833646656726457e-17;
    FRAC_2_PI = 0.6366197723675814, -3.935735335036497e-17;
    FRAC_2_SQRT_PI = 1.1283791670955126, 1.533545961316588e-17;
    FRAC_PI_2 = 1.5707963267948966, 6.123233995736766e-17;
    FRAC_PI_3 = 1.0471975511965979, -1.072081766451091e-16;
    FRAC_PI_4 = 0.7853981633974483, 3.061616997868383e-17;
    FRAC_PI_6 = 0.5235987755982989, -5.360408832255455e-17;
    FRAC_PI_8 = 0.39269908169872414, 1.5308084989341915e-17;
    LN_10 = 2.302585092994046, -2.1707562233822494e-16;
    LN_2 = 0.6931471805599453, 2.3190468138462996e-17;
    LOG10_E = 0.4342944819032518, 1.098319650216765e-17;
    LOG2_E = 1.4426950408889634, 2.0355273740931033e-17;
    PI = 3.141592653589793, 1.2246467991473532e-16;
    SQRT_2 = 1.4142135623730951, -9.667293313452913e-17;
    TAU = 6.283185307179586, 2.4492935982947064e-16;
    LOG10_2 = 0.3010299956639812, -2.8037281277851704e-18;
    LOG2_10 = 3.321928094887362, 1.661617516973592e-16;
}

impl Float for DoubleDouble {
    fn nan() -> Self {
        Self::new(f64::NAN, 0.0)
    }

    fn infinity() -> Self {
        Self::new(f64::INFINITY, 0.0)
    }

    fn neg_infinity() -> Self {
        Self::new(f64::NEG_INFINITY, 0.0)
    }

    fn neg_zero() -> Self {
        Self::new(-0.0, 0.0)
    }

    fn min_value() -> Self {
        -Self::max_value()
    }

    fn min_positive_value() -> Self {
        Self::new(f64::MIN_POSITIVE, 0.0)
    }

    fn max_value() -> Self {
        Self::new(f64::MAX, f64::MAX * f64::EPSILON / 4.0)
    }

    fn epsilon() -> Self {
        Self::EPSILON
    }

    fn is_nan(self) -> bool {
        self.hi.is_nan() || self.lo.is_nan()
    }

    fn is_infinite(self) -> bool {
        self.hi.is_infinite()
    }

    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    fn is_normal(self) -> bool {
        self.hi.is_normal()
    }

    fn classify(self) -> FpCategory {
        self.hi.classify()
    }

    fn floor(self) -> Self {
        let h = self.hi.floor();
        if h == self.hi {
            Self::from_parts(h, self.lo.floor())
        } else {
            Self::from(h)
        }
    }

    fn ceil(self) -> Self {
        let h = self.hi.ceil();
        if h == self.hi {
            Self::from_parts(h, self.lo.ceil())
        } else {
            Self::from(h)
        }
    }

    fn round(self) -> Self {
        let half = Self::from(0.5);
        if self.hi >= 0.0 {
            (self + half).floor()
        } else {
            -((-self) + half).floor()
        }
    }

    fn trunc(self) -> Self {
        if self.hi >= 0.0 {
            self.floor()
        } else {
            self.ceil()
        }
    }

    fn fract(self) -> Self {
        self - self.trunc()
    }

    fn abs(self) -> Self {
        if self.hi.is_sign_negative() {
            -self
        } else {
            self
        }
    }

    fn signum(self) -> Self {
        Self::from(self.hi.signum())
    }

    fn is_sign_positive(self) -> bool {
        self.hi.is_sign_positive()
    }

    fn is_sign_negative(self) -> bool {
        self.hi.is_sign_negative()
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }

    fn recip(self) -> Self {
        Self::ONE / self
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Self::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    fn powf(self, n: Self) -> Self {
        if n.is_zero() {
            return Self::ONE;
        }
        if self.is_zero() {
            return if n.hi > 0.0 { Self::ZERO } else { Self::infinity() };
        }
        if n == n.trunc() && n.hi.abs() < 2f64.powi(31) {
            return self.powi(n.hi as i32 + n.lo as i32);
        }
        (n * self.ln()).exp()
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Self::ZERO } else { Self::nan() };
        }
        if self.hi.is_infinite() {
            return self;
        }
        let a = self.hi.sqrt();
        let y = Self::from(a);
        let correction = (self - y.square()).hi / (2.0 * a);
        y + Self::from(correction)
    }

    fn exp(self) -> Self {
        if self.hi > 709.8 {
            return Self::infinity();
        }
        if self.hi < -745.2 {
            return Self::ZERO;
        }
        if self.hi == 0.0 {
            return Self::ONE;
        }
        let (k, r) = self.reduce_ln2();
        (Self::expm1_reduced(r) + Self::ONE).ldexp(k)
    }

    fn exp2(self) -> Self {
        (self * Self::LN_2()).exp()
    }

    fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                Self::neg_infinity()
            } else {
                Self::nan()
            };
        }
        if self.hi.is_infinite() {
            return self;
        }
        if (self.hi - 1.0).abs() < 0.25 {
            return Self::ln_near_one(self);
        }
        // x = m 2^e with m in [1, 2)
        let e = self.hi.log2().floor() as i32;
        let m = self.ldexp(-e);
        let y = Self::from(m.hi.ln());
        // Newton on exp(y) = m doubles the digits of the f64 estimate.
        let ln_m = y + m * (-y).exp() - Self::ONE;
        ln_m + Self::LN_2().mul_f64(f64::from(e))
    }

    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }

    fn log2(self) -> Self {
        self.ln() * Self::LOG2_E()
    }

    fn log10(self) -> Self {
        self.ln() * Self::LOG10_E()
    }

    fn max(self, other: Self) -> Self {
        if self.is_nan() || other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if self.is_nan() || other < self {
            other
        } else {
            self
        }
    }

    fn abs_sub(self, other: Self) -> Self {
        if self > other {
            self - other
        } else {
            Self::ZERO
        }
    }

    fn cbrt(self) -> Self {
        if self.hi == 0.0 || !self.is_finite() {
            return self;
        }
        let y = Self::from(self.hi.cbrt());
        // Newton: y - (y³ - x) / 3y²
        y - (y.powi(3) - self) / (Self::from(3.0) * y.square())
    }

    fn hypot(self, other: Self) -> Self {
        let (a, b) = (self.abs(), other.abs());
        let (big, small) = if a > b { (a, b) } else { (b, a) };
        if big.is_zero() {
            return Self::ZERO;
        }
        let q = small / big;
        big * (Self::ONE + q.square()).sqrt()
    }

    fn sin(self) -> Self {
        self.sin_cos().0
    }

    fn cos(self) -> Self {
        self.sin_cos().1
    }

    fn tan(self) -> Self {
        let (s, c) = self.sin_cos();
        s / c
    }

    fn asin(self) -> Self {
        if self.abs() > Self::ONE {
            return Self::nan();
        }
        self.atan2((Self::ONE - self.square()).sqrt())
    }

    fn acos(self) -> Self {
        if self.abs() > Self::ONE {
            return Self::nan();
        }
        (Self::ONE - self.square()).sqrt().atan2(self)
    }

    fn atan(self) -> Self {
        if !self.is_finite() {
            return if self.is_nan() {
                self
            } else {
                Self::FRAC_PI_2() * self.signum()
            };
        }
        // Newton on tan(y) = x: y -= (sin y - x cos y) cos y
        let y = Self::from(self.hi.atan());
        let (s, c) = y.sin_cos();
        y - (s - self * c) * c
    }

    fn atan2(self, other: Self) -> Self {
        let (y, x) = (self, other);
        if x.is_zero() {
            return if y.is_zero() {
                Self::ZERO
            } else {
                Self::FRAC_PI_2() * y.signum()
            };
        }
        let base = (y / x).atan();
        if x.hi > 0.0 {
            base
        } else if y.hi >= 0.0 {
            base + Self::PI()
        } else {
            base - Self::PI()
        }
    }

    fn sin_cos(self) -> (Self, Self) {
        if !self.is_finite() {
            return (Self::nan(), Self::nan());
        }
        let k = (self.hi / std::f64::consts::FRAC_PI_2).round();
        let r = self - Self::FRAC_PI_2().mul_f64(k);
        let (s, c) = Self::sin_cos_reduced(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    fn exp_m1(self) -> Self {
        if self.hi.abs() <= 0.34 {
            return Self::expm1_reduced(self);
        }
        self.exp() - Self::ONE
    }

    fn ln_1p(self) -> Self {
        if self.hi.abs() < 0.25 {
            return Self::atanh_series(self / (self + Self::from(2.0))).scale2(1);
        }
        (Self::ONE + self).ln()
    }

    fn sinh(self) -> Self {
        if self.hi.abs() < 0.5 {
            let e = Self::expm1_reduced(self);
            // sinh = (e^x - e^-x)/2 = (p + p/(1+p))/2 with p = e^x - 1
            return (e + e / (Self::ONE + e)) * Self::from(0.5);
        }
        let e = self.exp();
        (e - e.recip()) * Self::from(0.5)
    }

    fn cosh(self) -> Self {
        let e = self.exp();
        (e + e.recip()) * Self::from(0.5)
    }

    fn tanh(self) -> Self {
        if self.hi.abs() > 40.0 {
            return Self::from(self.hi.signum());
        }
        self.sinh() / self.cosh()
    }

    fn asinh(self) -> Self {
        let a = self.abs();
        let v = if a.hi < 0.5 {
            // ln_1p keeps the small-argument digits
            (a + a.square() / (Self::ONE + (Self::ONE + a.square()).sqrt())).ln_1p()
        } else {
            (a + (a.square() + Self::ONE).sqrt()).ln()
        };
        if self.hi < 0.0 {
            -v
        } else {
            v
        }
    }

    fn acosh(self) -> Self {
        if self < Self::ONE {
            return Self::nan();
        }
        (self + (self.square() - Self::ONE).sqrt()).ln()
    }

    fn atanh(self) -> Self {
        if self.abs() > Self::ONE {
            return Self::nan();
        }
        if self.hi.abs() <= 1.0 / 3.0 {
            return Self::atanh_series(self);
        }
        ((Self::ONE + self) / (Self::ONE - self)).ln() * Self::from(0.5)
    }

    fn integer_decode(self) -> (u64, i16, i8) {
        self.hi.integer_decode()
    }
}

impl DoubleDouble {
    /// Total order on the leading word, then the trailing one.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.hi.total_cmp(&other.hi).then(self.lo.total_cmp(&other.lo))
    }
}
