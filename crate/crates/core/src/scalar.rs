//! Scalar abstraction and forward-mode dual numbers.
//!
//! All numeric kernels in this crate (robustness evaluation, integrator
//! rollout) are generic over [`Scalar`]. Instantiating them with `f32`/`f64`
//! gives plain evaluation; instantiating them with [`Dual`] propagates
//! directional derivatives through the same code path, which is how every
//! gradient in this crate is produced.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Float, Num, NumCast, One, ToPrimitive, Zero};

/// Floating-point scalar usable by the numeric kernels.
pub trait Scalar: Float + fmt::Debug + 'static {
    /// Lifts an `f64` constant into the scalar type.
    fn of(value: f64) -> Self {
        Self::from(value).expect("constant not representable in scalar type")
    }
}

impl<T> Scalar for T where T: Float + fmt::Debug + 'static {}

/// Forward-mode dual number carrying `L` tangent lanes.
///
/// The primal part drives all comparisons and branch selection, so swapping
/// `f64` for `Dual<f64, L>` in a kernel leaves its control flow unchanged
/// while the tangents accumulate the directional derivatives.
#[derive(Clone, Copy)]
pub struct Dual<T, const L: usize> {
    /// Primal value.
    pub re: T,
    /// Tangent lanes.
    pub eps: [T; L],
}

impl<T: Scalar, const L: usize> Dual<T, L> {
    /// A constant: zero tangent in every lane.
    pub fn constant(re: T) -> Self {
        Self { re, eps: [T::zero(); L] }
    }

    /// A variable seeded with unit tangent in `lane`.
    pub fn variable(re: T, lane: usize) -> Self {
        let mut eps = [T::zero(); L];
        eps[lane] = T::one();
        Self { re, eps }
    }

    /// Tangent carried by `lane`.
    pub fn tangent(&self, lane: usize) -> T {
        self.eps[lane]
    }

    fn lift(re: T, scale: T, eps: &[T; L]) -> Self {
        Self { re, eps: std::array::from_fn(|i| eps[i] * scale) }
    }
}

impl<T: Scalar, const L: usize> fmt::Debug for Dual<T, L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}+{:?}ε", self.re, self.eps)
    }
}

impl<T: Scalar, const L: usize> PartialEq for Dual<T, L> {
    // Comparisons are by primal value only; tangents never influence
    // branch selection.
    fn eq(&self, other: &Self) -> bool {
        self.re == other.re
    }
}

impl<T: Scalar, const L: usize> PartialOrd for Dual<T, L> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl<T: Scalar, const L: usize> Add for Dual<T, L> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            re: self.re + rhs.re,
            eps: std::array::from_fn(|i| self.eps[i] + rhs.eps[i]),
        }
    }
}

impl<T: Scalar, const L: usize> Sub for Dual<T, L> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            re: self.re - rhs.re,
            eps: std::array::from_fn(|i| self.eps[i] - rhs.eps[i]),
        }
    }
}

impl<T: Scalar, const L: usize> Mul for Dual<T, L> {
    type Output = Self;
    // Product rule mixes operators by nature.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Self) -> Self {
        Self {
            re: self.re * rhs.re,
            eps: std::array::from_fn(|i| self.eps[i] * rhs.re + rhs.eps[i] * self.re),
        }
    }
}

impl<T: Scalar, const L: usize> Div for Dual<T, L> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        let inv = T::one() / rhs.re;
        let inv2 = inv * inv;
        Self {
            re: self.re * inv,
            eps: std::array::from_fn(|i| (self.eps[i] * rhs.re - rhs.eps[i] * self.re) * inv2),
        }
    }
}

impl<T: Scalar, const L: usize> Rem for Dual<T, L> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn rem(self, rhs: Self) -> Self {
        // d(a mod b) = da - trunc(a/b)·db almost everywhere.
        let q = (self.re / rhs.re).trunc();
        Self {
            re: self.re % rhs.re,
            eps: std::array::from_fn(|i| self.eps[i] - q * rhs.eps[i]),
        }
    }
}

impl<T: Scalar, const L: usize> Neg for Dual<T, L> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            re: -self.re,
            eps: std::array::from_fn(|i| -self.eps[i]),
        }
    }
}

impl<T: Scalar, const L: usize> Zero for Dual<T, L> {
    fn zero() -> Self {
        Self::constant(T::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero()
    }
}

impl<T: Scalar, const L: usize> One for Dual<T, L> {
    fn one() -> Self {
        Self::constant(T::one())
    }
}

impl<T: Scalar, const L: usize> Num for Dual<T, L> {
    type FromStrRadixErr = T::FromStrRadixErr;
    fn from_str_radix(str: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        T::from_str_radix(str, radix).map(Self::constant)
    }
}

impl<T: Scalar, const L: usize> ToPrimitive for Dual<T, L> {
    fn to_i64(&self) -> Option<i64> {
        self.re.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.re.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        self.re.to_f64()
    }
}

impl<T: Scalar, const L: usize> NumCast for Dual<T, L> {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        T::from(n).map(Self::constant)
    }
}

impl<T: Scalar, const L: usize> Float for Dual<T, L> {
    fn nan() -> Self {
        Self::constant(T::nan())
    }
    fn infinity() -> Self {
        Self::constant(T::infinity())
    }
    fn neg_infinity() -> Self {
        Self::constant(T::neg_infinity())
    }
    fn neg_zero() -> Self {
        Self::constant(T::neg_zero())
    }
    fn min_value() -> Self {
        Self::constant(T::min_value())
    }
    fn min_positive_value() -> Self {
        Self::constant(T::min_positive_value())
    }
    fn max_value() -> Self {
        Self::constant(T::max_value())
    }
    fn is_nan(self) -> bool {
        self.re.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.re.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite()
    }
    fn is_normal(self) -> bool {
        self.re.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.re.classify()
    }
    fn floor(self) -> Self {
        Self::constant(self.re.floor())
    }
    fn ceil(self) -> Self {
        Self::constant(self.re.ceil())
    }
    fn round(self) -> Self {
        Self::constant(self.re.round())
    }
    fn trunc(self) -> Self {
        Self::constant(self.re.trunc())
    }
    fn fract(self) -> Self {
        Self { re: self.re.fract(), eps: self.eps }
    }
    fn abs(self) -> Self {
        if self.re.is_sign_negative() {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Self::constant(self.re.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.re.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.re.is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        let inv = T::one() / self.re;
        Self::lift(inv, -(inv * inv), &self.eps)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let d = T::from(n).unwrap() * self.re.powi(n - 1);
        Self::lift(self.re.powi(n), d, &self.eps)
    }
    fn powf(self, n: Self) -> Self {
        // d(a^b) = a^b·(b'·ln a + b·a'/a)
        let value = self.re.powf(n.re);
        Self {
            re: value,
            eps: std::array::from_fn(|i| {
                value * (n.eps[i] * self.re.ln() + n.re * self.eps[i] / self.re)
            }),
        }
    }
    fn sqrt(self) -> Self {
        let root = self.re.sqrt();
        Self::lift(root, (T::of(0.5)) / root, &self.eps)
    }
    fn exp(self) -> Self {
        let value = self.re.exp();
        Self::lift(value, value, &self.eps)
    }
    fn exp2(self) -> Self {
        let value = self.re.exp2();
        Self::lift(value, value * T::of(std::f64::consts::LN_2), &self.eps)
    }
    fn ln(self) -> Self {
        Self::lift(self.re.ln(), T::one() / self.re, &self.eps)
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        Self::lift(self.re.log2(), T::one() / (self.re * T::of(std::f64::consts::LN_2)), &self.eps)
    }
    fn log10(self) -> Self {
        Self::lift(self.re.log10(), T::one() / (self.re * T::of(std::f64::consts::LN_10)), &self.eps)
    }
    fn max(self, other: Self) -> Self {
        if self.re >= other.re {
            self
        } else {
            other
        }
    }
    fn min(self, other: Self) -> Self {
        if self.re <= other.re {
            self
        } else {
            other
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        if self.re > other.re {
            self - other
        } else {
            Self::zero()
        }
    }
    fn cbrt(self) -> Self {
        let root = self.re.cbrt();
        Self::lift(root, T::one() / (T::of(3.0) * root * root), &self.eps)
    }
    fn hypot(self, other: Self) -> Self {
        let h = self.re.hypot(other.re);
        Self {
            re: h,
            eps: std::array::from_fn(|i| (self.re * self.eps[i] + other.re * other.eps[i]) / h),
        }
    }
    fn sin(self) -> Self {
        Self::lift(self.re.sin(), self.re.cos(), &self.eps)
    }
    fn cos(self) -> Self {
        Self::lift(self.re.cos(), -self.re.sin(), &self.eps)
    }
    fn tan(self) -> Self {
        let c = self.re.cos();
        Self::lift(self.re.tan(), T::one() / (c * c), &self.eps)
    }
    fn asin(self) -> Self {
        Self::lift(self.re.asin(), (T::one() - self.re * self.re).sqrt().recip(), &self.eps)
    }
    fn acos(self) -> Self {
        Self::lift(self.re.acos(), -(T::one() - self.re * self.re).sqrt().recip(), &self.eps)
    }
    fn atan(self) -> Self {
        Self::lift(self.re.atan(), (T::one() + self.re * self.re).recip(), &self.eps)
    }
    fn atan2(self, other: Self) -> Self {
        let denom = self.re * self.re + other.re * other.re;
        Self {
            re: self.re.atan2(other.re),
            eps: std::array::from_fn(|i| (other.re * self.eps[i] - self.re * other.eps[i]) / denom),
        }
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Self {
        Self::lift(self.re.exp_m1(), self.re.exp(), &self.eps)
    }
    fn ln_1p(self) -> Self {
        Self::lift(self.re.ln_1p(), (T::one() + self.re).recip(), &self.eps)
    }
    fn sinh(self) -> Self {
        Self::lift(self.re.sinh(), self.re.cosh(), &self.eps)
    }
    fn cosh(self) -> Self {
        Self::lift(self.re.cosh(), self.re.sinh(), &self.eps)
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Self::lift(t, T::one() - t * t, &self.eps)
    }
    fn asinh(self) -> Self {
        Self::lift(self.re.asinh(), (self.re * self.re + T::one()).sqrt().recip(), &self.eps)
    }
    fn acosh(self) -> Self {
        Self::lift(self.re.acosh(), (self.re * self.re - T::one()).sqrt().recip(), &self.eps)
    }
    fn atanh(self) -> Self {
        Self::lift(self.re.atanh(), (T::one() - self.re * self.re).recip(), &self.eps)
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.re.integer_decode()
    }
}
