//! Number types the evaluator runs over.
//!
//! Plain `f64` is the default. [`LogNum`] stores a sign and `ln|v|`, which
//! keeps quantities such as `e^{N|x|}` at `|x| = 16384` representable: the
//! growth classifier only ever needs logarithms of ratios.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the evaluator. Domain checks (log of a non-positive
/// number, division by zero) are done by the evaluator through
/// [`Scalar::sign`] before the operation is applied.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Natural log of the magnitude; `-inf` for zero.
    fn ln_abs(self) -> f64;
    /// -1, 0 or 1; NaN inputs report 0 and are caught by `is_nan`.
    fn sign(self) -> i8;
    fn is_nan(self) -> bool;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, c: f64) -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn ln_abs(self) -> f64 {
        self.abs().ln()
    }
    fn sign(self) -> i8 {
        if self > 0.0 {
            1
        } else if self < 0.0 {
            -1
        } else {
            0
        }
    }
    fn is_nan(self) -> bool {
        f64::is_nan(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, c: f64) -> Self {
        f64::powf(self, c)
    }
}

/// A real number stored as `sign · exp(ln)`. Zero has `ln = -inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogNum {
    negative: bool,
    ln: f64,
}

impl LogNum {
    pub const ZERO: LogNum = LogNum { negative: false, ln: f64::NEG_INFINITY };

    /// Builds `sign · e^{ln}` directly.
    pub fn from_ln(negative: bool, ln: f64) -> LogNum {
        LogNum { negative, ln }
    }

    pub fn ln_magnitude(self) -> f64 {
        self.ln
    }

    fn is_zero(self) -> bool {
        self.ln == f64::NEG_INFINITY
    }

    fn nan() -> LogNum {
        LogNum { negative: false, ln: f64::NAN }
    }
}

impl Add for LogNum {
    type Output = LogNum;
    fn add(self, rhs: LogNum) -> LogNum {
        if self.ln.is_nan() || rhs.ln.is_nan() {
            return LogNum::nan();
        }
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (hi, lo) = if self.ln >= rhs.ln { (self, rhs) } else { (rhs, self) };
        if hi.ln == f64::INFINITY {
            if lo.ln == f64::INFINITY && lo.negative != hi.negative {
                return LogNum::nan();
            }
            return hi;
        }
        let d = (lo.ln - hi.ln).exp();
        if hi.negative == lo.negative {
            LogNum { negative: hi.negative, ln: hi.ln + d.ln_1p() }
        } else if lo.ln == hi.ln {
            LogNum::ZERO
        } else {
            LogNum { negative: hi.negative, ln: hi.ln + (-d).ln_1p() }
        }
    }
}

impl Neg for LogNum {
    type Output = LogNum;
    fn neg(self) -> LogNum {
        if self.is_zero() {
            self
        } else {
            LogNum { negative: !self.negative, ln: self.ln }
        }
    }
}

impl Sub for LogNum {
    type Output = LogNum;
    fn sub(self, rhs: LogNum) -> LogNum {
        self + (-rhs)
    }
}

impl Mul for LogNum {
    type Output = LogNum;
    fn mul(self, rhs: LogNum) -> LogNum {
        if self.is_zero() || rhs.is_zero() {
            if self.ln == f64::INFINITY || rhs.ln == f64::INFINITY || self.ln.is_nan() || rhs.ln.is_nan() {
                return LogNum::nan();
            }
            return LogNum::ZERO;
        }
        LogNum { negative: self.negative != rhs.negative, ln: self.ln + rhs.ln }
    }
}

impl Div for LogNum {
    type Output = LogNum;
    fn div(self, rhs: LogNum) -> LogNum {
        if rhs.is_zero() {
            return LogNum::nan();
        }
        if self.is_zero() {
            return if rhs.ln.is_nan() { LogNum::nan() } else { LogNum::ZERO };
        }
        LogNum { negative: self.negative != rhs.negative, ln: self.ln - rhs.ln }
    }
}

impl Scalar for LogNum {
    fn from_f64(v: f64) -> Self {
        if v.is_nan() {
            return LogNum::nan();
        }
        LogNum { negative: v < 0.0, ln: v.abs().ln() }
    }
    fn to_f64(self) -> f64 {
        let m = self.ln.exp();
        if self.negative {
            -m
        } else {
            m
        }
    }
    fn ln_abs(self) -> f64 {
        self.ln
    }
    fn sign(self) -> i8 {
        if self.is_zero() || self.ln.is_nan() {
            0
        } else if self.negative {
            -1
        } else {
            1
        }
    }
    fn is_nan(self) -> bool {
        self.ln.is_nan()
    }
    fn exp(self) -> Self {
        LogNum { negative: false, ln: self.to_f64() }
    }
    fn ln(self) -> Self {
        LogNum::from_f64(self.ln)
    }
    fn sqrt(self) -> Self {
        LogNum { negative: false, ln: 0.5 * self.ln }
    }
    fn sin(self) -> Self {
        // sin y = y(1 + O(y²)) below f64 resolution
        if self.ln < -40.0 {
            return self;
        }
        LogNum::from_f64(self.to_f64().sin())
    }
    fn cos(self) -> Self {
        LogNum::from_f64(self.to_f64().cos())
    }
    fn tanh(self) -> Self {
        if self.ln < -40.0 {
            return self;
        }
        LogNum::from_f64(self.to_f64().tanh())
    }
    fn abs(self) -> Self {
        LogNum { negative: false, ln: self.ln }
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return LogNum::from_f64(1.0);
        }
        if self.is_zero() {
            return if n > 0 { LogNum::ZERO } else { LogNum::nan() };
        }
        LogNum { negative: self.negative && n % 2 != 0, ln: self.ln * n as f64 }
    }
    fn powf(self, c: f64) -> Self {
        if self.is_zero() {
            return if c > 0.0 { LogNum::ZERO } else { LogNum::nan() };
        }
        if self.negative {
            return LogNum::nan();
        }
        LogNum { negative: false, ln: self.ln * c }
    }
}
