//! Signed numbers stored on the log scale.
//!
//! Convolution powers and tilted transforms routinely produce magnitudes like
//! `e^{4000}`, far outside `f64` range.  [`LogNumber`] stores a sign and the
//! natural log of the absolute value, with addition done by the usual
//! max-factoring trick, so sums and products of such magnitudes stay exact to
//! a few ulps without ever materializing the linear value.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub};

/// A real number `sign * exp(log_abs)`.
///
/// Zero is canonically `sign == 0` with `log_abs = -inf`; `log_abs` is
/// meaningless when `sign == 0`.  Non-finite `log_abs = +inf` is allowed and
/// behaves like a signed infinity.
#[derive(Clone, Copy, Debug)]
pub struct LogNumber {
    sign: i8,
    log_abs: f64,
}

impl LogNumber {
    pub fn zero() -> Self {
        LogNumber { sign: 0, log_abs: f64::NEG_INFINITY }
    }

    pub fn one() -> Self {
        LogNumber { sign: 1, log_abs: 0.0 }
    }

    /// Positive number with the given natural log (`-inf` canonicalizes to zero).
    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            LogNumber::zero()
        } else {
            LogNumber { sign: 1, log_abs: ln }
        }
    }

    /// Number with explicit sign (clamped to {-1, 0, 1}) and log-magnitude.
    pub fn from_sign_ln(sign: i8, ln: f64) -> Self {
        if sign == 0 || ln == f64::NEG_INFINITY {
            return LogNumber::zero();
        }
        LogNumber { sign: sign.signum(), log_abs: ln }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            LogNumber::zero()
        } else {
            LogNumber { sign: if x > 0.0 { 1 } else { -1 }, log_abs: x.abs().ln() }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(&self) -> bool {
        self.sign > 0
    }

    pub fn is_finite(&self) -> bool {
        self.sign == 0 || self.log_abs < f64::INFINITY
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Natural log of the absolute value (`-inf` for zero).
    pub fn ln_abs(&self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.log_abs
        }
    }

    /// Natural log of a number known to be positive.
    ///
    /// Panics on zero or negative values: callers use this only where
    /// positivity is a checked invariant (masses, transforms).
    pub fn ln(&self) -> f64 {
        assert!(self.sign > 0, "ln of a non-positive LogNumber");
        self.log_abs
    }

    /// Linear-scale value; overflows to `±inf` and underflows to `±0` as `f64` does.
    pub fn to_f64(&self) -> f64 {
        self.sign as f64 * self.log_abs.exp()
    }

    pub fn abs(&self) -> Self {
        LogNumber { sign: self.sign.abs(), log_abs: self.log_abs }
    }

    /// Multiply by `exp(shift)` (exact in the log representation).
    pub fn scaled_by_exp(&self, shift: f64) -> Self {
        if self.sign == 0 {
            *self
        } else {
            LogNumber { sign: self.sign, log_abs: self.log_abs + shift }
        }
    }

    /// `self^n` for integer `n >= 0`.
    pub fn powi(&self, n: u32) -> Self {
        if n == 0 {
            return LogNumber::one();
        }
        if self.sign == 0 {
            return LogNumber::zero();
        }
        let sign = if self.sign < 0 && n % 2 == 1 { -1 } else { 1 };
        LogNumber { sign, log_abs: self.log_abs * n as f64 }
    }

    /// Compare absolute values.
    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        self.ln_abs().partial_cmp(&other.ln_abs()).unwrap_or(Ordering::Equal)
    }
}

impl Mul for LogNumber {
    type Output = LogNumber;
    fn mul(self, rhs: LogNumber) -> LogNumber {
        if self.sign == 0 || rhs.sign == 0 {
            return LogNumber::zero();
        }
        LogNumber { sign: self.sign * rhs.sign, log_abs: self.log_abs + rhs.log_abs }
    }
}

impl MulAssign for LogNumber {
    fn mul_assign(&mut self, rhs: LogNumber) {
        *self = *self * rhs;
    }
}

impl Div for LogNumber {
    type Output = LogNumber;
    fn div(self, rhs: LogNumber) -> LogNumber {
        assert!(rhs.sign != 0, "division of LogNumber by zero");
        if self.sign == 0 {
            return LogNumber::zero();
        }
        LogNumber { sign: self.sign * rhs.sign, log_abs: self.log_abs - rhs.log_abs }
    }
}

impl Neg for LogNumber {
    type Output = LogNumber;
    fn neg(self) -> LogNumber {
        LogNumber { sign: -self.sign, log_abs: self.log_abs }
    }
}

impl Add for LogNumber {
    type Output = LogNumber;
    fn add(self, rhs: LogNumber) -> LogNumber {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        // Order by magnitude so the factored-out exponent is the larger one.
        let (big, small) = if self.log_abs >= rhs.log_abs { (self, rhs) } else { (rhs, self) };
        let d = small.log_abs - big.log_abs; // <= 0
        if self.sign == rhs.sign {
            // |big| + |small| = |big| * (1 + e^d)
            LogNumber { sign: big.sign, log_abs: big.log_abs + d.exp().ln_1p() }
        } else if d == 0.0 {
            LogNumber::zero()
        } else {
            // |big| - |small| = |big| * (1 - e^d), d < 0 strictly
            LogNumber { sign: big.sign, log_abs: big.log_abs + (-d.exp()).ln_1p() }
        }
    }
}

impl AddAssign for LogNumber {
    fn add_assign(&mut self, rhs: LogNumber) {
        *self = *self + rhs;
    }
}

impl Sub for LogNumber {
    type Output = LogNumber;
    fn sub(self, rhs: LogNumber) -> LogNumber {
        self + (-rhs)
    }
}

impl PartialEq for LogNumber {
    fn eq(&self, other: &Self) -> bool {
        self.sign == other.sign && (self.sign == 0 || self.log_abs == other.log_abs)
    }
}

impl PartialOrd for LogNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self.sign, other.sign) {
            (a, b) if a < b => Some(Ordering::Less),
            (a, b) if a > b => Some(Ordering::Greater),
            (0, 0) => Some(Ordering::Equal),
            (1, 1) => self.log_abs.partial_cmp(&other.log_abs),
            _ => other.log_abs.partial_cmp(&self.log_abs), // both negative
        }
    }
}

impl fmt::Display for LogNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            1 => write!(f, "exp({})", self.log_abs),
            _ => write!(f, "-exp({})", self.log_abs),
        }
    }
}

/// Streaming sum of the logs of positive terms: returns `ln(sum of exp(terms))`.
///
/// Single pass, factoring out the running maximum; `NEG_INFINITY` entries are
/// skipped so "no term" behaves as zero mass.
pub fn ln_sum_exp(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = LogNumber::zero();
    for t in terms {
        acc += LogNumber::from_ln(t);
    }
    acc.ln_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn add_matches_linear_arithmetic_in_range() {
        let a = LogNumber::from_f64(3.5);
        let b = LogNumber::from_f64(-1.25);
        assert!(close((a + b).to_f64(), 2.25, 1e-14));
        assert!(close((a - b).to_f64(), 4.75, 1e-14));
        assert!(close((a * b).to_f64(), -4.375, 1e-14));
        assert!(close((a / b).to_f64(), -2.8, 1e-14));
    }

    #[test]
    fn huge_magnitudes_survive() {
        // e^5000 + e^4990 = e^5000 (1 + e^-10): far beyond f64 range.
        let a = LogNumber::from_ln(5000.0);
        let b = LogNumber::from_ln(4990.0);
        let s = a + b;
        assert!(close(s.ln(), 5000.0 + (-10.0f64).exp().ln_1p(), 1e-15));
        // Exact cancellation of equal magnitudes.
        assert!((a - a).is_zero());
    }

    #[test]
    fn signed_subtraction_keeps_the_dominant_sign() {
        let a = LogNumber::from_f64(2.0);
        let b = LogNumber::from_f64(-5.0);
        let s = a + b;
        assert_eq!(s.sign(), -1);
        assert!(close(s.to_f64(), -3.0, 1e-14));
    }

    #[test]
    fn powi_and_scale() {
        let a = LogNumber::from_f64(-2.0);
        assert!(close(a.powi(3).to_f64(), -8.0, 1e-14));
        assert!(close(a.powi(2).to_f64(), 4.0, 1e-14));
        assert_eq!(a.powi(0), LogNumber::one());
        assert!(close(a.scaled_by_exp(2.0f64.ln()).to_f64(), -4.0, 1e-14));
    }

    #[test]
    fn ln_sum_exp_streams() {
        let got = ln_sum_exp([0.0, 0.0, f64::NEG_INFINITY, 0.0]);
        assert!(close(got, 3.0f64.ln(), 1e-15));
    }

    proptest! {
        /// Linear round-trip: representable magnitudes come back to a few ulps.
        #[test]
        fn roundtrip_close(x in -1e300f64..1e300f64) {
            prop_assume!(x != 0.0);
            let back = LogNumber::from_f64(x).to_f64();
            // exp(ln x) costs up to |ln x| * eps relatively.
            let tol = 1e-16 * (1.0 + x.abs().ln().abs() * 2.0);
            prop_assert!(close(back, x, tol));
        }

        /// Addition agrees with f64 addition when everything is in range.
        #[test]
        fn add_agrees_with_f64(a in -1e10f64..1e10f64, b in -1e10f64..1e10f64) {
            let sum = (LogNumber::from_f64(a) + LogNumber::from_f64(b)).to_f64();
            let lin = a + b;
            // Cancellation legitimately loses relative precision; compare
            // against the inputs' scale, not the (possibly tiny) result.
            let scale = a.abs().max(b.abs()).max(1e-300);
            prop_assert!((sum - lin).abs() <= 1e-13 * scale);
        }

        /// Multiplication is exact in log space.
        #[test]
        fn mul_agrees_with_f64(a in 1e-5f64..1e5f64, b in 1e-5f64..1e5f64) {
            let prod = (LogNumber::from_f64(a) * LogNumber::from_f64(b)).to_f64();
            prop_assert!(close(prod, a * b, 1e-13));
        }
    }
}
