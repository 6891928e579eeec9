//! Complex numbers carried as their natural logarithm.
//!
//! Gaussian prefactors such as `exp(4α²)` and `exp(-4α²)` overflow or
//! underflow long before the physically relevant ratios do. Every
//! coefficient in the coherent-state algebra is therefore stored as
//! `ln z = ln|z| + i·arg z`, and sums go through a shifted accumulator.

use std::fmt;
use std::ops::{Div, Mul, Neg};

use num_complex::Complex64 as C64;

/// A complex number `z` stored as `ln z`. Zero is `re = -inf`.
#[derive(Clone, Copy, PartialEq)]
pub struct LogAmp(C64);

impl LogAmp {
    pub const ZERO: LogAmp = LogAmp(C64::new(f64::NEG_INFINITY, 0.0));
    pub const ONE: LogAmp = LogAmp(C64::new(0.0, 0.0));

    /// Builds the amplitude `exp(exponent)` without ever exponentiating.
    pub fn from_exponent(exponent: C64) -> Self {
        LogAmp(C64::new(exponent.re, wrap_phase(exponent.im)))
    }

    pub fn from_value(z: C64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            LogAmp::ZERO
        } else {
            LogAmp(C64::new(z.norm().ln(), z.arg()))
        }
    }

    pub fn from_polar(log_magnitude: f64, phase: f64) -> Self {
        LogAmp(C64::new(log_magnitude, wrap_phase(phase)))
    }

    pub fn log_magnitude(self) -> f64 {
        self.0.re
    }

    pub fn phase(self) -> f64 {
        self.0.im
    }

    pub fn is_zero(self) -> bool {
        self.0.re == f64::NEG_INFINITY
    }

    pub fn is_finite(self) -> bool {
        !self.0.re.is_nan() && self.0.re != f64::INFINITY && self.0.im.is_finite()
    }

    /// The complex value. Underflows gracefully to zero.
    pub fn value(self) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar(self.0.re.exp(), self.0.im)
    }

    /// The complex value of `self · exp(shift)`.
    pub fn value_scaled(self, shift: f64) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar((self.0.re + shift).exp(), self.0.im)
    }

    pub fn conj(self) -> Self {
        if self.is_zero() {
            return self;
        }
        LogAmp(C64::new(self.0.re, wrap_phase(-self.0.im)))
    }

    pub fn scale_log(self, log_factor: f64) -> Self {
        if self.is_zero() {
            return self;
        }
        LogAmp(C64::new(self.0.re + log_factor, self.0.im))
    }

    /// `self + other` evaluated as a log-sum-exp.
    pub fn add(self, other: LogAmp) -> LogAmp {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let shift = self.0.re.max(other.0.re);
        let sum = self.value_scaled(-shift) + other.value_scaled(-shift);
        LogAmp::from_value(sum).scale_log(shift)
    }
}

impl Mul for LogAmp {
    type Output = LogAmp;

    fn mul(self, rhs: LogAmp) -> LogAmp {
        if self.is_zero() || rhs.is_zero() {
            return LogAmp::ZERO;
        }
        LogAmp::from_exponent(self.0 + rhs.0)
    }
}

impl Div for LogAmp {
    type Output = LogAmp;

    fn div(self, rhs: LogAmp) -> LogAmp {
        if self.is_zero() {
            return LogAmp::ZERO;
        }
        LogAmp::from_exponent(self.0 - rhs.0)
    }
}

impl Neg for LogAmp {
    type Output = LogAmp;

    fn neg(self) -> LogAmp {
        if self.is_zero() {
            return self;
        }
        LogAmp::from_polar(self.0.re, self.0.im + std::f64::consts::PI)
    }
}

impl fmt::Debug for LogAmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({} {:+}i)", self.0.re, self.0.im)
    }
}

/// Running sum of log-domain terms with a floating shift.
///
/// The partial sum is kept as `exp(shift) · partial` with `|partial|` of order
/// one, so terms spanning hundreds of orders of magnitude accumulate without
/// overflow and without losing the dominant contributions.
#[derive(Clone, Copy, Debug)]
pub struct LogSum {
    shift: f64,
    partial: C64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum {
            shift: f64::NEG_INFINITY,
            partial: C64::new(0.0, 0.0),
        }
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, term: LogAmp) {
        if term.is_zero() {
            return;
        }
        let lm = term.log_magnitude();
        if lm > self.shift {
            if self.shift != f64::NEG_INFINITY {
                self.partial *= (self.shift - lm).exp();
            }
            self.shift = lm;
        }
        self.partial += term.value_scaled(-self.shift);
    }

    pub fn total(&self) -> LogAmp {
        if self.shift == f64::NEG_INFINITY {
            return LogAmp::ZERO;
        }
        LogAmp::from_value(self.partial).scale_log(self.shift)
    }

    /// Largest log-magnitude seen so far; used to detect cancellation.
    pub fn peak(&self) -> f64 {
        self.shift
    }
}

impl FromIterator<LogAmp> for LogSum {
    fn from_iter<I: IntoIterator<Item = LogAmp>>(iter: I) -> Self {
        let mut sum = LogSum::new();
        for term in iter {
            sum.push(term);
        }
        sum
    }
}

pub(crate) fn wrap_phase(phase: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    if (-PI..=PI).contains(&phase) {
        phase
    } else {
        let wrapped = phase.rem_euclid(TAU);
        if wrapped > PI {
            wrapped - TAU
        } else {
            wrapped
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_values() {
        let z = C64::new(-0.3, 1.7);
        let back = LogAmp::from_value(z).value();
        assert!((back - z).norm() < 1e-15);
        assert_eq!(LogAmp::from_value(C64::new(0.0, 0.0)).value(), C64::new(0.0, 0.0));
    }

    #[test]
    fn sums_across_extreme_scales() {
        let big = LogAmp::from_polar(5000.0, 0.3);
        let small = LogAmp::from_polar(-5000.0, 1.0);
        let s = big.add(small);
        assert!((s.log_magnitude() - 5000.0).abs() < 1e-12);
        assert!((s.phase() - 0.3).abs() < 1e-12);

        let mut acc = LogSum::new();
        acc.push(LogAmp::from_polar(800.0, 0.0));
        acc.push(LogAmp::from_polar(800.0, std::f64::consts::PI));
        acc.push(LogAmp::from_polar(0.0, 0.0));
        // the two huge terms cancel; the unit term is lost below f64 resolution
        assert!(acc.total().log_magnitude() < 800.0 - 30.0);
    }

    #[test]
    fn product_and_conjugate() {
        let a = LogAmp::from_value(C64::new(1.0, 2.0));
        let b = LogAmp::from_value(C64::new(-0.5, 0.25));
        let p = (a * b.conj()).value();
        let expect = C64::new(1.0, 2.0) * C64::new(-0.5, 0.25).conj();
        assert!((p - expect).norm() < 1e-14);
        assert!(((-a).value() + C64::new(1.0, 2.0)).norm() < 1e-14);
        assert!(((a / b).value() - C64::new(1.0, 2.0) / C64::new(-0.5, 0.25)).norm() < 1e-13);
    }
}
