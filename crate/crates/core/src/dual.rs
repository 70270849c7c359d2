//! Minimal forward-mode dual scalar.
//!
//! The closed-form SIM residuals are written generically over [`Scalar`] so
//! the same transcription evaluates both the residual (over `f64`) and its
//! exact derivative w.r.t. one chosen variable (over [`Dual`]). This gives the
//! machine-precision derivatives Newton needs without hand-differentiating
//! the long expressions.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn lift(x: f64) -> Self;
    fn sqrt(self) -> Self;
    fn value(self) -> f64;

    /// Small non-negative integer power by repeated multiplication.
    fn powi(self, n: i32) -> Self {
        debug_assert!(n >= 0);
        let mut acc = Self::lift(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Scalar for f64 {
    #[inline]
    fn lift(x: f64) -> Self {
        x
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
}

/// First-order dual number `re + de * eps` with `eps^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub de: f64,
}

impl Dual {
    pub const fn constant(re: f64) -> Self {
        Dual { re, de: 0.0 }
    }

    /// The variable of differentiation: derivative seeded to one.
    pub const fn variable(re: f64) -> Self {
        Dual { re, de: 1.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, rhs: Dual) -> Dual {
        Dual {
            re: self.re + rhs.re,
            de: self.de + rhs.de,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, rhs: Dual) -> Dual {
        Dual {
            re: self.re - rhs.re,
            de: self.de - rhs.de,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, rhs: Dual) -> Dual {
        Dual {
            re: self.re * rhs.re,
            de: self.re * rhs.de + self.de * rhs.re,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, rhs: Dual) -> Dual {
        let inv = 1.0 / rhs.re;
        Dual {
            re: self.re * inv,
            de: (self.de - self.re * rhs.de * inv) * inv,
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual {
            re: -self.re,
            de: -self.de,
        }
    }
}

impl Scalar for Dual {
    #[inline]
    fn lift(x: f64) -> Self {
        Dual::constant(x)
    }
    #[inline]
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual {
            re: r,
            de: if r == 0.0 { f64::NAN } else { 0.5 * self.de / r },
        }
    }
    #[inline]
    fn value(self) -> f64 {
        self.re
    }
}
