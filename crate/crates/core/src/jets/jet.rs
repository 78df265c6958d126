use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Truncated Taylor data of a scalar function of the energy density `t`:
/// the value and its first three derivatives.
///
/// Slot `v3` of a jet produced by [`Jet3::derivative`] is unknown and is
/// stored as NaN, so anything that depends on it is visibly poisoned
/// while the lower slots stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Jet3 {
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

impl Jet3 {
    pub const ZERO: Jet3 = Jet3::constant(0.0);
    pub const ONE: Jet3 = Jet3::constant(1.0);

    pub const fn new(v0: f64, v1: f64, v2: f64, v3: f64) -> Self {
        Self { v0, v1, v2, v3 }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0, 0.0)
    }

    /// The identity function `t ↦ t` expanded at `t`.
    pub const fn variable(t: f64) -> Self {
        Self::new(t, 1.0, 0.0, 0.0)
    }

    pub fn value(&self) -> f64 {
        self.v0
    }

    pub fn slots(&self) -> [f64; 4] {
        [self.v0, self.v1, self.v2, self.v3]
    }

    /// Jet of the derivative. The third slot of the result is unknown (NaN).
    pub fn derivative(&self) -> Self {
        Self::new(self.v1, self.v2, self.v3, f64::NAN)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(k * self.v0, k * self.v1, k * self.v2, k * self.v3)
    }

    pub fn is_constant(&self) -> bool {
        self.v1 == 0.0 && self.v2 == 0.0 && self.v3 == 0.0
    }

    /// `f ∘ self`, where `f` is given by its value and first three
    /// derivatives at `self.v0` (Faà di Bruno to third order).
    pub fn compose(&self, f: [f64; 4]) -> Self {
        let (a1, a2, a3) = (self.v1, self.v2, self.v3);
        Self::new(
            f[0],
            f[1] * a1,
            f[2] * a1 * a1 + f[1] * a2,
            f[3] * a1 * a1 * a1 + 3.0 * f[2] * a1 * a2 + f[1] * a3,
        )
    }

    pub fn recip(&self) -> Result<Self> {
        let x = self.v0;
        if x == 0.0 || !x.is_finite() {
            return Err(Error::JetDivisionByZero);
        }
        let r = 1.0 / x;
        Ok(self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]))
    }

    pub fn try_div(&self, rhs: Jet3) -> Result<Self> {
        Ok(*self * rhs.recip()?)
    }

    pub fn try_sqrt(&self) -> Result<Self> {
        let x = self.v0;
        if !(x > 0.0) {
            return Err(Error::JetNegativeRadicand(x));
        }
        let s = x.sqrt();
        Ok(self.compose([
            s,
            0.5 / s,
            -0.25 / (x * s),
            0.375 / (x * x * s),
        ]))
    }

    /// `self^k` for a non-negative integer `k`, exact at `v0 = 0`.
    pub fn powi(&self, k: u32) -> Self {
        let mut acc = Jet3::ONE;
        for _ in 0..k {
            acc = acc * *self;
        }
        acc
    }

    /// `self^k` for real `k`; requires `v0 > 0`.
    pub fn try_powf(&self, k: f64) -> Result<Self> {
        let x = self.v0;
        if !(x > 0.0) {
            return Err(Error::JetNegativeRadicand(x));
        }
        Ok(self.compose([
            x.powf(k),
            k * x.powf(k - 1.0),
            k * (k - 1.0) * x.powf(k - 2.0),
            k * (k - 1.0) * (k - 2.0) * x.powf(k - 3.0),
        ]))
    }

    pub fn max_abs_diff(&self, other: &Jet3) -> f64 {
        self.slots()
            .iter()
            .zip(other.slots())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<f64> for Jet3 {
    fn from(value: f64) -> Self {
        Jet3::constant(value)
    }
}

impl fmt::Display for Jet3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.v0, self.v1, self.v2, self.v3)
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(self, rhs: Jet3) -> Jet3 {
        Jet3::new(
            self.v0 + rhs.v0,
            self.v1 + rhs.v1,
            self.v2 + rhs.v2,
            self.v3 + rhs.v3,
        )
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, rhs: Jet3) -> Jet3 {
        Jet3::new(
            self.v0 - rhs.v0,
            self.v1 - rhs.v1,
            self.v2 - rhs.v2,
            self.v3 - rhs.v3,
        )
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, b: Jet3) -> Jet3 {
        let a = self;
        Jet3::new(
            a.v0 * b.v0,
            a.v1 * b.v0 + a.v0 * b.v1,
            a.v2 * b.v0 + 2.0 * a.v1 * b.v1 + a.v0 * b.v2,
            a.v3 * b.v0 + 3.0 * a.v2 * b.v1 + 3.0 * a.v1 * b.v2 + a.v0 * b.v3,
        )
    }
}

/// Unchecked division (IEEE semantics). Use [`Jet3::try_div`] where a zero
/// denominator must surface as an error.
impl Div for Jet3 {
    type Output = Jet3;
    fn div(self, rhs: Jet3) -> Jet3 {
        let r = 1.0 / rhs.v0;
        self * rhs.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }
}

impl Add<f64> for Jet3 {
    type Output = Jet3;
    fn add(self, rhs: f64) -> Jet3 {
        Jet3::new(self.v0 + rhs, self.v1, self.v2, self.v3)
    }
}

impl Sub<f64> for Jet3 {
    type Output = Jet3;
    fn sub(self, rhs: f64) -> Jet3 {
        Jet3::new(self.v0 - rhs, self.v1, self.v2, self.v3)
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, rhs: f64) -> Jet3 {
        self.scale(rhs)
    }
}

impl Mul<Jet3> for f64 {
    type Output = Jet3;
    fn mul(self, rhs: Jet3) -> Jet3 {
        rhs.scale(self)
    }
}

impl Add<Jet3> for f64 {
    type Output = Jet3;
    fn add(self, rhs: Jet3) -> Jet3 {
        rhs + self
    }
}

impl Sub<Jet3> for f64 {
    type Output = Jet3;
    fn sub(self, rhs: Jet3) -> Jet3 {
        -rhs + self
    }
}
