//! Split-complex (hyperbolic) numbers `x + j y` with `j*j = +1`.
//!
//! The squared modulus `x*x - y*y` is an indefinite form; amplitudes built
//! on this algebra reproduce probabilities through it the same way complex
//! amplitudes do through `re*re + im*im`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hyperbolic {
    pub x: f64,
    pub y: f64,
}

impl Hyperbolic {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Hyperbolic exponential `exp(j t) = cosh t + j sinh t`.
    pub fn exp_j(t: f64) -> Self {
        Self::new(t.cosh(), t.sinh())
    }

    pub fn conjugate(self) -> Self {
        Self::new(self.x, -self.y)
    }

    /// `z * conj(z) = x*x - y*y`; may be negative for general `z`.
    pub fn squared_modulus(self) -> f64 {
        self.x * self.x - self.y * self.y
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(k * self.x, k * self.y)
    }
}

impl Add for Hyperbolic {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Hyperbolic {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul for Hyperbolic {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.x * rhs.x + self.y * rhs.y,
            self.x * rhs.y + self.y * rhs.x,
        )
    }
}

impl Neg for Hyperbolic {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}
