use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Constant;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Working mantissa precision in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Precision {
    bits: u32,
}

impl Precision {
    pub const MIN_BITS: u32 = 64;
    pub const DEFAULT_BITS: u32 = 128;

    pub fn new(bits: u32) -> Result<Self> {
        if bits < Self::MIN_BITS {
            return Err(Error::Precision(format!("{bits} bits requested, minimum is {}", Self::MIN_BITS)));
        }
        Ok(Precision { bits })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Same precision plus `extra` guard bits.
    pub fn boosted(self, extra: u32) -> Self {
        Precision { bits: self.bits + extra }
    }

    /// 2^{-bits/2}, the tolerance used for identities that lose half the digits.
    pub fn half_tol(self) -> f64 {
        2f64.powi(-(self.bits as i32) / 2)
    }

    pub fn zero(self) -> Mpf {
        Mpf::new(self.bits, 0.0)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision { bits: Self::DEFAULT_BITS }
    }
}

/// Scalar abstraction shared by `f64` and MPFR floats, so closed forms
/// are written once and evaluated either fast or at high precision.
pub trait Real:
    Clone
    + PartialOrd
    + Send
    + Sync
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Constant at the precision of `self`.
    fn lift(&self, v: f64) -> Self;
    fn lift_int(&self, v: i64) -> Self;
    fn lift_float(&self, v: &Float) -> Self;
    fn pi(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn atan(&self) -> Self;
    fn powf(&self, e: &Self) -> Self;
    fn abs(&self) -> Self;
    fn floor(&self) -> Self;
    fn to_f64(&self) -> f64;
    fn prec_bits(&self) -> u32;
    /// Relative accuracy a quadrature can hope for in this arithmetic.
    fn quad_rel_floor(&self) -> f64;

    fn recip(&self) -> Self {
        self.lift(1.0) / self.clone()
    }
    fn sqr(&self) -> Self {
        self.clone() * self.clone()
    }
    fn is_sign_negative(&self) -> bool {
        self.to_f64() < 0.0
    }
}

impl Real for f64 {
    fn lift(&self, v: f64) -> Self {
        v
    }
    fn lift_int(&self, v: i64) -> Self {
        v as f64
    }
    fn lift_float(&self, v: &Float) -> Self {
        v.to_f64()
    }
    fn pi(&self) -> Self {
        std::f64::consts::PI
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn atan(&self) -> Self {
        f64::atan(*self)
    }
    fn powf(&self, e: &Self) -> Self {
        f64::powf(*self, *e)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn prec_bits(&self) -> u32 {
        53
    }
    fn quad_rel_floor(&self) -> f64 {
        1e-13
    }
}

/// MPFR float carrying its own precision.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Mpf(pub Float);

impl Mpf {
    pub fn new(bits: u32, v: f64) -> Self {
        Mpf(Float::with_val(bits, v))
    }
    pub fn from_int(bits: u32, v: &rug::Integer) -> Self {
        Mpf(Float::with_val(bits, v))
    }
    pub fn inner(&self) -> &Float {
        &self.0
    }
    pub fn into_inner(self) -> Float {
        self.0
    }
    /// Round to a different precision.
    pub fn with_prec(&self, bits: u32) -> Self {
        Mpf(Float::with_val(bits, &self.0))
    }
}

impl fmt::Debug for Mpf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.0.to_f64())
    }
}

impl fmt::Display for Mpf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

macro_rules! mpf_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Mpf {
            type Output = Mpf;
            fn $m(self, rhs: Mpf) -> Mpf {
                let p = self.0.prec().max(rhs.0.prec());
                Mpf(Float::with_val(p, $tr::$m(&self.0, &rhs.0)))
            }
        }
    };
}
mpf_binop!(Add, add);
mpf_binop!(Sub, sub);
mpf_binop!(Mul, mul);
mpf_binop!(Div, div);

impl Neg for Mpf {
    type Output = Mpf;
    fn neg(self) -> Mpf {
        Mpf(-self.0)
    }
}

impl Real for Mpf {
    fn lift(&self, v: f64) -> Self {
        Mpf(Float::with_val(self.0.prec(), v))
    }
    fn lift_int(&self, v: i64) -> Self {
        Mpf(Float::with_val(self.0.prec(), v))
    }
    fn lift_float(&self, v: &Float) -> Self {
        Mpf(Float::with_val(self.0.prec(), v))
    }
    fn pi(&self) -> Self {
        Mpf(Float::with_val(self.0.prec(), Constant::Pi))
    }
    fn sqrt(&self) -> Self {
        Mpf(self.0.clone().sqrt())
    }
    fn exp(&self) -> Self {
        Mpf(self.0.clone().exp())
    }
    fn ln(&self) -> Self {
        Mpf(self.0.clone().ln())
    }
    fn sin(&self) -> Self {
        Mpf(self.0.clone().sin())
    }
    fn cos(&self) -> Self {
        Mpf(self.0.clone().cos())
    }
    fn atan(&self) -> Self {
        Mpf(self.0.clone().atan())
    }
    fn powf(&self, e: &Self) -> Self {
        Mpf(Float::with_val(self.0.prec(), rug::ops::Pow::pow(&self.0, &e.0)))
    }
    fn abs(&self) -> Self {
        Mpf(self.0.clone().abs())
    }
    fn floor(&self) -> Self {
        Mpf(self.0.clone().floor())
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn prec_bits(&self) -> u32 {
        self.0.prec()
    }
    fn quad_rel_floor(&self) -> f64 {
        2f64.powi(-(self.0.prec() as i32) + 8)
    }
    fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }
}
