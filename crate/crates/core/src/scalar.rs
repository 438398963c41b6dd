use nalgebra::{Complex, ComplexField};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar field of a problem: everything in the crate is generic over
/// `f64` and `Complex<f64>` through this trait.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    const FIELD: FieldTag;

    /// Embeds a real number into the field.
    fn from_re(x: f64) -> Self;

    /// Builds a scalar from real and imaginary parts. Fails for a real
    /// field when `im != 0`.
    fn try_from_parts(re: f64, im: f64) -> Result<Self>;

    fn re(self) -> f64;
    fn im(self) -> f64;

    /// Multiplication by a real scalar without leaving the field.
    #[inline]
    fn mul_real(self, c: f64) -> Self {
        self * Self::from_re(c)
    }
}

impl Scalar for f64 {
    const FIELD: FieldTag = FieldTag::Real;

    #[inline]
    fn from_re(x: f64) -> Self {
        x
    }

    fn try_from_parts(re: f64, im: f64) -> Result<Self> {
        if im != 0.0 {
            return Err(Error::argument(format!(
                "complex value {re}+{im}i used in a real-field context"
            )));
        }
        Ok(re)
    }

    #[inline]
    fn re(self) -> f64 {
        self
    }

    #[inline]
    fn im(self) -> f64 {
        0.0
    }
}

impl Scalar for Complex<f64> {
    const FIELD: FieldTag = FieldTag::Complex;

    #[inline]
    fn from_re(x: f64) -> Self {
        Complex::new(x, 0.0)
    }

    fn try_from_parts(re: f64, im: f64) -> Result<Self> {
        Ok(Complex::new(re, im))
    }

    #[inline]
    fn re(self) -> f64 {
        self.re
    }

    #[inline]
    fn im(self) -> f64 {
        self.im
    }
}

/// Field marker carried by file formats and problem descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldTag {
    Real,
    Complex,
}

impl FieldTag {
    pub fn as_u8(self) -> u8 {
        match self {
            FieldTag::Real => 0,
            FieldTag::Complex => 1,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(FieldTag::Real),
            1 => Ok(FieldTag::Complex),
            _ => Err(Error::format(format!("unknown field tag {v}"))),
        }
    }
}
