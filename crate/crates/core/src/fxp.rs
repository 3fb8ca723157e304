//! Q1.(w-1) fixed point: a w-bit two's complement integer with the binary
//! point directly after the sign bit, covering [-1, 1) in steps of 2^-(w-1).
//!
//! Reference arithmetic on these values is carried as exact rationals so that
//! truncation-error measurements are never polluted by floating-point
//! rounding. Floats appear only at the quantization boundary, where scaling
//! by a power of two is exact.

use num_rational::Ratio;
use thiserror::Error;

/// Exact rational with the numerator/denominator range needed for products
/// of two 16-bit fixed-point values (denominators up to 2^30).
pub type Rational = Ratio<i64>;

pub const MIN_WIDTH: u8 = 2;
pub const MAX_WIDTH: u8 = 16;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum FxpError {
    #[error("width {0} outside supported range {MIN_WIDTH}..={MAX_WIDTH}")]
    WidthOutOfRange(u8),
    #[error("bits {bits} do not fit {width}-bit two's complement")]
    BitsOutOfRange { bits: i32, width: u8 },
    #[error("{value} is not representable in Q1.{} (domain is [-1, 1))", width - 1)]
    Unrepresentable { value: f64, width: u8 },
}

/// A Q1.(w-1) value: `bits / 2^(w-1)`.
///
/// Construction validates the range, so a `QVal` always holds a pattern its
/// width can represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct QVal {
    bits: i32,
    width: u8,
}

impl QVal {
    pub fn new(bits: i32, width: u8) -> Result<Self, FxpError> {
        check_width(width)?;
        let half = 1i32 << (width - 1);
        if bits < -half || bits >= half {
            return Err(FxpError::BitsOutOfRange { bits, width });
        }
        Ok(QVal { bits, width })
    }

    #[inline]
    pub fn bits(self) -> i32 {
        self.bits
    }

    #[inline]
    pub fn width(self) -> u8 {
        self.width
    }

    /// Most negative representable value, -1.0 exactly.
    pub fn min(width: u8) -> Result<Self, FxpError> {
        check_width(width)?;
        Ok(QVal {
            bits: -(1i32 << (width - 1)),
            width,
        })
    }

    /// Largest representable value, 1 - 2^-(w-1).
    pub fn max(width: u8) -> Result<Self, FxpError> {
        check_width(width)?;
        Ok(QVal {
            bits: (1i32 << (width - 1)) - 1,
            width,
        })
    }
}

fn check_width(width: u8) -> Result<(), FxpError> {
    if (MIN_WIDTH..=MAX_WIDTH).contains(&width) {
        Ok(())
    } else {
        Err(FxpError::WidthOutOfRange(width))
    }
}

/// Quantizes a real number onto the Q1.(w-1) grid, rounding toward negative
/// infinity. The input must lie in [-1, 1).
///
/// `x * 2^(w-1)` only rescales the exponent, so the floor is computed on an
/// exact product and quantization introduces no double rounding.
pub fn quantize(x: f64, width: u8) -> Result<QVal, FxpError> {
    check_width(width)?;
    if !x.is_finite() || !(-1.0..1.0).contains(&x) {
        return Err(FxpError::Unrepresentable { value: x, width });
    }
    let bits = (x * f64::from(1i32 << (width - 1))).floor() as i32;
    QVal::new(bits, width)
}

/// The exact value `bits / 2^(w-1)`.
pub fn to_real(v: QVal) -> Rational {
    Rational::new(i64::from(v.bits()), 1i64 << (v.width() - 1))
}

/// Exact product of two fixed-point values, unrounded:
/// `(a.bits * b.bits) / 2^(a.w + b.w - 2)`.
pub fn exact_product(a: QVal, b: QVal) -> Rational {
    Rational::new(
        i64::from(a.bits()) * i64::from(b.bits()),
        1i64 << (a.width() + b.width() - 2),
    )
}
