//! The 48-bit packed datapath: sub-word formats, the lane-boundary mask, and
//! the partitioned add / shift / fused-multiply-step primitives.
//!
//! Lane boundaries are not structural. One 48-bit adder serves every format;
//! a per-format mask marks each lane's MSB position, and the carry chain is
//! cut there (with the next lane's injected carry taking over). Shifts are
//! cascaded one-bit stages that recirculate each lane's own MSB. Everything
//! here is bit-level on purpose: per-lane integer semantics exist only as
//! test oracles, never as the executed path.

use std::fmt;

use thiserror::Error;

use crate::fxp::QVal;

pub const WORD_BITS: u32 = 48;
pub const WORD_MASK: u64 = (1u64 << WORD_BITS) - 1;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum WordError {
    #[error("sub-word width {0} is not one of 4, 6, 8, 12, 16")]
    UnsupportedWidth(u8),
    #[error("raw word {0:#x} has bits above bit 47")]
    RawOutOfRange(u64),
    #[error("expected {expected} lane values, got {got}")]
    LaneCount { expected: usize, got: usize },
    #[error("lane {index} out of range for {lanes} lanes")]
    LaneIndex { index: usize, lanes: usize },
    #[error("lane {lane} value has width {got}, format needs {expected}")]
    LaneWidth { lane: usize, expected: u8, got: u8 },
    #[error("operands have different sub-word formats ({left} and {right} bits)")]
    FormatMismatch { left: u8, right: u8 },
    #[error("shift amount {0} outside 1..=3")]
    ShiftOutOfRange(u8),
    #[error("step digit {0} not in {{-1, 0, +1}}")]
    BadDigit(i8),
    #[error("fused-step shift {0} outside 0..=3")]
    SigmaOutOfRange(u8),
}

/// One of the five sub-word partitionings of the 48-bit word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubwordFormat {
    W4,
    W6,
    W8,
    W12,
    W16,
}

impl SubwordFormat {
    pub const ALL: [SubwordFormat; 5] = [
        SubwordFormat::W4,
        SubwordFormat::W6,
        SubwordFormat::W8,
        SubwordFormat::W12,
        SubwordFormat::W16,
    ];

    pub fn from_width(width: u8) -> Result<Self, WordError> {
        match width {
            4 => Ok(SubwordFormat::W4),
            6 => Ok(SubwordFormat::W6),
            8 => Ok(SubwordFormat::W8),
            12 => Ok(SubwordFormat::W12),
            16 => Ok(SubwordFormat::W16),
            other => Err(WordError::UnsupportedWidth(other)),
        }
    }

    #[inline]
    pub fn width(self) -> u8 {
        match self {
            SubwordFormat::W4 => 4,
            SubwordFormat::W6 => 6,
            SubwordFormat::W8 => 8,
            SubwordFormat::W12 => 12,
            SubwordFormat::W16 => 16,
        }
    }

    #[inline]
    pub fn lanes(self) -> usize {
        (WORD_BITS as usize) / usize::from(self.width())
    }

    #[inline]
    pub fn lane_mask(self) -> u64 {
        (1u64 << self.width()) - 1
    }

    /// Mask with a 1 at every lane's MSB position.
    pub fn msb_mask(self) -> u64 {
        let w = u32::from(self.width());
        let mut m = 0u64;
        let mut i = w - 1;
        while i < WORD_BITS {
            m |= 1 << i;
            i += w;
        }
        m
    }
}

/// The carry-propagate mask for a format: bit i is 0 exactly at lane MSB
/// positions and 1 elsewhere. A cleared bit kills the carry out of that
/// position and re-injects the lane-entry carry for the next lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryMask {
    bits: u64,
}

impl BoundaryMask {
    #[inline]
    pub fn raw(self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn propagates(self, bit: u32) -> bool {
        (self.bits >> bit) & 1 == 1
    }
}

pub fn boundary_mask(fmt: SubwordFormat) -> BoundaryMask {
    BoundaryMask {
        bits: WORD_MASK & !fmt.msb_mask(),
    }
}

/// A 48-bit word carrying its sub-word format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PackedWord {
    raw: u64,
    fmt: SubwordFormat,
}

impl PackedWord {
    pub fn zero(fmt: SubwordFormat) -> Self {
        PackedWord { raw: 0, fmt }
    }

    pub fn from_raw(raw: u64, fmt: SubwordFormat) -> Result<Self, WordError> {
        if raw > WORD_MASK {
            return Err(WordError::RawOutOfRange(raw));
        }
        Ok(PackedWord { raw, fmt })
    }

    #[inline]
    pub fn raw(self) -> u64 {
        self.raw
    }

    #[inline]
    pub fn format(self) -> SubwordFormat {
        self.fmt
    }

    /// Signed lane values, LSB lane first.
    pub fn lane_values(self) -> Vec<i32> {
        (0..self.fmt.lanes())
            .map(|k| lane_bits_signed(self.raw, self.fmt, k))
            .collect()
    }
}

/// Words render as 12 hex digits.
impl fmt::Display for PackedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:012x}", self.raw)
    }
}

fn lane_bits_signed(raw: u64, fmt: SubwordFormat, k: usize) -> i32 {
    let w = u32::from(fmt.width());
    let field = (raw >> (k as u32 * w)) & fmt.lane_mask();
    let sign = 1u64 << (w - 1);
    if field & sign != 0 {
        (field as i64 - (1i64 << w)) as i32
    } else {
        field as i32
    }
}

/// Packs one `QVal` per lane, LSB lane first. Every value must match the
/// format width.
pub fn pack(values: &[QVal], fmt: SubwordFormat) -> Result<PackedWord, WordError> {
    if values.len() != fmt.lanes() {
        return Err(WordError::LaneCount {
            expected: fmt.lanes(),
            got: values.len(),
        });
    }
    let w = u32::from(fmt.width());
    let mut raw = 0u64;
    for (k, v) in values.iter().enumerate() {
        if v.width() != fmt.width() {
            return Err(WordError::LaneWidth {
                lane: k,
                expected: fmt.width(),
                got: v.width(),
            });
        }
        raw |= ((v.bits() as i64 as u64) & fmt.lane_mask()) << (k as u32 * w);
    }
    Ok(PackedWord { raw, fmt })
}

/// Extracts lane k as a sign-extended fixed-point value.
pub fn extract_lane(word: PackedWord, k: usize) -> Result<QVal, WordError> {
    let lanes = word.fmt.lanes();
    if k >= lanes {
        return Err(WordError::LaneIndex { index: k, lanes });
    }
    let bits = lane_bits_signed(word.raw, word.fmt, k);
    Ok(QVal::new(bits, word.fmt.width()).expect("lane field fits its own width"))
}

/// Full-adder ripple over all 48 bits with the carry chain gated by the
/// boundary mask. Returns the wrapped per-lane sum and a flag word holding,
/// at each lane MSB position, the signed-overflow bit of that lane
/// (carry-in xor carry-out at the MSB).
///
/// Subtraction is `a + !b + 1` per lane: the mask re-injects the +1 at every
/// lane's LSB when it cuts the chain.
fn ripple_addsub(a: u64, b: u64, fmt: SubwordFormat, subtract: bool) -> (u64, u64) {
    let vx = boundary_mask(fmt).raw();
    let b_eff = if subtract { !b & WORD_MASK } else { b };
    let inject = u64::from(subtract);
    let mut carry = inject;
    let mut sum = 0u64;
    let mut overflow = 0u64;
    for i in 0..WORD_BITS {
        let ai = (a >> i) & 1;
        let bi = (b_eff >> i) & 1;
        sum |= (ai ^ bi ^ carry) << i;
        let carry_out = (ai & bi) | (carry & (ai ^ bi));
        if (vx >> i) & 1 == 1 {
            carry = carry_out;
        } else {
            overflow |= (carry ^ carry_out) << i;
            carry = inject;
        }
    }
    (sum, overflow)
}

fn check_same_format(a: PackedWord, b: PackedWord) -> Result<SubwordFormat, WordError> {
    if a.fmt != b.fmt {
        return Err(WordError::FormatMismatch {
            left: a.fmt.width(),
            right: b.fmt.width(),
        });
    }
    Ok(a.fmt)
}

/// Partitioned add/subtract: every lane computes `a_k ± b_k` modulo 2^w
/// simultaneously on the shared carry structure.
pub fn padd(a: PackedWord, b: PackedWord, subtract: bool) -> Result<PackedWord, WordError> {
    let fmt = check_same_format(a, b)?;
    let (sum, _) = ripple_addsub(a.raw, b.raw, fmt, subtract);
    Ok(PackedWord { raw: sum, fmt })
}

/// One 1-bit arithmetic-right-shift stage: every non-MSB bit takes its upper
/// neighbour (which never crosses a lane boundary) and every lane MSB
/// recirculates itself.
fn shift_stage(x: u64, fmt: SubwordFormat) -> u64 {
    let msb = fmt.msb_mask();
    ((x >> 1) & !msb & WORD_MASK) | (x & msb)
}

/// Per-lane arithmetic right shift by `sigma` in 1..=3, realized as cascaded
/// 1-bit stages. Equivalent to flooring division by 2^sigma in every lane.
pub fn pshift(a: PackedWord, sigma: u8) -> Result<PackedWord, WordError> {
    if !(1..=3).contains(&sigma) {
        return Err(WordError::ShiftOutOfRange(sigma));
    }
    let mut x = a.raw;
    for _ in 0..sigma {
        x = shift_stage(x, a.fmt);
    }
    Ok(PackedWord { raw: x, fmt: a.fmt })
}

/// One fused schedule step on every lane: `acc_k <- floor((acc_k + d*m_k) / 2^sigma)`.
///
/// The transient sum needs one guard bit (it can reach just past the w-bit
/// range), so the first shift stage fills the lane MSB with the true
/// (w+1)-bit sign, recovered as the wrapped MSB xor the lane's overflow
/// flag, rather than with the wrapped MSB itself. Later stages sign-extend
/// normally because the lane is back in range after one shift. With
/// `sigma = 0` the wrapped w-bit sum is written back unchanged.
pub fn fused_step(
    acc: PackedWord,
    m: PackedWord,
    digit: i8,
    sigma: u8,
) -> Result<PackedWord, WordError> {
    let fmt = check_same_format(acc, m)?;
    if sigma > 3 {
        return Err(WordError::SigmaOutOfRange(sigma));
    }
    let (sum, overflow) = match digit {
        0 => (acc.raw, 0),
        1 => ripple_addsub(acc.raw, m.raw, fmt, false),
        -1 => ripple_addsub(acc.raw, m.raw, fmt, true),
        other => return Err(WordError::BadDigit(other)),
    };
    if sigma == 0 {
        return Ok(PackedWord { raw: sum, fmt });
    }
    let msb = fmt.msb_mask();
    let mut x = ((sum >> 1) & !msb & WORD_MASK) | ((sum ^ overflow) & msb);
    for _ in 1..sigma {
        x = shift_stage(x, fmt);
    }
    Ok(PackedWord { raw: x, fmt })
}
