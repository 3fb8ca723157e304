//! Packed truncated multiplication.
//!
//! One CSD-recoded multiplier drives the shift-add schedule across every lane
//! of a packed word at once. Truncation happens inside the recurrence (each
//! step floors away `sigma` bits), so the result lane is
//! `floor-accumulated(m_k * y / 2^(y-1))` rather than a rounded product:
//! before any final wrap it sits within 2 ULP below the exact product.
//!
//! [`multiply_scalar_oracle`] runs the identical recurrence on one lane as a
//! plain integer fold with no packed-word machinery. It exists to
//! differential-test the bit-level path and to feed the error sweeps; keep it
//! free of `word` types.

use thiserror::Error;

use crate::csd::{make_schedule, CsdCode, CsdError, Schedule, Step, MAX_SIGMA};
use crate::fxp::{MAX_WIDTH, MIN_WIDTH};
use crate::word::{fused_step, PackedWord, WordError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MulError {
    #[error(transparent)]
    Csd(#[from] CsdError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("multiplicand width {0} outside supported range {MIN_WIDTH}..={MAX_WIDTH}")]
    WidthOutOfRange(u8),
    #[error("multiplicand {bits} does not fit {width}-bit two's complement")]
    OperandOutOfRange { bits: i32, width: u8 },
}

/// Event counts and per-step accumulator snapshots for one packed multiply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MulTrace {
    /// One cycle per schedule step.
    pub cycles: u32,
    /// Accumulate steps after the first nonzero digit.
    pub adds: u32,
    /// 1 when the schedule has any nonzero digit (the first one overwrites
    /// the accumulator instead of adding), else 0.
    pub loads: u32,
    /// Total 1-bit shift stages, always `y - 1`.
    pub shift_bits: u32,
    /// The executed step and the accumulator after it, in order.
    pub per_step: Vec<(Step, PackedWord)>,
}

impl MulTrace {
    /// Renders the machine trace, one line per cycle:
    /// `cycle=<n> op=<load|add|sub|shift> sigma=<s> acc=<hex>`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut seen_nonzero = false;
        for (cycle, (step, acc)) in self.per_step.iter().enumerate() {
            let op = op_name(*step, &mut seen_nonzero);
            out.push_str(&format!(
                "cycle={cycle} op={op} sigma={} acc={acc}\n",
                step.sigma
            ));
        }
        out
    }
}

fn op_name(step: Step, seen_nonzero: &mut bool) -> &'static str {
    if step.digit == 0 {
        "shift"
    } else if !*seen_nonzero {
        *seen_nonzero = true;
        "load"
    } else if step.digit > 0 {
        "add"
    } else {
        "sub"
    }
}

/// Multiplies every lane of `m` by the value encoded in `code`, returning the
/// packed result and the event trace.
pub fn multiply_packed(m: PackedWord, code: &CsdCode) -> Result<(PackedWord, MulTrace), MulError> {
    let schedule = make_schedule(code, MAX_SIGMA)?;
    let mut acc = PackedWord::zero(m.format());
    let mut per_step = Vec::with_capacity(schedule.len());
    for &step in schedule.steps() {
        acc = fused_step(acc, m, step.digit, step.sigma)?;
        per_step.push((step, acc));
    }
    Ok((acc, trace_from(&schedule, per_step)))
}

fn trace_from(schedule: &Schedule, per_step: Vec<(Step, PackedWord)>) -> MulTrace {
    let nonzeros = schedule.steps().iter().filter(|s| s.digit != 0).count() as u32;
    MulTrace {
        cycles: schedule.len() as u32,
        adds: nonzeros.saturating_sub(1),
        loads: u32::from(nonzeros > 0),
        shift_bits: schedule.shift_total(),
        per_step,
    }
}

/// Scalar multiply with details the sweeps need: the written-back lane value,
/// the final accumulator before any wrap, and whether the writeback wrapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarMul {
    pub result: i32,
    pub final_sum: i64,
    pub wrapped: bool,
}

/// Reference recurrence for one lane in plain integer arithmetic.
///
/// `m_bits` is a `m_width`-bit multiplicand lane, `y_bits` a `y_width`-bit
/// multiplier. The fold mirrors the packed datapath step for step: shifts
/// floor toward negative infinity, and only a final add-only step can leave
/// the w-bit range, in which case the writeback wraps modulo 2^w.
pub fn multiply_scalar_traced(
    m_bits: i32,
    m_width: u8,
    y_bits: i32,
    y_width: u8,
) -> Result<ScalarMul, MulError> {
    if !(MIN_WIDTH..=MAX_WIDTH).contains(&m_width) {
        return Err(MulError::WidthOutOfRange(m_width));
    }
    let half = 1i64 << (m_width - 1);
    if i64::from(m_bits) < -half || i64::from(m_bits) >= half {
        return Err(MulError::OperandOutOfRange {
            bits: m_bits,
            width: m_width,
        });
    }
    let schedule = make_schedule(&crate::csd::csd_encode(y_bits, y_width)?, MAX_SIGMA)?;
    let m = i64::from(m_bits);
    let mut acc = 0i64;
    for step in schedule.steps() {
        let s = acc + i64::from(step.digit) * m;
        acc = if step.sigma == 0 {
            s
        } else {
            s.div_euclid(1 << step.sigma)
        };
    }
    let wrapped = acc < -half || acc >= half;
    let result = if wrapped {
        let span = 2 * half;
        ((acc + half).rem_euclid(span) - half) as i32
    } else {
        acc as i32
    };
    Ok(ScalarMul {
        result,
        final_sum: acc,
        wrapped,
    })
}

/// The written-back lane value of the scalar reference recurrence.
pub fn multiply_scalar_oracle(
    m_bits: i32,
    m_width: u8,
    y_bits: i32,
    y_width: u8,
) -> Result<i32, MulError> {
    Ok(multiply_scalar_traced(m_bits, m_width, y_bits, y_width)?.result)
}
