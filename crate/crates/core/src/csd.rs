//! Canonical signed digit (CSD) recoding and zero-skipping shift-add
//! schedules.
//!
//! A CSD code writes a y-bit two's complement integer with digits in
//! {-1, 0, +1} such that no two adjacent digits are nonzero. The
//! representation is unique and roughly two thirds of its digits are zero,
//! which is what the scheduler exploits: runs of zeros collapse into the
//! shift amount of the neighbouring step instead of costing cycles of their
//! own.
//!
//! Digit strings render most-significant digit first with `1`, `0` and `-`,
//! so `0-01` reads as -4 + 1 = -3.

use std::fmt;

use thiserror::Error;

use crate::fxp::{MAX_WIDTH, MIN_WIDTH};

/// Largest single-cycle shift the datapath can fuse onto an add.
pub const MAX_SIGMA: u8 = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CsdError {
    #[error("width {0} outside supported range {MIN_WIDTH}..={MAX_WIDTH}")]
    WidthOutOfRange(u8),
    #[error("value {value} does not fit {width}-bit two's complement")]
    ValueOutOfRange { value: i32, width: u8 },
    #[error("invalid digit character {0:?} (expected '1', '0' or '-')")]
    BadDigitChar(char),
    #[error("adjacent nonzero digits at positions {0} and {1} violate canonical form")]
    NotCanonical(usize, usize),
    #[error("max shift {0} outside supported range 1..={MAX_SIGMA}")]
    MaxShiftOutOfRange(u8),
}

/// A canonical signed digit code. `digits[0]` is the least significant digit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CsdCode {
    digits: Vec<i8>,
}

impl CsdCode {
    #[inline]
    pub fn width(&self) -> u8 {
        self.digits.len() as u8
    }

    /// Digits in LSB-first order, each in {-1, 0, +1}.
    #[inline]
    pub fn digits(&self) -> &[i8] {
        &self.digits
    }

    pub fn nonzero_count(&self) -> u32 {
        self.digits.iter().filter(|&&d| d != 0).count() as u32
    }

    pub fn zero_count(&self) -> u32 {
        u32::from(self.width()) - self.nonzero_count()
    }

    /// Parses an MSB-first digit string such as `100-010-`.
    pub fn parse(s: &str) -> Result<Self, CsdError> {
        let width = s.chars().count();
        if !(usize::from(MIN_WIDTH)..=usize::from(MAX_WIDTH)).contains(&width) {
            return Err(CsdError::WidthOutOfRange(width.min(255) as u8));
        }
        let mut digits = Vec::with_capacity(width);
        for ch in s.chars().rev() {
            digits.push(match ch {
                '1' => 1,
                '0' => 0,
                '-' => -1,
                other => return Err(CsdError::BadDigitChar(other)),
            });
        }
        for j in 0..digits.len() - 1 {
            if digits[j] != 0 && digits[j + 1] != 0 {
                return Err(CsdError::NotCanonical(j, j + 1));
            }
        }
        Ok(CsdCode { digits })
    }
}

impl fmt::Display for CsdCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &d in self.digits.iter().rev() {
            f.write_str(match d {
                1 => "1",
                0 => "0",
                _ => "-",
            })?;
        }
        Ok(())
    }
}

/// Recodes a y-bit two's complement value into canonical signed digit form.
///
/// The non-adjacent form of any value in [-2^(y-1), 2^(y-1) - 1] fits in y
/// digit positions, so the code width always equals the requested width.
pub fn csd_encode(value: i32, width: u8) -> Result<CsdCode, CsdError> {
    if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) {
        return Err(CsdError::WidthOutOfRange(width));
    }
    let half = 1i32 << (width - 1);
    if value < -half || value >= half {
        return Err(CsdError::ValueOutOfRange { value, width });
    }
    let mut digits = Vec::with_capacity(usize::from(width));
    let mut n = i64::from(value);
    while n != 0 {
        if n & 1 == 0 {
            digits.push(0);
        } else {
            // n is odd: emit +1 when n = 1 (mod 4), -1 when n = 3 (mod 4),
            // leaving n - digit divisible by 4 so the next digit is zero.
            let d = 2 - (n.rem_euclid(4) as i8);
            digits.push(d);
            n -= i64::from(d);
        }
        n >>= 1;
    }
    debug_assert!(digits.len() <= usize::from(width));
    digits.resize(usize::from(width), 0);
    Ok(CsdCode { digits })
}

/// Evaluates a code back to the integer it encodes.
pub fn csd_decode(code: &CsdCode) -> i32 {
    code.digits
        .iter()
        .enumerate()
        .map(|(j, &d)| i32::from(d) << j)
        .sum()
}

/// One step of a shift-add schedule: add `digit * m` to the accumulator, then
/// arithmetic-shift the result right by `sigma`.
///
/// `digit = 0` marks a pure shift step and always carries `sigma >= 1`;
/// `sigma = 0` is an add-only step and may only appear last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Step {
    pub digit: i8,
    pub sigma: u8,
}

/// An LSB-first shift-add schedule whose shifts total exactly `width - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    steps: Vec<Step>,
    width: u8,
}

impl Schedule {
    #[inline]
    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    #[inline]
    pub fn width(&self) -> u8 {
        self.width
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Total shift distance, always `width - 1`.
    pub fn shift_total(&self) -> u32 {
        self.steps.iter().map(|s| u32::from(s.sigma)).sum()
    }
}

/// Builds the zero-skipping schedule for a code, scanning digits LSB to MSB.
///
/// The accumulator recurrence `acc <- floor((acc + d*m) / 2^sigma)` requires
/// that when the digit at position j is added, the shifts applied so far
/// total exactly j. Nonzero digits therefore take the distance to the next
/// nonzero digit (or to position y-1) as their fused shift, capped at
/// `max_shift`; any remaining distance becomes digitless filler steps. The
/// topmost nonzero digit takes whatever residual shift is left, which may be
/// zero.
pub fn make_schedule(code: &CsdCode, max_shift: u8) -> Result<Schedule, CsdError> {
    if max_shift == 0 || max_shift > MAX_SIGMA {
        return Err(CsdError::MaxShiftOutOfRange(max_shift));
    }
    let y = u32::from(code.width());
    let nonzeros: Vec<(u32, i8)> = code
        .digits
        .iter()
        .enumerate()
        .filter(|(_, &d)| d != 0)
        .map(|(j, &d)| (j as u32, d))
        .collect();

    let mut steps = Vec::new();
    let mut applied = 0u32;
    let fill_to = |steps: &mut Vec<Step>, applied: &mut u32, target: u32| {
        while *applied < target {
            let sigma = u32::from(max_shift).min(target - *applied);
            steps.push(Step {
                digit: 0,
                sigma: sigma as u8,
            });
            *applied += sigma;
        }
    };

    for (idx, &(j, d)) in nonzeros.iter().enumerate() {
        fill_to(&mut steps, &mut applied, j);
        let next_stop = nonzeros.get(idx + 1).map_or(y - 1, |&(nj, _)| nj);
        let sigma = u32::from(max_shift).min(next_stop - j);
        steps.push(Step {
            digit: d,
            sigma: sigma as u8,
        });
        applied += sigma;
    }
    fill_to(&mut steps, &mut applied, y - 1);

    debug_assert_eq!(applied, y - 1);
    Ok(Schedule {
        steps,
        width: code.width(),
    })
}

/// Digit and step counts for one code's schedule at the hardware shift cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleStats {
    pub zeros: u32,
    pub nonzeros: u32,
    pub steps: u32,
    pub adds: u32,
}

/// Counts zeros, nonzeros, schedule steps and adds for a code.
///
/// The first nonzero step loads the accumulator rather than adding to it, so
/// `adds = max(nonzeros - 1, 0)`.
pub fn schedule_stats(code: &CsdCode) -> ScheduleStats {
    let schedule = make_schedule(code, MAX_SIGMA).expect("MAX_SIGMA is a valid shift cap");
    let nonzeros = code.nonzero_count();
    ScheduleStats {
        zeros: code.zero_count(),
        nonzeros,
        steps: schedule.len() as u32,
        adds: nonzeros.saturating_sub(1),
    }
}
