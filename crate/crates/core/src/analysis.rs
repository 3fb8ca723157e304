//! Measurement tools layered over the datapath model: error sweeps for the
//! truncated multiply, digit and schedule censuses, and a cost comparison
//! against a conventional fixed-lane SIMD multiplier.
//!
//! Everything here reports; nothing here decides. Sweeps either enumerate a
//! space outright or sample it with a fixed-seed generator, so every number
//! a report shows is reproducible run to run.

use std::fmt;

use num_traits::ToPrimitive;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::csd::{csd_encode, make_schedule, CsdError, MAX_SIGMA};
use crate::fxp::{Rational, MAX_WIDTH, MIN_WIDTH};
use crate::mul::{multiply_scalar_traced, MulError};
use crate::word::{SubwordFormat, WORD_BITS};

/// Pairs drawn per operand-space sweep when enumeration is too large.
pub const SWEEP_SAMPLES: u64 = 1_000_000;

const SWEEP_SEED: u64 = 0x536f_6674_5349_4d44;

/// Widths whose full operand product space is enumerated instead of sampled.
const EXHAUSTIVE_LIMIT: u8 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Csd(#[from] CsdError),
    #[error(transparent)]
    Mul(#[from] MulError),
    #[error("width {0} exceeds every supported sub-word format")]
    NoSoftFormat(u8),
    #[error("width {0} exceeds every baseline lane width")]
    NoBaselineLane(u8),
    #[error("baseline lane set is empty")]
    EmptyBaseline,
    #[error("baseline lane width {0} does not divide a 48-bit word")]
    BadBaselineWidth(u8),
    #[error("cost model line {line}: {reason}")]
    CostModel { line: usize, reason: String },
}

fn check_width(w: u8) -> Result<(), AnalysisError> {
    if (MIN_WIDTH..=MAX_WIDTH).contains(&w) {
        Ok(())
    } else {
        Err(AnalysisError::Csd(CsdError::WidthOutOfRange(w)))
    }
}

// ---------------------------------------------------------------------------
// digit density

/// Zero-digit census over every signed value of one width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityReport {
    pub width: u8,
    pub values: u64,
    pub digits: u64,
    pub zeros: u64,
    pub nonzeros: u64,
}

impl DensityReport {
    /// Fraction of digit positions holding a zero.
    pub fn density(&self) -> Rational {
        Rational::new(self.zeros as i64, self.digits as i64)
    }

    pub fn density_f64(&self) -> f64 {
        self.zeros as f64 / self.digits as f64
    }

    /// Distance of the census density from the wide-width limit 2/3.
    pub fn deviation_from_limit(&self) -> Rational {
        let d = self.density() - Rational::new(2, 3);
        if d < Rational::new(0, 1) {
            -d
        } else {
            d
        }
    }
}

impl fmt::Display for DensityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "csd zero-digit density, width {}: {}/{} = {:.5} over {} values",
            self.width,
            self.zeros,
            self.digits,
            self.density_f64(),
            self.values
        )
    }
}

/// Enumerates the recoding of every `width`-bit signed value and counts
/// digits. The skip logic in schedules feeds on zeros, so this census is the
/// supply side of the cycle census below.
pub fn csd_density(width: u8) -> Result<DensityReport, AnalysisError> {
    check_width(width)?;
    let half = 1i64 << (width - 1);
    let mut zeros = 0u64;
    let mut nonzeros = 0u64;
    for v in -half..half {
        let code = csd_encode(v as i32, width)?;
        zeros += u64::from(code.zero_count());
        nonzeros += u64::from(code.nonzero_count());
    }
    let values = (2 * half) as u64;
    Ok(DensityReport {
        width,
        values,
        digits: zeros + nonzeros,
        zeros,
        nonzeros,
    })
}

// ---------------------------------------------------------------------------
// schedule cycles

/// Schedule-length census over every multiplier of one width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleStats {
    pub width: u8,
    pub values: u64,
    pub total_steps: u64,
    pub min_steps: u32,
    pub max_steps: u32,
    /// Steps that load the accumulator (one per nonzero multiplier).
    pub total_loads: u64,
    /// Accumulate steps beyond the load.
    pub total_adds: u64,
    /// Steps that only shift.
    pub total_zero_steps: u64,
}

impl CycleStats {
    pub fn mean_steps(&self) -> Rational {
        Rational::new(self.total_steps as i64, self.values as i64)
    }

    pub fn mean_steps_f64(&self) -> f64 {
        self.total_steps as f64 / self.values as f64
    }
}

impl fmt::Display for CycleStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "schedule length census, width {}: mean {:.4} steps ({}/{}), min {}, max {} over {} multipliers",
            self.width,
            self.mean_steps_f64(),
            self.total_steps,
            self.values,
            self.min_steps,
            self.max_steps,
            self.values
        )
    }
}

/// Enumerates the shift-add schedule of every `width`-bit multiplier. One
/// step is one cycle, so `mean_steps` is the per-word multiply cost an
/// average constant pays at this width.
pub fn cycles_per_multiply(width: u8) -> Result<CycleStats, AnalysisError> {
    check_width(width)?;
    let half = 1i64 << (width - 1);
    let mut stats = CycleStats {
        width,
        values: (2 * half) as u64,
        total_steps: 0,
        min_steps: u32::MAX,
        max_steps: 0,
        total_loads: 0,
        total_adds: 0,
        total_zero_steps: 0,
    };
    for v in -half..half {
        let code = csd_encode(v as i32, width)?;
        let schedule = make_schedule(&code, MAX_SIGMA)?;
        let steps = schedule.len() as u32;
        let nonzeros = code.nonzero_count();
        stats.total_steps += u64::from(steps);
        stats.min_steps = stats.min_steps.min(steps);
        stats.max_steps = stats.max_steps.max(steps);
        stats.total_loads += u64::from(nonzeros > 0);
        stats.total_adds += u64::from(nonzeros.saturating_sub(1));
        stats.total_zero_steps += u64::from(steps - nonzeros);
    }
    Ok(stats)
}

// ---------------------------------------------------------------------------
// truncation error

/// Accuracy census for the truncated multiply at one operand-width pair.
///
/// Error is measured on the untruncated writeback sum, in output steps
/// (units of 2^-(m_width-1)). Relative error is averaged only over pairs
/// whose exact product is at least one output step; below that the quantity
/// is dominated by the grid, not the multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub m_width: u8,
    pub y_width: u8,
    /// True when the operand space was sampled rather than enumerated.
    pub sampled: bool,
    pub pairs: u64,
    pub included: u64,
    pub excluded: u64,
    pub mean_rel_err: f64,
    pub max_rel_err: f64,
    pub max_abs_err_ulp: Rational,
    /// Pairs whose truncated product equals the exact product.
    pub exact: u64,
    /// Pairs whose writeback wrapped modulo 2^m_width.
    pub wraps: u64,
}

impl fmt::Display for ErrorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "truncated multiply error, m={}-bit, y={}-bit ({}, {} pairs)",
            self.m_width,
            self.y_width,
            if self.sampled { "sampled" } else { "exhaustive" },
            self.pairs
        )?;
        writeln!(
            f,
            "  mean relative error  {:.6}  ({} included, {} below one output step)",
            self.mean_rel_err, self.included, self.excluded
        )?;
        writeln!(
            f,
            "  max relative error   {:.6}",
            self.max_rel_err
        )?;
        writeln!(
            f,
            "  max absolute error   {}/{} output steps",
            self.max_abs_err_ulp.numer(),
            self.max_abs_err_ulp.denom()
        )?;
        writeln!(f, "  exact products       {}", self.exact)?;
        write!(f, "  wrapped writebacks   {}", self.wraps)
    }
}

/// Sweeps operand pairs at the given widths: exhaustive when both widths are
/// at most 8, otherwise [`SWEEP_SAMPLES`] fixed-seed samples.
pub fn error_sweep(m_width: u8, y_width: u8) -> Result<ErrorReport, AnalysisError> {
    check_width(m_width)?;
    check_width(y_width)?;
    if m_width <= EXHAUSTIVE_LIMIT && y_width <= EXHAUSTIVE_LIMIT {
        let mh = 1i64 << (m_width - 1);
        let yh = 1i64 << (y_width - 1);
        let pairs = (-mh..mh).flat_map(|m| (-yh..yh).map(move |y| (m as i32, y as i32)));
        sweep_pairs(m_width, y_width, pairs, false)
    } else {
        error_sweep_sampled(m_width, y_width, SWEEP_SAMPLES, SWEEP_SEED)
    }
}

/// Fixed-seed sampled sweep with caller-chosen sample count and seed.
pub fn error_sweep_sampled(
    m_width: u8,
    y_width: u8,
    samples: u64,
    seed: u64,
) -> Result<ErrorReport, AnalysisError> {
    check_width(m_width)?;
    check_width(y_width)?;
    let mh = 1i32 << (m_width - 1);
    let yh = 1i32 << (y_width - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..samples).map(move |_| {
        (
            rng.random_range(-mh..mh),
            rng.random_range(-yh..yh),
        )
    });
    sweep_pairs(m_width, y_width, pairs, true)
}

fn sweep_pairs(
    m_width: u8,
    y_width: u8,
    pairs: impl Iterator<Item = (i32, i32)>,
    sampled: bool,
) -> Result<ErrorReport, AnalysisError> {
    let include_floor = 1i64 << (y_width - 1);
    let mut report = ErrorReport {
        m_width,
        y_width,
        sampled,
        pairs: 0,
        included: 0,
        excluded: 0,
        mean_rel_err: 0.0,
        max_rel_err: 0.0,
        max_abs_err_ulp: Rational::new(0, 1),
        exact: 0,
        wraps: 0,
    };
    // Kahan compensation keeps the mean stable across a million-term sum.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (m, y) in pairs {
        let s = multiply_scalar_traced(m, m_width, y, y_width)?;
        report.pairs += 1;
        report.wraps += u64::from(s.wrapped);
        // Exact product on the output grid: m*y / 2^(y_width-1) output steps.
        let exact_num = i64::from(m) * i64::from(y);
        let err = {
            let d = Rational::new(exact_num, include_floor) - Rational::from_integer(s.final_sum);
            if d < Rational::new(0, 1) {
                -d
            } else {
                d
            }
        };
        if err == Rational::new(0, 1) {
            report.exact += 1;
        }
        if err > report.max_abs_err_ulp {
            report.max_abs_err_ulp = err;
        }
        if exact_num.abs() >= include_floor {
            report.included += 1;
            let rel = (err * Rational::new(include_floor, exact_num.abs()))
                .to_f64()
                .expect("ratio of small integers");
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
            }
            let t = rel - comp;
            let next = sum + t;
            comp = (next - sum) - t;
            sum = next;
        } else {
            report.excluded += 1;
        }
    }
    if report.included > 0 {
        report.mean_rel_err = sum / report.included as f64;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// cost model

/// Per-cycle cost weights for the comparison below.
///
/// Each pipeline cycle is billed once, under the class of work it performs:
/// stream reads and writes as `stream_io`, accumulator loads as `load`,
/// accumulate steps as `add`, shift-only steps as `shift_stage`, crossbar
/// cycles as `repack`, bypass cycles as `reg_write`. `hard_mul` prices one
/// full-word multiply issue of the fixed-lane baseline, lane parallelism
/// included. With every weight at 1.0 the total is exactly the cycle count.
///
/// The default model is uncalibrated: weights are unitless cycle
/// equivalents. Supplying `unit` in a model file (for example `unit = pJ`)
/// declares the weights calibrated and labels reports accordingly.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub add: f64,
    pub load: f64,
    pub shift_stage: f64,
    pub repack: f64,
    pub reg_write: f64,
    pub stream_io: f64,
    pub hard_mul: f64,
    unit: Option<String>,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            add: 1.0,
            load: 1.0,
            shift_stage: 1.0,
            repack: 1.0,
            reg_write: 1.0,
            stream_io: 1.0,
            hard_mul: 1.0,
            unit: None,
        }
    }
}

impl CostModel {
    pub fn is_calibrated(&self) -> bool {
        self.unit.is_some()
    }

    /// Label for cost columns: the calibrated unit, or a unitless marker.
    pub fn unit_label(&self) -> &str {
        self.unit.as_deref().unwrap_or("cycle-equivalents, uncalibrated")
    }

    /// Parses `key = value` lines. Keys are the seven weight names plus
    /// `unit`; `#` comments and blank lines are ignored. Weights must be
    /// finite and nonnegative. Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<CostModel, AnalysisError> {
        let mut model = CostModel::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let code = raw.split('#').next().unwrap_or("").trim();
            if code.is_empty() {
                continue;
            }
            let err = |reason: String| AnalysisError::CostModel { line, reason };
            let (key, value) = code
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err("expected key = value".into()))?;
            if key == "unit" {
                if value.is_empty() {
                    return Err(err("unit needs a label".into()));
                }
                model.unit = Some(value.to_string());
                continue;
            }
            let slot = match key {
                "add" => &mut model.add,
                "load" => &mut model.load,
                "shift_stage" => &mut model.shift_stage,
                "repack" => &mut model.repack,
                "reg_write" => &mut model.reg_write,
                "stream_io" => &mut model.stream_io,
                "hard_mul" => &mut model.hard_mul,
                other => return Err(err(format!("unknown key {other:?}"))),
            };
            let w: f64 = value
                .parse()
                .map_err(|_| err(format!("bad number {value:?}")))?;
            if !w.is_finite() || w < 0.0 {
                return Err(err(format!("weight must be finite and nonnegative, got {w}")));
            }
            *slot = w;
        }
        Ok(model)
    }
}

// ---------------------------------------------------------------------------
// hard SIMD comparison

/// One workload width compared across the two machines.
///
/// Both machines stream 48-bit words: load, multiply, store. The soft
/// pipeline pays a schedule per word (averaged over every multiplier of the
/// executed width) plus a bypass writeback; the hard baseline multiplies all
/// its lanes in a single issue. Per-element figures divide by the lane count
/// each machine packs at its chosen width.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub workload_width: u8,
    pub soft_width: u8,
    pub soft_lanes: u32,
    pub hard_width: u8,
    pub hard_lanes: u32,
    pub soft_cycles_per_word: Rational,
    pub hard_cycles_per_word: Rational,
    /// Soft over hard, per element delivered.
    pub cycle_ratio: Rational,
    pub soft_cost_per_word: f64,
    pub hard_cost_per_word: f64,
    /// Soft over hard, per element delivered, under the cost model.
    pub cost_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: Vec<u8>,
    pub unit_label: String,
    pub rows: Vec<CompareRow>,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lanes: Vec<String> = self.baseline.iter().map(|w| w.to_string()).collect();
        writeln!(
            f,
            "soft pipeline vs hard SIMD lanes [{}]; costs in {}",
            lanes.join(","),
            self.unit_label
        )?;
        writeln!(
            f,
            "{:>3} {:>10} {:>10} {:>14} {:>14} {:>11} {:>11}",
            "w", "soft", "hard", "soft cyc/word", "hard cyc/word", "cyc ratio", "cost ratio"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>3} {:>10} {:>10} {:>14.4} {:>14.4} {:>11.4} {:>11.4}",
                r.workload_width,
                format!("{}b x{}", r.soft_width, r.soft_lanes),
                format!("{}b x{}", r.hard_width, r.hard_lanes),
                r.soft_cycles_per_word.to_f64().unwrap_or(f64::NAN),
                r.hard_cycles_per_word.to_f64().unwrap_or(f64::NAN),
                r.cycle_ratio.to_f64().unwrap_or(f64::NAN),
                r.cost_ratio
            )?;
        }
        Ok(())
    }
}

/// Compares the soft pipeline against a fixed-lane SIMD multiplier across
/// workload element widths.
///
/// Each machine runs every element width at the narrowest width it supports
/// that is no narrower: the soft side picks from the supported sub-word
/// formats, the hard side from `baseline` lane widths. A workload wider than
/// a machine's widest lane is an error.
pub fn compare_hard_simd(
    workload_widths: &[u8],
    baseline: &[u8],
    model: &CostModel,
) -> Result<Comparison, AnalysisError> {
    if baseline.is_empty() {
        return Err(AnalysisError::EmptyBaseline);
    }
    let mut lanes_sorted = baseline.to_vec();
    lanes_sorted.sort_unstable();
    lanes_sorted.dedup();
    for &w in &lanes_sorted {
        if w == 0 || u32::from(w) > WORD_BITS || !WORD_BITS.is_multiple_of(u32::from(w)) {
            return Err(AnalysisError::BadBaselineWidth(w));
        }
    }
    let mut rows = Vec::with_capacity(workload_widths.len());
    for &w in workload_widths {
        let soft_fmt = SubwordFormat::ALL
            .iter()
            .copied()
            .find(|f| f.width() >= w)
            .ok_or(AnalysisError::NoSoftFormat(w))?;
        let hard_w = lanes_sorted
            .iter()
            .copied()
            .find(|&b| b >= w)
            .ok_or(AnalysisError::NoBaselineLane(w))?;
        let soft_lanes = soft_fmt.lanes() as u32;
        let hard_lanes = WORD_BITS / u32::from(hard_w);
        let census = cycles_per_multiply(soft_fmt.width())?;
        let v = census.values as i64;

        // Per word, soft: one stream read, the schedule, one bypass
        // writeback, one stream write. Totals over the census divide by a
        // power of two, so the f64 arithmetic below is exact.
        let soft_cycles =
            Rational::new(3 * v + census.total_steps as i64, v);
        let soft_cost = 2.0 * model.stream_io
            + model.reg_write
            + model.load * (census.total_loads as f64 / v as f64)
            + model.add * (census.total_adds as f64 / v as f64)
            + model.shift_stage * (census.total_zero_steps as f64 / v as f64);

        // Per word, hard: one stream read, one full-word multiply issue,
        // one stream write.
        let hard_cycles = Rational::from_integer(3);
        let hard_cost = 2.0 * model.stream_io + model.hard_mul;

        let cycle_ratio = soft_cycles * Rational::new(i64::from(hard_lanes), 1)
            / (hard_cycles * Rational::new(i64::from(soft_lanes), 1));
        let cost_ratio =
            (soft_cost * f64::from(hard_lanes)) / (hard_cost * f64::from(soft_lanes));

        rows.push(CompareRow {
            workload_width: w,
            soft_width: soft_fmt.width(),
            soft_lanes,
            hard_width: hard_w,
            hard_lanes,
            soft_cycles_per_word: soft_cycles,
            hard_cycles_per_word: hard_cycles,
            cycle_ratio,
            soft_cost_per_word: soft_cost,
            hard_cost_per_word: hard_cost,
            cost_ratio,
        });
    }
    Ok(Comparison {
        baseline: lanes_sorted,
        unit_label: model.unit_label().to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // ---- density ----

    #[test]
    fn density_census_matches_enumerated_totals() {
        // Totals recomputed by an independent digit-by-digit recount.
        for (w, num, den) in [
            (2u8, 5i64, 8i64),
            (4, 41, 64),
            (6, 83, 128),
            (8, 1337, 2048),
            (10, 6713, 10240),
            (12, 10771, 16384),
        ] {
            let r = csd_density(w).unwrap();
            assert_eq!(r.density(), Rational::new(num, den), "width {w}");
            assert_eq!(r.values, 1 << w);
            assert_eq!(r.digits, u64::from(w) << w);
            assert_eq!(r.zeros + r.nonzeros, r.digits);
        }
        assert_eq!(csd_density(12).unwrap().zeros, 32313);
    }

    #[test]
    fn density_approaches_two_thirds_from_below() {
        let mut last = Rational::new(1, 1);
        for w in [4u8, 6, 8, 10, 12] {
            let r = csd_density(w).unwrap();
            assert!(r.density() < Rational::new(2, 3), "width {w}");
            let dev = r.deviation_from_limit();
            assert!(dev < last, "deviation not shrinking at width {w}");
            last = dev;
        }
    }

    #[test]
    fn density_rejects_out_of_range_widths() {
        assert!(csd_density(1).is_err());
        assert!(csd_density(17).is_err());
    }

    // ---- cycles ----

    #[test]
    fn cycle_census_matches_enumerated_totals() {
        let c8 = cycles_per_multiply(8).unwrap();
        assert_eq!(c8.mean_steps(), Rational::new(953, 256));
        assert_eq!(c8.min_steps, 3);
        assert_eq!(c8.max_steps, 5);
        let c12 = cycles_per_multiply(12).unwrap();
        assert_eq!(c12.mean_steps(), Rational::new(22263, 4096));
        assert_eq!(c12.min_steps, 4);
        assert_eq!(c12.max_steps, 7);
    }

    #[test]
    fn cycle_census_internal_totals_are_consistent() {
        for w in [4u8, 8, 12] {
            let c = cycles_per_multiply(w).unwrap();
            // Every value except zero loads once.
            assert_eq!(c.total_loads, c.values - 1, "width {w}");
            assert_eq!(
                c.total_steps,
                c.total_loads + c.total_adds + c.total_zero_steps,
                "width {w}"
            );
        }
    }

    // ---- error sweep ----

    #[test]
    fn exhaustive_error_at_8x8_matches_frozen_census() {
        let r = error_sweep(8, 8).unwrap();
        assert!(!r.sampled);
        assert_eq!(r.pairs, 65536);
        assert_eq!(r.included, 62477);
        assert_eq!(r.excluded, 3059);
        assert_eq!(r.exact, 2304);
        assert_eq!(r.wraps, 1);
        assert_eq!(r.max_abs_err_ulp, Rational::new(127, 128));
        assert!(
            r.mean_rel_err > 0.0466 && r.mean_rel_err < 0.0468,
            "mean_rel_err = {}",
            r.mean_rel_err
        );
        // Included pairs are at least one output step, and the absolute
        // error stays under two steps, so the relative error stays under 2.
        assert!(r.max_rel_err < 2.0);
    }

    #[test]
    fn sampled_sweeps_are_deterministic_and_bounded() {
        let a = error_sweep_sampled(12, 12, 50_000, SWEEP_SEED).unwrap();
        let b = error_sweep_sampled(12, 12, 50_000, SWEEP_SEED).unwrap();
        assert_eq!(a, b);
        assert!(a.sampled);
        assert_eq!(a.pairs, 50_000);
        assert_eq!(a.included + a.excluded, a.pairs);
        assert!(a.max_abs_err_ulp < Rational::new(2, 1));
        let c = error_sweep_sampled(12, 12, 50_000, SWEEP_SEED + 1).unwrap();
        assert_ne!(a, c, "different seeds should sample different pairs");
    }

    #[test]
    fn wide_widths_fall_back_to_sampling() {
        let r = error_sweep_sampled(16, 16, 2_000, 7).unwrap();
        assert!(r.sampled);
        assert!(r.max_abs_err_ulp < Rational::new(2, 1));
        // The report must label itself sampled through the public entry
        // point as well; keep the sample count small via the direct call.
        assert!(error_sweep(8, 8).is_ok());
    }

    // ---- cost model ----

    #[test]
    fn cost_model_defaults_are_uncalibrated_unit_weights() {
        let m = CostModel::default();
        assert!(!m.is_calibrated());
        assert_eq!(m.add, 1.0);
        assert_eq!(m.hard_mul, 1.0);
        assert!(!m.unit_label().contains("pJ"));
    }

    #[test]
    fn cost_model_parses_keys_and_unit() {
        let m = CostModel::parse(
            "# silicon numbers\nadd = 0.5\nhard_mul = 9.0\nunit = pJ\n",
        )
        .unwrap();
        assert_eq!(m.add, 0.5);
        assert_eq!(m.hard_mul, 9.0);
        assert_eq!(m.load, 1.0);
        assert!(m.is_calibrated());
        assert_eq!(m.unit_label(), "pJ");
    }

    #[test]
    fn cost_model_reports_bad_lines_by_number() {
        let e = CostModel::parse("add = 1.0\nbogus = 2.0").unwrap_err();
        assert!(matches!(e, AnalysisError::CostModel { line: 2, .. }), "{e}");
        let e = CostModel::parse("add = -1").unwrap_err();
        assert!(matches!(e, AnalysisError::CostModel { line: 1, .. }), "{e}");
        let e = CostModel::parse("add 1").unwrap_err();
        assert!(matches!(e, AnalysisError::CostModel { line: 1, .. }), "{e}");
    }

    // ---- comparison ----

    #[test]
    fn comparison_picks_narrowest_covering_widths() {
        let m = CostModel::default();
        let c = compare_hard_simd(&[4, 6, 8, 9, 12, 16], &[8, 16], &m).unwrap();
        let widths: Vec<(u8, u8, u32, u8, u32)> = c
            .rows
            .iter()
            .map(|r| {
                (
                    r.workload_width,
                    r.soft_width,
                    r.soft_lanes,
                    r.hard_width,
                    r.hard_lanes,
                )
            })
            .collect();
        assert_eq!(
            widths,
            vec![
                (4, 4, 12, 8, 6),
                (6, 6, 8, 8, 6),
                (8, 8, 6, 8, 6),
                (9, 12, 4, 16, 3),
                (12, 12, 4, 16, 3),
                (16, 16, 3, 16, 3),
            ]
        );
    }

    #[test]
    fn lane_counts_jump_differently_past_eight_bits() {
        let m = CostModel::default();
        let coarse = compare_hard_simd(&[8, 9], &[8, 16], &m).unwrap();
        assert_eq!(coarse.rows[0].hard_lanes, 6);
        assert_eq!(coarse.rows[1].hard_lanes, 3);
        let fine = compare_hard_simd(&[8, 9], &[4, 6, 8, 12, 16], &m).unwrap();
        assert_eq!(fine.rows[0].hard_lanes, 6);
        assert_eq!(fine.rows[1].hard_lanes, 4);
        // The soft side steps 6 -> 4 either way.
        assert_eq!(coarse.rows[0].soft_lanes, 6);
        assert_eq!(coarse.rows[1].soft_lanes, 4);
    }

    #[test]
    fn eight_bit_row_matches_hand_computed_rationals() {
        let m = CostModel::default();
        let c = compare_hard_simd(&[8], &[8, 16], &m).unwrap();
        let r = &c.rows[0];
        // 3 fixed cycles plus the census mean 953/256.
        assert_eq!(r.soft_cycles_per_word, Rational::new(1721, 256));
        assert_eq!(r.hard_cycles_per_word, Rational::new(3, 1));
        // Equal lane counts at w = 8, so the ratio is just cycles/cycles.
        assert_eq!(r.cycle_ratio, Rational::new(1721, 768));
    }

    #[test]
    fn unit_weights_reduce_cost_ratio_to_cycle_ratio_exactly() {
        let m = CostModel::default();
        let c = compare_hard_simd(&[4, 6, 8, 9, 12, 16], &[4, 6, 8, 12, 16], &m).unwrap();
        for r in &c.rows {
            assert_eq!(
                r.cost_ratio,
                r.cycle_ratio.to_f64().unwrap(),
                "workload width {}",
                r.workload_width
            );
        }
    }

    #[test]
    fn scaling_every_weight_leaves_ratios_unchanged() {
        let base = CostModel::default();
        let mut doubled = CostModel::default();
        for w in [
            &mut doubled.add,
            &mut doubled.load,
            &mut doubled.shift_stage,
            &mut doubled.repack,
            &mut doubled.reg_write,
            &mut doubled.stream_io,
            &mut doubled.hard_mul,
        ] {
            *w *= 2.0;
        }
        let a = compare_hard_simd(&[4, 8, 12, 16], &[8, 16], &base).unwrap();
        let b = compare_hard_simd(&[4, 8, 12, 16], &[8, 16], &doubled).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            // Power-of-two scaling is exact in f64.
            assert_eq!(ra.cost_ratio, rb.cost_ratio);
        }
    }

    #[test]
    fn comparison_rejects_uncoverable_workloads_and_bad_baselines() {
        let m = CostModel::default();
        assert_eq!(
            compare_hard_simd(&[17], &[8, 16], &m),
            Err(AnalysisError::NoSoftFormat(17))
        );
        assert_eq!(
            compare_hard_simd(&[9], &[4, 8], &m),
            Err(AnalysisError::NoBaselineLane(9))
        );
        assert_eq!(
            compare_hard_simd(&[8], &[], &m),
            Err(AnalysisError::EmptyBaseline)
        );
        assert_eq!(
            compare_hard_simd(&[4], &[5], &m),
            Err(AnalysisError::BadBaselineWidth(5))
        );
    }

    #[test]
    fn uncalibrated_reports_never_claim_a_physical_unit() {
        let c = compare_hard_simd(&[8], &[8, 16], &CostModel::default()).unwrap();
        assert!(!c.to_string().contains("pJ"));
        let cal = CostModel::parse("unit = pJ").unwrap();
        let c = compare_hard_simd(&[8], &[8, 16], &cal).unwrap();
        assert!(c.to_string().contains("pJ"));
    }
}
