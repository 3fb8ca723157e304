//! Bit-exact functional model of a 48-bit software-partitioned SIMD datapath.
//!
//! The datapath multiplies every sub-word lane of a packed 48-bit word by one
//! shared fixed-point constant using a canonical-signed-digit shift-add
//! schedule (stage 1), then reshapes lanes between sub-word formats through a
//! crossbar (stage 2). Lane boundaries are not wired into the adder; they are
//! imposed by a per-format boundary mask that kills carries and steers sign
//! extension, so the same 48 bits can be driven as 12x4, 8x6, 6x8, 4x12 or
//! 3x16 lanes.
//!
//! Modules:
//!
//! * [`fxp`]: Q1.(w-1) fixed-point values and exact rational reference
//!   arithmetic.
//! * [`csd`]: canonical signed digit recoding and zero-skipping shift-add
//!   schedules.
//! * [`word`]: packed words, the boundary mask, and the partitioned
//!   add/shift/fused-step primitives.
//! * [`mul`]: the packed truncated multiply and its scalar reference
//!   recurrence.
//! * [`repack`]: crossbar configurations for widening and narrowing lanes.
//! * [`pipeline`]: the two-stage microprogrammed machine built from the
//!   above, with cycle accounting and tracing.
//! * [`analysis`]: exhaustive error/density/cycle sweeps and the
//!   hard-SIMD comparison model.
//!
//! # Example
//!
//! Six 8-bit lanes of +0.5, each multiplied by 115/128 in four cycles:
//!
//! ```
//! use softsimd::csd::csd_encode;
//! use softsimd::mul::multiply_packed;
//! use softsimd::word::{extract_lane, pack, SubwordFormat};
//! use softsimd::QVal;
//!
//! let word = pack(&vec![QVal::new(64, 8)?; 6], SubwordFormat::W8)?;
//! let code = csd_encode(115, 8)?;
//! let (out, trace) = multiply_packed(word, &code)?;
//! assert_eq!(trace.cycles, 4);
//! for lane in 0..6 {
//!     // 64 * 115 / 128 = 57.5, truncated onto the output grid.
//!     assert_eq!(extract_lane(out, lane)?.bits(), 57);
//! }
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod analysis;
pub mod csd;
pub mod fxp;
pub mod mul;
pub mod pipeline;
pub mod repack;
pub mod word;

pub use analysis::{Comparison, CostModel, CycleStats, DensityReport, ErrorReport};
pub use csd::{CsdCode, Schedule, ScheduleStats, Step};
pub use fxp::{QVal, Rational};
pub use mul::MulTrace;
pub use pipeline::{EventCounters, Instr, MicroProgram, PipelineState, RunOutcome};
pub use repack::RepackConfig;
pub use word::{BoundaryMask, PackedWord, SubwordFormat};
