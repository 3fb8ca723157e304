//! Crossbar repacking between sub-word formats.
//!
//! A repack configuration is a static routing table: each of the 48 output
//! bits either copies one bit of an input register or is tied to zero. Two
//! directions exist, both chosen so that fixed-point weight is preserved:
//!
//! * widening places each source lane in the TOP `from_w` bits of its wider
//!   output lane and zero-fills the low bits, so the Q1.(w-1) value is
//!   unchanged;
//! * narrowing keeps the TOP `to_w` bits of each source lane, which floors
//!   the value toward negative infinity on the coarser grid.
//!
//! A widening pass shrinks the lane count by the width ratio r, so one input
//! word fans out to r output words selected by `group`. Narrowing runs the
//! other way: each invocation consumes the two input registers (R2 feeding
//! the lower output lanes, R3 the upper) and fills a 2-input-word window of
//! output lanes; ratios above 2 take a second invocation with the next
//! `group` to fill the remaining lanes, and the partial words merge
//! disjointly.

use std::fmt;

use thiserror::Error;

use crate::word::{PackedWord, SubwordFormat, WordError, WORD_BITS};

/// Width pairs the crossbar is wired for, smaller width first. Conversions
/// are enabled pair by pair; a pair absent from this table is rejected even
/// if its ratio is integral.
pub const SUPPORTED_PAIRS: [(u8, u8); 5] = [(4, 8), (4, 12), (4, 16), (6, 12), (8, 16)];

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum RepackError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("no crossbar route between {from}-bit and {to}-bit lanes")]
    UnsupportedPair { from: u8, to: u8 },
    #[error("{width}-bit to {width}-bit repack is the bypass path, not a crossbar route")]
    IdentityPair { width: u8 },
    #[error("group {group} out of range; {from}->{to} repack has {groups} group(s)")]
    GroupOutOfRange {
        from: u8,
        to: u8,
        group: u8,
        groups: u8,
    },
    #[error("repack input {reg} holds {got}-bit lanes, route needs {expected}-bit")]
    InputFormat {
        reg: &'static str,
        expected: u8,
        got: u8,
    },
}

/// Source of one output bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitSource {
    R2(u8),
    R3(u8),
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Widen,
    Narrow,
}

/// A fully elaborated crossbar route: 48 output bits, each with one source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepackConfig {
    from: SubwordFormat,
    to: SubwordFormat,
    direction: Direction,
    group: u8,
    mapping: [BitSource; WORD_BITS as usize],
}

impl RepackConfig {
    #[inline]
    pub fn from_format(&self) -> SubwordFormat {
        self.from
    }

    #[inline]
    pub fn to_format(&self) -> SubwordFormat {
        self.to
    }

    #[inline]
    pub fn direction(&self) -> Direction {
        self.direction
    }

    #[inline]
    pub fn group(&self) -> u8 {
        self.group
    }

    #[inline]
    pub fn mapping(&self) -> &[BitSource; WORD_BITS as usize] {
        &self.mapping
    }

    pub fn reads_r2(&self) -> bool {
        self.mapping.iter().any(|s| matches!(s, BitSource::R2(_)))
    }

    pub fn reads_r3(&self) -> bool {
        self.mapping.iter().any(|s| matches!(s, BitSource::R3(_)))
    }

    /// Output bits this invocation drives (union of its output lanes).
    /// Narrowing groups of a ratio > 2 route drive disjoint windows; merging
    /// their results under this mask reassembles the full word.
    pub fn write_mask(&self) -> u64 {
        let to_w = u32::from(self.to.width());
        let mut mask = 0u64;
        for (i, src) in self.mapping.iter().enumerate() {
            if !matches!(src, BitSource::Zero) {
                let lane = i as u32 / to_w;
                mask |= ((1u64 << to_w) - 1) << (lane * to_w);
            }
        }
        mask
    }

    /// One line per output bit: `out[i] <- R2[j]`, `out[i] <- R3[j]` or
    /// `out[i] <- 0`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, src) in self.mapping.iter().enumerate() {
            match src {
                BitSource::R2(j) => out.push_str(&format!("out[{i}] <- R2[{j}]\n")),
                BitSource::R3(j) => out.push_str(&format!("out[{i}] <- R3[{j}]\n")),
                BitSource::Zero => out.push_str(&format!("out[{i}] <- 0\n")),
            }
        }
        out
    }
}

/// Number of valid `group` values for a conversion.
pub fn group_count(from_w: u8, to_w: u8) -> Result<u8, RepackError> {
    let (ratio, direction) = route_ratio(from_w, to_w)?;
    Ok(match direction {
        Direction::Widen => ratio,
        Direction::Narrow => ratio.div_ceil(2),
    })
}

fn route_ratio(from_w: u8, to_w: u8) -> Result<(u8, Direction), RepackError> {
    let from = SubwordFormat::from_width(from_w)?;
    let to = SubwordFormat::from_width(to_w)?;
    if from == to {
        return Err(RepackError::IdentityPair { width: from_w });
    }
    let (narrow_w, wide_w, direction) = if to_w > from_w {
        (from_w, to_w, Direction::Widen)
    } else {
        (to_w, from_w, Direction::Narrow)
    };
    if !SUPPORTED_PAIRS.contains(&(narrow_w, wide_w)) {
        return Err(RepackError::UnsupportedPair {
            from: from_w,
            to: to_w,
        });
    }
    Ok((wide_w / narrow_w, direction))
}

/// Builds the routing table for a `from_w`-bit to `to_w`-bit conversion.
pub fn make_repack_config(from_w: u8, to_w: u8, group: u8) -> Result<RepackConfig, RepackError> {
    let (_, direction) = route_ratio(from_w, to_w)?;
    let groups = group_count(from_w, to_w)?;
    if group >= groups {
        return Err(RepackError::GroupOutOfRange {
            from: from_w,
            to: to_w,
            group,
            groups,
        });
    }
    let from = SubwordFormat::from_width(from_w).expect("validated");
    let to = SubwordFormat::from_width(to_w).expect("validated");
    let mut mapping = [BitSource::Zero; WORD_BITS as usize];
    match direction {
        Direction::Widen => {
            let (fw, tw) = (usize::from(from_w), usize::from(to_w));
            let lanes_out = to.lanes();
            for k in 0..lanes_out {
                let src_lane = usize::from(group) * lanes_out + k;
                // Source lane lands MSB-aligned; low bits stay zero.
                for b in 0..fw {
                    mapping[k * tw + (tw - fw) + b] = BitSource::R2((src_lane * fw + b) as u8);
                }
            }
        }
        Direction::Narrow => {
            let (fw, tw) = (usize::from(from_w), usize::from(to_w));
            let lanes_in = from.lanes();
            let lanes_out = to.lanes();
            let window = usize::from(group) * 2 * lanes_in;
            for k in window..(window + 2 * lanes_in).min(lanes_out) {
                let (reg_lane, r3) = if k - window < lanes_in {
                    (k - window, false)
                } else {
                    (k - window - lanes_in, true)
                };
                // Top to_w bits of the source lane.
                let src_base = reg_lane * fw + (fw - tw);
                for b in 0..tw {
                    mapping[k * tw + b] = if r3 {
                        BitSource::R3((src_base + b) as u8)
                    } else {
                        BitSource::R2((src_base + b) as u8)
                    };
                }
            }
        }
    }
    Ok(RepackConfig {
        from,
        to,
        direction,
        group,
        mapping,
    })
}

/// Routes input bits through a configuration. Only registers the mapping
/// actually reads must carry the route's input format.
pub fn apply_repack(
    cfg: &RepackConfig,
    r2: PackedWord,
    r3: PackedWord,
) -> Result<PackedWord, RepackError> {
    if cfg.reads_r2() && r2.format() != cfg.from {
        return Err(RepackError::InputFormat {
            reg: "R2",
            expected: cfg.from.width(),
            got: r2.format().width(),
        });
    }
    if cfg.reads_r3() && r3.format() != cfg.from {
        return Err(RepackError::InputFormat {
            reg: "R3",
            expected: cfg.from.width(),
            got: r3.format().width(),
        });
    }
    let mut raw = 0u64;
    for (i, src) in cfg.mapping.iter().enumerate() {
        let bit = match src {
            BitSource::R2(j) => (r2.raw() >> j) & 1,
            BitSource::R3(j) => (r3.raw() >> j) & 1,
            BitSource::Zero => 0,
        };
        raw |= bit << i;
    }
    Ok(PackedWord::from_raw(raw, cfg.to).expect("48-bit route output"))
}

/// The no-conversion path: the word passes stage 2 untouched.
pub fn bypass(r2: PackedWord) -> PackedWord {
    r2
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Widen => f.write_str("widen"),
            Direction::Narrow => f.write_str("narrow"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fxp::QVal;
    use crate::word::{extract_lane, pack, WORD_MASK};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn word_from_lanes(values: &[i32], fmt: SubwordFormat) -> PackedWord {
        let qs: Vec<QVal> = values
            .iter()
            .map(|&v| QVal::new(v, fmt.width()).unwrap())
            .collect();
        pack(&qs, fmt).unwrap()
    }

    fn zero(width: u8) -> PackedWord {
        PackedWord::zero(SubwordFormat::from_width(width).unwrap())
    }

    fn all_configs() -> Vec<RepackConfig> {
        let mut cfgs = Vec::new();
        for (a, b) in SUPPORTED_PAIRS {
            for (from, to) in [(a, b), (b, a)] {
                for g in 0..group_count(from, to).unwrap() {
                    cfgs.push(make_repack_config(from, to, g).unwrap());
                }
            }
        }
        cfgs
    }

    // ---- construction ----

    #[test]
    fn identity_width_is_rejected_as_bypass() {
        assert_eq!(
            make_repack_config(8, 8, 0),
            Err(RepackError::IdentityPair { width: 8 })
        );
    }

    #[test]
    fn unsupported_pairs_and_groups_are_rejected() {
        assert_eq!(
            make_repack_config(6, 8, 0),
            Err(RepackError::UnsupportedPair { from: 6, to: 8 })
        );
        assert_eq!(
            make_repack_config(6, 16, 0),
            Err(RepackError::UnsupportedPair { from: 6, to: 16 })
        );
        assert!(matches!(
            make_repack_config(5, 8, 0),
            Err(RepackError::Word(WordError::UnsupportedWidth(5)))
        ));
        assert_eq!(
            make_repack_config(4, 8, 2),
            Err(RepackError::GroupOutOfRange {
                from: 4,
                to: 8,
                group: 2,
                groups: 2
            })
        );
        // 12->4 narrowing has ratio 3: two invocations cover 8 + 4 lanes.
        assert_eq!(group_count(12, 4).unwrap(), 2);
        assert_eq!(group_count(16, 4).unwrap(), 2);
        assert_eq!(group_count(8, 4).unwrap(), 1);
        assert_eq!(group_count(4, 16).unwrap(), 4);
    }

    #[test]
    fn widen_mapping_is_msb_aligned() {
        let cfg = make_repack_config(4, 8, 0).unwrap();
        // Output lane 0: low nibble zero, high nibble from source lane 0.
        for b in 0..4 {
            assert_eq!(cfg.mapping()[b], BitSource::Zero);
            assert_eq!(cfg.mapping()[4 + b], BitSource::R2(b as u8));
        }
        // Group 1 pulls the upper six source lanes.
        let cfg = make_repack_config(4, 8, 1).unwrap();
        assert_eq!(cfg.mapping()[4], BitSource::R2(24));
        assert!(cfg.dump().starts_with("out[0] <- 0\n"));
        assert!(cfg.dump().contains("out[4] <- R2[24]\n"));
    }

    #[test]
    fn narrow_mapping_takes_top_bits_from_both_registers() {
        let cfg = make_repack_config(8, 4, 0).unwrap();
        // Output lane 0 <- top nibble of R2 lane 0.
        for b in 0..4 {
            assert_eq!(cfg.mapping()[b], BitSource::R2((4 + b) as u8));
        }
        // Output lane 6 (first of the high half) <- top nibble of R3 lane 0.
        for b in 0..4 {
            assert_eq!(cfg.mapping()[24 + b], BitSource::R3((4 + b) as u8));
        }
        assert_eq!(cfg.write_mask(), WORD_MASK);
    }

    #[test]
    fn ratio_three_narrow_groups_cover_disjoint_windows() {
        let g0 = make_repack_config(12, 4, 0).unwrap();
        let g1 = make_repack_config(12, 4, 1).unwrap();
        // Group 0: lanes 0..8 (R2 then R3). Group 1: lanes 8..12, R2 only.
        assert_eq!(g0.write_mask(), 0x0000_ffff_ffff);
        assert_eq!(g1.write_mask(), 0xffff_0000_0000);
        assert!(g1.reads_r2() && !g1.reads_r3());
        assert_eq!(g0.write_mask() & g1.write_mask(), 0);
        assert_eq!(g0.write_mask() | g1.write_mask(), WORD_MASK);
    }

    #[test]
    fn every_route_is_a_partial_permutation() {
        for cfg in all_configs() {
            let mut seen_r2 = std::collections::HashSet::new();
            let mut seen_r3 = std::collections::HashSet::new();
            for src in cfg.mapping() {
                match src {
                    BitSource::R2(j) => {
                        assert!(u32::from(*j) < WORD_BITS);
                        assert!(seen_r2.insert(*j), "R2[{j}] feeds two outputs");
                    }
                    BitSource::R3(j) => {
                        assert!(u32::from(*j) < WORD_BITS);
                        assert!(seen_r3.insert(*j), "R3[{j}] feeds two outputs");
                    }
                    BitSource::Zero => {}
                }
            }
        }
    }

    // ---- values ----

    #[test]
    fn widen_preserves_the_fixed_point_value() {
        // +0.5 in Q1.3 is 0100; widened to Q1.7 it must stay +0.5 = 0100_0000.
        let w = word_from_lanes(&[4; 12], SubwordFormat::W4);
        let cfg = make_repack_config(4, 8, 0).unwrap();
        let out = apply_repack(&cfg, w, zero(4)).unwrap();
        assert_eq!(out.lane_values(), vec![64; 6]);
    }

    #[test]
    fn narrow_floors_on_the_coarser_grid() {
        // +0.9140625 in Q1.7 is 0111_0101; its top nibble 0111 is +0.875.
        let w = word_from_lanes(&[117; 6], SubwordFormat::W8);
        let cfg = make_repack_config(8, 4, 0).unwrap();
        let out = apply_repack(&cfg, w, zero(8)).unwrap();
        let lanes = out.lane_values();
        assert_eq!(&lanes[0..6], &[7; 6]);
    }

    #[test]
    fn apply_checks_formats_only_for_registers_it_reads() {
        let cfg = make_repack_config(4, 8, 0).unwrap();
        let w4 = zero(4);
        // R3 is not part of a widening route; its format is irrelevant.
        assert!(apply_repack(&cfg, w4, zero(16)).is_ok());
        assert_eq!(
            apply_repack(&cfg, zero(8), w4),
            Err(RepackError::InputFormat {
                reg: "R2",
                expected: 4,
                got: 8
            })
        );
    }

    #[test]
    fn bypass_is_identity() {
        let w = word_from_lanes(&[-13, 7, 0, -1, 127, -128], SubwordFormat::W8);
        assert_eq!(bypass(w), w);
    }

    #[test]
    fn widen_then_narrow_is_identity_exhaustively_per_lane_at_4_8() {
        let widen0 = make_repack_config(4, 8, 0).unwrap();
        let widen1 = make_repack_config(4, 8, 1).unwrap();
        let narrow = make_repack_config(8, 4, 0).unwrap();
        for v in -8i32..8 {
            for lane in 0..12 {
                let mut lanes = vec![if v == 0 { 1 } else { 0 }; 12];
                lanes[lane] = v;
                let w = word_from_lanes(&lanes, SubwordFormat::W4);
                let lo = apply_repack(&widen0, w, zero(4)).unwrap();
                let hi = apply_repack(&widen1, w, zero(4)).unwrap();
                let back = apply_repack(&narrow, lo, hi).unwrap();
                assert_eq!(back, w, "lane {lane} value {v}");
            }
        }
    }

    #[test]
    fn widen_then_narrow_round_trips_for_every_supported_pair() {
        let mut rng = StdRng::seed_from_u64(0x5250_4B31);
        for (narrow_w, wide_w) in SUPPORTED_PAIRS {
            let from = SubwordFormat::from_width(narrow_w).unwrap();
            let ratio = usize::from(wide_w / narrow_w);
            let narrow_groups = usize::from(group_count(wide_w, narrow_w).unwrap());
            for _ in 0..500 {
                let w = PackedWord::from_raw(rng.random::<u64>() & WORD_MASK, from).unwrap();
                let widened: Vec<PackedWord> = (0..ratio)
                    .map(|g| {
                        let cfg = make_repack_config(narrow_w, wide_w, g as u8).unwrap();
                        apply_repack(&cfg, w, zero(narrow_w)).unwrap()
                    })
                    .collect();
                // Feed widened words back two at a time, merging the disjoint
                // group windows.
                let mut raw = 0u64;
                for g in 0..narrow_groups {
                    let cfg = make_repack_config(wide_w, narrow_w, g as u8).unwrap();
                    let r2 = widened[2 * g];
                    let r3 = *widened.get(2 * g + 1).unwrap_or(&zero(wide_w));
                    let part = apply_repack(&cfg, r2, r3).unwrap();
                    assert_eq!(part.raw() & !cfg.write_mask(), 0);
                    raw |= part.raw();
                }
                assert_eq!(raw, w.raw(), "{narrow_w}<->{wide_w}");
            }
        }
    }

    #[test]
    fn narrow_matches_the_per_lane_floor_oracle() {
        let mut rng = StdRng::seed_from_u64(0x5250_4B32);
        for (narrow_w, wide_w) in SUPPORTED_PAIRS {
            let from = SubwordFormat::from_width(wide_w).unwrap();
            let shift = wide_w - narrow_w;
            for _ in 0..500 {
                let r2 = PackedWord::from_raw(rng.random::<u64>() & WORD_MASK, from).unwrap();
                let r3 = PackedWord::from_raw(rng.random::<u64>() & WORD_MASK, from).unwrap();
                let cfg = make_repack_config(wide_w, narrow_w, 0).unwrap();
                let out = apply_repack(&cfg, r2, r3).unwrap();
                let sources: Vec<i32> = r2
                    .lane_values()
                    .into_iter()
                    .chain(r3.lane_values())
                    .collect();
                for (k, src) in sources.iter().enumerate().take(2 * from.lanes()) {
                    let want = i64::from(*src).div_euclid(1i64 << shift);
                    let got = extract_lane(out, k).unwrap().bits();
                    assert_eq!(i64::from(got), want, "{wide_w}->{narrow_w} lane {k}");
                }
            }
        }
    }

    #[test]
    fn widen_value_preservation_holds_for_every_supported_pair() {
        let mut rng = StdRng::seed_from_u64(0x5250_4B33);
        for (narrow_w, wide_w) in SUPPORTED_PAIRS {
            let from = SubwordFormat::from_width(narrow_w).unwrap();
            let shift = wide_w - narrow_w;
            for _ in 0..500 {
                let w = PackedWord::from_raw(rng.random::<u64>() & WORD_MASK, from).unwrap();
                let lanes = w.lane_values();
                for g in 0..group_count(narrow_w, wide_w).unwrap() {
                    let cfg = make_repack_config(narrow_w, wide_w, g).unwrap();
                    let out = apply_repack(&cfg, w, zero(narrow_w)).unwrap();
                    for (k, v) in out.lane_values().iter().enumerate() {
                        let src = lanes[usize::from(g) * out.format().lanes() + k];
                        // Same Q1.(w-1) value on the finer grid.
                        assert_eq!(i64::from(*v), i64::from(src) << shift);
                    }
                }
            }
        }
    }
}
