//! The two-stage microprogrammed pipeline.
//!
//! Topology: `input -> R1 -> [stage 1: shift-add multiply] -> R2/R3 ->
//! [stage 2: crossbar repack or bypass] -> R4 -> output`. Stage 1 owns a word
//! for its whole schedule; stage 2 turns every instruction around in one
//! cycle. The two stages overlap at word granularity, so a repack of word n
//! can execute while word n+1 is still being multiplied, and steady-state
//! throughput follows the slower stage rather than the sum.
//!
//! Program text is one instruction per line, case-insensitive, with `#`
//! starting a comment:
//!
//! ```text
//! setfmt 8            # declare the sub-word format (drains the pipeline)
//! ldw                 # pop one input word into R1
//! mulcsd 115 8        # R1 times 115/128; dest alternates R2, R3, R2, ...
//! mulcsd 115 8 r3     # or name the destination register explicitly
//! repack 8 4 0        # crossbar R2/R3 into R4 (group defaults to 0)
//! bypass              # R4 <- last multiply target unchanged (or: bypass r2)
//! stw                 # push R4 to the output stream
//! ```
//!
//! `MULCSD` costs one cycle per schedule step; every other instruction costs
//! one cycle. A `REPACK` whose route drives only part of the output word
//! (narrowing ratios above 2) merges into R4, so the complementary group's
//! lanes survive; any other write replaces R4.

use std::fmt;

use thiserror::Error;

use crate::csd::{csd_decode, csd_encode, make_schedule, CsdCode, MAX_SIGMA};
use crate::mul::{multiply_packed, MulError};
use crate::repack::{apply_repack, bypass, make_repack_config, RepackConfig, RepackError};
use crate::word::{PackedWord, SubwordFormat, WordError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("instruction {index}: no format declared before use (missing setfmt)")]
    NoFormat { index: usize },
    #[error("instruction {index}: {source}")]
    Format { index: usize, source: WordError },
    #[error("instruction {index}: {source}")]
    Mul { index: usize, source: MulError },
    #[error("instruction {index}: {source}")]
    Repack { index: usize, source: RepackError },
    #[error("instruction {index}: input stream exhausted")]
    Underrun { index: usize },
}

/// Stage-1 multiply destination; also the bypass source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MulDest {
    R2,
    R3,
}

impl MulDest {
    /// The register a default-destination multiply alternates to next.
    pub fn other(self) -> MulDest {
        match self {
            MulDest::R2 => MulDest::R3,
            MulDest::R3 => MulDest::R2,
        }
    }
}

impl fmt::Display for MulDest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MulDest::R2 => "r2",
            MulDest::R3 => "r3",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instr {
    SetFmt(u8),
    Ldw,
    MulCsd { code: CsdCode, dest: MulDest },
    Repack { from_w: u8, to_w: u8, group: u8 },
    Bypass { src: MulDest },
    Stw,
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::SetFmt(w) => write!(f, "setfmt {w}"),
            Instr::Ldw => f.write_str("ldw"),
            Instr::MulCsd { code, dest } => {
                write!(f, "mulcsd {} {} {dest}", csd_decode(code), code.width())
            }
            Instr::Repack {
                from_w,
                to_w,
                group,
            } => write!(f, "repack {from_w} {to_w} {group}"),
            Instr::Bypass { src } => write!(f, "bypass {src}"),
            Instr::Stw => f.write_str("stw"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MicroProgram {
    instrs: Vec<Instr>,
}

/// Per-event counters accumulated over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounters {
    /// Input words consumed by `ldw`.
    pub reads: u64,
    /// Output words produced by `stw`.
    pub writes: u64,
    /// Accumulator loads (first nonzero step of each multiply).
    pub loads: u64,
    /// Accumulate steps after the first nonzero digit.
    pub adds: u64,
    /// Shift steps by fused distance; `shifts_by[s - 1]` counts steps with
    /// sigma = s, so the weighted sum recovers total shifted bits.
    pub shifts_by: [u64; 3],
    pub repacks: u64,
    pub bypasses: u64,
}

impl EventCounters {
    /// Total single-bit shift stages executed.
    pub fn shift_bits(&self) -> u64 {
        self.shifts_by
            .iter()
            .enumerate()
            .map(|(i, n)| (i as u64 + 1) * n)
            .sum()
    }
}

/// Architectural state after a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineState {
    pub r1: PackedWord,
    pub r2: PackedWord,
    pub r3: PackedWord,
    pub r4: PackedWord,
    pub fmt: SubwordFormat,
    pub cycle: u64,
    pub events: EventCounters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub outputs: Vec<PackedWord>,
    pub state: PipelineState,
    /// What the program would cost with no stage overlap: the plain sum of
    /// instruction costs. `state.cycle` carries the overlapped count; the
    /// two bracket the machine's real throughput.
    pub serial_cycles: u64,
}

impl RunOutcome {
    pub fn cycles(&self) -> u64 {
        self.state.cycle
    }
}

enum Stage {
    One,
    Two,
    /// Format changes reconfigure both stages, so they drain the pipeline.
    Barrier,
}

struct Planned {
    instr: Instr,
    stage: Stage,
    cost: u64,
    step_ops: Vec<&'static str>,
    cfg: Option<RepackConfig>,
}

impl MicroProgram {
    pub fn from_instrs(instrs: Vec<Instr>) -> Self {
        MicroProgram { instrs }
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    /// Canonical program text, one instruction per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in &self.instrs {
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses program text. Mnemonics are case-insensitive, `#` comments run
    /// to end of line, and blank lines are skipped. An omitted `mulcsd`
    /// destination alternates R2, R3, R2, ... ; an omitted `bypass` source is
    /// the most recent multiply destination.
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut instrs = Vec::new();
        let mut last_dest: Option<MulDest> = None;
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = lineno + 1;
            let code_part = raw_line.split('#').next().unwrap_or("");
            let tokens: Vec<String> = code_part
                .split_whitespace()
                .map(|t| t.to_ascii_lowercase())
                .collect();
            if tokens.is_empty() {
                continue;
            }
            let err = |reason: String| PipelineError::Parse { line, reason };
            let argc = tokens.len() - 1;
            let arg = |i: usize| -> Result<i64, PipelineError> {
                tokens[i]
                    .parse::<i64>()
                    .map_err(|_| err(format!("expected an integer, got {:?}", tokens[i])))
            };
            let instr = match tokens[0].as_str() {
                "setfmt" => {
                    if argc != 1 {
                        return Err(err("setfmt takes one operand: the width".into()));
                    }
                    Instr::SetFmt(arg(1)? as u8)
                }
                "ldw" => {
                    if argc != 0 {
                        return Err(err("ldw takes no operands".into()));
                    }
                    Instr::Ldw
                }
                "mulcsd" => {
                    if !(2..=3).contains(&argc) {
                        return Err(err(
                            "mulcsd takes value, width and an optional register".into(),
                        ));
                    }
                    let value = arg(1)?;
                    let width = arg(2)?;
                    if !(0..=255).contains(&width) {
                        return Err(err(format!("width {width} out of range")));
                    }
                    let code = csd_encode(
                        i32::try_from(value)
                            .map_err(|_| err(format!("value {value} out of range")))?,
                        width as u8,
                    )
                    .map_err(|e| err(e.to_string()))?;
                    let dest = match tokens.get(3).map(String::as_str) {
                        Some("r2") => MulDest::R2,
                        Some("r3") => MulDest::R3,
                        Some(other) => {
                            return Err(err(format!("unknown register {other:?}")));
                        }
                        None => last_dest.map_or(MulDest::R2, MulDest::other),
                    };
                    last_dest = Some(dest);
                    Instr::MulCsd { code, dest }
                }
                "repack" => {
                    if !(2..=3).contains(&argc) {
                        return Err(err(
                            "repack takes from-width, to-width and an optional group".into(),
                        ));
                    }
                    Instr::Repack {
                        from_w: arg(1)? as u8,
                        to_w: arg(2)? as u8,
                        group: if argc == 3 { arg(3)? as u8 } else { 0 },
                    }
                }
                "bypass" => {
                    if argc > 1 {
                        return Err(err("bypass takes at most a register operand".into()));
                    }
                    let src = match tokens.get(1).map(String::as_str) {
                        Some("r2") => MulDest::R2,
                        Some("r3") => MulDest::R3,
                        Some(other) => return Err(err(format!("unknown register {other:?}"))),
                        None => last_dest.unwrap_or(MulDest::R2),
                    };
                    Instr::Bypass { src }
                }
                "stw" => {
                    if argc != 0 {
                        return Err(err("stw takes no operands".into()));
                    }
                    Instr::Stw
                }
                other => return Err(err(format!("unknown mnemonic {other:?}"))),
            };
            instrs.push(instr);
        }
        Ok(MicroProgram { instrs })
    }

    /// Static checks: a format is declared before any data instruction,
    /// `setfmt` widths are supported, repack routes exist and match the
    /// format their source registers will hold.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.plan().map(|_| ())
    }

    fn plan(&self) -> Result<Vec<Planned>, PipelineError> {
        let mut plan = Vec::with_capacity(self.instrs.len());
        // Statically known register formats; data never changes them.
        let mut fmt: Option<SubwordFormat> = None;
        let mut r2fmt: Option<SubwordFormat> = None;
        let mut r3fmt: Option<SubwordFormat> = None;
        for (index, instr) in self.instrs.iter().enumerate() {
            let need_fmt = |fmt: Option<SubwordFormat>| fmt.ok_or(PipelineError::NoFormat { index });
            let planned = match instr {
                Instr::SetFmt(w) => {
                    let f = SubwordFormat::from_width(*w)
                        .map_err(|source| PipelineError::Format { index, source })?;
                    fmt = Some(f);
                    r2fmt.get_or_insert(f);
                    r3fmt.get_or_insert(f);
                    Planned {
                        instr: instr.clone(),
                        stage: Stage::Barrier,
                        cost: 1,
                        step_ops: Vec::new(),
                        cfg: None,
                    }
                }
                Instr::Ldw => {
                    need_fmt(fmt)?;
                    Planned {
                        instr: instr.clone(),
                        stage: Stage::One,
                        cost: 1,
                        step_ops: Vec::new(),
                        cfg: None,
                    }
                }
                Instr::MulCsd { code, dest } => {
                    let f = need_fmt(fmt)?;
                    let schedule = make_schedule(code, MAX_SIGMA)
                        .map_err(|e| PipelineError::Mul {
                            index,
                            source: MulError::Csd(e),
                        })?;
                    let mut seen_nonzero = false;
                    let step_ops: Vec<&'static str> = schedule
                        .steps()
                        .iter()
                        .map(|s| {
                            if s.digit == 0 {
                                "shift"
                            } else if !seen_nonzero {
                                seen_nonzero = true;
                                "load"
                            } else if s.digit > 0 {
                                "add"
                            } else {
                                "sub"
                            }
                        })
                        .collect();
                    match dest {
                        MulDest::R2 => r2fmt = Some(f),
                        MulDest::R3 => r3fmt = Some(f),
                    }
                    Planned {
                        instr: instr.clone(),
                        stage: Stage::One,
                        cost: schedule.len() as u64,
                        step_ops,
                        cfg: None,
                    }
                }
                Instr::Repack {
                    from_w,
                    to_w,
                    group,
                } => {
                    need_fmt(fmt)?;
                    let cfg = make_repack_config(*from_w, *to_w, *group)
                        .map_err(|source| PipelineError::Repack { index, source })?;
                    let check = |reg: &'static str, have: Option<SubwordFormat>| {
                        match have {
                            Some(f) if f == cfg.from_format() => Ok(()),
                            Some(f) => Err(PipelineError::Repack {
                                index,
                                source: RepackError::InputFormat {
                                    reg,
                                    expected: *from_w,
                                    got: f.width(),
                                },
                            }),
                            // Unreachable: register formats exist once a
                            // format is declared.
                            None => Err(PipelineError::NoFormat { index }),
                        }
                    };
                    if cfg.reads_r2() {
                        check("R2", r2fmt)?;
                    }
                    if cfg.reads_r3() {
                        check("R3", r3fmt)?;
                    }
                    Planned {
                        instr: instr.clone(),
                        stage: Stage::Two,
                        cost: 1,
                        step_ops: Vec::new(),
                        cfg: Some(cfg),
                    }
                }
                Instr::Bypass { .. } => {
                    need_fmt(fmt)?;
                    Planned {
                        instr: instr.clone(),
                        stage: Stage::Two,
                        cost: 1,
                        step_ops: Vec::new(),
                        cfg: None,
                    }
                }
                Instr::Stw => {
                    need_fmt(fmt)?;
                    Planned {
                        instr: instr.clone(),
                        stage: Stage::Two,
                        cost: 1,
                        step_ops: Vec::new(),
                        cfg: None,
                    }
                }
            };
            plan.push(planned);
        }
        Ok(plan)
    }

    /// Executes the program against an input stream of raw 48-bit words.
    pub fn run(&self, input: &[u64]) -> Result<RunOutcome, PipelineError> {
        Ok(self.execute(input)?.outcome)
    }

    /// Runs the program and renders the cycle-by-cycle trace: one record per
    /// cycle with both stages' activity and all four registers. Identical
    /// program and input produce byte-identical text.
    pub fn trace(&self, input: &[u64]) -> Result<String, PipelineError> {
        let exec = self.execute(input)?;
        let total = exec.outcome.state.cycle;
        let mut act1: Vec<String> = vec![String::from("idle"); total as usize];
        let mut act2: Vec<String> = vec![String::from("idle"); total as usize];
        for span in &exec.spans {
            for c in span.start..span.finish {
                let text = match &span.label {
                    SpanLabel::Plain(s) => s.clone(),
                    SpanLabel::Mul { len, ops, sigmas } => {
                        let k = (c - span.start) as usize;
                        format!("mulcsd({}/{len},{},sigma={})", k + 1, ops[k], sigmas[k])
                    }
                };
                match span.stage {
                    TraceStage::S1 => act1[c as usize] = text,
                    TraceStage::S2 => act2[c as usize] = text,
                }
            }
        }
        let mut effects = exec.effects;
        effects.sort_by_key(|e| e.cycle);
        let mut regs = exec.initial_regs;
        let mut out = String::new();
        let mut next_effect = 0;
        for c in 0..total {
            while next_effect < effects.len() && effects[next_effect].cycle == c {
                let e = &effects[next_effect];
                match e.target {
                    EffectTarget::R1 => regs[0] = e.word,
                    EffectTarget::R2 => regs[1] = e.word,
                    EffectTarget::R3 => regs[2] = e.word,
                    EffectTarget::R4 => regs[3] = e.word,
                }
                next_effect += 1;
            }
            out.push_str(&format!(
                "cycle={c} s1={} s2={} r1={} r2={} r3={} r4={}\n",
                act1[c as usize], act2[c as usize], regs[0], regs[1], regs[2], regs[3]
            ));
        }
        Ok(out)
    }

    fn execute(&self, input: &[u64]) -> Result<Exec, PipelineError> {
        let plan = self.plan()?;

        // Schedule pass: in-order per stage, stalling stage 2 on its source
        // registers and stage 1 on pending stage-2 readers of its target.
        let mut t1 = 0u64;
        let mut t2 = 0u64;
        let mut writer_fin = [0u64; 4]; // R1..R4
        let mut s2_reader_fin = [0u64; 4];
        let mut spans: Vec<InstrSpan> = Vec::with_capacity(plan.len());
        let mut serial_cycles = 0u64;
        for p in &plan {
            serial_cycles += p.cost;
            let (start, finish) = match p.stage {
                Stage::Barrier => {
                    let start = t1.max(t2);
                    let fin = start + p.cost;
                    t1 = fin;
                    t2 = fin;
                    (start, fin)
                }
                Stage::One => {
                    let mut start = t1;
                    match &p.instr {
                        Instr::MulCsd { dest, .. } => {
                            let r = reg_index(*dest);
                            start = start.max(s2_reader_fin[r]);
                        }
                        Instr::Ldw => {}
                        _ => {}
                    }
                    let fin = start + p.cost;
                    t1 = fin;
                    match &p.instr {
                        Instr::MulCsd { dest, .. } => writer_fin[reg_index(*dest)] = fin,
                        Instr::Ldw => writer_fin[0] = fin,
                        _ => {}
                    }
                    (start, fin)
                }
                Stage::Two => {
                    let mut start = t2;
                    match &p.instr {
                        Instr::Repack { .. } => {
                            let cfg = p.cfg.as_ref().expect("planned repack has a config");
                            if cfg.reads_r2() {
                                start = start.max(writer_fin[1]);
                            }
                            if cfg.reads_r3() {
                                start = start.max(writer_fin[2]);
                            }
                        }
                        Instr::Bypass { src } => {
                            start = start.max(writer_fin[reg_index(*src)]);
                        }
                        Instr::Stw => {
                            start = start.max(writer_fin[3]);
                        }
                        _ => {}
                    }
                    let fin = start + p.cost;
                    t2 = fin;
                    match &p.instr {
                        Instr::Repack { .. } => {
                            let cfg = p.cfg.as_ref().expect("planned repack has a config");
                            if cfg.reads_r2() {
                                s2_reader_fin[1] = s2_reader_fin[1].max(fin);
                            }
                            if cfg.reads_r3() {
                                s2_reader_fin[2] = s2_reader_fin[2].max(fin);
                            }
                            writer_fin[3] = fin;
                        }
                        Instr::Bypass { src } => {
                            let r = reg_index(*src);
                            s2_reader_fin[r] = s2_reader_fin[r].max(fin);
                            writer_fin[3] = fin;
                        }
                        _ => {}
                    }
                    (start, fin)
                }
            };
            spans.push(InstrSpan {
                start,
                finish,
                stage: match p.stage {
                    Stage::Two => TraceStage::S2,
                    _ => TraceStage::S1,
                },
                label: SpanLabel::Plain(String::new()), // filled below
            });
        }
        let total_cycles = t1.max(t2);

        // Functional pass, in program order.
        let default_fmt = SubwordFormat::W8;
        let mut fmt = default_fmt;
        let mut fmt_set = false;
        let mut regs = [PackedWord::zero(default_fmt); 4];
        let mut initial_regs = regs;
        let mut outputs = Vec::new();
        let mut events = EventCounters::default();
        let mut effects: Vec<Effect> = Vec::new();
        let mut next_input = 0usize;
        for (index, (p, span)) in plan.iter().zip(spans.iter_mut()).enumerate() {
            match &p.instr {
                Instr::SetFmt(w) => {
                    fmt = SubwordFormat::from_width(*w).expect("validated");
                    if !fmt_set {
                        fmt_set = true;
                        regs = [PackedWord::zero(fmt); 4];
                        initial_regs = regs;
                    }
                    span.label = SpanLabel::Plain(format!("setfmt({w})"));
                }
                Instr::Ldw => {
                    let raw = *input
                        .get(next_input)
                        .ok_or(PipelineError::Underrun { index })?;
                    next_input += 1;
                    let word = PackedWord::from_raw(raw, fmt)
                        .map_err(|source| PipelineError::Format { index, source })?;
                    regs[0] = word;
                    events.reads += 1;
                    effects.push(Effect {
                        cycle: span.finish - 1,
                        target: EffectTarget::R1,
                        word,
                    });
                    span.label = SpanLabel::Plain("ldw".into());
                }
                Instr::MulCsd { code, dest } => {
                    let (result, trace) = multiply_packed(regs[0], code)
                        .map_err(|source| PipelineError::Mul { index, source })?;
                    events.loads += u64::from(trace.loads);
                    events.adds += u64::from(trace.adds);
                    let mut sigmas = Vec::with_capacity(trace.per_step.len());
                    for (k, (step, word)) in trace.per_step.iter().enumerate() {
                        if step.sigma >= 1 {
                            events.shifts_by[usize::from(step.sigma) - 1] += 1;
                        }
                        sigmas.push(step.sigma);
                        effects.push(Effect {
                            cycle: span.start + k as u64,
                            target: match dest {
                                MulDest::R2 => EffectTarget::R2,
                                MulDest::R3 => EffectTarget::R3,
                            },
                            word: *word,
                        });
                    }
                    regs[reg_index(*dest)] = result;
                    span.label = SpanLabel::Mul {
                        len: trace.per_step.len(),
                        ops: p.step_ops.clone(),
                        sigmas,
                    };
                }
                Instr::Repack {
                    from_w,
                    to_w,
                    group,
                } => {
                    let cfg = p.cfg.as_ref().expect("planned repack has a config");
                    let out = apply_repack(cfg, regs[1], regs[2])
                        .map_err(|source| PipelineError::Repack { index, source })?;
                    // Partial routes merge into same-format R4 contents so a
                    // multi-group narrowing assembles one word in place.
                    let merged = if regs[3].format() == out.format() {
                        PackedWord::from_raw(
                            (regs[3].raw() & !cfg.write_mask()) | out.raw(),
                            out.format(),
                        )
                        .expect("merge stays within 48 bits")
                    } else {
                        out
                    };
                    regs[3] = merged;
                    events.repacks += 1;
                    effects.push(Effect {
                        cycle: span.finish - 1,
                        target: EffectTarget::R4,
                        word: merged,
                    });
                    span.label = SpanLabel::Plain(format!("repack({from_w}->{to_w},g{group})"));
                }
                Instr::Bypass { src } => {
                    let word = bypass(regs[reg_index(*src)]);
                    regs[3] = word;
                    events.bypasses += 1;
                    effects.push(Effect {
                        cycle: span.finish - 1,
                        target: EffectTarget::R4,
                        word,
                    });
                    span.label = SpanLabel::Plain(format!("bypass({src})"));
                }
                Instr::Stw => {
                    outputs.push(regs[3]);
                    events.writes += 1;
                    span.label = SpanLabel::Plain("stw".into());
                }
            }
        }

        let state = PipelineState {
            r1: regs[0],
            r2: regs[1],
            r3: regs[2],
            r4: regs[3],
            fmt,
            cycle: total_cycles,
            events,
        };
        Ok(Exec {
            outcome: RunOutcome {
                outputs,
                state,
                serial_cycles,
            },
            spans,
            effects,
            initial_regs,
        })
    }
}

fn reg_index(d: MulDest) -> usize {
    match d {
        MulDest::R2 => 1,
        MulDest::R3 => 2,
    }
}

#[derive(Clone, Copy)]
enum TraceStage {
    S1,
    S2,
}

enum SpanLabel {
    Plain(String),
    Mul {
        len: usize,
        ops: Vec<&'static str>,
        sigmas: Vec<u8>,
    },
}

struct InstrSpan {
    start: u64,
    finish: u64,
    stage: TraceStage,
    label: SpanLabel,
}

#[derive(Clone, Copy)]
enum EffectTarget {
    R1,
    R2,
    R3,
    R4,
}

#[derive(Clone, Copy)]
struct Effect {
    cycle: u64,
    target: EffectTarget,
    word: PackedWord,
}

struct Exec {
    outcome: RunOutcome,
    spans: Vec<InstrSpan>,
    effects: Vec<Effect>,
    initial_regs: [PackedWord; 4],
}
