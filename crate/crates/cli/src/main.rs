//! Command-line front end for the soft SIMD datapath model. All arithmetic
//! happens in the library; this binary only parses arguments, reads files,
//! and formats what the library returns.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use softsimd::analysis::{
    compare_hard_simd, csd_density, cycles_per_multiply, error_sweep, CostModel,
};
use softsimd::csd::{csd_decode, csd_encode, make_schedule, schedule_stats, CsdCode, MAX_SIGMA};
use softsimd::fxp::to_real;
use softsimd::mul::multiply_packed;
use softsimd::pipeline::MicroProgram;
use softsimd::repack::{group_count, make_repack_config};
use softsimd::word::{extract_lane, SubwordFormat, WORD_MASK};

#[derive(Parser)]
#[command(
    name = "softsimd",
    version,
    about = "Bit-exact model of a 48-bit sub-word SIMD multiply/repack pipeline"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Canonical signed digit recoding tools.
    Csd {
        #[command(subcommand)]
        cmd: CsdCmd,
    },
    /// Multiply a packed word by one constant and show every cycle.
    #[command(allow_negative_numbers = true)]
    Mul {
        /// Lane width of the packed word.
        #[arg(long)]
        mw: u8,
        /// Bit width the multiplier is coded at.
        #[arg(long)]
        yw: u8,
        /// Multiplier value, a signed yw-bit integer.
        #[arg(long, allow_hyphen_values = true)]
        multiplier: i32,
        /// Comma-separated lane values (signed mw-bit integers). Defaults to
        /// a ramp across the representable range.
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        lanes: Option<Vec<i32>>,
    },
    /// Run a microprogram file against an input stream.
    Simulate {
        /// Program text, one instruction per line.
        program: PathBuf,
        /// Print the cycle-by-cycle trace before the outputs.
        #[arg(long)]
        trace: bool,
        /// Input words, one per line, decimal or 0x-prefixed hex.
        #[arg(long, conflicts_with = "records")]
        input: Option<PathBuf>,
        /// Feed this many fixed-seed pseudorandom words instead of a file.
        #[arg(long)]
        records: Option<u64>,
    },
    /// Sweep multiply error over an operand space (exhaustive up to 8x8).
    SweepError {
        /// Lane width of the multiplicand.
        #[arg(long)]
        mw: u8,
        /// Bit width of the multiplier.
        #[arg(long)]
        yw: u8,
    },
    /// Digit density and schedule length censuses for one multiplier width.
    Stats {
        #[arg(long)]
        yw: u8,
    },
    /// Show the crossbar route for one lane-width conversion.
    Repack {
        #[arg(long)]
        from: u8,
        #[arg(long)]
        to: u8,
        #[arg(long, default_value_t = 0)]
        group: u8,
    },
    /// Compare per-element cost against a fixed-lane SIMD baseline.
    Compare {
        /// Baseline lane widths, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "8,16")]
        baseline: Vec<u8>,
        /// Cost model file (key = value lines); omit for unit weights.
        #[arg(long)]
        cost: Option<PathBuf>,
        /// Workload element widths, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "4,6,8,9,12,16")]
        workload: Vec<u8>,
    },
}

#[derive(Subcommand)]
enum CsdCmd {
    /// Recode a signed integer; prints the digit string, MSB first.
    #[command(allow_negative_numbers = true)]
    Encode { value: i32, width: u8 },
    /// Evaluate a digit string back to its integer value.
    Decode {
        /// Digit string over 1, 0 and -, MSB first.
        #[arg(allow_hyphen_values = true)]
        code: String,
    },
    /// Show the zero-skipping shift-add schedule for a constant.
    #[command(allow_negative_numbers = true)]
    Schedule { value: i32, width: u8 },
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Csd { cmd } => run_csd(cmd),
        Cmd::Mul {
            mw,
            yw,
            multiplier,
            lanes,
        } => run_mul(mw, yw, multiplier, lanes),
        Cmd::Simulate {
            program,
            trace,
            input,
            records,
        } => run_simulate(&program, trace, input.as_deref(), records),
        Cmd::SweepError { mw, yw } => {
            println!("{}", error_sweep(mw, yw)?);
            Ok(())
        }
        Cmd::Stats { yw } => {
            println!("{}", csd_density(yw)?);
            println!("{}", cycles_per_multiply(yw)?);
            Ok(())
        }
        Cmd::Repack { from, to, group } => run_repack(from, to, group),
        Cmd::Compare {
            baseline,
            cost,
            workload,
        } => run_compare(&baseline, cost.as_deref(), &workload),
    }
}

fn run_csd(cmd: CsdCmd) -> Result<()> {
    match cmd {
        CsdCmd::Encode { value, width } => {
            println!("{}", csd_encode(value, width)?);
        }
        CsdCmd::Decode { code } => {
            println!("{}", csd_decode(&CsdCode::parse(&code)?));
        }
        CsdCmd::Schedule { value, width } => {
            let code = csd_encode(value, width)?;
            let schedule = make_schedule(&code, MAX_SIGMA)?;
            for (i, step) in schedule.steps().iter().enumerate() {
                println!("step={} digit={} sigma={}", i + 1, step.digit, step.sigma);
            }
            let stats = schedule_stats(&code);
            println!(
                "steps={} nonzeros={} adds={} shifted_bits={}",
                stats.steps,
                stats.nonzeros,
                stats.adds,
                schedule.shift_total()
            );
        }
    }
    Ok(())
}

fn run_mul(mw: u8, yw: u8, multiplier: i32, lanes: Option<Vec<i32>>) -> Result<()> {
    let fmt = SubwordFormat::from_width(mw)?;
    let half = 1i64 << (mw - 1);
    let lanes = lanes.unwrap_or_else(|| {
        // Ramp from most negative to most positive across the lanes.
        let n = fmt.lanes() as i64;
        (0..n)
            .map(|k| (-half + k * (2 * half - 1) / (n - 1).max(1)) as i32)
            .collect()
    });
    let values: Vec<softsimd::QVal> = lanes
        .iter()
        .map(|&bits| softsimd::QVal::new(bits, mw))
        .collect::<Result<_, _>>()?;
    let word = softsimd::word::pack(&values, fmt)?;
    let code = csd_encode(multiplier, yw)?;
    println!(
        "format={}x{} multiplier={} code={}",
        mw,
        fmt.lanes(),
        multiplier,
        code
    );
    let (out, trace) = multiply_packed(word, &code)?;
    print!("{}", trace.render());
    for (k, &input) in lanes.iter().enumerate() {
        let q = extract_lane(out, k)?;
        println!("lane={} in={} out={} value={}", k, input, q.bits(), to_real(q));
    }
    Ok(())
}

fn parse_input_words(text: &str) -> Result<Vec<u64>> {
    text.split_whitespace()
        .enumerate()
        .map(|(i, tok)| {
            let parsed = if let Some(hex) = tok.strip_prefix("0x") {
                u64::from_str_radix(hex, 16)
            } else {
                tok.parse()
            };
            parsed.with_context(|| format!("input word {}: bad literal {tok:?}", i + 1))
        })
        .collect()
}

fn run_simulate(
    program_path: &std::path::Path,
    trace: bool,
    input: Option<&std::path::Path>,
    records: Option<u64>,
) -> Result<()> {
    let text = fs::read_to_string(program_path)
        .with_context(|| format!("reading {}", program_path.display()))?;
    let program = MicroProgram::parse(&text)?;
    program.validate()?;
    let words = match (input, records) {
        (Some(path), _) => parse_input_words(
            &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        )?,
        (None, Some(n)) => {
            let mut rng = StdRng::seed_from_u64(0x5eed);
            (0..n).map(|_| rng.random::<u64>() & WORD_MASK).collect()
        }
        (None, None) => Vec::new(),
    };
    if trace {
        print!("{}", program.trace(&words)?);
    }
    let out = program.run(&words)?;
    for (i, word) in out.outputs.iter().enumerate() {
        println!("out[{i}]={word}");
    }
    let e = out.state.events;
    println!(
        "cycles={} serial_cycles={} reads={} writes={} loads={} adds={} shift_bits={} repacks={} bypasses={}",
        out.cycles(),
        out.serial_cycles,
        e.reads,
        e.writes,
        e.loads,
        e.adds,
        e.shift_bits(),
        e.repacks,
        e.bypasses
    );
    Ok(())
}

fn run_repack(from: u8, to: u8, group: u8) -> Result<()> {
    let cfg = make_repack_config(from, to, group)?;
    println!(
        "route {}->{} group {}/{} reads_r2={} reads_r3={} write_mask={:#014x}",
        from,
        to,
        group,
        group_count(from, to)?,
        cfg.reads_r2(),
        cfg.reads_r3(),
        cfg.write_mask()
    );
    print!("{}", cfg.dump());
    Ok(())
}

fn run_compare(baseline: &[u8], cost: Option<&std::path::Path>, workload: &[u8]) -> Result<()> {
    if workload.is_empty() {
        bail!("workload list is empty");
    }
    let model = match cost {
        Some(path) => CostModel::parse(
            &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        )?,
        None => CostModel::default(),
    };
    print!("{}", compare_hard_simd(workload, baseline, &model)?);
    Ok(())
}
