//! Throughput of the hot primitives: recoding, the partitioned word ops one
//! fused step rides on, whole packed multiplies per format, crossbar
//! repacks, and a pipelined stream program.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::hint::black_box;

use softsimd::csd::{csd_encode, make_schedule, MAX_SIGMA};
use softsimd::mul::multiply_packed;
use softsimd::pipeline::MicroProgram;
use softsimd::repack::{apply_repack, make_repack_config};
use softsimd::word::{fused_step, padd, PackedWord, SubwordFormat, WORD_MASK};

fn rng() -> StdRng {
    StdRng::seed_from_u64(0xBE7C)
}

fn random_word(rng: &mut StdRng, fmt: SubwordFormat) -> PackedWord {
    PackedWord::from_raw(rng.random::<u64>() & WORD_MASK, fmt).unwrap()
}

fn bench_recode(c: &mut Criterion) {
    let mut g = c.benchmark_group("recode");
    g.bench_function("encode_8", |b| {
        b.iter(|| csd_encode(black_box(115), 8).unwrap())
    });
    g.bench_function("encode_16", |b| {
        b.iter(|| csd_encode(black_box(-23117), 16).unwrap())
    });
    let code = csd_encode(-23117, 16).unwrap();
    g.bench_function("schedule_16", |b| {
        b.iter(|| make_schedule(black_box(&code), MAX_SIGMA).unwrap())
    });
    g.finish();
}

fn bench_word_ops(c: &mut Criterion) {
    let mut r = rng();
    let fmt = SubwordFormat::W8;
    let a = random_word(&mut r, fmt);
    let b_word = random_word(&mut r, fmt);
    let mut g = c.benchmark_group("word");
    g.bench_function("padd_w8", |b| {
        b.iter(|| padd(black_box(a), black_box(b_word), false).unwrap())
    });
    g.bench_function("fused_step_w8_sigma3", |b| {
        b.iter(|| fused_step(black_box(a), black_box(b_word), -1, 3).unwrap())
    });
    g.finish();
}

fn bench_multiply(c: &mut Criterion) {
    let mut r = rng();
    let mut g = c.benchmark_group("multiply");
    for fmt in [SubwordFormat::W4, SubwordFormat::W8, SubwordFormat::W16] {
        let w = fmt.width();
        let half = 1i32 << (w - 1);
        let word = random_word(&mut r, fmt);
        let code = csd_encode(r.random_range(-half..half), w).unwrap();
        g.bench_function(format!("packed_w{w}"), |b| {
            b.iter(|| multiply_packed(black_box(word), black_box(&code)).unwrap())
        });
    }
    g.finish();
}

fn bench_repack(c: &mut Criterion) {
    let mut r = rng();
    let mut g = c.benchmark_group("repack");
    let widen = make_repack_config(4, 8, 0).unwrap();
    let narrow = make_repack_config(8, 4, 0).unwrap();
    let w4 = random_word(&mut r, SubwordFormat::W4);
    let w8a = random_word(&mut r, SubwordFormat::W8);
    let w8b = random_word(&mut r, SubwordFormat::W8);
    let z4 = PackedWord::zero(SubwordFormat::W4);
    g.bench_function("widen_4_to_8", |b| {
        b.iter(|| apply_repack(black_box(&widen), black_box(w4), black_box(z4)).unwrap())
    });
    g.bench_function("narrow_8_to_4", |b| {
        b.iter(|| apply_repack(black_box(&narrow), black_box(w8a), black_box(w8b)).unwrap())
    });
    g.finish();
}

fn bench_pipeline(c: &mut Criterion) {
    // 32 repacked pairs: stage 1 multiplies while stage 2 drains.
    let mut text = String::from("setfmt 8\n");
    for _ in 0..32 {
        text.push_str("ldw\nmulcsd 115 8 r2\nldw\nmulcsd -77 8 r3\nrepack 8 4 0\nstw\n");
    }
    let program = MicroProgram::parse(&text).unwrap();
    let mut r = rng();
    let inputs: Vec<u64> = (0..64).map(|_| r.random::<u64>() & WORD_MASK).collect();
    let mut g = c.benchmark_group("pipeline");
    g.bench_function("parse_stream_64_words", |b| {
        b.iter_batched(
            || text.clone(),
            |t| MicroProgram::parse(&t).unwrap(),
            BatchSize::SmallInput,
        )
    });
    g.bench_function("run_stream_64_words", |b| {
        b.iter(|| black_box(&program).run(black_box(&inputs)).unwrap())
    });
    g.bench_function("trace_stream_64_words", |b| {
        b.iter(|| black_box(&program).trace(black_box(&inputs)).unwrap())
    });
    g.finish();
}

criterion_group!(
    benches,
    bench_recode,
    bench_word_ops,
    bench_multiply,
    bench_repack,
    bench_pipeline
);
criterion_main!(benches);
