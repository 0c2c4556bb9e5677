//! Hot-path benchmarks: answer normalization, token-overlap scoring,
//! abstention detection, and answer-sentence removal.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use ambiq_core::corpus;
use ambiq_core::forge::ambiguate_context;
use ambiq_core::metrics::score_disambiguous;
use ambiq_core::resources::resources;
use ambiq_core::synth;

fn bench_normalize(c: &mut Criterion) {
    let normalizer = &resources().normalizer;
    let answer = "The British friend was not rude, according to everyone at the market. \
                  A second sentence that will be cut.";
    c.bench_function("normalize_answer", |b| {
        b.iter(|| normalizer.normalize(black_box(answer)))
    });
}

fn bench_emo(c: &mut Criterion) {
    let normalizer = &resources().normalizer;
    let prediction = normalizer.normalize("The strike began in the Fresno region of California");
    let golds = vec![
        normalizer.answer_tokens("Fresno, California region"),
        normalizer.answer_tokens("the Fresno area"),
    ];
    c.bench_function("emo_score", |b| {
        b.iter(|| score_disambiguous(black_box(&prediction.tokens), black_box(&golds)).unwrap())
    });
}

fn bench_abstention(c: &mut Criterion) {
    let normalizer = &resources().normalizer;
    let answer = "Based on the passage alone this cannot be determined with any confidence";
    c.bench_function("detect_abstention", |b| {
        b.iter(|| normalizer.normalize(black_box(answer)).abstained)
    });
}

fn bench_ambiguate(c: &mut Criterion) {
    let raw = synth::trivia_mini_json(1);
    let record = corpus::parse_trivia(raw.as_bytes())
        .unwrap()
        .records
        .remove(0);
    c.bench_function("ambiguate_context", |b| {
        b.iter(|| ambiguate_context(black_box(&record)).unwrap())
    });
}

criterion_group!(benches, bench_normalize, bench_emo, bench_abstention, bench_ambiguate);
criterion_main!(benches);
