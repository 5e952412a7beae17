use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mondegreen_core::eval::{corpus_bleu, sentence_bleu};
use mondegreen_core::serving::Corrector;
use mondegreen_core::simulator::{generate_logs, ConfusionLexicon, SimConfig};
use mondegreen_core::trainer::{parse_snapshot, train, RewriteEntry, TableMetadata, SNAPSHOT_VERSION};
use mondegreen_core::{normalize, query_phonetic_distance, NormalizedQuery, PronouncingLexicon, RewriteTable, TrainerConfig};

fn q(s: &str) -> NormalizedQuery {
    normalize(s).unwrap()
}

fn table(n: usize) -> RewriteTable {
    RewriteTable::new(
        (0..n).map(|i| {
            (
                q(&format!("query {i:07} lookup")),
                RewriteEntry {
                    correction: q(&format!("fixed {i}")),
                    pair_count: 10,
                    ratio: 0.5,
                },
            )
        }),
        TableMetadata {
            version: SNAPSHOT_VERSION,
            config: TrainerConfig::default(),
            records: 0,
            built_at: 0,
        },
    )
}

fn lookup(c: &mut Criterion) {
    let corrector = Corrector::new(table(100_000));
    c.bench_function("lookup/hit", |b| b.iter(|| corrector.correct(black_box("Query 0054321 lookup")).unwrap()));
    c.bench_function("lookup/miss", |b| b.iter(|| corrector.correct(black_box("gaming chair")).unwrap()));

    let text = table(100_000).to_snapshot_string();
    c.bench_function("snapshot/parse_100k", |b| b.iter(|| parse_snapshot(black_box(&text)).unwrap()));
}

fn distance(c: &mut Criterion) {
    let lex = PronouncingLexicon::bundled();
    let (a, b) = (q("rocks and songs"), q("roxanne songs"));
    c.bench_function("phonetics/query_distance", |bench| {
        bench.iter(|| query_phonetic_distance(black_box(&a), black_box(&b), lex))
    });
}

fn bleu(c: &mut Criterion) {
    let (cand, reference) = (q("how stores near me"), q("house tours near me"));
    c.bench_function("bleu/sentence", |b| b.iter(|| sentence_bleu(black_box(&cand), black_box(&reference))));
    let pairs: Vec<_> = (0..1000).map(|_| (cand.clone(), reference.clone())).collect();
    c.bench_function("bleu/corpus_1000", |b| b.iter(|| corpus_bleu(pairs.iter().map(|(c, r)| (c, r))).unwrap()));
}

fn training(c: &mut Criterion) {
    let sim = SimConfig {
        n_sessions: 20_000,
        n_users: 2_000,
        ..SimConfig::default()
    };
    let confusions = ConfusionLexicon::bundled();
    let records = generate_logs(&sim, &confusions).unwrap().records;
    let lex = PronouncingLexicon::bundled();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("simulate_20k", |b| b.iter(|| generate_logs(black_box(&sim), &confusions).unwrap()));
    group.bench_function("train_20k", |b| {
        b.iter_batched(|| records.clone(), |r| train(&r, &TrainerConfig::default(), lex).unwrap(), BatchSize::LargeInput)
    });
    group.finish();
}

criterion_group!(benches, lookup, distance, bleu, training);
criterion_main!(benches);
