//! End-to-end privatization cost: the binary pipeline against the
//! Euclidean baseline, the binomial-mask perturbation against a naive
//! per-bit loop, and the stream API in both execution modes.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::Rng;

use brr::bench::synthetic_embeddings;
use brr::embeddings::{binarize_hyperplane, Code, CodeRef};
use brr::mechanisms::{
    BrrMechanism, MadlibMechanism, Mechanism, MechanismConfig, MechanismKind, OovPolicy,
    PrivacyParams,
};
use brr::nn::Acceleration;
use brr::noise::{rr_flip_probability, rr_perturb};
use brr::ratio::Metric;
use brr::rng::RngStream;

const VOCAB: usize = 10_000;
const DIM: usize = 300;
const BITS: usize = 256;
const EPSILON: f64 = 1.0;

fn build_mechanisms() -> (Mechanism, Mechanism) {
    let (vocab, real) = synthetic_embeddings(VOCAB, DIM, 7).unwrap();
    let codes = binarize_hyperplane(&real, BITS, 7).unwrap();
    let brr_side = Mechanism::Brr(
        BrrMechanism::new(vocab.clone(), codes, Acceleration::LinearScan).unwrap(),
    );
    let madlib_side = Mechanism::Madlib(MadlibMechanism::new(vocab, real).unwrap());
    (brr_side, madlib_side)
}

fn config_for(mechanism: &Mechanism) -> MechanismConfig {
    let kind = mechanism.kind();
    MechanismConfig {
        kind,
        params: PrivacyParams {
            epsilon: EPSILON,
            metric: match kind {
                MechanismKind::Brr => Metric::Hamming,
                MechanismKind::Madlib => Metric::Euclidean,
            },
        },
        oov_policy: OovPolicy::PassThrough,
    }
}

fn bench_per_word(c: &mut Criterion) {
    let (brr_side, madlib_side) = build_mechanisms();
    let mut group = c.benchmark_group("privatize_word");
    group.throughput(Throughput::Elements(1));
    for (label, mechanism) in [("brr", &brr_side), ("madlib", &madlib_side)] {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            let mut rng = RngStream::new(3, 0).rng();
            b.iter(|| {
                let word = format!("w{}", rng.random_range(0..VOCAB));
                mechanism
                    .privatize(black_box(&word), EPSILON, &mut rng)
                    .unwrap()
                    .to_owned()
            })
        });
    }
    group.finish();
}

/// The obvious alternative to the binomial-count + mask implementation:
/// one biased coin per bit.
fn per_bit_perturb<R: Rng + ?Sized>(code: CodeRef<'_>, epsilon: f64, rng: &mut R) -> Code {
    let q = rr_flip_probability(epsilon).unwrap();
    let mut out = code.to_owned();
    let mut mask = Code::zero(code.bits());
    for i in 0..code.bits() {
        if rng.random_bool(q) {
            mask.set_bit(i);
        }
    }
    out.xor_assign(mask.as_ref()).unwrap();
    out
}

fn bench_perturb_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("rr_perturb");
    for &bits in &[256usize, 1024] {
        let code = Code::zero(bits);
        group.throughput(Throughput::Elements(bits as u64));
        group.bench_with_input(
            BenchmarkId::new("binomial_mask", bits),
            &code,
            |b, code| {
                let mut rng = RngStream::new(5, 1).rng();
                b.iter(|| rr_perturb(black_box(code.as_ref()), EPSILON, &mut rng).unwrap())
            },
        );
        group.bench_with_input(BenchmarkId::new("per_bit", bits), &code, |b, code| {
            let mut rng = RngStream::new(5, 2).rng();
            b.iter(|| per_bit_perturb(black_box(code.as_ref()), EPSILON, &mut rng))
        });
    }
    group.finish();
}

fn bench_stream(c: &mut Criterion) {
    let (brr_side, _) = build_mechanisms();
    let config = config_for(&brr_side);
    let mut rng = RngStream::new(9, 0).rng();
    let tokens: Vec<String> = (0..2048)
        .map(|_| format!("w{}", rng.random_range(0..VOCAB)))
        .collect();
    let mut group = c.benchmark_group("privatize_stream");
    group.throughput(Throughput::Elements(tokens.len() as u64));
    group.sample_size(20);
    group.bench_function("seq", |b| {
        b.iter(|| {
            brr_side
                .privatize_stream_seq(black_box(&tokens), &config, RngStream::new(9, 1))
                .unwrap()
        })
    });
    group.bench_function("par", |b| {
        b.iter(|| {
            brr_side
                .privatize_stream(black_box(&tokens), &config, RngStream::new(9, 1))
                .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_per_word, bench_perturb_kernels, bench_stream);
criterion_main!(benches);
