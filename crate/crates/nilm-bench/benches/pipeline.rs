use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use nilm_core::codec::{decrypt_message, encrypt_message, DigitMessage};
use nilm_core::cryptanalysis::{brute_force_shared_secret, dlog_bsgs, kpa_recover_nilpotent};
use nilm_core::fileformat::{ciphertext_from_bytes, ciphertext_to_bytes};
use nilm_core::keyschedule::{build_shared_key, SchemeParams};
use nilm_core::matrix::{jordan_basis_nilpotent, Matrix};
use nilm_core::modular::DHParams;

fn scheme(n: usize, p: u64, x: u64, base_a: u64) -> SchemeParams {
    SchemeParams::new(n, DHParams::new(p, x).unwrap(), base_a, 1.0, 1).unwrap()
}

fn bench_key_schedule(c: &mut Criterion) {
    let params = scheme(8, 65537, 3, 256);
    c.bench_function("build_shared_key n=8 p=65537", |b| {
        b.iter(|| build_shared_key(black_box(4242), &params).unwrap())
    });

    let key = build_shared_key(4242, &params).unwrap();
    c.bench_function("jordan_basis n=8", |b| {
        b.iter(|| jordan_basis_nilpotent(black_box(&key.nilpotent)).unwrap())
    });

    let arg = Matrix::from_fn(8, |i, j| 0.01 * ((i * 8 + j) as f64).sin()).unwrap();
    c.bench_function("matrix_exp n=8", |b| {
        b.iter(|| black_box(&arg).exp().unwrap())
    });
}

fn bench_codec(c: &mut Criterion) {
    let params = scheme(8, 65537, 3, 256);
    let key = build_shared_key(4242, &params).unwrap();
    let payload: Vec<u8> = (0..1024u32).map(|i| (i * 37 % 256) as u8).collect();
    let msg = DigitMessage::from_bytes(&payload);
    let ct = encrypt_message(&msg, &key, &params).unwrap();

    c.bench_function("encrypt 1KiB n=8", |b| {
        b.iter(|| encrypt_message(black_box(&msg), &key, &params).unwrap())
    });
    c.bench_function("decrypt 1KiB n=8", |b| {
        b.iter(|| decrypt_message(black_box(&ct), &key, &params).unwrap())
    });

    let bytes = ciphertext_to_bytes(&ct);
    c.bench_function("container round-trip 1KiB", |b| {
        b.iter(|| {
            let parsed = ciphertext_from_bytes(black_box(&bytes)).unwrap();
            ciphertext_to_bytes(&parsed)
        })
    });
}

fn bench_attacks(c: &mut Criterion) {
    c.bench_function("dlog_bsgs p=1009", |b| {
        b.iter(|| dlog_bsgs(black_box(11), black_box(731), 1009).unwrap())
    });

    let params = scheme(8, 65537, 3, 10);
    let key = build_shared_key(999, &params).unwrap();
    let digits = [7u64, 0, 3, 9, 1, 4, 2];
    let block = nilm_core::codec::encode_block(&digits, &key.nilpotent, 1).unwrap();
    c.bench_function("kpa_recover n=8", |b| {
        b.iter(|| kpa_recover_nilpotent(black_box(&block), &digits, 1).unwrap())
    });

    let small = scheme(2, 101, 2, 10);
    let small_key = build_shared_key(57, &small).unwrap();
    let msg = DigitMessage::new(10, vec![8, 2, 6]).unwrap();
    let ct = encrypt_message(&msg, &small_key, &small).unwrap();
    let mut group = c.benchmark_group("brute_force");
    group.sample_size(20);
    group.bench_function("p=101 n=2", |b| {
        b.iter(|| brute_force_shared_secret(black_box(&ct), &small, None).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_key_schedule, bench_codec, bench_attacks);
criterion_main!(benches);
