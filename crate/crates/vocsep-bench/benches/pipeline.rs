use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use vocsep::dsp::{istft, stft};
use vocsep::gan::{build_d_input_batch, GanVariant};
use vocsep::mask::{mask_layer_backward_batch, mask_layer_forward_batch};
use vocsep::neural::{backward, forward, init_network, Activation, Batch, DenseNet};
use vocsep_bench::noise_clip;

fn bench_stft(c: &mut Criterion) {
    let clip = noise_clip(1.0, 22_050, 1);
    c.bench_function("stft_1s_22050_frame1024_hop256", |b| {
        b.iter(|| stft(black_box(&clip), 1024, 256).unwrap())
    });
    let spec = stft(&clip, 1024, 256).unwrap();
    c.bench_function("istft_1s_22050_frame1024_hop256", |b| {
        b.iter(|| istft(black_box(&spec)).unwrap())
    });
}

fn paper_generator() -> DenseNet<f32> {
    init_network(
        &[513, 1024, 1024, 1024, 1026],
        &[
            Activation::Relu,
            Activation::Relu,
            Activation::Relu,
            Activation::Relu,
        ],
        9,
    )
    .unwrap()
}

fn bench_generator(c: &mut Criterion) {
    let g = paper_generator();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let inputs = Array2::from_shape_fn((64, 513), |_| rng.random_range(0.0..1.0f32));
    let batch = Batch::new(inputs.clone(), None).unwrap();
    c.bench_function("generator_forward_batch64", |b| {
        b.iter(|| forward(black_box(&g), black_box(&batch)).unwrap())
    });

    let trace = forward(&g, &batch).unwrap();
    let grad_out = Array2::from_elem((64, 1026), 1e-3f32);
    c.bench_function("generator_backward_batch64", |b| {
        b.iter(|| backward(black_box(&g), black_box(&trace), black_box(&grad_out)).unwrap())
    });
}

fn bench_mask_layer(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let raw = Array2::from_shape_fn((64, 1026), |_| rng.random_range(0.0..2.0f32));
    let z = Array2::from_shape_fn((64, 513), |_| rng.random_range(0.0..2.0f32));
    let upstream = Array2::from_shape_fn((64, 1026), |_| rng.random_range(-1.0..1.0f32));
    c.bench_function("mask_layer_forward_batch64_f513", |b| {
        b.iter(|| mask_layer_forward_batch(black_box(&raw), black_box(&z)).unwrap())
    });
    c.bench_function("mask_layer_backward_batch64_f513", |b| {
        b.iter(|| {
            mask_layer_backward_batch(black_box(&raw), black_box(&z), black_box(&upstream))
                .unwrap()
        })
    });
    let pair = Array2::from_shape_fn((64, 1026), |_| rng.random_range(0.0..2.0f32));
    c.bench_function("build_d_input_vbm_batch64", |b| {
        b.iter(|| build_d_input_batch(GanVariant::Vbm, black_box(&pair), black_box(&z)).unwrap())
    });
}

fn bench_bss_eval(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 22_050;
    let r1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let r2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let est: Vec<f64> = (0..n)
        .map(|i| 0.8 * r1[i] + 0.1 * r2[i] + 0.1 * rng.random_range(-1.0..1.0))
        .collect();
    let mut group = c.benchmark_group("bss_eval_decompose_1s");
    group.sample_size(10);
    for l in [16usize, 128] {
        group.bench_function(format!("filter_len_{l}"), |b| {
            b.iter(|| {
                vocsep::bsseval::decompose(black_box(&est), &[&r1, &r2], l).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_stft,
    bench_generator,
    bench_mask_layer,
    bench_bss_eval
);
criterion_main!(benches);
