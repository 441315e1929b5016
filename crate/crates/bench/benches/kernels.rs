use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use medirl_core::fovea::gaussian_blur;
use medirl_core::grid::build_grid;
use medirl_core::irl::{build_mdp, expected_svf, soft_value_iteration, ActionModel};
use medirl_core::reward_net::{backward, forward, init_params, NetConfig};
use medirl_core::{Matrix, Tensor};

fn soft_vi(c: &mut Criterion) {
    let grid = build_grid(72, 136, 12, 17).unwrap();
    let mdp = build_mdp(&grid, ActionModel::PatchTarget, 0.98, 6).unwrap();
    let r: Vec<f64> = (0..grid.num_states()).map(|i| (i as f64 * 0.37).sin()).collect();
    c.bench_function("soft_vi_6x8_h6", |b| b.iter(|| soft_value_iteration(&mdp, black_box(&r), 6).unwrap()));
    let sol = soft_value_iteration(&mdp, &r, 6).unwrap();
    let mut start = vec![0.0; grid.num_states()];
    start[20] = 1.0;
    c.bench_function("expected_svf_6x8_h7", |b| {
        b.iter(|| expected_svf(&mdp, &sol.policy, black_box(&start), 7).unwrap())
    });
}

fn reward_net(c: &mut Criterion) {
    let input_dim = 13;
    let params = init_params(
        &NetConfig {
            input_dim,
            ..Default::default()
        },
        0,
    )
    .unwrap();
    // one minibatch: 20 sequences of about 18 decisions over 48 patches
    let rows = 48 * 360;
    let x = Matrix::from_vec(rows, input_dim, (0..rows * input_dim).map(|i| (i as f64 * 0.013).cos()).collect()).unwrap();
    let upstream: Vec<f64> = (0..rows).map(|i| (i as f64 * 0.7).sin()).collect();
    c.bench_function("forward_eval_48x13", |b| {
        let one = Matrix::from_vec(48, input_dim, (0..48).flat_map(|r| x.row(r).to_vec()).collect()).unwrap();
        b.iter(|| forward(&params, black_box(&one), false).unwrap())
    });
    c.bench_function("forward_backward_train_minibatch", |b| {
        b.iter(|| {
            let (_, cache) = forward(&params, black_box(&x), true).unwrap();
            backward(&params, &cache, &upstream).unwrap()
        })
    });
}

fn blur(c: &mut Criterion) {
    let (h, w, ch) = (144, 272, 2);
    let t = Tensor::new(vec![h, w, ch], (0..h * w * ch).map(|i| ((i * 7919) % 1000) as f32 / 1000.0).collect()).unwrap();
    for sigma in [2.0, 8.0] {
        c.bench_function(&format!("gaussian_blur_144x272x2_sigma{sigma}"), |b| {
            b.iter(|| gaussian_blur(black_box(&t), sigma).unwrap())
        });
    }
}

criterion_group!(benches, soft_vi, reward_net, blur);
criterion_main!(benches);
