//! Rough throughput probe; ignored by default.

use morphkit::numerics::{Rng, Tensor};
use std::time::Instant;

#[test]
#[ignore]
fn matmul_throughput() {
    let mut rng = Rng::new(1);
    let a = rng.gaussian(&[128, 64]);
    let b = rng.gaussian(&[64, 256]);
    let start = Instant::now();
    let iters = 20000;
    let mut sink = 0.0;
    for _ in 0..iters {
        let c = a.matmul(&b).unwrap();
        sink += c.data()[0];
    }
    let secs = start.elapsed().as_secs_f64();
    let flops = 2.0 * 128.0 * 64.0 * 256.0 * iters as f64;
    println!("sink={sink} {:.2} Gflop/s", flops / secs / 1e9);
    let _ = Tensor::zeros(&[1]);
}

#[test]
#[ignore]
fn transcendental_cost() {
    use std::time::Instant;
    let xs: Vec<f64> = (0..1_000_000).map(|i| (i as f64 / 1e6) * 8.0 - 4.0).collect();
    let t0 = Instant::now();
    let s: f64 = xs.iter().map(|&x| x.exp()).sum();
    let exp_ns = t0.elapsed().as_nanos() as f64 / 1e6;
    let t1 = Instant::now();
    let s2: f64 = xs.iter().map(|&x| x.tanh()).sum();
    let tanh_ns = t1.elapsed().as_nanos() as f64 / 1e6;
    println!("exp {exp_ns:.1} ns, tanh {tanh_ns:.1} ns (sinks {s:.1} {s2:.1})");
    println!("per velocity: exp 266k = {:.2} ms, tanh 131k = {:.2} ms", 266.0e3 * exp_ns / 1e6, 131.0e3 * tanh_ns / 1e6);
}
