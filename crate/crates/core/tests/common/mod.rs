#![allow(dead_code)]

pub mod oracles;

use gptcm::samplers::{arms_sample, slice_sample, stream_rng, ArmsOptions, Block, LogDensity, SamplerDiagnostics};
use statrs::distribution::{ContinuousCDF, Normal};

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Thins a sequence to every `k`-th element.
pub fn thin(xs: &[f64], k: usize) -> Vec<f64> {
    xs.iter().step_by(k).copied().collect()
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

pub fn slice_chain(f: impl Fn(f64) -> f64 + Copy, lower: f64, upper: f64, x0: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0, Block::Other);
    let mut diag = SamplerDiagnostics::default();
    let mut ld = LogDensity::with_bounds(f, lower, upper);
    let mut x = x0;
    (0..n)
        .map(|_| {
            x = slice_sample(&mut ld, x, 1.0, 50, &mut rng, &mut diag).unwrap();
            x
        })
        .collect()
}

pub fn arms_chain(f: impl Fn(f64) -> f64 + Copy, lower: f64, upper: f64, x0: f64, sd: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0, Block::Other);
    let mut diag = SamplerDiagnostics::default();
    let mut ld = LogDensity::with_bounds(f, lower, upper);
    let opts = ArmsOptions::default();
    let mut x = x0;
    (0..n)
        .map(|_| {
            let init: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0]
                .iter()
                .map(|k| x + k * sd)
                .filter(|v| *v > lower && *v < upper)
                .collect();
            x = arms_sample(&mut ld, &init, Some(x), &opts, &mut rng, &mut diag).unwrap();
            x
        })
        .collect()
}
