#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specjoint::corpus::{mix_at_snr, Batch, FeatureStats, SystemVariant, TrainingSet};
use specjoint::features::MixtureFeatures;
use specjoint::nn::{loss, loss_and_gradients, Architecture, HeadLayout, LossWeights, Network};
use specjoint::pipeline::RunConfig;
use specjoint::synth::{self, NoiseKind};
use specjoint::Scalar;

/// The four head configurations: LPS only, +MFCC, +IBM, +MFCC+IBM.
pub fn head_configs() -> [HeadLayout; 4] {
    let h = |mfcc, ibm| HeadLayout { lps: 6, mfcc, ibm };
    [h(0, 0), h(4, 0), h(0, 6), h(4, 6)]
}

fn random_batch(heads: &HeadLayout, input_dim: usize, rows: usize, rng: &mut ChaCha8Rng) -> Batch<f64> {
    let mut fill = |r: usize, c: usize| Array2::from_shape_fn((r, c), |_| rng.random_range(-1.5..1.5));
    let inputs = fill(rows, input_dim);
    let targets_lps = fill(rows, heads.lps);
    let targets_mfcc = (heads.mfcc > 0).then(|| fill(rows, heads.mfcc));
    let targets_ibm = (heads.ibm > 0).then(|| fill(rows, heads.ibm).mapv(|v| if v > 0.0 { 1.0 } else { 0.0 }));
    Batch { inputs, targets_lps, targets_mfcc, targets_ibm }
}

/// Worst relative error between backprop and central differences over
/// `n_coords` randomly chosen parameters. Relative error is
/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn gradient_check(heads: HeadLayout, n_coords: usize, seed: u64) -> f64 {
    let arch = Architecture { input_dim: 10, hidden: vec![9, 7], heads };
    let mut net = Network::<f64>::init(arch, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xFD);
    // non-zero biases keep units away from exact ReLU kinks
    for layer in &mut net.layers {
        layer.bias = Array1::from_shape_fn(layer.bias.len(), |_| rng.random_range(-0.3..0.3));
    }
    let batch = random_batch(&heads, 10, 8, &mut rng);
    let w = LossWeights::default();
    let (_, grads) = loss_and_gradients(&net, &batch, w, None).unwrap();
    let eval = |n: &Network<f64>| loss(&n.forward(batch.inputs.view()).unwrap(), &batch, w).unwrap().total;

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..n_coords {
        let l = rng.random_range(0..net.layers.len());
        let use_bias = rng.random_bool(0.2);
        let (analytic, numeric) = if use_bias {
            let j = rng.random_range(0..net.layers[l].bias.len());
            let a = grads.biases[l][j];
            let mut p = net.clone();
            p.layers[l].bias[j] += h;
            let mut m = net.clone();
            m.layers[l].bias[j] -= h;
            (a, (eval(&p) - eval(&m)) / (2.0 * h))
        } else {
            let (r, c) = net.layers[l].weights.dim();
            let (i, j) = (rng.random_range(0..r), rng.random_range(0..c));
            let a = grads.weights[l][[i, j]];
            let mut p = net.clone();
            p.layers[l].weights[[i, j]] += h;
            let mut m = net.clone();
            m.layers[l].weights[[i, j]] -= h;
            (a, (eval(&p) - eval(&m)) / (2.0 * h))
        };
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

/// Feature sets for `n_clean` short synthetic utterances mixed with white and
/// pink noise at 10 and 0 dB.
pub fn synthetic_mixtures<T: Scalar>(n_clean: usize, secs: f64, seed: u64) -> Vec<MixtureFeatures<T>> {
    let cfg = RunConfig::default();
    let ex = cfg.extractor::<T>().unwrap();
    let mut out = Vec::new();
    for i in 0..n_clean {
        let clean = synth::utterance::<T>(seed + i as u64, secs, 16000).unwrap();
        for (k, kind) in [NoiseKind::White, NoiseKind::Pink].into_iter().enumerate() {
            let noise = synth::noise::<T>(kind, seed * 31 + k as u64, 2.0 * secs, 16000).unwrap();
            for snr in [10.0, 0.0] {
                let m = mix_at_snr(&clean, &noise, snr, 977 * i).unwrap();
                out.push(ex.mixture(&clean, &m.scaled_noise, &m.noisy).unwrap());
            }
        }
    }
    out
}

pub fn training_set<T: Scalar>(mixtures: &[MixtureFeatures<T>], variant: SystemVariant) -> TrainingSet<T> {
    let stats = FeatureStats::fit(mixtures).unwrap();
    TrainingSet::build(mixtures, &stats, variant, 3, 6).unwrap()
}
