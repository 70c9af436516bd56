use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use super::{loss, output_gradient, relu, HeadOutputs, LossReport, LossWeights, Network};
use crate::corpus::Batch;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Inverted-dropout masks for the hidden layers of one batch: each entry is
/// `0` or `1 / (1 - rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks<T> {
    pub masks: Vec<Array2<T>>,
}

impl<T: Scalar> DropoutMasks<T> {
    pub fn sample<R: Rng>(net: &Network<T>, rows: usize, rate: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        let keep = T::lit(1.0 / (1.0 - rate));
        let masks = net
            .arch
            .hidden
            .iter()
            .map(|&w| {
                Array2::from_shape_simple_fn((rows, w), || {
                    if rng.random::<f64>() < rate {
                        T::zero()
                    } else {
                        keep
                    }
                })
            })
            .collect();
        Ok(Self { masks })
    }
}

/// Intermediates of a training forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// `activations[0]` is the input; `activations[l]` the (masked) output of
    /// hidden layer `l`.
    pub activations: Vec<Array2<T>>,
    /// Hidden pre-activations, for the ReLU derivative.
    pub pre_activations: Vec<Array2<T>>,
    pub masks: Option<DropoutMasks<T>>,
    /// Raw linear output.
    pub output: Array2<T>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn heads(&self, net: &Network<T>) -> HeadOutputs<T> {
        HeadOutputs::split(self.output.view(), net.heads())
    }
}

/// Per-layer parameter gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array1<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

impl<T: Scalar> Network<T> {
    /// Training forward pass. With `masks`, hidden activations are multiplied
    /// by the masks after the ReLU.
    pub fn forward_train(&self, inputs: ArrayView2<T>, masks: Option<DropoutMasks<T>>) -> Result<ForwardCache<T>> {
        self.check_input(&inputs)?;
        let hidden = self.arch.hidden.len();
        if let Some(m) = &masks {
            if m.masks.len() != hidden
                || m.masks
                    .iter()
                    .zip(&self.arch.hidden)
                    .any(|(m, &w)| m.dim() != (inputs.nrows(), w))
            {
                return Err(Error::shape("one mask per hidden layer, batch x width", "mismatched masks"));
            }
        }
        let mut activations = vec![inputs.to_owned()];
        let mut pre_activations = Vec::with_capacity(hidden);
        for (l, layer) in self.layers.iter().enumerate().take(hidden) {
            let z = layer.affine(activations[l].view());
            let mut a = z.mapv(relu);
            if let Some(m) = &masks {
                a *= &m.masks[l];
            }
            pre_activations.push(z);
            activations.push(a);
        }
        let output = self.layers[hidden].affine(activations[hidden].view());
        Ok(ForwardCache {
            activations,
            pre_activations,
            masks,
            output,
        })
    }
}

/// Backpropagates `d_output` (gradient of the objective with respect to the
/// raw output) through the cached pass. ReLU'(0) is taken as 0.
pub fn backward<T: Scalar>(net: &Network<T>, cache: &ForwardCache<T>, d_output: ArrayView2<T>) -> Gradients<T> {
    let n_layers = net.layers.len();
    let mut weights = Vec::with_capacity(n_layers);
    let mut biases = Vec::with_capacity(n_layers);
    let mut delta = d_output.to_owned();
    for l in (0..n_layers).rev() {
        weights.push(delta.t().dot(&cache.activations[l]));
        biases.push(delta.sum_axis(Axis(0)));
        if l == 0 {
            break;
        }
        let mut upstream = delta.dot(&net.layers[l].weights);
        let z = &cache.pre_activations[l - 1];
        match &cache.masks {
            Some(m) => Zip::from(&mut upstream)
                .and(z)
                .and(&m.masks[l - 1])
                .for_each(|d, &z, &m| *d = if z > T::zero() { *d * m } else { T::zero() }),
            None => Zip::from(&mut upstream)
                .and(z)
                .for_each(|d, &z| {
                    if z <= T::zero() {
                        *d = T::zero()
                    }
                }),
        }
        delta = upstream;
    }
    weights.reverse();
    biases.reverse();
    Gradients { weights, biases }
}

/// Forward, loss, and backward for one batch.
pub fn loss_and_gradients<T: Scalar>(
    net: &Network<T>,
    batch: &Batch<T>,
    weights: LossWeights,
    masks: Option<DropoutMasks<T>>,
) -> Result<(LossReport, Gradients<T>)> {
    let cache = net.forward_train(batch.inputs.view(), masks)?;
    let report = loss(&cache.heads(net), batch, weights)?;
    let d_out = output_gradient(cache.output.view(), net.heads(), batch, weights)?;
    Ok((report, backward(net, &cache, d_out.view())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, HeadLayout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(heads: HeadLayout, hidden: Vec<usize>) -> Network<f64> {
        Network::init(
            Architecture {
                input_dim: 10,
                hidden,
                heads,
            },
            21,
        )
        .unwrap()
    }

    fn random_batch(heads: HeadLayout, rows: usize, seed: u64) -> Batch<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = |c: usize| Array2::from_shape_simple_fn((rows, c), || rng.random_range(-1.0..1.0));
        let inputs = m(10);
        let lps = m(heads.lps);
        let mfcc = (heads.mfcc > 0).then(|| m(heads.mfcc));
        let ibm = (heads.ibm > 0).then(|| m(heads.ibm).mapv(|v: f64| if v > 0.0 { 1.0 } else { 0.0 }));
        Batch {
            inputs,
            targets_lps: lps,
            targets_mfcc: mfcc,
            targets_ibm: ibm,
        }
    }

    #[test]
    fn zero_everything_zero_gradient() {
        let heads = HeadLayout { lps: 6, mfcc: 0, ibm: 0 };
        let mut net = small(heads, vec![5]);
        for l in &mut net.layers {
            l.weights.fill(0.0);
        }
        let batch = Batch {
            inputs: Array2::zeros((3, 10)),
            targets_lps: Array2::zeros((3, 6)),
            targets_mfcc: None,
            targets_ibm: None,
        };
        let (_, g) = loss_and_gradients(&net, &batch, LossWeights::default(), None).unwrap();
        assert!(g.weights.iter().all(|w| w.iter().all(|&v| v == 0.0)));
        assert!(g.biases.iter().all(|b| b.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn zero_rate_dropout_matches_inference() {
        let heads = HeadLayout { lps: 6, mfcc: 2, ibm: 6 };
        let net = small(heads, vec![5, 4]);
        let batch = random_batch(heads, 4, 2);
        let masks = DropoutMasks::sample(&net, 4, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let train = net.forward_train(batch.inputs.view(), Some(masks)).unwrap();
        assert_eq!(train.output, net.forward_raw(batch.inputs.view()).unwrap());
    }

    #[test]
    fn alpha_scales_mfcc_contribution_linearly() {
        let heads = HeadLayout { lps: 6, mfcc: 3, ibm: 0 };
        let net = small(heads, vec![5]);
        let batch = random_batch(heads, 5, 3);
        let w1 = LossWeights { alpha: 0.1, beta: 0.0 };
        let w2 = LossWeights { alpha: 0.2, beta: 0.0 };
        let (_, g1) = loss_and_gradients(&net, &batch, w1, None).unwrap();
        let (_, g2) = loss_and_gradients(&net, &batch, w2, None).unwrap();
        let last = net.layers.len() - 1;
        let mfcc_rows = heads.mfcc_range();
        for r in mfcc_rows {
            for c in 0..5 {
                let (a, b) = (g1.weights[last][[r, c]], g2.weights[last][[r, c]]);
                assert!((b - 2.0 * a).abs() <= 1e-14 * a.abs().max(1e-300));
            }
        }
        for r in heads.lps_range() {
            assert_eq!(g1.weights[last].row(r), g2.weights[last].row(r));
        }
    }

    #[test]
    fn bad_dropout_rate() {
        let net = small(HeadLayout { lps: 6, mfcc: 0, ibm: 0 }, vec![5]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(DropoutMasks::sample(&net, 2, 1.0, &mut rng).is_err());
        assert!(DropoutMasks::sample(&net, 2, -0.1, &mut rng).is_err());
    }

    #[test]
    fn inverted_dropout_preserves_expectation() {
        // One hidden layer: the output is linear in the masked activations.
        let heads = HeadLayout { lps: 6, mfcc: 0, ibm: 0 };
        let net = small(heads, vec![8]);
        let batch = random_batch(heads, 1, 4);
        let clean = net.forward_raw(batch.inputs.view()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut sum = Array2::<f64>::zeros(clean.dim());
        let trials = 10_000;
        for _ in 0..trials {
            let m = DropoutMasks::sample(&net, 1, 0.2, &mut rng).unwrap();
            sum += &net.forward_train(batch.inputs.view(), Some(m)).unwrap().output;
        }
        let mean = sum / trials as f64;
        let scale = clean.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in mean.iter().zip(clean.iter()) {
            assert!((a - b).abs() <= 0.02 * scale, "{a} vs {b}");
        }
    }
}
