//! Feed-forward ReLU regression network with multi-head linear output,
//! hand-written backpropagation, and the multi-objective loss.

mod backprop;
mod checkpoint;
mod loss;
mod sgd;
mod train;

pub use backprop::{backward, loss_and_gradients, DropoutMasks, ForwardCache, Gradients};
pub use checkpoint::{Model, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use loss::{loss, output_gradient, LossReport, LossWeights, NORM_FLOOR};
pub use sgd::Sgd;
pub use train::{evaluate_loss, train, EpochRecord, TrainConfig, TrainObserver, TrainOutcome};

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::SystemVariant;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Widths of the output slices, laid out as `[LPS | MFCC | IBM]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadLayout {
    pub lps: usize,
    /// Zero when absent.
    pub mfcc: usize,
    /// Zero when absent.
    pub ibm: usize,
}

impl HeadLayout {
    pub fn for_variant(variant: SystemVariant, lps_dims: usize, mfcc_dims: usize) -> Self {
        Self {
            lps: lps_dims,
            mfcc: if variant.mfcc_output() { mfcc_dims } else { 0 },
            ibm: if variant.ibm_output() { lps_dims } else { 0 },
        }
    }

    pub fn total(&self) -> usize {
        self.lps + self.mfcc + self.ibm
    }

    pub fn lps_range(&self) -> std::ops::Range<usize> {
        0..self.lps
    }

    pub fn mfcc_range(&self) -> std::ops::Range<usize> {
        self.lps..self.lps + self.mfcc
    }

    pub fn ibm_range(&self) -> std::ops::Range<usize> {
        self.lps + self.mfcc..self.total()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub heads: HeadLayout,
}

impl Architecture {
    /// `[input, hidden..., output]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend(&self.hidden);
        w.push(self.heads.total());
        w
    }

    pub fn validate(&self) -> Result<()> {
        if self.heads.lps == 0 {
            return Err(Error::Config("LPS head must be non-empty".into()));
        }
        if let Some(i) = self.widths().iter().position(|&w| w == 0) {
            return Err(Error::Config(format!("layer width {i} is zero")));
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        self.widths().windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }
}

/// One affine layer; `weights` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    /// `inputs * W^T + b`.
    pub fn affine(&self, inputs: ArrayView2<T>) -> Array2<T> {
        let mut z = inputs.dot(&self.weights.t());
        z += &self.bias.view().insert_axis(Axis(0));
        z
    }
}

/// Linear head outputs sliced out of the final layer.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutputs<T> {
    pub lps: Array2<T>,
    pub mfcc: Option<Array2<T>>,
    pub ibm: Option<Array2<T>>,
}

impl<T: Scalar> HeadOutputs<T> {
    pub fn split(output: ArrayView2<T>, heads: &HeadLayout) -> Self {
        let part = |r: std::ops::Range<usize>| output.slice(s![.., r]).to_owned();
        Self {
            lps: part(heads.lps_range()),
            mfcc: (heads.mfcc > 0).then(|| part(heads.mfcc_range())),
            ibm: (heads.ibm > 0).then(|| part(heads.ibm_range())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub arch: Architecture,
    pub layers: Vec<Layer<T>>,
}

pub(crate) fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

impl<T: Scalar> Network<T> {
    /// Glorot-uniform weights, zero biases. Samples are drawn in `f64` so an
    /// `f32` and an `f64` network from the same seed agree up to rounding.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths = arch.widths();
        let layers = widths
            .windows(2)
            .map(|p| {
                let (fan_in, fan_out) = (p[0], p[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || {
                    T::lit(rng.random_range(-limit..limit))
                });
                Layer {
                    weights,
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self { arch, layers })
    }

    /// Builds a network from explicit layers, checking that widths chain.
    pub fn from_layers(arch: Architecture, layers: Vec<Layer<T>>) -> Result<Self> {
        arch.validate()?;
        let widths = arch.widths();
        if layers.len() + 1 != widths.len() {
            return Err(Error::shape(format!("{} layers", widths.len() - 1), layers.len()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.dim() != (widths[i + 1], widths[i]) || l.bias.len() != widths[i + 1] {
                return Err(Error::shape(
                    format!("layer {i} {}x{}", widths[i + 1], widths[i]),
                    format!("{:?} / bias {}", l.weights.dim(), l.bias.len()),
                ));
            }
        }
        Ok(Self { arch, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.arch.input_dim
    }

    pub fn heads(&self) -> &HeadLayout {
        &self.arch.heads
    }

    pub(crate) fn check_input(&self, inputs: &ArrayView2<T>) -> Result<()> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::shape(
                format!("{} input columns", self.input_dim()),
                inputs.ncols(),
            ));
        }
        Ok(())
    }

    /// Inference forward pass (no dropout, no rescaling); raw linear output.
    pub fn forward_raw(&self, inputs: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_input(&inputs)?;
        let last = self.layers.len() - 1;
        let mut a = self.layers[0].affine(inputs);
        if last > 0 {
            a.mapv_inplace(relu);
        }
        for (i, layer) in self.layers.iter().enumerate().skip(1) {
            a = layer.affine(a.view());
            if i < last {
                a.mapv_inplace(relu);
            }
        }
        Ok(a)
    }

    pub fn forward(&self, inputs: ArrayView2<T>) -> Result<HeadOutputs<T>> {
        let out = self.forward_raw(inputs)?;
        Ok(HeadOutputs::split(out.view(), self.heads()))
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite()))
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            arch: self.arch.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: l.weights.mapv(|v| U::lit(v.as_f64())),
                    bias: l.bias.mapv(|v| U::lit(v.as_f64())),
                })
                .collect(),
        }
    }
}
