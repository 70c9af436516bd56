use ndarray::{Array1, Array2, Zip};

use super::{Gradients, Network};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Classical momentum SGD: `v <- momentum * v - lr * g; p <- p + v`.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    pub momentum: T,
    velocity_w: Vec<Array2<T>>,
    velocity_b: Vec<Array1<T>>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(net: &Network<T>, momentum: f64) -> Self {
        Self {
            momentum: T::lit(momentum),
            velocity_w: net.layers.iter().map(|l| Array2::zeros(l.weights.dim())).collect(),
            velocity_b: net.layers.iter().map(|l| Array1::zeros(l.bias.len())).collect(),
        }
    }

    /// Applies one update. Non-finite gradients abort before touching the
    /// parameters.
    pub fn step(&mut self, net: &mut Network<T>, grads: &Gradients<T>, lr: f64) -> Result<()> {
        if grads.weights.len() != net.layers.len() {
            return Err(Error::shape(net.layers.len(), grads.weights.len()));
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient".into()));
        }
        let lr = T::lit(lr);
        let mu = self.momentum;
        for (l, layer) in net.layers.iter_mut().enumerate() {
            if grads.weights[l].dim() != layer.weights.dim() || grads.biases[l].len() != layer.bias.len() {
                return Err(Error::shape(
                    format!("{:?}", layer.weights.dim()),
                    format!("{:?}", grads.weights[l].dim()),
                ));
            }
            Zip::from(&mut layer.weights)
                .and(&mut self.velocity_w[l])
                .and(&grads.weights[l])
                .for_each(|p, v, &g| {
                    *v = mu * *v - lr * g;
                    *p = *p + *v;
                });
            Zip::from(&mut layer.bias)
                .and(&mut self.velocity_b[l])
                .and(&grads.biases[l])
                .for_each(|p, v, &g| {
                    *v = mu * *v - lr * g;
                    *p = *p + *v;
                });
        }
        if !net.is_finite() {
            return Err(Error::NonFinite("parameters after update".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, HeadLayout, Layer};

    fn one_param(w: f64) -> Network<f64> {
        Network::from_layers(
            Architecture {
                input_dim: 1,
                hidden: vec![],
                heads: HeadLayout { lps: 1, mfcc: 0, ibm: 0 },
            },
            vec![Layer {
                weights: Array2::from_elem((1, 1), w),
                bias: Array1::zeros(1),
            }],
        )
        .unwrap()
    }

    fn grad(g: f64) -> Gradients<f64> {
        Gradients {
            weights: vec![Array2::from_elem((1, 1), g)],
            biases: vec![Array1::zeros(1)],
        }
    }

    #[test]
    fn zero_lr_is_noop() {
        let mut net = one_param(0.5);
        let before = net.clone();
        Sgd::new(&net, 0.9).step(&mut net, &grad(3.0), 0.0).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn plain_sgd_without_momentum() {
        let mut net = one_param(1.0);
        Sgd::new(&net, 0.0).step(&mut net, &grad(2.0), 0.25).unwrap();
        assert_eq!(net.layers[0].weights[[0, 0]], 0.5);
    }

    #[test]
    fn momentum_two_step_trace() {
        // v1 = -0.1*1 = -0.1, w1 = 0.9; v2 = 0.9*(-0.1) - 0.1 = -0.19, w2 = 0.71
        let mut net = one_param(1.0);
        let mut opt = Sgd::new(&net, 0.9);
        opt.step(&mut net, &grad(1.0), 0.1).unwrap();
        assert!((net.layers[0].weights[[0, 0]] - 0.9).abs() < 1e-15);
        opt.step(&mut net, &grad(1.0), 0.1).unwrap();
        assert!((net.layers[0].weights[[0, 0]] - 0.71).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut net = one_param(1.0);
        let before = net.clone();
        let err = Sgd::new(&net, 0.9).step(&mut net, &grad(f64::NAN), 0.1);
        assert!(matches!(err, Err(Error::NonFinite(_))));
        assert_eq!(net, before);
    }
}
