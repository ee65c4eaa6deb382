//! Bias-corrected Adam.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{DenseNet, Gradients, Real};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> Self {
        AdamParams {
            lr,
            ..Default::default()
        }
    }

    pub fn with_lr_beta1(lr: f64, beta1: f64) -> Self {
        AdamParams {
            lr,
            beta1,
            ..Default::default()
        }
    }
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    m_weights: Vec<Array2<T>>,
    v_weights: Vec<Array2<T>>,
    m_biases: Vec<Array1<T>>,
    v_biases: Vec<Array1<T>>,
    t: u64,
    pub params: AdamParams,
}

impl<T: Real> AdamState<T> {
    pub fn new(net: &DenseNet<T>, params: AdamParams) -> Self {
        AdamState {
            m_weights: net
                .layers()
                .iter()
                .map(|l| Array2::zeros(l.weights.dim()))
                .collect(),
            v_weights: net
                .layers()
                .iter()
                .map(|l| Array2::zeros(l.weights.dim()))
                .collect(),
            m_biases: net
                .layers()
                .iter()
                .map(|l| Array1::zeros(l.bias.len()))
                .collect(),
            v_biases: net
                .layers()
                .iter()
                .map(|l| Array1::zeros(l.bias.len()))
                .collect(),
            t: 0,
            params,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update. Increments the step counter; a zero gradient with fresh
/// moments leaves parameters unchanged.
pub fn adam_step<T: Real>(
    net: &mut DenseNet<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
) -> Result<()> {
    let n_layers = net.layers().len();
    if grads.weights.len() != n_layers || state.m_weights.len() != n_layers {
        return Err(Error::Shape(
            "gradient/state layer count does not match network".into(),
        ));
    }
    for (k, layer) in net.layers().iter().enumerate() {
        if grads.weights[k].dim() != layer.weights.dim()
            || grads.biases[k].len() != layer.bias.len()
        {
            return Err(Error::Shape(format!(
                "gradient shapes for layer {k} do not mirror parameters"
            )));
        }
        if grads.weights[k].iter().any(|g| !g.is_finite())
            || grads.biases[k].iter().any(|g| !g.is_finite())
        {
            return Err(Error::Training {
                context: format!("layer {k}"),
                detail: "non-finite gradient".into(),
            });
        }
    }

    state.t += 1;
    let b1 = T::from_f64(state.params.beta1);
    let b2 = T::from_f64(state.params.beta2);
    let lr = T::from_f64(state.params.lr);
    let eps = T::from_f64(state.params.epsilon);
    let corr1 = T::from_f64(1.0 - state.params.beta1.powi(state.t as i32));
    let corr2 = T::from_f64(1.0 - state.params.beta2.powi(state.t as i32));
    let one = T::one();

    for k in 0..n_layers {
        {
            let layer = &mut net.layers[k];
            ndarray::Zip::from(&mut layer.weights)
                .and(&mut state.m_weights[k])
                .and(&mut state.v_weights[k])
                .and(&grads.weights[k])
                .for_each(|w, m, v, &g| {
                    *m = b1 * *m + (one - b1) * g;
                    *v = b2 * *v + (one - b2) * g * g;
                    let m_hat = *m / corr1;
                    let v_hat = *v / corr2;
                    *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
                });
            ndarray::Zip::from(&mut layer.bias)
                .and(&mut state.m_biases[k])
                .and(&mut state.v_biases[k])
                .and(&grads.biases[k])
                .for_each(|w, m, v, &g| {
                    *m = b1 * *m + (one - b1) * g;
                    *v = b2 * *v + (one - b2) * g * g;
                    let m_hat = *m / corr1;
                    let v_hat = *v / corr2;
                    *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
                });
        }
        let layer = &net.layers[k];
        if layer.weights.iter().any(|w| !w.is_finite())
            || layer.bias.iter().any(|b| !b.is_finite())
        {
            return Err(Error::Training {
                context: format!("layer {k}"),
                detail: "parameters became non-finite after update".into(),
            });
        }
    }
    Ok(())
}
