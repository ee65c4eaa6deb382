//! Dense feed-forward networks with exact backpropagation.
//!
//! Training runs in `f32`; gradient verification converts to `f64`. A ChaCha
//! counter-based generator seeds initialization, so a (seed, data order) pair
//! fully determines every parameter after any number of steps.

mod adam;
mod checkpoint;
mod gradcheck;

pub use adam::{adam_step, AdamParams, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradcheck::{grad_check, sample_coords, CompositeLoss, MseLoss};

use ndarray::{Array1, Array2};
use rand::distr::uniform::SampleUniform;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar type for network arithmetic (`f32` or `f64`).
pub trait Real: ndarray::NdFloat + SampleUniform {
    fn from_f64(v: f64) -> Self;
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
}

impl Activation {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Sigmoid => 1,
            Activation::Linear => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Activation::Relu),
            1 => Ok(Activation::Sigmoid),
            2 => Ok(Activation::Linear),
            _ => Err(Error::Format {
                what: "checkpoint",
                detail: format!("unknown activation tag {tag}"),
            }),
        }
    }

    fn apply<T: Real>(self, z: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    z
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => sigmoid(z),
            Activation::Linear => z,
        }
    }

    /// Derivative given both the pre-activation and the activation value.
    fn derivative<T: Real>(self, z: T, a: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => a * (T::one() - a),
            Activation::Linear => T::one(),
        }
    }
}

/// Overflow-safe logistic function.
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// One affine layer plus activation. Weights are `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
    pub activation: Activation,
}

impl<T> Layer<T> {
    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }
    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }
}

/// A fully-connected network with the seed used at initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet<T> {
    layers: Vec<Layer<T>>,
    seed: u64,
}

impl<T: Real> DenseNet<T> {
    /// Build a network from explicit layers. Adjacent dimensions must chain.
    pub fn new(layers: Vec<Layer<T>>, seed: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Parameter {
                name: "layers",
                detail: "need at least one layer".into(),
            });
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape(format!(
                    "layer {k} outputs {} but layer {} expects {}",
                    pair[0].output_dim(),
                    k + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(DenseNet { layers, seed })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub(crate) fn from_layers(layers: Vec<Layer<T>>, seed: u64) -> Self {
        DenseNet { layers, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Flat parameter indexing: per layer, weights row-major then bias.
    pub fn param(&self, mut idx: usize) -> T {
        for layer in &self.layers {
            let nw = layer.weights.len();
            if idx < nw {
                return layer.weights.as_slice().unwrap()[idx];
            }
            idx -= nw;
            let nb = layer.bias.len();
            if idx < nb {
                return layer.bias[idx];
            }
            idx -= nb;
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut idx: usize, value: T) {
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            if idx < nw {
                layer.weights.as_slice_mut().unwrap()[idx] = value;
                return;
            }
            idx -= nw;
            let nb = layer.bias.len();
            if idx < nb {
                layer.bias[idx] = value;
                return;
            }
            idx -= nb;
        }
        panic!("parameter index out of range");
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|w| w.is_finite()) && l.bias.iter().all(|b| b.is_finite())
        })
    }
}

impl DenseNet<f32> {
    /// Exact widening for 64-bit gradient verification.
    pub fn to_f64(&self) -> DenseNet<f64> {
        DenseNet {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: l.weights.mapv(f64::from),
                    bias: l.bias.mapv(f64::from),
                    activation: l.activation,
                })
                .collect(),
            seed: self.seed,
        }
    }
}

/// A batch of row vectors, optionally with aligned targets.
#[derive(Debug, Clone)]
pub struct Batch<T> {
    pub inputs: Array2<T>,
    pub targets: Option<Array2<T>>,
}

impl<T: Real> Batch<T> {
    pub fn new(inputs: Array2<T>, targets: Option<Array2<T>>) -> Result<Self> {
        if inputs.nrows() == 0 {
            return Err(Error::Parameter {
                name: "batch",
                detail: "batch must contain at least one row".into(),
            });
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite batch input".into()));
        }
        if let Some(t) = &targets {
            if t.nrows() != inputs.nrows() {
                return Err(Error::Shape(format!(
                    "batch has {} inputs but {} targets",
                    inputs.nrows(),
                    t.nrows()
                )));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input("non-finite batch target".into()));
            }
        }
        Ok(Batch { inputs, targets })
    }
}

/// Cached activations from a forward pass, sufficient for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    input: Array2<T>,
    pre: Vec<Array2<T>>,
    post: Vec<Array2<T>>,
}

impl<T: Real> Trace<T> {
    /// Final layer output, `B x D_out`.
    pub fn output(&self) -> &Array2<T> {
        self.post.last().expect("trace has at least one layer")
    }

    pub fn batch_size(&self) -> usize {
        self.input.nrows()
    }

    /// Smallest `|pre-activation|` across all layers and rows. Finite
    /// differencing near a relu kink is ill-posed; callers can use this to
    /// confirm a check point is safely away from every kink.
    pub fn min_abs_preactivation(&self) -> T {
        self.pre
            .iter()
            .flat_map(|z| z.iter())
            .map(|v| v.abs())
            .fold(T::infinity(), |m, v| m.min(v))
    }
}

/// Parameter gradients, shapes mirroring [`DenseNet`].
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array1<T>>,
}

impl<T: Real> Gradients<T> {
    /// Same flat indexing as [`DenseNet::param`].
    pub fn param(&self, mut idx: usize) -> T {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            if idx < w.len() {
                return w.as_slice().unwrap()[idx];
            }
            idx -= w.len();
            if idx < b.len() {
                return b[idx];
            }
            idx -= b.len();
        }
        panic!("gradient index out of range");
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }
}

/// Initialize a network from layer sizes `[d0, d1, ..., dL]` and one
/// activation per layer. Relu layers draw He-uniform weights, sigmoid and
/// linear layers Glorot-uniform; biases start at zero. The same seed yields
/// bit-identical parameters.
pub fn init_network<T: Real>(
    layer_dims: &[usize],
    activations: &[Activation],
    seed: u64,
) -> Result<DenseNet<T>> {
    if layer_dims.len() < 2 {
        return Err(Error::Parameter {
            name: "layer_dims",
            detail: "need at least an input and an output size".into(),
        });
    }
    if layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::Parameter {
            name: "layer_dims",
            detail: format!("dimensions must be positive, got {layer_dims:?}"),
        });
    }
    if activations.len() != layer_dims.len() - 1 {
        return Err(Error::Parameter {
            name: "activations",
            detail: format!(
                "{} activations for {} layers",
                activations.len(),
                layer_dims.len() - 1
            ),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(activations.len());
    for (k, &act) in activations.iter().enumerate() {
        let fan_in = layer_dims[k];
        let fan_out = layer_dims[k + 1];
        let limit = match act {
            Activation::Relu => (6.0 / fan_in as f64).sqrt(),
            Activation::Sigmoid | Activation::Linear => {
                (6.0 / (fan_in + fan_out) as f64).sqrt()
            }
        };
        let dist = Uniform::new_inclusive(T::from_f64(-limit), T::from_f64(limit))
            .expect("uniform bounds are finite");
        let data: Vec<T> = (0..fan_out * fan_in).map(|_| dist.sample(&mut rng)).collect();
        layers.push(Layer {
            weights: Array2::from_shape_vec((fan_out, fan_in), data).expect("sized above"),
            bias: Array1::zeros(fan_out),
            activation: act,
        });
    }
    Ok(DenseNet { layers, seed })
}

/// Run the network over a batch, caching per-layer pre- and post-activations.
pub fn forward<T: Real>(net: &DenseNet<T>, batch: &Batch<T>) -> Result<Trace<T>> {
    if batch.inputs.ncols() != net.input_dim() {
        return Err(Error::Shape(format!(
            "batch width {} does not match network input {}",
            batch.inputs.ncols(),
            net.input_dim()
        )));
    }
    if batch.inputs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite batch input".into()));
    }

    let mut pre = Vec::with_capacity(net.layers.len());
    let mut post = Vec::with_capacity(net.layers.len());
    let mut a = batch.inputs.clone();
    for layer in &net.layers {
        let z = a.dot(&layer.weights.t()) + &layer.bias;
        let act = z.mapv(|v| layer.activation.apply(v));
        pre.push(z);
        a = act.clone();
        post.push(act);
    }
    Ok(Trace {
        input: batch.inputs.clone(),
        pre,
        post,
    })
}

/// Exact reverse-mode gradients of the traced composition.
///
/// `output_gradient` is the loss gradient with respect to the final layer
/// output (any batch scaling is the caller's concern). Returns parameter
/// gradients plus the gradient with respect to the batch input, so callers
/// can chain through preceding stages.
pub fn backward<T: Real>(
    net: &DenseNet<T>,
    trace: &Trace<T>,
    output_gradient: &Array2<T>,
) -> Result<(Gradients<T>, Array2<T>)> {
    let n_layers = net.layers.len();
    if trace.pre.len() != n_layers {
        return Err(Error::Shape(format!(
            "trace covers {} layers, network has {n_layers}",
            trace.pre.len()
        )));
    }
    let out = trace.output();
    if output_gradient.dim() != out.dim() {
        return Err(Error::Shape(format!(
            "output gradient {:?} does not match trace output {:?}",
            output_gradient.dim(),
            out.dim()
        )));
    }
    if trace.input.ncols() != net.input_dim() {
        return Err(Error::Shape("trace was built for a different network".into()));
    }

    let mut weights = vec![Array2::zeros((0, 0)); n_layers];
    let mut biases = vec![Array1::zeros(0); n_layers];

    let mut delta = {
        let k = n_layers - 1;
        let mut d = output_gradient.clone();
        apply_activation_derivative(net.layers[k].activation, &trace.pre[k], &trace.post[k], &mut d)?;
        d
    };
    for k in (0..n_layers).rev() {
        let prev_act = if k == 0 { &trace.input } else { &trace.post[k - 1] };
        weights[k] = delta.t().dot(prev_act);
        biases[k] = delta.sum_axis(ndarray::Axis(0));
        let propagated = delta.dot(&net.layers[k].weights);
        if k == 0 {
            return Ok((Gradients { weights, biases }, propagated));
        }
        delta = propagated;
        apply_activation_derivative(
            net.layers[k - 1].activation,
            &trace.pre[k - 1],
            &trace.post[k - 1],
            &mut delta,
        )?;
    }
    unreachable!("loop returns at k == 0");
}

fn apply_activation_derivative<T: Real>(
    act: Activation,
    pre: &Array2<T>,
    post: &Array2<T>,
    grad: &mut Array2<T>,
) -> Result<()> {
    if grad.dim() != pre.dim() {
        return Err(Error::Shape(format!(
            "gradient {:?} vs layer {:?}",
            grad.dim(),
            pre.dim()
        )));
    }
    ndarray::Zip::from(grad)
        .and(pre)
        .and(post)
        .for_each(|g, &z, &a| *g = *g * act.derivative(z, a));
    Ok(())
}
