//! Finite-difference verification of analytic gradients.
//!
//! Losses that compose the network with further stages (masking layer,
//! discriminator) implement [`CompositeLoss`] so the same harness checks
//! every composition shipped by the crate. All checking runs in `f64`.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::neural::{backward, forward, Batch, DenseNet, Gradients};

/// A scalar loss over a network's parameters, with its analytic gradient.
pub trait CompositeLoss {
    fn loss(&self, net: &DenseNet<f64>, inputs: &Array2<f64>) -> Result<f64>;
    fn grads(&self, net: &DenseNet<f64>, inputs: &Array2<f64>) -> Result<Gradients<f64>>;
}

/// Plain MSE on the network output: mean over rows of the squared-error sum.
pub struct MseLoss<'a> {
    pub targets: &'a Array2<f64>,
}

impl CompositeLoss for MseLoss<'_> {
    fn loss(&self, net: &DenseNet<f64>, inputs: &Array2<f64>) -> Result<f64> {
        let trace = forward(net, &Batch::new(inputs.clone(), None)?)?;
        let diff = trace.output() - self.targets;
        Ok(diff.iter().map(|d| d * d).sum::<f64>() / inputs.nrows() as f64)
    }

    fn grads(&self, net: &DenseNet<f64>, inputs: &Array2<f64>) -> Result<Gradients<f64>> {
        let trace = forward(net, &Batch::new(inputs.clone(), None)?)?;
        let scale = 2.0 / inputs.nrows() as f64;
        let grad_out = (trace.output() - self.targets) * scale;
        let (grads, _) = backward(net, &trace, &grad_out)?;
        Ok(grads)
    }
}

/// The seeded coordinate subsample checked by [`grad_check`]: everything
/// for small parameter counts, otherwise `min_coords` distinct indices.
pub fn sample_coords(total: usize, min_coords: usize, seed: u64) -> Vec<usize> {
    if total <= min_coords {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, total, min_coords).into_vec()
    }
}

/// Compare analytic gradients against central finite differences on a seeded
/// subsample of at least `min_coords` parameter coordinates (all of them for
/// small networks). Returns the maximum relative error
/// `|g_a - g_n| / max(|g_a|, |g_n|, 1e-12)`.
pub fn grad_check(
    net: &DenseNet<f64>,
    loss: &dyn CompositeLoss,
    inputs: &Array2<f64>,
    epsilon: f64,
    min_coords: usize,
    seed: u64,
) -> Result<f64> {
    let analytic = loss.grads(net, inputs)?;
    let coords = sample_coords(net.param_count(), min_coords, seed);

    let mut probe = net.clone();
    let mut max_rel = 0.0f64;
    for idx in coords {
        let original = probe.param(idx);
        probe.set_param(idx, original + epsilon);
        let plus = loss.loss(&probe, inputs)?;
        probe.set_param(idx, original - epsilon);
        let minus = loss.loss(&probe, inputs)?;
        probe.set_param(idx, original);

        let numeric = (plus - minus) / (2.0 * epsilon);
        let ga = analytic.param(idx);
        if !numeric.is_finite() || !ga.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite gradient at parameter {idx}"
            )));
        }
        let rel = (ga - numeric).abs() / ga.abs().max(numeric.abs()).max(1e-12);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}
