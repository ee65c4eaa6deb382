//! Adversarial objectives and discriminator-input plumbing.
//!
//! The discriminator judges concatenated spectra. Three input layouts are
//! supported: vocal+background (the unconditioned pair), vocal+mixture, and
//! vocal+background+mixture; the mixture columns act as conditioning and
//! never receive generator gradients.

mod train;

pub use train::{
    adversarial_train, discriminator_accuracy, evaluate_joint_loss, pretrain,
    write_diagnostics_csv, AdversarialOptions, EpochDiagnostics, TrainingSchedule, TrainingSet,
};

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::mask_layer_backward_batch;
use crate::neural::{backward, forward, Batch, DenseNet, Gradients, Real};

/// Sigmoid outputs are clamped this far from 0 and 1 before any logarithm.
pub const PROB_CLAMP: f64 = 1e-7;

/// Discriminator input layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GanVariant {
    /// Vocal and background spectra (unconditioned).
    Vb,
    /// Vocal and mixture spectra.
    Vm,
    /// Vocal, background, and mixture spectra.
    Vbm,
}

impl GanVariant {
    /// Width of the discriminator's first layer for `f` frequency bins.
    pub fn d_input_width(self, f: usize) -> usize {
        match self {
            GanVariant::Vb | GanVariant::Vm => 2 * f,
            GanVariant::Vbm => 3 * f,
        }
    }

    pub fn all() -> [GanVariant; 3] {
        [GanVariant::Vb, GanVariant::Vm, GanVariant::Vbm]
    }
}

impl std::str::FromStr for GanVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vb" => Ok(GanVariant::Vb),
            "vm" => Ok(GanVariant::Vm),
            "vbm" => Ok(GanVariant::Vbm),
            other => Err(Error::Parameter {
                name: "variant",
                detail: format!("unknown variant `{other}` (expected vb, vm, or vbm)"),
            }),
        }
    }
}

impl std::fmt::Display for GanVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GanVariant::Vb => "vb",
            GanVariant::Vm => "vm",
            GanVariant::Vbm => "vbm",
        })
    }
}

/// Assemble one discriminator input vector from per-source spectra and the
/// mixture. The same construction serves clean (real) and generated (fake)
/// sides.
pub fn build_d_input<T: Real>(
    variant: GanVariant,
    y1: &[T],
    y2: &[T],
    z: &[T],
) -> Result<Vec<T>> {
    if y1.len() != y2.len() || y1.len() != z.len() {
        return Err(Error::Shape(format!(
            "spectra lengths differ: y1={}, y2={}, z={}",
            y1.len(),
            y2.len(),
            z.len()
        )));
    }
    let mut out = Vec::with_capacity(variant.d_input_width(y1.len()));
    match variant {
        GanVariant::Vb => {
            out.extend_from_slice(y1);
            out.extend_from_slice(y2);
        }
        GanVariant::Vm => {
            out.extend_from_slice(y1);
            out.extend_from_slice(z);
        }
        GanVariant::Vbm => {
            out.extend_from_slice(y1);
            out.extend_from_slice(y2);
            out.extend_from_slice(z);
        }
    }
    Ok(out)
}

/// Batched [`build_d_input`]: `pair` holds `(y1 || y2)` rows (`B x 2F`),
/// `z` the mixtures (`B x F`).
pub fn build_d_input_batch<T: Real>(
    variant: GanVariant,
    pair: &Array2<T>,
    z: &Array2<T>,
) -> Result<Array2<T>> {
    let f = z.ncols();
    if pair.ncols() != 2 * f || pair.nrows() != z.nrows() {
        return Err(Error::Shape(format!(
            "pair batch {:?} does not match mixture batch {:?}",
            pair.dim(),
            z.dim()
        )));
    }
    let b = pair.nrows();
    let mut out = Array2::zeros((b, variant.d_input_width(f)));
    match variant {
        GanVariant::Vb => out.assign(pair),
        GanVariant::Vm => {
            out.slice_mut(s![.., 0..f]).assign(&pair.slice(s![.., 0..f]));
            out.slice_mut(s![.., f..2 * f]).assign(z);
        }
        GanVariant::Vbm => {
            out.slice_mut(s![.., 0..2 * f]).assign(pair);
            out.slice_mut(s![.., 2 * f..3 * f]).assign(z);
        }
    }
    Ok(out)
}

/// Route a gradient on the discriminator input back to the generated pair
/// `(y1_hat || y2_hat)`. Conditioning columns are constant with respect to
/// the generator, so their gradient is dropped; in the vocal+mixture layout
/// the background estimate receives zero gradient.
pub fn d_input_grad_to_pair<T: Real>(
    variant: GanVariant,
    grad: &Array2<T>,
    f: usize,
) -> Result<Array2<T>> {
    if grad.ncols() != variant.d_input_width(f) {
        return Err(Error::Shape(format!(
            "gradient width {} does not match variant width {}",
            grad.ncols(),
            variant.d_input_width(f)
        )));
    }
    let b = grad.nrows();
    let mut out = Array2::zeros((b, 2 * f));
    match variant {
        GanVariant::Vb | GanVariant::Vbm => {
            out.assign(&grad.slice(s![.., 0..2 * f]));
        }
        GanVariant::Vm => {
            out.slice_mut(s![.., 0..f]).assign(&grad.slice(s![.., 0..f]));
        }
    }
    Ok(out)
}

fn clamp_prob<T: Real>(d: T) -> T {
    let lo = T::from_f64(PROB_CLAMP);
    let hi = T::one() - lo;
    d.max(lo).min(hi)
}

fn check_probs<T: Real>(vals: &[T], what: &str) -> Result<()> {
    if vals.is_empty() {
        return Err(Error::Parameter {
            name: "discriminator outputs",
            detail: format!("{what}: empty batch"),
        });
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training {
            context: what.to_string(),
            detail: "non-finite discriminator output".into(),
        });
    }
    Ok(())
}

/// Discriminator objective: `-mean log d_real - mean log (1 - d_fake)`.
/// Minimizing it performs the maximization over the discriminator.
pub fn d_loss<T: Real>(d_real: &[T], d_fake: &[T]) -> Result<T> {
    check_probs(d_real, "d_loss real")?;
    check_probs(d_fake, "d_loss fake")?;
    let nr = T::from_f64(d_real.len() as f64);
    let nf = T::from_f64(d_fake.len() as f64);
    let real: T = d_real
        .iter()
        .map(|&d| clamp_prob(d).ln())
        .fold(T::zero(), |a, v| a + v);
    let fake: T = d_fake
        .iter()
        .map(|&d| (T::one() - clamp_prob(d)).ln())
        .fold(T::zero(), |a, v| a + v);
    Ok(-(real / nr) - fake / nf)
}

/// [`d_loss`] plus its gradients with respect to the raw outputs.
pub fn d_loss_with_grads<T: Real>(d_real: &[T], d_fake: &[T]) -> Result<(T, Vec<T>, Vec<T>)> {
    let loss = d_loss(d_real, d_fake)?;
    let nr = T::from_f64(d_real.len() as f64);
    let nf = T::from_f64(d_fake.len() as f64);
    let grad_real = d_real
        .iter()
        .map(|&d| -(T::one() / clamp_prob(d)) / nr)
        .collect();
    let grad_fake = d_fake
        .iter()
        .map(|&d| (T::one() / (T::one() - clamp_prob(d))) / nf)
        .collect();
    Ok((loss, grad_real, grad_fake))
}

/// Non-saturating generator objective: `-mean log d_fake`.
pub fn g_loss_logd<T: Real>(d_fake: &[T]) -> Result<T> {
    check_probs(d_fake, "g_loss")?;
    let n = T::from_f64(d_fake.len() as f64);
    let sum: T = d_fake
        .iter()
        .map(|&d| clamp_prob(d).ln())
        .fold(T::zero(), |a, v| a + v);
    Ok(-(sum / n))
}

/// [`g_loss_logd`] plus its gradient with respect to the raw outputs.
pub fn g_loss_logd_with_grad<T: Real>(d_fake: &[T]) -> Result<(T, Vec<T>)> {
    let loss = g_loss_logd(d_fake)?;
    let n = T::from_f64(d_fake.len() as f64);
    let grad = d_fake
        .iter()
        .map(|&d| -(T::one() / clamp_prob(d)) / n)
        .collect();
    Ok((loss, grad))
}

/// Binary cross-entropy on a single sigmoid output, for gradient checks.
pub struct BceLoss<'a> {
    /// One label (1 = real, 0 = fake) per batch row.
    pub labels: &'a [f64],
}

impl crate::neural::CompositeLoss for BceLoss<'_> {
    fn loss(&self, net: &DenseNet<f64>, inputs: &Array2<f64>) -> Result<f64> {
        let trace = forward(net, &Batch::new(inputs.clone(), None)?)?;
        let out = trace.output();
        if out.ncols() != 1 || out.nrows() != self.labels.len() {
            return Err(Error::Shape("BCE expects one output per row".into()));
        }
        let n = self.labels.len() as f64;
        let mut acc = 0.0;
        for (d, &y) in out.column(0).iter().zip(self.labels) {
            let d = clamp_prob(*d);
            acc -= y * d.ln() + (1.0 - y) * (1.0 - d).ln();
        }
        Ok(acc / n)
    }

    fn grads(&self, net: &DenseNet<f64>, inputs: &Array2<f64>) -> Result<Gradients<f64>> {
        let trace = forward(net, &Batch::new(inputs.clone(), None)?)?;
        let out = trace.output();
        let n = self.labels.len() as f64;
        let mut grad_out = Array2::zeros(out.dim());
        for (i, &y) in self.labels.iter().enumerate() {
            let d = clamp_prob(out[[i, 0]]);
            grad_out[[i, 0]] = (-y / d + (1.0 - y) / (1.0 - d)) / n;
        }
        let (grads, _) = backward(net, &trace, &grad_out)?;
        Ok(grads)
    }
}

/// The full generator objective for gradient checks: generator forward,
/// masking layer, discriminator input assembly, discriminator forward,
/// `-mean log D(fake)`; gradients flow back through the discriminator's
/// input gradient into the generator.
pub struct AdversarialGLoss<'a> {
    pub discriminator: &'a DenseNet<f64>,
    pub variant: GanVariant,
    pub mixtures: &'a Array2<f64>,
}

impl AdversarialGLoss<'_> {
    fn fake_probs(
        &self,
        net: &DenseNet<f64>,
        inputs: &Array2<f64>,
    ) -> Result<(crate::neural::Trace<f64>, Array2<f64>, crate::neural::Trace<f64>)> {
        let g_trace = forward(net, &Batch::new(inputs.clone(), None)?)?;
        let pred = crate::mask::mask_layer_forward_batch(g_trace.output(), self.mixtures)?;
        let d_in = build_d_input_batch(self.variant, &pred, self.mixtures)?;
        let d_trace = forward(self.discriminator, &Batch::new(d_in, None)?)?;
        Ok((g_trace, pred, d_trace))
    }
}

impl crate::neural::CompositeLoss for AdversarialGLoss<'_> {
    fn loss(&self, net: &DenseNet<f64>, inputs: &Array2<f64>) -> Result<f64> {
        let (_, _, d_trace) = self.fake_probs(net, inputs)?;
        let probs: Vec<f64> = d_trace.output().column(0).to_vec();
        g_loss_logd(&probs)
    }

    fn grads(&self, net: &DenseNet<f64>, inputs: &Array2<f64>) -> Result<Gradients<f64>> {
        let (g_trace, _, d_trace) = self.fake_probs(net, inputs)?;
        let probs: Vec<f64> = d_trace.output().column(0).to_vec();
        let (_, grad_probs) = g_loss_logd_with_grad(&probs)?;
        let grad_out = Array2::from_shape_vec((probs.len(), 1), grad_probs).expect("column");
        let (_, d_input_grad) = backward(self.discriminator, &d_trace, &grad_out)?;
        let f = self.mixtures.ncols();
        let pair_grad = d_input_grad_to_pair(self.variant, &d_input_grad, f)?;
        let raw_grad = mask_layer_backward_batch(g_trace.output(), self.mixtures, &pair_grad)?;
        let (grads, _) = backward(net, &g_trace, &raw_grad)?;
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{grad_check, init_network, Activation, CompositeLoss};
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn d_input_layouts() {
        let y1 = [1.0_f64, 2.0];
        let y2 = [3.0, 4.0];
        let z = [5.0, 6.0];
        assert_eq!(
            build_d_input(GanVariant::Vbm, &y1, &y2, &z).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        );
        assert_eq!(
            build_d_input(GanVariant::Vb, &y1, &y2, &z).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(
            build_d_input(GanVariant::Vm, &y1, &y2, &z).unwrap(),
            vec![1.0, 2.0, 5.0, 6.0]
        );
        for v in GanVariant::all() {
            let expected = match v {
                GanVariant::Vbm => 6,
                _ => 4,
            };
            assert_eq!(v.d_input_width(2), expected);
        }
    }

    #[test]
    fn conditioning_gets_no_generator_gradient() {
        let f = 3;
        let grad_vbm = Array2::from_shape_fn((2, 9), |(r, c)| (r * 9 + c) as f64);
        let routed = d_input_grad_to_pair(GanVariant::Vbm, &grad_vbm, f).unwrap();
        assert_eq!(routed.dim(), (2, 6));
        assert_eq!(routed[[0, 0]], 0.0);
        assert_eq!(routed[[0, 5]], 5.0); // mixture columns 6..9 dropped

        let grad_vm = Array2::from_shape_fn((1, 6), |(_, c)| c as f64 + 1.0);
        let routed = d_input_grad_to_pair(GanVariant::Vm, &grad_vm, f).unwrap();
        // Vocal half forwarded, background half zero (not present in input).
        assert_eq!(routed.row(0).to_vec(), vec![1.0, 2.0, 3.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn d_loss_closed_forms() {
        let l = d_loss(&[0.5_f64], &[0.5]).unwrap();
        assert!((l - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);

        let l = d_loss(&[0.9_f64], &[0.1]).unwrap();
        assert!((l + 2.0 * 0.9_f64.ln()).abs() < 1e-12);

        // Optimum approaches zero under the clamp.
        let l = d_loss(&[1.0_f64], &[0.0]).unwrap();
        assert!(l < 1e-6 && l >= 0.0);
    }

    #[test]
    fn g_loss_closed_forms() {
        let l = g_loss_logd(&[0.5_f64]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
        let l = g_loss_logd(&[0.25_f64, 0.25]).unwrap();
        assert!((l - 4.0_f64.ln()).abs() < 1e-12);
        let l = g_loss_logd(&[1.0_f64]).unwrap();
        assert!(l < 1e-6 && l >= 0.0);
    }

    #[test]
    fn losses_finite_and_nonnegative_on_clamped_range() {
        for &d in &[0.0_f64, 1e-9, 0.3, 0.999, 1.0] {
            let l = d_loss(&[d], &[d]).unwrap();
            assert!(l.is_finite() && l >= 0.0);
            let g = g_loss_logd(&[d]).unwrap();
            assert!(g.is_finite() && g >= 0.0);
        }
    }

    #[test]
    fn indistinguishable_outputs_minimize_at_half() {
        // Over constant outputs d, d_loss(d, d) has its minimum at 0.5.
        let at_half = d_loss(&[0.5_f64], &[0.5]).unwrap();
        for &d in &[0.1_f64, 0.3, 0.45, 0.55, 0.7, 0.9] {
            assert!(d_loss(&[d], &[d]).unwrap() > at_half);
        }
    }

    #[test]
    fn non_finite_probability_is_training_error() {
        assert!(matches!(
            d_loss(&[f64::NAN], &[0.5]),
            Err(Error::Training { .. })
        ));
        assert!(matches!(
            g_loss_logd(&[f64::INFINITY]),
            Err(Error::Training { .. })
        ));
    }

    #[test]
    fn bce_discriminator_gradcheck() {
        let net: DenseNet<f64> = init_network(
            &[6, 8, 1],
            &[Activation::Relu, Activation::Sigmoid],
            41,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inputs = Array2::from_shape_fn((5, 6), |_| rng.random_range(-1.0..1.0));
        let labels = vec![1.0, 0.0, 1.0, 0.0, 1.0];
        let err = grad_check(&net, &BceLoss { labels: &labels }, &inputs, 1e-5, 200, 3).unwrap();
        assert!(err < 1e-6, "max relative error {err}");
    }

    /// Finite differences are only meaningful away from relu kinks,
    /// saturated mask bins (a dead raw output pins its bin's mask and the
    /// partner gradient collapses to the epsilon floor), and coordinates
    /// whose true gradient sits below the f64 cancellation floor. Raised
    /// output biases keep every raw output alive; seeds are scanned until
    /// the whole composition is well conditioned.
    fn well_conditioned_pair(
        f: usize,
        variant: GanVariant,
        mixtures: &Array2<f64>,
    ) -> (DenseNet<f64>, DenseNet<f64>) {
        for seed in 0..500u64 {
            let base: DenseNet<f64> = init_network(
                &[f, 10, 2 * f],
                &[Activation::Relu, Activation::Relu],
                seed,
            )
            .unwrap();
            let mut layers = base.layers().to_vec();
            let last = layers.len() - 1;
            for (k, layer) in layers.iter_mut().enumerate() {
                layer.bias.fill(if k == last { 4.0 } else { 0.5 });
            }
            let g = DenseNet::new(layers, seed).unwrap();
            let d: DenseNet<f64> = init_network(
                &[variant.d_input_width(f), 8, 1],
                &[Activation::Relu, Activation::Sigmoid],
                seed + 1000,
            )
            .unwrap();
            let g_trace = forward(&g, &Batch::new(mixtures.clone(), None).unwrap()).unwrap();
            let raw = g_trace.output();
            let min_raw = raw.iter().fold(f64::INFINITY, |m, &v| m.min(v));
            let pred = crate::mask::mask_layer_forward_batch(raw, mixtures).unwrap();
            let d_in = build_d_input_batch(variant, &pred, mixtures).unwrap();
            let d_trace = forward(&d, &Batch::new(d_in, None).unwrap()).unwrap();
            if g_trace.min_abs_preactivation() < 1e-2
                || d_trace.min_abs_preactivation() < 1e-2
                || min_raw < 5e-2
            {
                continue;
            }
            let loss = AdversarialGLoss {
                discriminator: &d,
                variant,
                mixtures,
            };
            let grads = loss.grads(&g, mixtures).unwrap();
            let min_grad = (0..g.param_count())
                .map(|i| grads.param(i).abs())
                .fold(f64::INFINITY, f64::min);
            if min_grad > 1e-5 {
                return (g, d);
            }
        }
        panic!("no well-conditioned seed found");
    }

    #[test]
    fn adversarial_generator_gradcheck_all_variants() {
        let f = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mixtures = Array2::from_shape_fn((3, f), |_| rng.random_range(0.1..2.0));
        for variant in GanVariant::all() {
            let (g, d) = well_conditioned_pair(f, variant, &mixtures);
            let loss = AdversarialGLoss {
                discriminator: &d,
                variant,
                mixtures: &mixtures,
            };
            let err = grad_check(&g, &loss, &mixtures, 1e-5, 200, 5).unwrap();
            assert!(err < 1e-6, "variant {variant}: max relative error {err}");
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let pair = array![[1.0_f64, 2.0, 3.0, 4.0]];
        let z = array![[1.0_f64, 2.0, 3.0]];
        assert!(matches!(
            build_d_input_batch(GanVariant::Vb, &pair, &z),
            Err(Error::Shape(_))
        ));
    }
}
