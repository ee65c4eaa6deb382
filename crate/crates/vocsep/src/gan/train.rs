//! Two-phase training: supervised masked-MSE pretraining of the generator,
//! then alternating adversarial updates. Everything is driven by one seed;
//! two runs with the same data and schedule produce bit-identical networks.

use std::time::Instant;

use ndarray::{concatenate, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gan::{
    build_d_input_batch, d_input_grad_to_pair, d_loss_with_grads, g_loss_logd_with_grad,
    GanVariant,
};
use crate::mask::{mask_layer_backward_batch, mask_layer_forward_batch, mse_joint_batch};
use crate::neural::{
    adam_step, backward, forward, AdamParams, AdamState, Batch, DenseNet,
};

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter {
            name,
            detail: format!("must be positive and finite, got {v}"),
        })
    }
}

/// Epoch counts, batch size, update ratio, learning rates, and the seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSchedule {
    pub pretrain_epochs: usize,
    pub adversarial_epochs: usize,
    pub batch_size: usize,
    /// Discriminator updates per generator update.
    pub d_steps_per_g_step: usize,
    pub pretrain_lr: f64,
    pub adversarial_g_lr: f64,
    pub adversarial_d_lr: f64,
    /// First-moment decay during the adversarial phase.
    pub adversarial_beta1: f64,
    pub seed: u64,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        TrainingSchedule {
            pretrain_epochs: 50,
            adversarial_epochs: 20,
            batch_size: 64,
            d_steps_per_g_step: 1,
            pretrain_lr: 1e-4,
            adversarial_g_lr: 1e-5,
            adversarial_d_lr: 1e-5,
            adversarial_beta1: 0.5,
            seed: 42,
        }
    }
}

impl TrainingSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Parameter {
                name: "batch_size",
                detail: "must be at least 1".into(),
            });
        }
        if self.d_steps_per_g_step == 0 {
            return Err(Error::Parameter {
                name: "d_steps_per_g_step",
                detail: "must be at least 1".into(),
            });
        }
        positive("pretrain_lr", self.pretrain_lr)?;
        positive("adversarial_g_lr", self.adversarial_g_lr)?;
        positive("adversarial_d_lr", self.adversarial_d_lr)?;
        if !(0.0..1.0).contains(&self.adversarial_beta1) {
            return Err(Error::Parameter {
                name: "adversarial_beta1",
                detail: format!("must be in [0, 1), got {}", self.adversarial_beta1),
            });
        }
        Ok(())
    }
}

/// Aligned training frames: mixture magnitudes and the concatenated clean
/// magnitudes `(y1 || y2)`, one frame per row.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    mixtures: Array2<f32>,
    targets: Array2<f32>,
}

impl TrainingSet {
    pub fn new(z: Array2<f32>, y1: Array2<f32>, y2: Array2<f32>) -> Result<Self> {
        if z.dim() != y1.dim() || z.dim() != y2.dim() {
            return Err(Error::Shape(format!(
                "frame matrices differ: z {:?}, y1 {:?}, y2 {:?}",
                z.dim(),
                y1.dim(),
                y2.dim()
            )));
        }
        if z.nrows() == 0 {
            return Err(Error::Data("training set has no frames".into()));
        }
        for (name, m) in [("z", &z), ("y1", &y1), ("y2", &y2)] {
            if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Input(format!(
                    "{name} contains a negative or non-finite magnitude"
                )));
            }
        }
        let targets = concatenate(Axis(1), &[y1.view(), y2.view()]).expect("same row count");
        Ok(TrainingSet {
            mixtures: z,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.mixtures.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_bins(&self) -> usize {
        self.mixtures.ncols()
    }

    pub fn mixtures(&self) -> &Array2<f32> {
        &self.mixtures
    }

    /// Concatenated clean pair `(y1 || y2)`, `N x 2F`.
    pub fn targets(&self) -> &Array2<f32> {
        &self.targets
    }

    fn rows(&self, idx: &[usize]) -> (Array2<f32>, Array2<f32>) {
        (
            self.mixtures.select(Axis(0), idx),
            self.targets.select(Axis(0), idx),
        )
    }
}

fn check_generator_dims(g: &DenseNet<f32>, bins: usize) -> Result<()> {
    if g.input_dim() != bins || g.output_dim() != 2 * bins {
        return Err(Error::Shape(format!(
            "generator maps {} -> {}, data needs {} -> {}",
            g.input_dim(),
            g.output_dim(),
            bins,
            2 * bins
        )));
    }
    Ok(())
}

/// Mean joint masked MSE of a generator over a whole frame set.
pub fn evaluate_joint_loss(g: &DenseNet<f32>, data: &TrainingSet) -> Result<f64> {
    check_generator_dims(g, data.num_bins())?;
    let trace = forward(g, &Batch::new(data.mixtures.clone(), None)?)?;
    let pred = mask_layer_forward_batch(trace.output(), &data.mixtures)?;
    let (loss, _) = mse_joint_batch(&pred, &data.targets)?;
    Ok(loss as f64)
}

/// Supervised pretraining of the generator: minimize the joint masked MSE
/// with Adam. Returns the per-epoch mean loss; at least one epoch must end
/// below the untrained starting loss.
pub fn pretrain(
    g: &mut DenseNet<f32>,
    data: &TrainingSet,
    schedule: &TrainingSchedule,
) -> Result<Vec<f64>> {
    schedule.validate()?;
    check_generator_dims(g, data.num_bins())?;
    let untrained_loss = if schedule.pretrain_epochs > 0 {
        evaluate_joint_loss(g, data)?
    } else {
        0.0
    };

    let mut adam = AdamState::new(g, AdamParams::with_lr(schedule.pretrain_lr));
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut curve = Vec::with_capacity(schedule.pretrain_epochs);

    for epoch in 0..schedule.pretrain_epochs {
        order.shuffle(&mut rng);
        let mut acc = 0.0f64;
        for chunk in order.chunks(schedule.batch_size) {
            let (z, targets) = data.rows(chunk);
            let trace = forward(g, &Batch::new(z.clone(), None)?)?;
            let pred = mask_layer_forward_batch(trace.output(), &z)?;
            let (loss, dpred) = mse_joint_batch(&pred, &targets)?;
            let draw = mask_layer_backward_batch(trace.output(), &z, &dpred)?;
            let (grads, _) = backward(g, &trace, &draw)?;
            adam_step(g, &grads, &mut adam).map_err(|e| at_epoch(e, epoch))?;
            acc += loss as f64 * chunk.len() as f64;
        }
        let mean = acc / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Training {
                context: format!("pretraining epoch {epoch}"),
                detail: "loss diverged".into(),
            });
        }
        curve.push(mean);
    }
    if let Some(&last) = curve.last() {
        if last >= untrained_loss {
            return Err(Error::Training {
                context: "pretraining".into(),
                detail: format!(
                    "loss did not improve on the untrained network: {untrained_loss} -> {last}"
                ),
            });
        }
    }
    Ok(curve)
}

fn at_epoch(e: Error, epoch: usize) -> Error {
    match e {
        Error::Training { context, detail } => Error::Training {
            context: format!("epoch {epoch}, {context}"),
            detail,
        },
        other => other,
    }
}

/// Per-epoch adversarial metrics.
#[derive(Debug, Clone, Serialize)]
pub struct EpochDiagnostics {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub d_accuracy: f64,
    pub wallclock_ms: u64,
}

/// Knobs beyond the schedule for the adversarial phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AdversarialOptions {
    /// Blend the supervised masked-MSE objective back into the generator
    /// update with this weight. The adversarial objective alone is the
    /// default (weight 0).
    pub mse_blend: f64,
}

impl Default for AdversarialOptions {
    fn default() -> Self {
        AdversarialOptions { mse_blend: 0.0 }
    }
}

/// Alternating adversarial updates: `d_steps_per_g_step` discriminator
/// batches per generator batch. Real inputs pair clean spectra with the
/// conditioning; fakes are generator outputs through the masking layer,
/// detached for discriminator updates. Diagnostics report the held-out
/// discriminator accuracy on a balanced real/fake set after each epoch.
pub fn adversarial_train(
    g: &mut DenseNet<f32>,
    d: &mut DenseNet<f32>,
    variant: GanVariant,
    data: &TrainingSet,
    holdout: &TrainingSet,
    schedule: &TrainingSchedule,
    options: &AdversarialOptions,
) -> Result<Vec<EpochDiagnostics>> {
    schedule.validate()?;
    let bins = data.num_bins();
    check_generator_dims(g, bins)?;
    let want = variant.d_input_width(bins);
    if d.input_dim() != want || d.output_dim() != 1 {
        return Err(Error::Shape(format!(
            "discriminator maps {} -> {}, variant {variant} needs {} -> 1",
            d.input_dim(),
            d.output_dim(),
            want
        )));
    }
    if holdout.num_bins() != bins {
        return Err(Error::Shape("holdout bin count differs from training".into()));
    }

    let mut adam_g = AdamState::new(
        g,
        AdamParams::with_lr_beta1(schedule.adversarial_g_lr, schedule.adversarial_beta1),
    );
    let mut adam_d = AdamState::new(
        d,
        AdamParams::with_lr_beta1(schedule.adversarial_d_lr, schedule.adversarial_beta1),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut diagnostics = Vec::with_capacity(schedule.adversarial_epochs);

    for epoch in 0..schedule.adversarial_epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut d_loss_acc = 0.0f64;
        let mut d_batches = 0usize;
        let mut g_loss_acc = 0.0f64;
        let mut g_batches = 0usize;

        for (bi, chunk) in order.chunks(schedule.batch_size).enumerate() {
            let (z, real_pair) = data.rows(chunk);

            // Discriminator step. Fakes are detached: no gradient reaches G.
            let fake_pair = {
                let g_trace = forward(g, &Batch::new(z.clone(), None)?)?;
                mask_layer_forward_batch(g_trace.output(), &z)?
            };
            let d_in_real = build_d_input_batch(variant, &real_pair, &z)?;
            let d_in_fake = build_d_input_batch(variant, &fake_pair, &z)?;
            let trace_real = forward(d, &Batch::new(d_in_real, None)?)?;
            let trace_fake = forward(d, &Batch::new(d_in_fake, None)?)?;
            let probs_real: Vec<f32> = trace_real.output().column(0).to_vec();
            let probs_fake: Vec<f32> = trace_fake.output().column(0).to_vec();
            let (dl, grad_real, grad_fake) = d_loss_with_grads(&probs_real, &probs_fake)
                .map_err(|e| at_epoch(e, epoch))?;
            let col = |v: Vec<f32>| Array2::from_shape_vec((chunk.len(), 1), v).expect("column");
            let (mut d_grads, _) = backward(d, &trace_real, &col(grad_real))?;
            let (fake_grads, _) = backward(d, &trace_fake, &col(grad_fake))?;
            d_grads.add_assign(&fake_grads);
            adam_step(d, &d_grads, &mut adam_d).map_err(|e| at_epoch(e, epoch))?;
            d_loss_acc += dl as f64;
            d_batches += 1;

            // Generator step after every d_steps_per_g_step discriminator steps.
            if (bi + 1) % schedule.d_steps_per_g_step == 0 {
                let g_trace = forward(g, &Batch::new(z.clone(), None)?)?;
                let pred = mask_layer_forward_batch(g_trace.output(), &z)?;
                let d_in = build_d_input_batch(variant, &pred, &z)?;
                let d_trace = forward(d, &Batch::new(d_in, None)?)?;
                let probs: Vec<f32> = d_trace.output().column(0).to_vec();
                let (gl, grad_probs) =
                    g_loss_logd_with_grad(&probs).map_err(|e| at_epoch(e, epoch))?;
                let (_, d_input_grad) = backward(d, &d_trace, &col(grad_probs))?;
                let mut pair_grad = d_input_grad_to_pair(variant, &d_input_grad, bins)?;
                if options.mse_blend > 0.0 {
                    let (_, dpred) = mse_joint_batch(&pred, &real_pair)?;
                    pair_grad = pair_grad + dpred * options.mse_blend as f32;
                }
                let raw_grad = mask_layer_backward_batch(g_trace.output(), &z, &pair_grad)?;
                let (g_grads, _) = backward(g, &g_trace, &raw_grad)?;
                adam_step(g, &g_grads, &mut adam_g).map_err(|e| at_epoch(e, epoch))?;
                g_loss_acc += gl as f64;
                g_batches += 1;
            }
        }

        let d_accuracy = discriminator_accuracy(d, variant, g, holdout)?;
        diagnostics.push(EpochDiagnostics {
            epoch,
            d_loss: d_loss_acc / d_batches.max(1) as f64,
            g_loss: g_loss_acc / g_batches.max(1) as f64,
            d_accuracy,
            wallclock_ms: started.elapsed().as_millis() as u64,
        });
    }
    Ok(diagnostics)
}

/// Balanced real/fake classification accuracy of the discriminator on a
/// held-out set (threshold 0.5).
pub fn discriminator_accuracy(
    d: &DenseNet<f32>,
    variant: GanVariant,
    g: &DenseNet<f32>,
    set: &TrainingSet,
) -> Result<f64> {
    let z = set.mixtures();
    let fake_pair = {
        let trace = forward(g, &Batch::new(z.clone(), None)?)?;
        mask_layer_forward_batch(trace.output(), z)?
    };
    let d_in_real = build_d_input_batch(variant, set.targets(), z)?;
    let d_in_fake = build_d_input_batch(variant, &fake_pair, z)?;
    let real = forward(d, &Batch::new(d_in_real, None)?)?;
    let fake = forward(d, &Batch::new(d_in_fake, None)?)?;
    let correct_real = real.output().column(0).iter().filter(|&&p| p > 0.5).count();
    let correct_fake = fake.output().column(0).iter().filter(|&&p| p < 0.5).count();
    Ok((correct_real + correct_fake) as f64 / (2 * set.len()) as f64)
}

/// Write adversarial diagnostics as CSV.
pub fn write_diagnostics_csv(path: impl AsRef<std::path::Path>, rows: &[EpochDiagnostics]) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let mut out = String::from("epoch,d_loss,g_loss,d_accuracy,wallclock_ms\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch, r.d_loss, r.g_loss, r.d_accuracy, r.wallclock_ms
        ));
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{init_network, Activation};
    use rand::Rng;

    /// Tiny synthetic frame set: two disjoint "bands" of 4 bins each, with
    /// targets at mixture gain so `z = y1 + y2` bin-for-bin. The vocal
    /// occupies the upper half, the music the lower half.
    fn band_set(n: usize, seed: u64) -> TrainingSet {
        let f = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = Array2::zeros((n, f));
        let mut y1 = Array2::zeros((n, f));
        let mut y2 = Array2::zeros((n, f));
        for r in 0..n {
            for b in 0..4 {
                let m: f32 = rng.random_range(0.1..0.5);
                y2[[r, b]] = m;
                z[[r, b]] = m;
            }
            for b in 4..8 {
                let v: f32 = rng.random_range(0.1..0.5);
                y1[[r, b]] = v;
                z[[r, b]] = v;
            }
        }
        TrainingSet::new(z, y1, y2).unwrap()
    }

    fn small_schedule() -> TrainingSchedule {
        TrainingSchedule {
            pretrain_epochs: 30,
            adversarial_epochs: 3,
            batch_size: 16,
            d_steps_per_g_step: 1,
            pretrain_lr: 3e-3,
            adversarial_g_lr: 1e-5,
            adversarial_d_lr: 1e-4,
            adversarial_beta1: 0.5,
            seed: 11,
        }
    }

    fn small_generator(seed: u64) -> DenseNet<f32> {
        init_network(
            &[8, 24, 16],
            &[Activation::Relu, Activation::Relu],
            seed,
        )
        .unwrap()
    }

    #[test]
    fn pretraining_reduces_loss_tenfold() {
        // Noise-free disjoint-band frames: 30 epochs drive the joint MSE
        // below a tenth of the untrained starting loss.
        let data = band_set(1024, 3);
        let mut g: DenseNet<f32> = init_network(
            &[8, 64, 16],
            &[Activation::Relu, Activation::Relu],
            5,
        )
        .unwrap();
        let initial = evaluate_joint_loss(&g, &data).unwrap();
        let mut schedule = small_schedule();
        schedule.batch_size = 8;
        schedule.pretrain_lr = 5e-4;
        let curve = pretrain(&mut g, &data, &schedule).unwrap();
        assert_eq!(curve.len(), 30);
        let last = *curve.last().unwrap();
        assert!(
            last < 0.1 * initial,
            "loss only dropped {initial:.4} -> {last:.4}"
        );
    }

    #[test]
    fn zero_epochs_is_identity() {
        let data = band_set(32, 4);
        let mut g = small_generator(6);
        let before = g.clone();
        let mut schedule = small_schedule();
        schedule.pretrain_epochs = 0;
        let curve = pretrain(&mut g, &data, &schedule).unwrap();
        assert!(curve.is_empty());
        assert_eq!(g, before);
    }

    #[test]
    fn pretraining_is_deterministic() {
        let data = band_set(64, 9);
        let schedule = small_schedule();
        let run = || {
            let mut g = small_generator(7);
            let curve = pretrain(&mut g, &data, &schedule).unwrap();
            (g, curve)
        };
        let (g1, c1) = run();
        let (g2, c2) = run();
        assert_eq!(c1, c2);
        for (a, b) in g1.layers().iter().zip(g2.layers()) {
            assert!(a
                .weights
                .iter()
                .zip(b.weights.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn adversarial_round_runs_and_is_deterministic() {
        let data = band_set(96, 13);
        let holdout = band_set(32, 14);
        let schedule = small_schedule();
        let run = |variant: GanVariant| {
            let mut g = small_generator(8);
            pretrain(&mut g, &data, &schedule).unwrap();
            let mut d = init_network(
                &[variant.d_input_width(8), 16, 1],
                &[Activation::Relu, Activation::Sigmoid],
                21,
            )
            .unwrap();
            let diags = adversarial_train(
                &mut g,
                &mut d,
                variant,
                &data,
                &holdout,
                &schedule,
                &AdversarialOptions::default(),
            )
            .unwrap();
            (g, d, diags)
        };
        for variant in GanVariant::all() {
            let (g1, d1, diag1) = run(variant);
            let (g2, d2, diag2) = run(variant);
            assert_eq!(diag1.len(), 3);
            for (a, b) in diag1.iter().zip(&diag2) {
                assert_eq!(a.d_loss, b.d_loss);
                assert_eq!(a.g_loss, b.g_loss);
                assert_eq!(a.d_accuracy, b.d_accuracy);
            }
            for (la, lb) in g1.layers().iter().zip(g2.layers()) {
                assert!(la
                    .weights
                    .iter()
                    .zip(lb.weights.iter())
                    .all(|(x, y)| x.to_bits() == y.to_bits()));
            }
            for (la, lb) in d1.layers().iter().zip(d2.layers()) {
                assert!(la
                    .weights
                    .iter()
                    .zip(lb.weights.iter())
                    .all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }

    #[test]
    fn variant_width_mismatch_is_shape_error() {
        let data = band_set(16, 1);
        let holdout = band_set(8, 2);
        let mut g = small_generator(3);
        // Width for VB (16) used with VBM (needs 24).
        let mut d = init_network(&[16, 8, 1], &[Activation::Relu, Activation::Sigmoid], 4).unwrap();
        let r = adversarial_train(
            &mut g,
            &mut d,
            GanVariant::Vbm,
            &data,
            &holdout,
            &small_schedule(),
            &AdversarialOptions::default(),
        );
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn discriminator_learns_well_separated_distributions() {
        // Frozen generator, trainable discriminator, real and fake pairs far
        // apart: accuracy on a held-out set should exceed 0.95 well inside
        // 20 epochs. The generator stays untrained (roughly a 0.5 mask), so
        // real pairs (disjoint bands) and fakes (half the mixture in every
        // bin) are easily separable.
        let data = band_set(128, 21);
        let holdout = band_set(64, 22);
        let g = small_generator(23);
        let variant = GanVariant::Vbm;
        let mut d = init_network(
            &[variant.d_input_width(8), 16, 1],
            &[Activation::Relu, Activation::Sigmoid],
            24,
        )
        .unwrap();
        let mut adam_d = AdamState::new(&d, AdamParams::with_lr_beta1(1e-3, 0.5));
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let mut order: Vec<usize> = (0..data.len()).collect();
        for _epoch in 0..20 {
            order.shuffle(&mut rng);
            for chunk in order.chunks(16) {
                let (z, real_pair) = data.rows(chunk);
                let fake_pair = {
                    let t = forward(&g, &Batch::new(z.clone(), None).unwrap()).unwrap();
                    mask_layer_forward_batch(t.output(), &z).unwrap()
                };
                let tr = forward(
                    &d,
                    &Batch::new(build_d_input_batch(variant, &real_pair, &z).unwrap(), None)
                        .unwrap(),
                )
                .unwrap();
                let tf = forward(
                    &d,
                    &Batch::new(build_d_input_batch(variant, &fake_pair, &z).unwrap(), None)
                        .unwrap(),
                )
                .unwrap();
                let pr: Vec<f32> = tr.output().column(0).to_vec();
                let pf: Vec<f32> = tf.output().column(0).to_vec();
                let (_, gr, gf) = d_loss_with_grads(&pr, &pf).unwrap();
                let col =
                    |v: Vec<f32>| Array2::from_shape_vec((chunk.len(), 1), v).expect("column");
                let (mut grads, _) = backward(&d, &tr, &col(gr)).unwrap();
                let (fg, _) = backward(&d, &tf, &col(gf)).unwrap();
                grads.add_assign(&fg);
                adam_step(&mut d, &grads, &mut adam_d).unwrap();
            }
        }
        let acc = discriminator_accuracy(&d, variant, &g, &holdout).unwrap();
        assert!(acc >= 0.95, "held-out accuracy {acc}");
    }

    #[test]
    fn single_d_step_decreases_loss_for_small_lr() {
        // 64-bit toy instance: one batch, one Adam step on the
        // discriminator, loss strictly decreases for small learning rates.
        let f = 4;
        let variant = GanVariant::Vb;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let real = Array2::from_shape_fn((8, 2 * f), |_| rng.random_range(0.4..1.0_f64));
        let fake = Array2::from_shape_fn((8, 2 * f), |_| rng.random_range(0.0..0.6_f64));
        let z = Array2::from_shape_fn((8, f), |_| rng.random_range(0.0..1.0_f64));
        let d0: DenseNet<f64> = init_network(
            &[2 * f, 12, 1],
            &[Activation::Relu, Activation::Sigmoid],
            33,
        )
        .unwrap();
        let eval = |d: &DenseNet<f64>| -> f64 {
            let ir = build_d_input_batch(variant, &real, &z).unwrap();
            let iff = build_d_input_batch(variant, &fake, &z).unwrap();
            let tr = forward(d, &Batch::new(ir, None).unwrap()).unwrap();
            let tf = forward(d, &Batch::new(iff, None).unwrap()).unwrap();
            let pr: Vec<f64> = tr.output().column(0).to_vec();
            let pf: Vec<f64> = tf.output().column(0).to_vec();
            crate::gan::d_loss(&pr, &pf).unwrap()
        };
        let before = eval(&d0);
        for lr in [1e-3, 1e-4, 1e-5] {
            let mut d = d0.clone();
            let ir = build_d_input_batch(variant, &real, &z).unwrap();
            let iff = build_d_input_batch(variant, &fake, &z).unwrap();
            let tr = forward(&d, &Batch::new(ir, None).unwrap()).unwrap();
            let tf = forward(&d, &Batch::new(iff, None).unwrap()).unwrap();
            let pr: Vec<f64> = tr.output().column(0).to_vec();
            let pf: Vec<f64> = tf.output().column(0).to_vec();
            let (_, gr, gf) = d_loss_with_grads(&pr, &pf).unwrap();
            let col = |v: Vec<f64>| Array2::from_shape_vec((8, 1), v).expect("column");
            let (mut grads, _) = backward(&d, &tr, &col(gr)).unwrap();
            let (fg, _) = backward(&d, &tf, &col(gf)).unwrap();
            grads.add_assign(&fg);
            let mut adam = AdamState::new(&d, AdamParams::with_lr_beta1(lr, 0.5));
            adam_step(&mut d, &grads, &mut adam).unwrap();
            let after = eval(&d);
            assert!(
                after < before,
                "lr {lr}: loss went {before} -> {after}"
            );
        }
    }

    #[test]
    fn diagnostics_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("diag.csv");
        write_diagnostics_csv(
            &path,
            &[EpochDiagnostics {
                epoch: 0,
                d_loss: 1.25,
                g_loss: 0.5,
                d_accuracy: 0.75,
                wallclock_ms: 12,
            }],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("epoch,d_loss,g_loss,d_accuracy,wallclock_ms\n"));
        assert!(text.contains("0,1.25,0.5,0.75,12"));
    }
}
