//! Soft time-frequency masking.
//!
//! The mask weighs each mixture bin by the relative magnitude of the first
//! raw network output: `m(f) = |a(f)| / (|a(f)| + |b(f)|)`, applied as
//! `s1 = m * z`, `s2 = (1 - m) * z`. Used as the final network layer, both
//! estimated sources always partition the mixture magnitude exactly.
//!
//! Silent bins are handled by an epsilon floor split evenly between the two
//! sources, so an all-zero pair of raw outputs yields a mask of 0.5 and the
//! partition `s1 + s2 = z` still holds bin-for-bin.

use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::neural::{backward, forward, Batch, DenseNet, Gradients, Real};

/// Floor added to the mask denominator (and half of it to each numerator).
pub const MASK_EPS: f64 = 1e-8;

/// Raw network magnitude estimates before masking.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPair<T> {
    pub y1_raw: Vec<T>,
    pub y2_raw: Vec<T>,
}

impl<T: Real> RawPair<T> {
    pub fn new(y1_raw: Vec<T>, y2_raw: Vec<T>) -> Result<Self> {
        if y1_raw.len() != y2_raw.len() {
            return Err(Error::Shape(format!(
                "raw outputs differ in length: {} vs {}",
                y1_raw.len(),
                y2_raw.len()
            )));
        }
        if y1_raw.iter().chain(&y2_raw).any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite raw output".into()));
        }
        Ok(RawPair { y1_raw, y2_raw })
    }

    pub fn len(&self) -> usize {
        self.y1_raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y1_raw.is_empty()
    }
}

/// Masked per-bin source estimates; `y1_hat + y2_hat` equals the mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedPair<T> {
    pub y1_hat: Vec<T>,
    pub y2_hat: Vec<T>,
    pub mask: Vec<T>,
}

fn check_same_len<T>(a: &[T], b: &[T], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "{what}: lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Per-bin soft mask from two raw magnitude estimates; values in `[0, 1]`.
pub fn soft_mask<T: Real>(y1_raw: &[T], y2_raw: &[T]) -> Result<Vec<T>> {
    check_same_len(y1_raw, y2_raw, "soft_mask")?;
    let eps = T::from_f64(MASK_EPS);
    let half_eps = T::from_f64(MASK_EPS / 2.0);
    Ok(y1_raw
        .iter()
        .zip(y2_raw)
        .map(|(&a, &b)| (a.abs() + half_eps) / (a.abs() + b.abs() + eps))
        .collect())
}

/// Split a mixture magnitude by a mask: `(m * z, (1 - m) * z)`.
pub fn apply_mask<T: Real>(mask: &[T], z: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    check_same_len(mask, z, "apply_mask")?;
    let s1: Vec<T> = mask.iter().zip(z).map(|(&m, &zv)| m * zv).collect();
    let s2: Vec<T> = mask
        .iter()
        .zip(z)
        .map(|(&m, &zv)| (T::one() - m) * zv)
        .collect();
    Ok((s1, s2))
}

/// The masking function as an output layer: composition of [`soft_mask`]
/// and [`apply_mask`] on the raw pair.
pub fn mask_layer_forward<T: Real>(raw: &RawPair<T>, z: &[T]) -> Result<SeparatedPair<T>> {
    check_same_len(&raw.y1_raw, z, "mask_layer_forward")?;
    let mask = soft_mask(&raw.y1_raw, &raw.y2_raw)?;
    let (y1_hat, y2_hat) = apply_mask(&mask, z)?;
    Ok(SeparatedPair {
        y1_hat,
        y2_hat,
        mask,
    })
}

fn sgn<T: Real>(v: T) -> T {
    if v < T::zero() {
        -T::one()
    } else {
        T::one()
    }
}

/// Exact quotient-rule gradients of the masking layer.
///
/// With `u = |a| + eps/2`, `v = |b| + eps/2`, `S = u + v`:
/// `d y1_hat / d a = sgn(a) * z * v / S^2` and the symmetric terms; both
/// upstream gradients are combined into gradients on the raw outputs.
pub fn mask_layer_backward<T: Real>(
    raw: &RawPair<T>,
    z: &[T],
    upstream_y1: &[T],
    upstream_y2: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    check_same_len(&raw.y1_raw, z, "mask_layer_backward")?;
    check_same_len(upstream_y1, z, "mask_layer_backward upstream")?;
    check_same_len(upstream_y2, z, "mask_layer_backward upstream")?;
    let half_eps = T::from_f64(MASK_EPS / 2.0);
    let n = z.len();
    let mut da = Vec::with_capacity(n);
    let mut db = Vec::with_capacity(n);
    for i in 0..n {
        let a = raw.y1_raw[i];
        let b = raw.y2_raw[i];
        let u = a.abs() + half_eps;
        let v = b.abs() + half_eps;
        let s = u + v;
        let scale = z[i] / (s * s);
        let diff = upstream_y1[i] - upstream_y2[i];
        da.push(sgn(a) * scale * v * diff);
        db.push(sgn(b) * scale * u * (-diff));
    }
    Ok((da, db))
}

/// Joint squared-error objective on both masked estimates (single frame):
/// `||y1_hat - y1||^2 + ||y2_hat - y2||^2` summed over bins.
pub fn mse_joint<T: Real>(pred: &SeparatedPair<T>, target_y1: &[T], target_y2: &[T]) -> Result<T> {
    check_same_len(&pred.y1_hat, target_y1, "mse_joint")?;
    check_same_len(&pred.y2_hat, target_y2, "mse_joint")?;
    let mut acc = T::zero();
    for (p, t) in pred.y1_hat.iter().zip(target_y1) {
        let d = *p - *t;
        acc = acc + d * d;
    }
    for (p, t) in pred.y2_hat.iter().zip(target_y2) {
        let d = *p - *t;
        acc = acc + d * d;
    }
    Ok(acc)
}

/// Oracle binary mask: 1 where the vocal magnitude dominates (ties included),
/// 0 elsewhere.
pub fn ideal_binary_mask<T: Real>(vocal_mag: &[T], music_mag: &[T]) -> Result<Vec<T>> {
    check_same_len(vocal_mag, music_mag, "ideal_binary_mask")?;
    Ok(vocal_mag
        .iter()
        .zip(music_mag)
        .map(|(&v, &m)| if v >= m { T::one() } else { T::zero() })
        .collect())
}

// --- Batched forms used by the training loops. -------------------------------
//
// The raw network output holds both estimates concatenated per row:
// columns `0..F` are y1_raw, columns `F..2F` are y2_raw.

fn check_batch_dims<T>(raw: &Array2<T>, z: &Array2<T>) -> Result<usize> {
    let f = z.ncols();
    if raw.ncols() != 2 * f || raw.nrows() != z.nrows() {
        return Err(Error::Shape(format!(
            "raw batch {:?} does not pair with mixture batch {:?}",
            raw.dim(),
            z.dim()
        )));
    }
    Ok(f)
}

/// Batched masking layer on concatenated raw outputs (`B x 2F` against
/// `B x F` mixtures), returning concatenated masked estimates.
pub fn mask_layer_forward_batch<T: Real>(raw: &Array2<T>, z: &Array2<T>) -> Result<Array2<T>> {
    let f = check_batch_dims(raw, z)?;
    let eps = T::from_f64(MASK_EPS);
    let half_eps = T::from_f64(MASK_EPS / 2.0);
    let mut out = Array2::zeros(raw.dim());
    for (r, (raw_row, z_row)) in raw.rows().into_iter().zip(z.rows()).enumerate() {
        for i in 0..f {
            let a = raw_row[i].abs();
            let b = raw_row[f + i].abs();
            let m = (a + half_eps) / (a + b + eps);
            out[[r, i]] = m * z_row[i];
            out[[r, f + i]] = (T::one() - m) * z_row[i];
        }
    }
    Ok(out)
}

/// Batched gradients through the masking layer: maps upstream gradients on
/// the concatenated estimates back to the concatenated raw outputs.
pub fn mask_layer_backward_batch<T: Real>(
    raw: &Array2<T>,
    z: &Array2<T>,
    upstream: &Array2<T>,
) -> Result<Array2<T>> {
    let f = check_batch_dims(raw, z)?;
    if upstream.dim() != raw.dim() {
        return Err(Error::Shape(format!(
            "upstream {:?} does not match raw {:?}",
            upstream.dim(),
            raw.dim()
        )));
    }
    let half_eps = T::from_f64(MASK_EPS / 2.0);
    let mut out = Array2::zeros(raw.dim());
    for r in 0..raw.nrows() {
        for i in 0..f {
            let a = raw[[r, i]];
            let b = raw[[r, f + i]];
            let u = a.abs() + half_eps;
            let v = b.abs() + half_eps;
            let s = u + v;
            let scale = z[[r, i]] / (s * s);
            let diff = upstream[[r, i]] - upstream[[r, f + i]];
            out[[r, i]] = sgn(a) * scale * v * diff;
            out[[r, f + i]] = -sgn(b) * scale * u * diff;
        }
    }
    Ok(out)
}

/// Batched joint MSE: per row the bin-sum over both sources, then the mean
/// over rows. Returns the loss and its gradient on the masked estimates.
pub fn mse_joint_batch<T: Real>(
    pred: &Array2<T>,
    targets: &Array2<T>,
) -> Result<(T, Array2<T>)> {
    if pred.dim() != targets.dim() {
        return Err(Error::Shape(format!(
            "predictions {:?} vs targets {:?}",
            pred.dim(),
            targets.dim()
        )));
    }
    let b = T::from_f64(pred.nrows() as f64);
    let diff = pred - targets;
    let loss = diff.iter().map(|&d| d * d).fold(T::zero(), |a, v| a + v) / b;
    let two = T::from_f64(2.0);
    let grad = diff.mapv(|d| two * d / b);
    Ok((loss, grad))
}

/// Joint masked MSE as a [`CompositeLoss`](crate::neural::CompositeLoss):
/// generator forward, masking layer, squared error against clean magnitudes.
pub struct JointMaskLoss<'a> {
    pub mixtures: &'a Array2<f64>,
    /// Concatenated clean magnitudes `(y1 || y2)`, `B x 2F`.
    pub targets: &'a Array2<f64>,
}

impl crate::neural::CompositeLoss for JointMaskLoss<'_> {
    fn loss(&self, net: &DenseNet<f64>, inputs: &Array2<f64>) -> Result<f64> {
        let trace = forward(net, &Batch::new(inputs.clone(), None)?)?;
        let pred = mask_layer_forward_batch(trace.output(), self.mixtures)?;
        let (loss, _) = mse_joint_batch(&pred, self.targets)?;
        Ok(loss)
    }

    fn grads(&self, net: &DenseNet<f64>, inputs: &Array2<f64>) -> Result<Gradients<f64>> {
        let trace = forward(net, &Batch::new(inputs.clone(), None)?)?;
        let raw = trace.output();
        let pred = mask_layer_forward_batch(raw, self.mixtures)?;
        let (_, dpred) = mse_joint_batch(&pred, self.targets)?;
        let draw = mask_layer_backward_batch(raw, self.mixtures, &dpred)?;
        let (grads, _) = backward(net, &trace, &draw)?;
        Ok(grads)
    }
}

/// Convenience views into a concatenated `B x 2F` estimate batch.
pub fn split_pair_columns<T: Real>(
    pair: &Array2<T>,
) -> (ndarray::ArrayView2<'_, T>, ndarray::ArrayView2<'_, T>) {
    let f = pair.ncols() / 2;
    (
        pair.slice(s![.., 0..f]),
        pair.slice(s![.., f..2 * f]),
    )
}
