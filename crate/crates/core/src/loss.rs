//! Masked sequence losses with analytic gradients w.r.t. the predictions.

use crate::error::{CoreError, Result};
use crate::numerics::Vector;

fn check_shapes(pred: &[Vector], mask: &[bool]) -> Result<()> {
    if pred.len() != mask.len() {
        return Err(CoreError::contract(format!(
            "loss: {} predictions vs mask of length {}",
            pred.len(),
            mask.len()
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(CoreError::contract("loss: empty mask"));
    }
    Ok(())
}

/// Mean squared error over masked entries; returns the loss and the gradient
/// w.r.t. each per-step prediction (zero at masked-out steps).
pub fn mse_loss(pred: &[Vector], target: &[Vector], mask: &[bool]) -> Result<(f64, Vec<Vector>)> {
    check_shapes(pred, mask)?;
    if pred.len() != target.len() {
        return Err(CoreError::contract("mse_loss: prediction/target length mismatch"));
    }
    let count: usize = mask
        .iter()
        .zip(pred)
        .filter(|(m, _)| **m)
        .map(|(_, p)| p.len())
        .sum();
    let scale = 1.0 / count as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(pred.len());
    for ((p, t), &m) in pred.iter().zip(target).zip(mask) {
        if !m {
            grads.push(Vector::zeros(p.len()));
            continue;
        }
        if p.len() != t.len() {
            return Err(CoreError::contract("mse_loss: target dimension mismatch"));
        }
        for i in 0..p.len() {
            let d = p.get(i) - t.get(i);
            loss += scale * d * d;
        }
        grads.push(Vector::from_fn(p.len(), |i| 2.0 * scale * (p.get(i) - t.get(i))));
    }
    Ok((loss, grads))
}

/// Mean masked softmax cross-entropy, computed in the shifted (max-subtracted)
/// form. Gradient w.r.t. the logits is (softmax - one-hot) / masked-count.
pub fn softmax_xent_loss(
    logits: &[Vector],
    class_targets: &[usize],
    mask: &[bool],
) -> Result<(f64, Vec<Vector>)> {
    check_shapes(logits, mask)?;
    if logits.len() != class_targets.len() {
        return Err(CoreError::contract("softmax_xent_loss: logits/target length mismatch"));
    }
    let count = mask.iter().filter(|&&m| m).count();
    let scale = 1.0 / count as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(logits.len());
    for ((z, &target), &m) in logits.iter().zip(class_targets).zip(mask) {
        if !m {
            grads.push(Vector::zeros(z.len()));
            continue;
        }
        if target >= z.len() {
            return Err(CoreError::contract(format!(
                "softmax_xent_loss: class {target} out of range for {} logits",
                z.len()
            )));
        }
        let max = z.as_slice().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = z.as_slice().iter().map(|&v| (v - max).exp()).sum();
        let lse = max + sum_exp.ln();
        loss += scale * (lse - z.get(target));
        grads.push(Vector::from_fn(z.len(), |i| {
            let p = (z.get(i) - max).exp() / sum_exp;
            let y = if i == target { 1.0 } else { 0.0 };
            scale * (p - y)
        }));
    }
    Ok((loss, grads))
}

/// Fraction of masked steps whose argmax logit equals the target class.
pub fn masked_accuracy(logits: &[Vector], class_targets: &[usize], mask: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut total = 0usize;
    for ((z, &target), &m) in logits.iter().zip(class_targets).zip(mask) {
        if !m {
            continue;
        }
        total += 1;
        let mut best = 0;
        for i in 1..z.len() {
            if z.get(i) > z.get(best) {
                best = i;
            }
        }
        if best == target {
            hits += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}
