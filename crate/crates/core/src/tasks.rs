//! Synthetic sequence tasks probing long-term dependencies, plus the
//! byte-level next-step task for user-supplied text.

use crate::error::{CoreError, Result};
use crate::numerics::Vector;
use crate::rng::Rng64;

/// Task family and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskKind {
    /// Two input channels; sum the two marked values, read out at the end.
    AddingProblem,
    /// Recall `k` leading symbols after a go marker near the end.
    CopyMemory { k: usize, alphabet_size: usize },
    /// Predict the next byte of `text` at every step.
    CharNextStep { text: Vec<u8> },
}

/// One training task: kind, sequence length, batch size, seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub sequence_length: usize,
    pub batch_size: usize,
    pub seed: u64,
}

/// Per-sequence or per-step targets.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// One scalar per sequence, read out at the final step.
    PerSequenceScalar(Vec<f64>),
    /// One class index per step per sequence, `[batch][step]`.
    PerStepClass(Vec<Vec<usize>>),
}

/// A batch of sequences with targets and a per-step loss mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// `[batch][step]` input vectors, all of dimension `input_dim`.
    pub inputs: Vec<Vec<Vector>>,
    pub targets: Targets,
    /// Steps included in the loss; length equals the sequence length.
    pub mask: Vec<bool>,
    pub input_dim: usize,
    /// Readout dimension the task expects.
    pub output_dim: usize,
}

impl TaskSpec {
    pub fn input_dim(&self) -> usize {
        match &self.kind {
            TaskKind::AddingProblem => 2,
            TaskKind::CopyMemory { alphabet_size, .. } => alphabet_size + 2,
            TaskKind::CharNextStep { .. } => 256,
        }
    }

    pub fn output_dim(&self) -> usize {
        match &self.kind {
            TaskKind::AddingProblem => 1,
            TaskKind::CopyMemory { alphabet_size, .. } => *alphabet_size,
            TaskKind::CharNextStep { .. } => 256,
        }
    }

    /// Generates a batch from an explicit seed (the training loop derives one
    /// seed per optimization step).
    pub fn generate(&self, seed: u64) -> Result<Batch> {
        match &self.kind {
            TaskKind::AddingProblem => {
                gen_adding_problem(self.sequence_length, self.batch_size, seed)
            }
            TaskKind::CopyMemory { k, alphabet_size } => gen_copy_memory(
                self.sequence_length,
                *k,
                *alphabet_size,
                self.batch_size,
                seed,
            ),
            TaskKind::CharNextStep { text } => {
                gen_char_next_step(text, self.sequence_length, self.batch_size, seed)
            }
        }
    }
}

/// Adding problem: channel 0 holds uniform values in [0,1], channel 1 is zero
/// except at two marker positions (one per half); the target is the sum of the
/// two marked values, scored at the final step only.
pub fn gen_adding_problem(t: usize, batch_size: usize, seed: u64) -> Result<Batch> {
    if t < 2 {
        return Err(CoreError::contract("adding problem requires T >= 2"));
    }
    if batch_size < 1 {
        return Err(CoreError::contract("batch_size must be >= 1"));
    }
    let mut rng = Rng64::new(seed);
    let half = t / 2;
    let mut inputs = Vec::with_capacity(batch_size);
    let mut targets = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let values: Vec<f64> = (0..t).map(|_| rng.next_f64()).collect();
        let first = rng.below(half as u64) as usize;
        let second = half + rng.below((t - half) as u64) as usize;
        let seq: Vec<Vector> = (0..t)
            .map(|step| {
                let marker = if step == first || step == second { 1.0 } else { 0.0 };
                Vector::new(vec![values[step], marker])
            })
            .collect();
        inputs.push(seq);
        targets.push(values[first] + values[second]);
    }
    let mut mask = vec![false; t];
    mask[t - 1] = true;
    Ok(Batch {
        inputs,
        targets: Targets::PerSequenceScalar(targets),
        mask,
        input_dim: 2,
        output_dim: 1,
    })
}

/// Copy-memory task: `k` one-hot symbols, then blanks, a go marker at step
/// T-k, and the symbols expected back over the final `k` steps. Channel
/// layout: symbols 0..A, blank A, go A+1.
pub fn gen_copy_memory(
    t: usize,
    k: usize,
    alphabet_size: usize,
    batch_size: usize,
    seed: u64,
) -> Result<Batch> {
    if k < 1 {
        return Err(CoreError::contract("copy memory requires K >= 1"));
    }
    if alphabet_size < 2 {
        return Err(CoreError::contract("copy memory requires alphabet_size >= 2"));
    }
    if t <= k + 20 {
        return Err(CoreError::contract("copy memory requires T > K + 20"));
    }
    if batch_size < 1 {
        return Err(CoreError::contract("batch_size must be >= 1"));
    }
    let m = alphabet_size + 2;
    let blank = alphabet_size;
    let go = alphabet_size + 1;
    let go_step = t - k - 1;
    let mut rng = Rng64::new(seed);
    let mut inputs = Vec::with_capacity(batch_size);
    let mut classes = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let symbols: Vec<usize> =
            (0..k).map(|_| rng.below(alphabet_size as u64) as usize).collect();
        let seq: Vec<Vector> = (0..t)
            .map(|step| {
                let channel = if step < k {
                    symbols[step]
                } else if step == go_step {
                    go
                } else {
                    blank
                };
                Vector::from_fn(m, |i| if i == channel { 1.0 } else { 0.0 })
            })
            .collect();
        inputs.push(seq);
        // Targets matter only on the masked final k steps.
        let target: Vec<usize> = (0..t)
            .map(|step| if step >= t - k { symbols[step - (t - k)] } else { 0 })
            .collect();
        classes.push(target);
    }
    let mask: Vec<bool> = (0..t).map(|step| step >= t - k).collect();
    Ok(Batch {
        inputs,
        targets: Targets::PerStepClass(classes),
        mask,
        input_dim: m,
        output_dim: alphabet_size,
    })
}

/// Byte-level next-step prediction over windows of a caller-supplied text.
pub fn gen_char_next_step(
    text: &[u8],
    t: usize,
    batch_size: usize,
    seed: u64,
) -> Result<Batch> {
    if text.len() < t + 1 {
        return Err(CoreError::contract(format!(
            "text length {} too short for T = {t}",
            text.len()
        )));
    }
    if batch_size < 1 {
        return Err(CoreError::contract("batch_size must be >= 1"));
    }
    let mut rng = Rng64::new(seed);
    let max_start = (text.len() - t - 1) as u64;
    let mut inputs = Vec::with_capacity(batch_size);
    let mut classes = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let start = if max_start == 0 { 0 } else { rng.below(max_start + 1) as usize };
        let seq: Vec<Vector> = (0..t)
            .map(|step| {
                let byte = text[start + step] as usize;
                Vector::from_fn(256, |i| if i == byte { 1.0 } else { 0.0 })
            })
            .collect();
        inputs.push(seq);
        classes.push((0..t).map(|step| text[start + step + 1] as usize).collect());
    }
    Ok(Batch {
        inputs,
        targets: Targets::PerStepClass(classes),
        mask: vec![true; t],
        input_dim: 256,
        output_dim: 256,
    })
}
