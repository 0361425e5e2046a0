//! Training loop over the synthetic tasks: a configured cell plus a shared
//! trainable linear readout, optimized with SGD or Adam, producing
//! reproducible learning curves.
//!
//! Each epoch replays a fixed deterministic set of batches (batch seed derived
//! from the task seed and the step index within the epoch); validation batches
//! come from a disjoint seed stream.

use std::time::Instant;

use crate::dynamics::{
    backward_sequence, forward_sequence, init_params, CellState, InitScheme, Parameters,
};
use crate::error::{CoreError, Result};
use crate::loss::{masked_accuracy, mse_loss, softmax_xent_loss};
use crate::numerics::{add_outer, matvec, matvec_t, Matrix, Vector};
use crate::optim::OptimizerState;
use crate::rng::{derive_seed, stream, Rng64};
use crate::tasks::{Batch, Targets, TaskSpec};
use crate::taxonomy::{param_count, CellConfig};

/// Linear map from the hidden activation to task outputs, with bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    /// out x n weight.
    pub w: Matrix,
    pub b: Vector,
}

impl Readout {
    pub fn init(n: usize, outputs: usize, seed: u64) -> Self {
        let mut rng = Rng64::new(seed);
        let s = 1.0 / (n as f64).sqrt();
        Readout {
            w: Matrix::from_fn(outputs, n, |_, _| rng.uniform(-s, s)),
            b: Vector::zeros(outputs),
        }
    }

    pub fn zeros(n: usize, outputs: usize) -> Self {
        Readout { w: Matrix::zeros(outputs, n), b: Vector::zeros(outputs) }
    }

    pub fn forward(&self, h: &Vector) -> Result<Vector> {
        let mut out = matvec(&self.w, h)?;
        out.add_assign(&self.b)?;
        Ok(out)
    }

    pub fn scalar_count(&self) -> usize {
        self.w.as_slice().len() + self.b.len()
    }
}

/// Cell parameters plus readout; the unit the optimizer updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: CellConfig,
    pub params: Parameters,
    pub readout: Readout,
}

impl Model {
    pub fn scalar_count(&self) -> usize {
        self.params.scalar_count() + self.readout.scalar_count()
    }

    /// Cell scalars first, then readout weight (row-major), then readout bias.
    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = self.params.flatten();
        flat.extend_from_slice(self.readout.w.as_slice());
        flat.extend_from_slice(self.readout.b.as_slice());
        flat
    }

    pub fn assign_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.scalar_count() {
            return Err(CoreError::contract(format!(
                "model: expected {} scalars, got {}",
                self.scalar_count(),
                flat.len()
            )));
        }
        let cell = self.params.scalar_count();
        self.params.assign_from_flat(&flat[..cell])?;
        let wlen = self.readout.w.as_slice().len();
        self.readout.w.as_mut_slice().copy_from_slice(&flat[cell..cell + wlen]);
        self.readout.b.as_mut_slice().copy_from_slice(&flat[cell + wlen..]);
        Ok(())
    }
}

/// One row of a training curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// MSE for the adding problem, accuracy for the classification tasks.
    pub val_metric: f64,
    pub seconds: f64,
    /// Cell parameter count; readout scalars are not included.
    pub param_count: usize,
}

/// Loop settings beyond the task itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub eval_batches: usize,
    pub eval_seed: u64,
}

/// Everything needed to continue training bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub model: Model,
    pub opt: OptimizerState,
    pub epochs_done: usize,
    pub global_step: u64,
}

/// Completed records plus the numeric fault that aborted the run, if any; on
/// a fault the last good record is retained.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub records: Vec<TrainRecord>,
    pub fault: Option<CoreError>,
}

/// Builds the initial model deterministically from the experiment seed.
pub fn init_model(config: &CellConfig, n: usize, task: &TaskSpec, seed: u64) -> Result<Model> {
    let params = init_params(
        config,
        n,
        task.input_dim(),
        derive_seed(seed, stream::INIT),
        InitScheme::UniformFanIn,
    )?;
    let readout = Readout::init(n, task.output_dim(), derive_seed(seed, stream::READOUT));
    Ok(Model { config: *config, params, readout })
}

/// Mean loss over the batch and the flat gradient (cell then readout),
/// accumulated sequence-by-sequence in batch-index order.
pub fn batch_loss_and_grad(model: &Model, batch: &Batch) -> Result<(f64, Vec<f64>)> {
    if batch.input_dim != model.params.m {
        return Err(CoreError::contract(format!(
            "batch input dim {} but model m = {}",
            batch.input_dim, model.params.m
        )));
    }
    let n = model.params.n;
    let batch_size = batch.inputs.len();
    let scale = 1.0 / batch_size as f64;

    let mut total_loss = 0.0;
    let mut cell_grads = model.params.zeros_like();
    let mut w_ro_grad = Matrix::zeros(model.readout.w.rows(), model.readout.w.cols());
    let mut b_ro_grad = Vector::zeros(model.readout.b.len());

    for (seq_idx, seq) in batch.inputs.iter().enumerate() {
        let (states, caches) =
            forward_sequence(&model.config, &model.params, seq, &CellState::zeros(n))?;
        let preds: Vec<Vector> = states
            .iter()
            .map(|s| model.readout.forward(&s.h))
            .collect::<Result<_>>()?;

        let (loss, d_preds) = match &batch.targets {
            Targets::PerSequenceScalar(targets) => {
                let t_len = seq.len();
                let target_vecs: Vec<Vector> = (0..t_len)
                    .map(|step| {
                        if step == t_len - 1 {
                            Vector::new(vec![targets[seq_idx]])
                        } else {
                            Vector::zeros(1)
                        }
                    })
                    .collect();
                mse_loss(&preds, &target_vecs, &batch.mask)?
            }
            Targets::PerStepClass(classes) => {
                softmax_xent_loss(&preds, &classes[seq_idx], &batch.mask)?
            }
        };
        if !loss.is_finite() {
            return Err(CoreError::NumericFault { step: seq.len() });
        }
        total_loss += scale * loss;

        // Readout backward per step; hidden-state gradients feed BPTT.
        let mut d_h = Vec::with_capacity(states.len());
        for (state, d_pred) in states.iter().zip(&d_preds) {
            let d_pred = d_pred.scale(scale);
            add_outer(&mut w_ro_grad, &d_pred, &state.h)?;
            b_ro_grad.add_assign(&d_pred)?;
            d_h.push(matvec_t(&model.readout.w, &d_pred)?);
        }
        // d_h already carries the 1/batch factor via the scaled d_pred.
        let (g, _) = backward_sequence(&model.config, &model.params, &caches, &d_h)?;
        let mut acc = cell_grads.flatten();
        for (a, b) in acc.iter_mut().zip(g.flatten()) {
            *a += b;
        }
        cell_grads.assign_from_flat(&acc)?;
    }

    let mut flat = cell_grads.flatten();
    flat.extend_from_slice(w_ro_grad.as_slice());
    flat.extend_from_slice(b_ro_grad.as_slice());
    Ok((total_loss, flat))
}

/// Validation metric on freshly generated batches from the eval seed stream:
/// MSE (lower is better) for scalar-target tasks, accuracy (higher is better)
/// for classification tasks.
pub fn evaluate(model: &Model, task: &TaskSpec, eval_seed: u64, eval_batches: usize) -> Result<f64> {
    let n = model.params.n;
    let mut total = 0.0;
    let mut count = 0usize;
    for b in 0..eval_batches.max(1) {
        let batch = task.generate(derive_seed(derive_seed(eval_seed, stream::EVAL), b as u64))?;
        for (seq_idx, seq) in batch.inputs.iter().enumerate() {
            let (states, _) =
                forward_sequence(&model.config, &model.params, seq, &CellState::zeros(n))?;
            let preds: Vec<Vector> = states
                .iter()
                .map(|s| model.readout.forward(&s.h))
                .collect::<Result<_>>()?;
            match &batch.targets {
                Targets::PerSequenceScalar(targets) => {
                    let d = preds[seq.len() - 1].get(0) - targets[seq_idx];
                    total += d * d;
                    count += 1;
                }
                Targets::PerStepClass(classes) => {
                    total += masked_accuracy(&preds, &classes[seq_idx], &batch.mask);
                    count += 1;
                }
            }
        }
    }
    Ok(total / count as f64)
}

/// Runs epochs `state.epochs_done .. settings.epochs`, mutating `state` in
/// place and returning the new records. Single-threaded and bit-reproducible
/// for fixed seeds. A numeric fault stops the run; completed records are
/// returned alongside it.
pub fn train_epochs(
    state: &mut TrainState,
    task: &TaskSpec,
    settings: &TrainSettings,
) -> Result<TrainOutcome> {
    if settings.epochs < 1 || settings.steps_per_epoch < 1 {
        return Err(CoreError::contract("train: epochs and steps_per_epoch must be >= 1"));
    }
    let task_seed = derive_seed(task.seed, stream::TASK);
    let cell_params = param_count(&state.model.config, state.model.params.n, state.model.params.m);
    let mut records = Vec::new();

    for epoch in state.epochs_done..settings.epochs {
        let start = Instant::now();
        let mut loss_sum = 0.0;
        for step in 0..settings.steps_per_epoch {
            let batch = task.generate(derive_seed(task_seed, step as u64))?;
            let result = batch_loss_and_grad(&state.model, &batch).and_then(|(loss, grads)| {
                let mut flat = state.model.flatten();
                state.opt.apply(&mut flat, &grads)?;
                state.model.assign_from_flat(&flat)?;
                Ok(loss)
            });
            match result {
                Ok(loss) => {
                    loss_sum += loss;
                    state.global_step += 1;
                }
                Err(fault @ CoreError::NumericFault { .. }) => {
                    return Ok(TrainOutcome { records, fault: Some(fault) });
                }
                Err(other) => return Err(other),
            }
        }
        let val_metric = match evaluate(&state.model, task, settings.eval_seed, settings.eval_batches)
        {
            Ok(v) => v,
            Err(fault @ CoreError::NumericFault { .. }) => {
                return Ok(TrainOutcome { records, fault: Some(fault) });
            }
            Err(other) => return Err(other),
        };
        state.epochs_done = epoch + 1;
        records.push(TrainRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / settings.steps_per_epoch as f64,
            val_metric,
            seconds: start.elapsed().as_secs_f64(),
            param_count: cell_params,
        });
    }
    Ok(TrainOutcome { records, fault: None })
}

/// Convenience wrapper: fresh model and optimizer, full run.
pub fn train(
    config: &CellConfig,
    n: usize,
    task: &TaskSpec,
    opt: OptimizerState,
    settings: &TrainSettings,
    seed: u64,
) -> Result<(TrainOutcome, TrainState)> {
    let model = init_model(config, n, task, seed)?;
    let mut state = TrainState { model, opt, epochs_done: 0, global_step: 0 };
    let outcome = train_epochs(&mut state, task, settings)?;
    Ok((outcome, state))
}
