//! Experiment configuration: a sectioned, typed key-value file (TOML subset)
//! that round-trips losslessly and rejects unknown keys.

use serde::{Deserialize, Serialize};
use slimrnn_core::numerics::ActivationKind;
use slimrnn_core::optim::{OptKind, OptimizerState};
use slimrnn_core::tasks::{TaskKind, TaskSpec};
use slimrnn_core::taxonomy::{variant_config, CellConfig, VariantId, DEFAULT_ALPHA};
use slimrnn_core::train::TrainSettings;

use crate::error::{CliError, Result};

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_activation() -> String {
    "tanh".to_string()
}

fn default_eval_batches() -> usize {
    2
}

fn default_clip() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Single variant for `train`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// Variant list for `compare`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variants: Option<Vec<String>>,
    pub n: usize,
    /// Input dimension; defaults to what the task produces and must match it
    /// when given explicitly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_activation")]
    pub activation: String,
    pub epochs: usize,
    pub seed: u64,
    /// Seed for validation batches; defaults to the experiment seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_seed: Option<u64>,
    pub output_dir: String,
    /// Validation-metric gate for the epochs-to-threshold column of `compare`
    /// (MSE: first epoch below; accuracy: first epoch at or above).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    /// `adding`, `copy`, or `char`.
    pub kind: String,
    pub t: usize,
    pub batch_size: usize,
    pub steps_per_epoch: usize,
    #[serde(default = "default_eval_batches")]
    pub eval_batches: usize,
    /// Copy-memory: number of symbols to recall.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Copy-memory: alphabet size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphabet_size: Option<usize>,
    /// Char task: path to the UTF-8/byte corpus.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    /// `adam` or `sgd`.
    pub kind: String,
    pub lr: f64,
    /// Global-norm gradient clip; 0 disables clipping.
    #[serde(default = "default_clip")]
    pub clip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub task: TaskSection,
    pub optimizer: OptimizerSection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical serialized form; parsing it back yields an equal value.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.experiment.n < 1 {
            return Err(CliError::usage("experiment.n must be >= 1"));
        }
        if self.experiment.epochs < 1 {
            return Err(CliError::usage("experiment.epochs must be >= 1"));
        }
        if self.task.t < 1 || self.task.batch_size < 1 || self.task.steps_per_epoch < 1 {
            return Err(CliError::usage(
                "task.t, task.batch_size and task.steps_per_epoch must be >= 1",
            ));
        }
        if self.optimizer.lr < 0.0 {
            return Err(CliError::usage("optimizer.lr must be non-negative"));
        }
        OptKind::parse(&self.optimizer.kind)?;
        self.activation()?;
        let task = self.task_spec()?;
        if let Some(m) = self.experiment.m {
            if m != task.input_dim() {
                return Err(CliError::usage(format!(
                    "experiment.m = {m} but the {} task produces {}-dimensional inputs",
                    self.task.kind,
                    task.input_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn activation(&self) -> Result<ActivationKind> {
        Ok(ActivationKind::parse(&self.experiment.activation)?)
    }

    /// Effective input dimension: explicit `m` or the task's input dimension.
    pub fn m(&self) -> Result<usize> {
        Ok(match self.experiment.m {
            Some(m) => m,
            None => self.task_spec()?.input_dim(),
        })
    }

    pub fn eval_seed(&self) -> u64 {
        self.experiment.eval_seed.unwrap_or(self.experiment.seed)
    }

    pub fn cell_config(&self, variant: &str) -> Result<CellConfig> {
        let id = VariantId::parse(variant)?;
        Ok(variant_config(id, self.experiment.alpha, self.activation()?)?)
    }

    pub fn task_spec(&self) -> Result<TaskSpec> {
        let kind = match self.task.kind.as_str() {
            "adding" => TaskKind::AddingProblem,
            "copy" => TaskKind::CopyMemory {
                k: self.task.k.ok_or_else(|| CliError::usage("copy task needs task.k"))?,
                alphabet_size: self
                    .task
                    .alphabet_size
                    .ok_or_else(|| CliError::usage("copy task needs task.alphabet_size"))?,
            },
            "char" => {
                let path = self
                    .task
                    .text_path
                    .as_ref()
                    .ok_or_else(|| CliError::usage("char task needs task.text_path"))?;
                let text = std::fs::read(path)
                    .map_err(|e| CliError::usage(format!("task.text_path {path}: {e}")))?;
                TaskKind::CharNextStep { text }
            }
            other => return Err(CliError::usage(format!("unknown task kind '{other}'"))),
        };
        Ok(TaskSpec {
            kind,
            sequence_length: self.task.t,
            batch_size: self.task.batch_size,
            seed: self.experiment.seed,
        })
    }

    pub fn optimizer_state(&self, model_scalars: usize) -> Result<OptimizerState> {
        let clip = if self.optimizer.clip > 0.0 { Some(self.optimizer.clip) } else { None };
        Ok(match OptKind::parse(&self.optimizer.kind)? {
            OptKind::Sgd => OptimizerState::sgd(self.optimizer.lr, clip),
            OptKind::Adam => OptimizerState::adam(self.optimizer.lr, clip, model_scalars),
        })
    }

    pub fn train_settings(&self) -> TrainSettings {
        TrainSettings {
            epochs: self.experiment.epochs,
            steps_per_epoch: self.task.steps_per_epoch,
            eval_batches: self.task.eval_batches,
            eval_seed: self.eval_seed(),
        }
    }

    /// Specializes a (possibly multi-variant) config to one variant; the
    /// result is what gets snapshotted into checkpoints.
    pub fn for_variant(&self, variant: &str) -> ExperimentConfig {
        let mut single = self.clone();
        single.experiment.variant = Some(variant.to_string());
        single.experiment.variants = None;
        single
    }

    /// Hash of everything that determines the trained parameters: variant,
    /// sizes, activation, task, optimizer and seed — but not epochs or output
    /// paths, so a resumed run with a higher epoch budget stays compatible.
    pub fn identity_hash(&self) -> Result<u32> {
        let id = format!(
            "variant={:?} n={} m={} alpha={} act={} seed={} task={}:{}:{}:{:?}:{:?}:{:?} opt={}:{}:{}",
            self.experiment.variant,
            self.experiment.n,
            self.m()?,
            self.experiment.alpha,
            self.experiment.activation,
            self.experiment.seed,
            self.task.kind,
            self.task.t,
            self.task.batch_size,
            self.task.k,
            self.task.alphabet_size,
            self.task.text_path,
            self.optimizer.kind,
            self.optimizer.lr,
            self.optimizer.clip,
        );
        Ok(crc32fast::hash(id.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[experiment]
variant = "LSTM"
n = 4
epochs = 2
seed = 7
output_dir = "out"

[task]
kind = "adding"
t = 8
batch_size = 4
steps_per_epoch = 2

[optimizer]
kind = "adam"
lr = 1e-3
"#;

    #[test]
    fn round_trips_losslessly() {
        let a = ExperimentConfig::parse(BASE).unwrap();
        let b = ExperimentConfig::parse(&a.canonical()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASE.replace("lr = 1e-3", "lr = 1e-3\nmomentum = 0.9");
        assert!(matches!(ExperimentConfig::parse(&text), Err(CliError::Usage(_))));
    }

    #[test]
    fn defaults_are_applied() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(c.experiment.alpha, DEFAULT_ALPHA);
        assert_eq!(c.experiment.activation, "tanh");
        assert_eq!(c.optimizer.clip, 5.0);
        assert_eq!(c.task.eval_batches, 2);
        assert_eq!(c.m().unwrap(), 2);
        assert_eq!(c.eval_seed(), 7);
    }

    #[test]
    fn mismatched_m_is_a_usage_error() {
        let text = BASE.replace("n = 4", "n = 4\nm = 5");
        assert!(matches!(ExperimentConfig::parse(&text), Err(CliError::Usage(_))));
    }

    #[test]
    fn identity_hash_ignores_epochs_but_not_variant() {
        let a = ExperimentConfig::parse(BASE).unwrap();
        let mut b = a.clone();
        b.experiment.epochs = 99;
        assert_eq!(a.identity_hash().unwrap(), b.identity_hash().unwrap());
        let c = a.for_variant("LSTM_3");
        assert_ne!(a.identity_hash().unwrap(), c.identity_hash().unwrap());
    }

    #[test]
    fn copy_task_requires_its_fields() {
        let text = BASE.replace("kind = \"adding\"", "kind = \"copy\"");
        assert!(matches!(ExperimentConfig::parse(&text), Err(CliError::Usage(_))));
    }
}
