//! Versioned binary checkpoints.
//!
//! Layout: magic `SLIMRNN1`, format version as little-endian u32, the config
//! snapshot as length-prefixed UTF-8, then the named parameter groups
//! back-to-back (name length u64, name bytes, element count u64, raw
//! little-endian f64s), and a trailing CRC-32 of every preceding byte.

use std::path::Path;

use slimrnn_core::optim::OptimizerState;
use slimrnn_core::train::{Model, TrainState};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 8] = b"SLIMRNN1";
pub const VERSION: u32 = 1;

/// Progress counters stored alongside the parameters. The RNG is a stateless
/// counter-based generator, so these counters *are* the stream positions:
/// every batch seed is derived from (task seed, step index).
const RESUME_GROUP: &str = "resume";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ExperimentConfig,
    /// Named flat arrays, in serialization order.
    pub groups: Vec<(String, Vec<f64>)>,
}

impl Checkpoint {
    /// Captures a training state; the snapshot is the single-variant config.
    pub fn from_state(config: &ExperimentConfig, state: &TrainState) -> Checkpoint {
        let mut groups: Vec<(String, Vec<f64>)> = vec![(
            RESUME_GROUP.to_string(),
            vec![state.epochs_done as f64, state.global_step as f64, state.opt.step as f64],
        )];
        let names = state.model.params.group_names();
        let slices = state.model.params.group_slices();
        for (name, slice) in names.into_iter().zip(slices) {
            groups.push((name, slice.to_vec()));
        }
        groups.push(("readout_w".to_string(), state.model.readout.w.as_slice().to_vec()));
        groups.push(("readout_b".to_string(), state.model.readout.b.as_slice().to_vec()));
        groups.push(("opt_m".to_string(), state.opt.m.clone()));
        groups.push(("opt_v".to_string(), state.opt.v.clone()));
        Checkpoint { config: config.clone(), groups }
    }

    fn group(&self, name: &str) -> Result<&[f64]> {
        self.groups
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| CliError::persistence(format!("checkpoint missing group '{name}'")))
    }

    /// Rebuilds the training state. `current` is the config of the run being
    /// resumed; it must describe the same model/task/optimizer identity.
    pub fn into_state(&self, current: &ExperimentConfig) -> Result<TrainState> {
        if self.config.identity_hash()? != current.identity_hash()? {
            return Err(CliError::persistence(
                "checkpoint was produced by a different experiment (config hash mismatch)",
            ));
        }
        let variant = current
            .experiment
            .variant
            .as_deref()
            .ok_or_else(|| CliError::usage("config has no experiment.variant"))?;
        let cell = current.cell_config(variant)?;
        let task = current.task_spec()?;
        let mut model: Model = slimrnn_core::train::init_model(
            &cell,
            current.experiment.n,
            &task,
            current.experiment.seed,
        )?;

        let names = model.params.group_names();
        let mut flat = Vec::with_capacity(model.params.scalar_count());
        for name in &names {
            flat.extend_from_slice(self.group(name)?);
        }
        model.params.assign_from_flat(&flat)?;
        let w = self.group("readout_w")?;
        if w.len() != model.readout.w.as_slice().len() {
            return Err(CliError::persistence("checkpoint readout shape mismatch"));
        }
        model.readout.w.as_mut_slice().copy_from_slice(w);
        let b = self.group("readout_b")?;
        if b.len() != model.readout.b.len() {
            return Err(CliError::persistence("checkpoint readout bias shape mismatch"));
        }
        model.readout.b.as_mut_slice().copy_from_slice(b);

        let mut opt: OptimizerState = current.optimizer_state(model.scalar_count())?;
        let resume = self.group(RESUME_GROUP)?;
        if resume.len() != 3 {
            return Err(CliError::persistence("checkpoint resume group malformed"));
        }
        opt.step = resume[2] as u64;
        let m = self.group("opt_m")?;
        let v = self.group("opt_v")?;
        if m.len() != opt.m.len() || v.len() != opt.v.len() {
            return Err(CliError::persistence("checkpoint optimizer state shape mismatch"));
        }
        opt.m.copy_from_slice(m);
        opt.v.copy_from_slice(v);

        Ok(TrainState {
            model,
            opt,
            epochs_done: resume[0] as usize,
            global_step: resume[1] as u64,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let snapshot = self.config.canonical();
        out.extend_from_slice(&(snapshot.len() as u64).to_le_bytes());
        out.extend_from_slice(snapshot.as_bytes());
        for (name, values) in &self.groups {
            out.extend_from_slice(&(name.len() as u64).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(values.len() as u64).to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let truncated = || CliError::persistence("checkpoint truncated");
        if bytes.len() < MAGIC.len() + 8 {
            return Err(truncated());
        }
        if &bytes[..8] != MAGIC {
            return Err(CliError::persistence("not a checkpoint file (bad magic)"));
        }
        let body_len = bytes.len() - 4;
        let stored = u32::from_le_bytes(bytes[body_len..].try_into().unwrap());
        if crc32fast::hash(&bytes[..body_len]) != stored {
            return Err(CliError::persistence("checkpoint integrity check failed (CRC mismatch)"));
        }
        let mut pos = 8;
        fn take_at<'a>(bytes: &'a [u8], pos: &mut usize, len: usize, end: usize) -> Result<&'a [u8]> {
            if *pos + len > end {
                return Err(CliError::persistence("checkpoint truncated"));
            }
            let s = &bytes[*pos..*pos + len];
            *pos += len;
            Ok(s)
        }
        let take = |pos: &mut usize, len: usize| take_at(bytes, pos, len, body_len);
        let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        if version != VERSION {
            return Err(CliError::persistence(format!(
                "checkpoint format version {version}, expected {VERSION}"
            )));
        }
        let snap_len = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
        let snapshot = std::str::from_utf8(take(&mut pos, snap_len)?)
            .map_err(|_| CliError::persistence("checkpoint config snapshot is not UTF-8"))?
            .to_string();
        let config = ExperimentConfig::parse(&snapshot)
            .map_err(|e| CliError::persistence(format!("checkpoint config snapshot: {e}")))?;
        let mut groups = Vec::new();
        while pos < body_len {
            let name_len = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
            let name = std::str::from_utf8(take(&mut pos, name_len)?)
                .map_err(|_| CliError::persistence("checkpoint group name is not UTF-8"))?
                .to_string();
            let count = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
            let raw = take(&mut pos, count.checked_mul(8).ok_or_else(truncated)?)?;
            let values =
                raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            groups.push((name, values));
        }
        Ok(Checkpoint { config, groups })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())
            .map_err(|e| CliError::persistence(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::persistence(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}
