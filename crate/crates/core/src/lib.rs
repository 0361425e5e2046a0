//! Recurrent-cell library implementing the standard LSTM and the SLIM
//! reduced-parameter variant family as one compositional cell taxonomy.
//!
//! The crate is organized bottom-up:
//!
//! - [`numerics`]: minimal dense vector/matrix kernels and activations
//! - [`rng`]: the deterministic counter-based generator used everywhere
//! - [`taxonomy`]: variant catalog, configuration types, parameter counting
//! - [`dynamics`]: forward recurrence and exact BPTT for any configuration
//! - [`gradcheck`]: finite-difference oracle and structured comparison report
//! - [`tasks`], [`loss`], [`optim`], [`train`]: synthetic-task training harness

pub mod dynamics;
pub mod error;
pub mod gradcheck;
pub mod loss;
pub mod numerics;
pub mod optim;
pub mod rng;
pub mod tasks;
pub mod taxonomy;
pub mod train;

pub use error::{CoreError, Result};
pub use numerics::{ActivationKind, Matrix, Vector};
pub use taxonomy::{CellConfig, CellInputForm, GateForm, RecurrentMixing, VariantId};
