//! Parameter identification for a porous-medium tumor-growth model
//! (ρ_t − Δρ³ = g·ρ) with a physics-informed neural network, plus the
//! finite-difference forward solver used for data generation and prediction.

pub mod engine;
pub mod error;
pub mod jet;
pub mod net;
pub mod obsdata;
pub mod optim;
pub mod physics;
pub mod solver;
pub mod tape;
pub mod trainer;

pub use error::{Error, Result};
pub use jet::Jet2;
pub use net::{NetworkParams, ParamMode, PhysicalParams, DEFAULT_ARCH};
pub use physics::{
    CollocationConfig, CollocationSet, DataMode, DataPoint, Domain, LossBreakdown, LossWeights,
};
pub use solver::{DensityField, Grid2D, SolveConfig};
pub use trainer::{ExperimentMode, TrainConfig, TrainOutcome};
