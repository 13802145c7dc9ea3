//! FPUT β-chain simulation and trajectory analysis.
//!
//! The pipeline runs in stages: integrate the chain ([`chain`]), stream
//! phase-space samples to disk ([`store`]) or replay them from the
//! integrator ([`source`]), build the standardized covariance spectrum
//! ([`pca`]), and estimate an intrinsic dimension from it ([`estimators`]).
//! [`tsne`] embeds a subset of samples in the plane and [`experiment`] ties
//! the stages together for parameter sweeps.

pub mod chain;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod modes;
pub mod par;
pub mod pca;
pub mod report;
pub mod source;
pub mod store;
pub mod tsne;

pub use chain::{ChainState, InitialCondition, Integrator, ModelParams};
pub use error::{Error, Result};
pub use pca::Standardization;
pub use source::{RowSource, SimulatedTrajectory, TrajectoryMatrix};
