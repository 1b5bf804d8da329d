//! Estimation and inference for low-rank factor models `θθᵀ` on the quotient
//! by orthogonal rotations: fitting, horizontal-space coordinates, asymptotic
//! normality, and finite-sample diagnostics.

pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod stats;

pub use error::{Error, Result};
pub use estimator::{fit, FitConfig, FitResult, Init, InitUsed};
pub use geometry::{BasisConstruction, HorizontalBasis};
pub use harness::{ExperimentConfig, TruthSpec, VERSION};
pub use linalg::{Mat, Vector};
pub use model::{
    DataGeneratingProcess, Dataset, Design, FactorPoint, Loss, LossModel, NoiseModel,
    ProblemConstants, Sample,
};
