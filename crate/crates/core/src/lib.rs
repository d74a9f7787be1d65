//! Anyonic charge algebra, anyon models, and interferometric charge measurement.

pub mod anyon_model;
pub mod charge_algebra;
pub mod error;
pub mod fqh_interferometer;
pub mod mach_zehnder;
pub mod model_file;
pub mod model_library;
pub mod report;
pub mod state_space;

pub use anyon_model::{AnyonModel, Channel, FBlock, FSymbolTable, RSymbolTable, VerifyReport};
pub use charge_algebra::{Charge, FusionAlgebra, FusionTensor};
pub use error::{AnyonError, Result};
pub use model_library::{FqhChargeMeta, FqhData, Level};
pub use report::{Check, ValidationReport};
