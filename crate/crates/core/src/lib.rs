//! Target transformations for tabular regression.
//!
//! Fit a transform on training targets, train a model on the transformed
//! values, and map its predictions back. The [`diagnostics`] module flags
//! target properties that suggest which transform to try, and [`eval`] runs
//! cross-validated comparisons between transforms.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod special;
pub mod stats;
pub mod transform;

pub use data::{load_csv, read_csv, ColumnRoles, Dataset, Side};
pub use error::{Error, ErrorClass, Result};
pub use matrix::Matrix;
pub use transform::{fit, FittedTransform, TransformKind, TransformParams};
