//! Structure detection and bounds for B tensors.
//!
//! * [`tensor`]: dense tensors, `A x^{m-1}`, norms, and the operators `T_A`, `F_A`.
//! * [`structure`]: B / B0 classification, row diagnostics, semi-positivity grids, generators.
//! * [`opnorms`]: closed-form operator-norm bounds and an empirical norm estimator.
//! * [`spectral`]: H- and Z-eigenpair search and diagonal-only spectral bounds.
//! * [`tcp`]: tensor complementarity solver and lower bounds on nonzero solutions.
//! * [`cli`]: the `btensor` command line.

pub mod cli;
pub mod error;
pub mod fixtures;
pub mod golden;
pub mod io;
mod linalg;
pub mod opnorms;
pub mod rng;
pub mod spectral;
pub mod structure;
pub mod tcp;
pub mod tensor;

pub use error::{Error, Result};
pub use structure::{classify, ClassificationReport, Variant, Verdict};
pub use tensor::{norm, NormKind, Tensor};
