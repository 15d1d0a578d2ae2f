//! One-class classification with a shared low-dimensional subspace learned
//! jointly over several data modalities.
//!
//! Each modality `m` gets its own projection into a common `d`-dimensional
//! space; a single support vector data description encloses the projected
//! target data of every modality. Training alternates between solving the
//! description for fixed projections and a regularized gradient step on the
//! projections for fixed α.
//!
//! Three variants share the training loop:
//!
//! - [`linear`]: projections `Qₘ` act on raw features and are re-orthonormalized by QR.
//! - [`kernel`]: projections are weights `Wₘ` over RBF Gram columns, normalized so `WₘKₘWₘᵀ = I`.
//! - [`npt`]: an explicit centered-kernel embedding computed once, followed by the linear variant.
//!
//! [`model::fit`] is the usual entry point; it standardizes features,
//! dispatches on the variant and returns a [`model::TrainedModel`] that can
//! score new items.

pub mod codec;
pub mod data;
pub mod error;
pub mod kernel;
pub mod linear;
pub mod metrics;
pub mod model;
pub mod npt;
pub mod numerics;
pub mod subspace;
pub mod svdd;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use metrics::{DecisionStrategy, MetricReport};
pub use model::{fit, HyperParams, TrainedModel, Variant};
pub use subspace::Omega;

/// Class label of an item or of one modality's representation of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Target,
    Outlier,
}

impl Label {
    pub fn is_target(self) -> bool {
        self == Label::Target
    }
}
