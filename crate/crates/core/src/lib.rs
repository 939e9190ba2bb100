//! Feedforward-designed convolutional networks.
//!
//! Conv stages are built from Saab transforms (PCA on image patches with a
//! DC kernel and a nonnegativity bias), followed by channel-wise PCA. The
//! fully-connected stages are rectified least-squares regressors whose
//! targets come from per-class K-means pseudo-categories; unlabeled images
//! contribute soft pseudo-labels once they pass a quality-score filter.
//! Several such networks can be fused with PCA and an RBF-kernel SVM.
//!
//! No parameter anywhere in this crate is trained by backpropagation.

pub mod cli;
pub mod dataio;
pub mod ensemble;
mod error;
pub mod numerics;
pub mod saab;
pub mod seeds;
pub mod ssl;

pub use error::{FfError, Result};
