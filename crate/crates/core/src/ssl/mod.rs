//! Semi-supervised FC stages.
//!
//! Each intermediate stage clusters the labeled features of every class into
//! pseudo-categories, gives unlabeled samples a cosine-softmax distribution
//! over those categories, keeps the unlabeled samples whose mass
//! concentrates on one class, and solves a ridge least-squares regression
//! onto the stacked one-hot and soft targets followed by ReLU. The last
//! stage regresses labeled samples onto their one-hot class labels.

mod io;
mod model;
mod pseudo;
mod quality;
mod stage;

pub use io::{read_classifier, read_model, write_classifier, write_model, SSL_MAGIC, SSL_VERSION};
pub use model::{
    predict, train_ssl_classifier, SslClassifier, SslConfig, SslFfcnnModel, UnlabeledMode,
};
pub use pseudo::{
    build_pseudo_categories, pseudo_probabilities, pseudo_probabilities_batch, split_counts,
    ProbabilityVector, PseudoCategorySet,
};
pub use quality::{quality_scores, quality_scores_batch, select_unlabeled, QualityScore};
pub use stage::{apply_stage, fit_ssl_stage, LsrStage, Ridge};
