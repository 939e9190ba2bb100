//! Decision-level fusion of several semi-supervised FF-CNNs.
//!
//! Members differ by conv architecture (T1), input color channel (T2) or
//! Laws-filtered input (T3). Their decision vectors are concatenated,
//! reduced with PCA and classified by an RBF SVM trained on labeled rows.

mod diversity;
mod fusion;
mod io;
mod member;

pub use diversity::{build_diversity_configs, prepare_input, DiversityConfig, DiversityKind};
pub use fusion::{
    collect_decision_vectors, fit_fusion, predict_ensemble, stack_member_decisions, EnsembleModel,
    EnsemblePrediction, FusionModel, DEFAULT_ENERGY_THRESHOLD,
};
pub use io::{
    load_ensemble, read_fusion, read_manifest, save_ensemble, write_fusion, write_manifest,
    Manifest, FUSION_MAGIC, MANIFEST_HEADER,
};
pub use member::{train_member, EnsembleMember, MemberSettings, TrainedMember};
