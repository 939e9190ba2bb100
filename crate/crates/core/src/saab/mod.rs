//! Unsupervised conv stages: Saab transforms with max-pooling followed by
//! channel-wise PCA over each channel's spatial map.

mod arch;
mod cpca;
pub(crate) mod io;
mod layer;
mod patches;
mod pipeline;

pub use arch::{ArchConfig, ArchPreset, ConvSpec, InputKind, DEFAULT_PATCH_CAP};
pub use cpca::{apply_cpca, fit_cpca, CpcaModel};
pub use io::{read_pipeline, write_pipeline, SAAB_MAGIC, SAAB_VERSION};
pub use layer::{apply_saab_layer, fit_saab_layer, max_pool, SaabLayer};
pub use patches::{extract_patches, Window};
pub use pipeline::{fit_pipeline, fit_pipeline_with_features, SaabPipeline, SaabStage};
