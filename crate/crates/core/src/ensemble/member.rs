use ndarray::{Array2, Axis};

use super::diversity::{prepare_input, DiversityConfig};
use crate::dataio::ImageSet;
use crate::saab::{fit_pipeline_with_features, ArchConfig};
use crate::ssl::{predict, train_ssl_classifier, SslConfig, SslFfcnnModel};
use crate::{FfError, Result};

/// Dataset-level settings shared by every member.
#[derive(Clone, Debug, PartialEq)]
pub struct MemberSettings {
    /// C-PCA width for 5×5 channel maps.
    pub cpca_dim: usize,
    pub patch_cap: usize,
    /// Stage widths, selection and ridge; the seed is replaced per member.
    pub ssl: SslConfig,
}

/// A fitted member and the recipe that produced its input.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleMember {
    pub config: DiversityConfig,
    pub model: SslFfcnnModel,
}

impl EnsembleMember {
    /// Predicted labels and N × L decisions on raw dataset images.
    pub fn predict(&self, images: &ImageSet) -> Result<(Vec<usize>, Array2<f64>)> {
        let input = prepare_input(images, self.config.input_tag)?;
        predict(&self.model, &input)
    }

    pub fn decisions(&self, images: &ImageSet) -> Result<Array2<f64>> {
        Ok(self.predict(images)?.1)
    }
}

/// Training output: the member plus its decisions on the labeled rows, so
/// fusion does not re-run feature extraction.
#[derive(Clone, Debug)]
pub struct TrainedMember {
    pub member: EnsembleMember,
    pub labeled_decisions: Array2<f64>,
    pub selected_counts: Vec<usize>,
}

/// Fits the conv pipeline on every training image, then the FC cascade on
/// the `labeled` rows (with their labels) and the `unlabeled` rows.
pub fn train_member(
    config: &DiversityConfig,
    settings: &MemberSettings,
    train: &ImageSet,
    labeled: &[usize],
    unlabeled: &[usize],
    seed: u64,
) -> Result<TrainedMember> {
    let labels = train.require_labels()?;
    if labeled.is_empty() {
        return Err(FfError::MissingLabels);
    }
    if let Some(&i) = labeled.iter().chain(unlabeled).find(|&&i| i >= train.len()) {
        return Err(FfError::dim(format!("row {i} outside a {}-image set", train.len())));
    }
    let input = prepare_input(train, config.input_tag)?;
    let mut arch = ArchConfig::preset(config.arch, config.input_kind, settings.cpca_dim, seed);
    arch.patch_cap = settings.patch_cap;
    let (pipeline, features) = fit_pipeline_with_features(&arch, &input)?;
    drop(input);

    let z_l = features.select(Axis(0), labeled);
    let z_ul = features.select(Axis(0), unlabeled);
    drop(features);
    let y_l: Vec<usize> = labeled.iter().map(|&i| labels[i]).collect();
    let ssl = SslConfig {
        seed,
        ..settings.ssl.clone()
    };
    let classifier = train_ssl_classifier(z_l.view(), &y_l, z_ul.view(), train.num_classes(), &ssl)?;
    let labeled_decisions = classifier.decisions(z_l.view())?;
    let selected_counts = classifier.selected_counts.clone();
    Ok(TrainedMember {
        member: EnsembleMember {
            config: *config,
            model: SslFfcnnModel::new(pipeline, classifier)?,
        },
        labeled_decisions,
        selected_counts,
    })
}
