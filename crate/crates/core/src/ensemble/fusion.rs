use ndarray::{concatenate, Array2, ArrayView2, Axis};

use super::member::EnsembleMember;
use crate::dataio::ImageSet;
use crate::numerics::{fit_pca_energy, fit_rbf_svm, PcaModel, RbfSvmModel, SvmParams};
use crate::{FfError, Result};

pub const DEFAULT_ENERGY_THRESHOLD: f64 = 0.99;

/// PCA reduction of concatenated decisions followed by an RBF SVM.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionModel {
    pub pca: PcaModel,
    pub svm: RbfSvmModel,
}

impl FusionModel {
    pub fn fit(decisions: ArrayView2<f64>, labels: &[usize], energy_threshold: f64, params: &SvmParams) -> Result<Self> {
        if decisions.nrows() != labels.len() {
            return Err(FfError::dim("decision rows differ from label count"));
        }
        let pca = fit_pca_energy(decisions, energy_threshold)?;
        let reduced = pca.transform(decisions)?;
        let svm = fit_rbf_svm(reduced.view(), labels, params)?;
        Ok(FusionModel { pca, svm })
    }

    pub fn predict(&self, decisions: ArrayView2<f64>) -> Result<Vec<usize>> {
        let reduced = self.pca.transform(decisions)?;
        Ok(self.svm.predict(reduced.view())?.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleModel {
    /// Concatenation order of decision vectors.
    pub members: Vec<EnsembleMember>,
    pub fusion: FusionModel,
}

impl EnsembleModel {
    pub fn decision_width(&self) -> usize {
        self.members.iter().map(|m| m.model.num_classes()).sum()
    }
}

/// Labels from the fused classifier and from every member on its own.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsemblePrediction {
    pub labels: Vec<usize>,
    pub member_labels: Vec<Vec<usize>>,
    /// N × (L · members) concatenated decisions.
    pub decisions: Array2<f64>,
}

fn concat_columns(blocks: &[Array2<f64>]) -> Result<Array2<f64>> {
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    concatenate(Axis(1), &views).map_err(|e| FfError::dim(e.to_string()))
}

/// Member decisions joined column-wise in member order.
pub fn collect_decision_vectors(members: &[EnsembleMember], images: &ImageSet) -> Result<Array2<f64>> {
    Ok(member_outputs(members, images)?.1)
}

fn member_outputs(members: &[EnsembleMember], images: &ImageSet) -> Result<(Vec<Vec<usize>>, Array2<f64>)> {
    let Some(first) = members.first() else {
        return Err(FfError::config("ensemble without members"));
    };
    let classes = first.model.num_classes();
    if members.iter().any(|m| m.model.num_classes() != classes) {
        return Err(FfError::dim("members disagree on the class count"));
    }
    let mut labels = Vec::with_capacity(members.len());
    let mut blocks = Vec::with_capacity(members.len());
    for m in members {
        let (l, d) = m.predict(images)?;
        labels.push(l);
        blocks.push(d);
    }
    Ok((labels, concat_columns(&blocks)?))
}

/// Fits the fusion stage on the labeled rows' concatenated decisions.
pub fn fit_fusion(
    members: Vec<EnsembleMember>,
    decisions_labeled: ArrayView2<f64>,
    y_l: &[usize],
    energy_threshold: f64,
    params: &SvmParams,
) -> Result<EnsembleModel> {
    let width: usize = members.iter().map(|m| m.model.num_classes()).sum();
    if members.is_empty() {
        return Err(FfError::config("ensemble without members"));
    }
    if decisions_labeled.ncols() != width {
        return Err(FfError::dim(format!(
            "decision width {} differs from {width} member outputs",
            decisions_labeled.ncols()
        )));
    }
    let fusion = FusionModel::fit(decisions_labeled, y_l, energy_threshold, params)?;
    Ok(EnsembleModel { members, fusion })
}

/// Joins per-member decision blocks column-wise.
pub fn stack_member_decisions(blocks: &[Array2<f64>]) -> Result<Array2<f64>> {
    concat_columns(blocks)
}

pub fn predict_ensemble(model: &EnsembleModel, images: &ImageSet) -> Result<EnsemblePrediction> {
    let (member_labels, decisions) = member_outputs(&model.members, images)?;
    let labels = model.fusion.predict(decisions.view())?;
    Ok(EnsemblePrediction {
        labels,
        member_labels,
        decisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn decisions(n: usize) -> (Array2<f64>, Vec<usize>) {
        // Three classes with noisy one-hot style decision vectors.
        let y: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let d = Array2::from_shape_fn((n, 3), |(i, j)| {
            let jitter = ((i * 7 + j * 13) % 11) as f64 / 40.0;
            if y[i] == j { 1.0 - jitter } else { jitter }
        });
        (d, y)
    }

    #[test]
    fn fused_classifier_fits_clean_decisions() {
        let (d, y) = decisions(60);
        let f = FusionModel::fit(d.view(), &y, DEFAULT_ENERGY_THRESHOLD, &SvmParams::default()).unwrap();
        assert!(f.pca.dim_out() <= 3);
        assert_eq!(f.predict(d.view()).unwrap(), y);
    }

    #[test]
    fn duplicated_members_add_no_rank() {
        let (d, y) = decisions(45);
        let twice = concatenate(Axis(1), &[d.view(), d.view()]).unwrap();
        let a = FusionModel::fit(d.view(), &y, 1.0, &SvmParams::default()).unwrap();
        let b = FusionModel::fit(twice.view(), &y, 1.0, &SvmParams::default()).unwrap();
        assert_eq!(a.pca.dim_out(), b.pca.dim_out());
        assert_eq!(a.predict(d.view()).unwrap(), b.predict(twice.view()).unwrap());
    }

    #[test]
    fn single_class_is_degenerate() {
        let d = Array2::from_shape_fn((5, 2), |(i, j)| (i + j) as f64);
        assert!(matches!(
            FusionModel::fit(d.view(), &[1; 5], 0.99, &SvmParams::default()),
            Err(FfError::Degenerate(_))
        ));
    }
}
