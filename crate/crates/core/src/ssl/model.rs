use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};

use super::pseudo::{build_pseudo_categories, pseudo_probabilities_batch};
use super::quality::{quality_scores_batch, select_unlabeled};
use super::stage::{fit_lsr, fit_ssl_stage, LsrStage, Ridge};
use crate::dataio::ImageSet;
use crate::numerics::argmax;
use crate::saab::SaabPipeline;
use crate::seeds::{self, Purpose};
use crate::{FfError, Result};

/// How unlabeled samples enter the intermediate stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnlabeledMode {
    /// Labeled samples only.
    None,
    /// Every unlabeled sample with its soft label.
    All,
    /// Only the unlabeled samples with the highest quality scores.
    Selected,
}

impl fmt::Display for UnlabeledMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnlabeledMode::None => "none",
            UnlabeledMode::All => "all",
            UnlabeledMode::Selected => "selected",
        })
    }
}

impl FromStr for UnlabeledMode {
    type Err = FfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(UnlabeledMode::None),
            "all" => Ok(UnlabeledMode::All),
            "selected" => Ok(UnlabeledMode::Selected),
            other => Err(FfError::config(format!("unknown unlabeled mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SslConfig {
    /// Output width of every stage; the last one must equal the class count.
    pub stage_widths: Vec<usize>,
    pub alpha: f64,
    pub keep_fraction: f64,
    pub mode: UnlabeledMode,
    pub ridge: Ridge,
    pub seed: u64,
}

impl SslConfig {
    pub fn new(stage_widths: Vec<usize>, keep_fraction: f64, mode: UnlabeledMode, seed: u64) -> Self {
        SslConfig {
            stage_widths,
            alpha: 50.0,
            keep_fraction,
            mode,
            ridge: Ridge::default(),
            seed,
        }
    }

    fn validate(&self, input_dim: usize, num_classes: usize) -> Result<()> {
        let widths = &self.stage_widths;
        if widths.last() != Some(&num_classes) {
            return Err(FfError::config(format!(
                "stage widths {widths:?} must end at the class count {num_classes}"
            )));
        }
        let mut prev = input_dim;
        for &w in widths {
            if w >= prev {
                return Err(FfError::config(format!(
                    "stage widths must strictly decrease from input width {input_dim}: {widths:?}"
                )));
            }
            prev = w;
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(FfError::config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(FfError::config(format!(
                "keep fraction {} outside (0, 1]",
                self.keep_fraction
            )));
        }
        Ok(())
    }
}

/// The fitted FC cascade.
#[derive(Clone, Debug, PartialEq)]
pub struct SslClassifier {
    pub stages: Vec<LsrStage>,
    pub num_classes: usize,
    /// Unlabeled rows stacked into each intermediate stage's regression.
    pub selected_counts: Vec<usize>,
}

impl SslClassifier {
    pub fn input_dim(&self) -> usize {
        self.stages.first().map_or(0, LsrStage::input_dim)
    }

    /// Input width followed by every stage's output width.
    pub fn stage_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.stages.iter().map(LsrStage::output_dim));
        dims
    }

    /// N × L decision vectors.
    pub fn decisions(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut cur = z.to_owned();
        for st in &self.stages {
            cur = st.apply(cur.view())?;
        }
        Ok(cur)
    }

    pub fn classify(&self, z: ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>)> {
        let dec = self.decisions(z)?;
        let labels = dec.rows().into_iter().map(argmax).collect();
        Ok((labels, dec))
    }
}

fn one_hot(labels: &[usize], width: usize) -> Array2<f64> {
    let mut y = Array2::zeros((labels.len(), width));
    for (i, &c) in labels.iter().enumerate() {
        y[[i, c]] = 1.0;
    }
    y
}

/// Builds the FC cascade from labeled features `z_l` with labels `y_l` and
/// unlabeled features `z_ul` (ignored when the mode is `None`).
///
/// An intermediate stage cannot have more pseudo-categories than labeled
/// samples, so with very few labels its width drops to the labeled count.
pub fn train_ssl_classifier(
    z_l: ArrayView2<f64>,
    y_l: &[usize],
    z_ul: ArrayView2<f64>,
    num_classes: usize,
    config: &SslConfig,
) -> Result<SslClassifier> {
    if z_l.nrows() != y_l.len() {
        return Err(FfError::dim("labeled features and labels differ in length"));
    }
    if z_l.nrows() == 0 {
        return Err(FfError::MissingLabels);
    }
    if z_ul.nrows() > 0 && z_ul.ncols() != z_l.ncols() {
        return Err(FfError::dim("labeled and unlabeled feature widths differ"));
    }
    if let Some(&c) = y_l.iter().find(|&&c| c >= num_classes) {
        return Err(FfError::config(format!("label {c} outside [0, {num_classes})")));
    }
    config.validate(z_l.ncols(), num_classes)?;

    let use_unlabeled = config.mode != UnlabeledMode::None && z_ul.nrows() > 0;
    let keep = match config.mode {
        UnlabeledMode::Selected => config.keep_fraction,
        _ => 1.0,
    };
    let mut cur_l = z_l.to_owned();
    let mut cur_ul = if use_unlabeled {
        z_ul.to_owned()
    } else {
        Array2::zeros((0, z_l.ncols()))
    };
    let (&last, intermediate) = config.stage_widths.split_last().expect("validated");
    let mut stages = Vec::with_capacity(config.stage_widths.len());
    let mut selected_counts = Vec::with_capacity(intermediate.len());

    for (si, &width) in intermediate.iter().enumerate() {
        let seed = seeds::derive(config.seed, Purpose::Kmeans, si as u64);
        let cats = build_pseudo_categories(cur_l.view(), y_l, num_classes, width, seed)?;
        let y_p = cats.one_hot();
        let (sel_z, sel_p) = if use_unlabeled {
            let p = pseudo_probabilities_batch(cur_ul.view(), &cats, config.alpha)?;
            let scores = quality_scores_batch(p.view(), &cats)?;
            let best: Vec<f64> = scores
                .rows()
                .into_iter()
                .map(|r| r.fold(f64::NEG_INFINITY, |m, &v| m.max(v)))
                .collect();
            let keep_idx = select_unlabeled(&best, keep)?;
            (cur_ul.select(Axis(0), &keep_idx), p.select(Axis(0), &keep_idx))
        } else {
            (Array2::zeros((0, cur_l.ncols())), Array2::zeros((0, width)))
        };
        selected_counts.push(sel_z.nrows());
        log::debug!(
            "stage {si}: {} -> {width}, {} labeled + {} unlabeled rows",
            cur_l.ncols(),
            cur_l.nrows(),
            sel_z.nrows()
        );
        let stage = fit_ssl_stage(cur_l.view(), y_p.view(), sel_z.view(), sel_p.view(), config.ridge)?;
        cur_l = stage.apply(cur_l.view())?;
        if use_unlabeled {
            cur_ul = stage.apply(cur_ul.view())?;
        }
        stages.push(stage);
    }

    let y = one_hot(y_l, last);
    stages.push(fit_lsr(cur_l.view(), y.view(), config.ridge, false)?);
    Ok(SslClassifier {
        stages,
        num_classes,
        selected_counts,
    })
}

/// A Saab feature extractor with its FC cascade.
#[derive(Clone, Debug, PartialEq)]
pub struct SslFfcnnModel {
    pub pipeline: SaabPipeline,
    pub classifier: SslClassifier,
}

impl SslFfcnnModel {
    pub fn new(pipeline: SaabPipeline, classifier: SslClassifier) -> Result<Self> {
        if pipeline.output_dim() != classifier.input_dim() {
            return Err(FfError::dim(format!(
                "pipeline emits {} features, classifier expects {}",
                pipeline.output_dim(),
                classifier.input_dim()
            )));
        }
        Ok(SslFfcnnModel {
            pipeline,
            classifier,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.classifier.num_classes
    }
}

/// Predicted labels (argmax, ties to the lower class) and N × L decisions.
pub fn predict(model: &SslFfcnnModel, images: &ImageSet) -> Result<(Vec<usize>, Array2<f64>)> {
    let z = model.pipeline.extract_features(images)?;
    model.classifier.classify(z.view())
}
