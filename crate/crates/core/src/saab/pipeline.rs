use ndarray::{concatenate, Array2, Array4, ArrayView4, Axis};

use super::arch::ArchConfig;
use super::cpca::{fit_cpca, CpcaModel};
use super::layer::{fit_on_maps, SaabLayer};
use super::patches::Window;
use crate::dataio::ImageSet;
use crate::seeds::{self, Purpose};
use crate::{FfError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SaabStage {
    pub layer: SaabLayer,
    pub pool: bool,
}

/// A fitted feature extractor: Saab stages then channel-wise PCA.
#[derive(Clone, Debug, PartialEq)]
pub struct SaabPipeline {
    /// (height, width, channels) of the images it was fitted on.
    pub input_shape: (usize, usize, usize),
    pub stages: Vec<SaabStage>,
    pub cpca: CpcaModel,
}

/// Images per block when extracting features, bounding intermediate maps.
const EXTRACT_BLOCK: usize = 2048;

/// Fits every conv stage on `images` (labels are ignored) and returns the
/// training features alongside the pipeline.
pub fn fit_pipeline_with_features(
    config: &ArchConfig,
    images: &ImageSet,
) -> Result<(SaabPipeline, Array2<f64>)> {
    if images.is_empty() {
        return Err(FfError::dim("cannot fit a pipeline on zero images"));
    }
    let mut maps: Array4<f32> = images.pixels().to_owned();
    let mut stages = Vec::with_capacity(config.stages.len());
    for (i, spec) in config.stages.iter().enumerate() {
        let window = Window::square(spec.window, maps.len_of(Axis(3)));
        let seed = seeds::derive(config.seed, Purpose::PatchSample, i as u64);
        let layer = fit_on_maps(maps.view(), window, spec.kernels, config.patch_cap, seed)?;
        maps = layer.apply_maps(maps.view(), config.pool)?;
        log::debug!(
            "saab stage {i}: {}x{}x{} -> {:?}",
            spec.window,
            spec.window,
            window.in_channels,
            maps.dim()
        );
        stages.push(SaabStage {
            layer,
            pool: config.pool,
        });
    }
    let spatial = maps.len_of(Axis(1)) * maps.len_of(Axis(2));
    let cpca = fit_cpca(maps.view(), config.cpca_dim_for(spatial))?;
    let features = cpca.transform(maps.view())?;
    let pipeline = SaabPipeline {
        input_shape: (images.height(), images.width(), images.channels()),
        stages,
        cpca,
    };
    Ok((pipeline, features))
}

pub fn fit_pipeline(config: &ArchConfig, images: &ImageSet) -> Result<SaabPipeline> {
    fit_pipeline_with_features(config, images).map(|(p, _)| p)
}

impl SaabPipeline {
    pub fn output_dim(&self) -> usize {
        self.cpca.output_dim()
    }

    pub fn input_dim(&self) -> usize {
        let (h, w, c) = self.input_shape;
        h * w * c
    }

    fn check_input(&self, images: &ImageSet) -> Result<()> {
        let shape = (images.height(), images.width(), images.channels());
        if shape != self.input_shape {
            return Err(FfError::dim(format!(
                "pipeline fitted on {:?} images, got {shape:?}",
                self.input_shape
            )));
        }
        Ok(())
    }

    /// Final conv maps (before C-PCA).
    pub fn conv_maps(&self, pixels: ArrayView4<f32>) -> Result<Array4<f32>> {
        let mut stages = self.stages.iter();
        let first = stages
            .next()
            .ok_or_else(|| FfError::dim("pipeline has no stages"))?;
        let mut maps = first.layer.apply_maps(pixels, first.pool)?;
        for st in stages {
            maps = st.layer.apply_maps(maps.view(), st.pool)?;
        }
        Ok(maps)
    }

    /// Feature rows `z` of dimension [`output_dim`](Self::output_dim).
    pub fn extract_features(&self, images: &ImageSet) -> Result<Array2<f64>> {
        self.check_input(images)?;
        if images.is_empty() {
            return Ok(Array2::zeros((0, self.output_dim())));
        }
        let blocks = images
            .pixels()
            .axis_chunks_iter(Axis(0), EXTRACT_BLOCK)
            .map(|block| {
                let maps = self.conv_maps(block)?;
                self.cpca.transform(maps.view())
            })
            .collect::<Result<Vec<_>>>()?;
        let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
        concatenate(Axis(0), &views).map_err(|e| FfError::dim(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::ColorTag;
    use crate::saab::{ArchPreset, InputKind};

    fn digits(n: usize) -> ImageSet {
        let px = Array4::from_shape_fn((n, 32, 32, 1), |(i, y, x, _)| {
            let v = ((i * 7 + y * 3 + x * 5 + (x * y) % 11) % 23) as f32 / 23.0;
            if (8..24).contains(&y) && (8..24).contains(&x) {
                v
            } else {
                0.0
            }
        });
        ImageSet::unlabeled(px, ColorTag::Gray).unwrap()
    }

    #[test]
    fn ff1_grayscale_geometry() {
        let mut cfg = ArchConfig::preset(ArchPreset::Ff1, InputKind::Grayscale, 20, 1);
        cfg.patch_cap = 5000;
        let set = digits(6);
        let (p, feats) = fit_pipeline_with_features(&cfg, &set).unwrap();
        assert_eq!(p.stages[0].layer.num_kernels(), 6);
        assert_eq!(p.stages[1].layer.num_kernels(), 16);
        assert_eq!(p.stages[1].layer.window.in_channels, 6);
        let maps = p.conv_maps(set.pixels().view()).unwrap();
        assert_eq!(maps.dim(), (6, 5, 5, 16));
        assert_eq!(p.output_dim(), 320);
        assert_eq!(feats.dim(), (6, 320));
        assert!(set.dim_in() > p.output_dim());
        let again = p.extract_features(&set).unwrap();
        for (a, b) in again.iter().zip(feats.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(feats.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn single_image_pipeline_fits() {
        let cfg = ArchConfig::preset(ArchPreset::Ff1, InputKind::Grayscale, 20, 1);
        let p = fit_pipeline(&cfg, &digits(1)).unwrap();
        assert_eq!(p.output_dim(), 320);
    }

    #[test]
    fn odd_maps_are_cropped_before_pooling() {
        let cfg = ArchConfig::preset(ArchPreset::Ff4, InputKind::Grayscale, 20, 1);
        let set = digits(3);
        let p = fit_pipeline(&cfg, &set).unwrap();
        // 32 -> 30 -> 15 -> 13 -> crop 12 -> 6
        let maps = p.conv_maps(set.pixels().view()).unwrap();
        assert_eq!(maps.dim(), (3, 6, 6, 16));
        assert_eq!(p.cpca.reduced_dim, 29);
    }

    #[test]
    fn identical_images_identical_rows() {
        let cfg = ArchConfig::preset(ArchPreset::Ff3, InputKind::Grayscale, 20, 1);
        let set = digits(4);
        let p = fit_pipeline(&cfg, &set).unwrap();
        let twin = set.select(&[2, 2]);
        let f = p.extract_features(&twin).unwrap();
        assert_eq!(f.row(0), f.row(1));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let cfg = ArchConfig::preset(ArchPreset::Ff1, InputKind::Grayscale, 20, 1);
        let p = fit_pipeline(&cfg, &digits(2)).unwrap();
        let other = ImageSet::unlabeled(Array4::zeros((1, 28, 28, 1)), ColorTag::Gray).unwrap();
        assert!(matches!(p.extract_features(&other), Err(FfError::Dim(_))));
    }

    #[test]
    fn rgb_ff4_geometry() {
        let cfg = ArchConfig::preset(ArchPreset::Ff4, InputKind::Rgb, 12, 1);
        let px = Array4::from_shape_fn((2, 32, 32, 3), |(i, y, x, c)| {
            (((i + 1) * (y * 3 + x * 7 + c * 5)) % 29) as f32 / 29.0
        });
        let set = ImageSet::unlabeled(px, ColorTag::Rgb).unwrap();
        let p = fit_pipeline(&cfg, &set).unwrap();
        assert_eq!(p.stages[0].layer.kernels.dim(), (24, 27));
        assert_eq!(p.stages[1].layer.kernels.dim(), (48, 9 * 24));
    }
}
