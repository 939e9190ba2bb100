//! Image containers, dataset decoding, balanced labeled splits and the
//! input transforms used to diversify ensemble members.

mod color;
mod formats;
mod laws;
mod split;

use ndarray::{Array4, ArrayView3, Axis};

use crate::{FfError, Result};

pub use color::{
    convert_color_space, lab_from_rgb, rgb_from_ycbcr, to_luma, ycbcr_from_rgb, ColorSpace,
};
pub use formats::{
    load_cifar10, load_idx, load_idx_labels, load_idx_pair, load_raw_container,
    write_raw_container, CIFAR_RECORD_BYTES, IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC, IDX_PAD,
    RAW_MAGIC,
};
pub use laws::{apply_laws, apply_laws_kernel, laws_filter_bank, LawsKernel};
pub use split::{balanced_split_indices, sample_balanced_subset, Fraction, SplitSpec};

/// Which channel or transform an image set carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColorTag {
    Gray,
    Rgb,
    Y,
    Cb,
    Cr,
    LStar,
    AStar,
    BStar,
    /// Output of the k-th 3×3 Laws kernel, k in 0..9.
    Laws(u8),
}

impl ColorTag {
    pub fn channels(self) -> usize {
        match self {
            ColorTag::Rgb => 3,
            _ => 1,
        }
    }

    pub fn name(self) -> String {
        match self {
            ColorTag::Gray => "gray".into(),
            ColorTag::Rgb => "rgb".into(),
            ColorTag::Y => "y".into(),
            ColorTag::Cb => "cb".into(),
            ColorTag::Cr => "cr".into(),
            ColorTag::LStar => "lstar".into(),
            ColorTag::AStar => "astar".into(),
            ColorTag::BStar => "bstar".into(),
            ColorTag::Laws(k) => format!("laws{k}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let tag = match s.trim().to_ascii_lowercase().as_str() {
            "gray" => ColorTag::Gray,
            "rgb" => ColorTag::Rgb,
            "y" => ColorTag::Y,
            "cb" => ColorTag::Cb,
            "cr" => ColorTag::Cr,
            "lstar" => ColorTag::LStar,
            "astar" => ColorTag::AStar,
            "bstar" => ColorTag::BStar,
            other => match other.strip_prefix("laws").and_then(|k| k.parse::<u8>().ok()) {
                Some(k) if k < 9 => ColorTag::Laws(k),
                _ => return Err(FfError::config(format!("unknown color tag `{s}`"))),
            },
        };
        Ok(tag)
    }
}

/// A batch of equally sized images stored N×H×W×C with pixels in real units
/// (decoders normalize 8-bit data to `[0, 1]`).
#[derive(Clone, Debug, PartialEq)]
pub struct ImageSet {
    pixels: Array4<f32>,
    labels: Option<Vec<usize>>,
    num_classes: usize,
    tag: ColorTag,
}

impl ImageSet {
    pub fn new(
        pixels: Array4<f32>,
        labels: Option<Vec<usize>>,
        num_classes: usize,
        tag: ColorTag,
    ) -> Result<Self> {
        if let Some(labels) = &labels {
            if labels.len() != pixels.len_of(Axis(0)) {
                return Err(FfError::dim(format!(
                    "{} labels for {} images",
                    labels.len(),
                    pixels.len_of(Axis(0))
                )));
            }
            if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
                return Err(FfError::format(format!(
                    "label {bad} outside [0, {num_classes})"
                )));
            }
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(FfError::format("non-finite pixel value"));
        }
        Ok(ImageSet {
            pixels,
            labels,
            num_classes,
            tag,
        })
    }

    /// Builds an unlabeled set; skips the label checks.
    pub fn unlabeled(pixels: Array4<f32>, tag: ColorTag) -> Result<Self> {
        Self::new(pixels, None, 0, tag)
    }

    pub fn len(&self) -> usize {
        self.pixels.len_of(Axis(0))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn height(&self) -> usize {
        self.pixels.len_of(Axis(1))
    }

    pub fn width(&self) -> usize {
        self.pixels.len_of(Axis(2))
    }

    pub fn channels(&self) -> usize {
        self.pixels.len_of(Axis(3))
    }

    /// Input dimension H·W·C of one image.
    pub fn dim_in(&self) -> usize {
        self.height() * self.width() * self.channels()
    }

    pub fn pixels(&self) -> &Array4<f32> {
        &self.pixels
    }

    pub fn into_pixels(self) -> Array4<f32> {
        self.pixels
    }

    pub fn image(&self, i: usize) -> ArrayView3<'_, f32> {
        self.pixels.index_axis(Axis(0), i)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[usize]> {
        self.labels().ok_or(FfError::MissingLabels)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn tag(&self) -> ColorTag {
        self.tag
    }

    pub fn with_tag(mut self, tag: ColorTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    /// Gathers the given images (in the given order).
    pub fn select(&self, indices: &[usize]) -> ImageSet {
        let pixels = self.pixels.select(Axis(0), indices);
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        ImageSet {
            pixels,
            labels,
            num_classes: self.num_classes,
            tag: self.tag,
        }
    }

    /// Stacks sets with identical geometry. Labels survive only if every part
    /// has them.
    pub fn concat(parts: &[&ImageSet]) -> Result<ImageSet> {
        let first = parts
            .first()
            .ok_or_else(|| FfError::dim("cannot concatenate zero image sets"))?;
        for p in parts {
            if (p.height(), p.width(), p.channels())
                != (first.height(), first.width(), first.channels())
            {
                return Err(FfError::dim("image geometry differs between sets"));
            }
        }
        let views: Vec<_> = parts.iter().map(|p| p.pixels.view()).collect();
        let pixels = ndarray::concatenate(Axis(0), &views)
            .map_err(|e| FfError::dim(e.to_string()))?;
        let labels = if parts.iter().all(|p| p.labels.is_some()) {
            Some(
                parts
                    .iter()
                    .flat_map(|p| p.labels.as_ref().unwrap().iter().copied())
                    .collect(),
            )
        } else {
            None
        };
        let num_classes = parts.iter().map(|p| p.num_classes).max().unwrap_or(0);
        Ok(ImageSet {
            pixels,
            labels,
            num_classes,
            tag: first.tag,
        })
    }
}
