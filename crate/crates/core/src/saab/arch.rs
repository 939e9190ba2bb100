use std::fmt;
use std::str::FromStr;

use crate::{FfError, Result};

/// One conv stage: square window and number of Saab kernels (DC included).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub window: usize,
    pub kernels: usize,
}

/// The four two-stage conv architectures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArchPreset {
    Ff1,
    Ff2,
    Ff3,
    Ff4,
}

/// Which column of the architecture table applies to an input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InputKind {
    /// MNIST-style grayscale digits.
    Grayscale,
    Rgb,
    /// One channel split off a color image (YCbCr/Lab channel or Laws map).
    SingleChannel,
}

impl InputKind {
    pub fn channels(self) -> usize {
        match self {
            InputKind::Rgb => 3,
            _ => 1,
        }
    }
}

impl ArchPreset {
    pub const ALL: [ArchPreset; 4] = [ArchPreset::Ff1, ArchPreset::Ff2, ArchPreset::Ff3, ArchPreset::Ff4];

    pub fn stages(self, input: InputKind) -> [ConvSpec; 2] {
        use ArchPreset::*;
        use InputKind::*;
        let (w1, w2) = match self {
            Ff1 => (5, 5),
            Ff2 => (3, 5),
            Ff3 => (5, 3),
            Ff4 => (3, 3),
        };
        let (k1, k2) = match (self, input) {
            (_, Grayscale) => (6, 16),
            (Ff1 | Ff3, Rgb) => (32, 64),
            (Ff2, Rgb) => (24, 64),
            (Ff4, Rgb) => (24, 48),
            (Ff1 | Ff3, SingleChannel) => (16, 32),
            (Ff2, SingleChannel) => (8, 32),
            (Ff4, SingleChannel) => (8, 24),
        };
        [
            ConvSpec {
                window: w1,
                kernels: k1,
            },
            ConvSpec {
                window: w2,
                kernels: k2,
            },
        ]
    }
}

impl fmt::Display for ArchPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            ArchPreset::Ff1 => 1,
            ArchPreset::Ff2 => 2,
            ArchPreset::Ff3 => 3,
            ArchPreset::Ff4 => 4,
        };
        write!(f, "FF-{n}")
    }
}

impl FromStr for ArchPreset {
    type Err = FfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('_', "-").as_str() {
            "FF-1" | "FF1" => Ok(ArchPreset::Ff1),
            "FF-2" | "FF2" => Ok(ArchPreset::Ff2),
            "FF-3" | "FF3" => Ok(ArchPreset::Ff3),
            "FF-4" | "FF4" => Ok(ArchPreset::Ff4),
            _ => Err(FfError::config(format!("unknown architecture `{s}`"))),
        }
    }
}

/// Everything needed to fit a conv pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct ArchConfig {
    pub stages: Vec<ConvSpec>,
    /// Max-pool after every stage.
    pub pool: bool,
    /// C-PCA width for 5×5 (25-value) channel maps. Other map sizes keep
    /// the same proportion.
    pub cpca_dim: usize,
    /// Patches sampled per stage for covariance estimation (0 = all).
    pub patch_cap: usize,
    pub seed: u64,
}

pub const DEFAULT_PATCH_CAP: usize = 200_000;

impl ArchConfig {
    pub fn preset(preset: ArchPreset, input: InputKind, cpca_dim: usize, seed: u64) -> Self {
        ArchConfig {
            stages: preset.stages(input).to_vec(),
            pool: true,
            cpca_dim,
            patch_cap: DEFAULT_PATCH_CAP,
            seed,
        }
    }

    /// C-PCA width for channel maps of `spatial` values.
    pub fn cpca_dim_for(&self, spatial: usize) -> usize {
        if spatial == 25 {
            self.cpca_dim.min(spatial)
        } else {
            let scaled = (spatial as f64 * self.cpca_dim as f64 / 25.0).round() as usize;
            scaled.clamp(1, spatial)
        }
    }
}
