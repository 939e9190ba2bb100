//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::env;
use std::path::{Path, PathBuf};

use ffcnn::dataio::{ColorTag, ImageSet};
use ndarray::Array4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// First existing directory among `$var` and the usual data locations that
/// contains every file in `required`.
pub fn find_data_dir(var: &str, subdir: &str, required: &[&str]) -> Option<PathBuf> {
    let mut candidates = Vec::new();
    if let Ok(dir) = env::var(var) {
        candidates.push(PathBuf::from(dir));
    }
    candidates.push(workspace_root().join("data").join(subdir));
    if let Ok(home) = env::var("HOME") {
        candidates.push(Path::new(&home).join("data").join(subdir));
    }
    candidates
        .into_iter()
        .find(|d| required.iter().all(|f| d.join(f).is_file()))
}

pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

pub fn mnist_dir() -> Option<PathBuf> {
    find_data_dir("FFCNN_MNIST_DIR", "mnist", &MNIST_FILES)
}

/// Synthetic 32×32 gray digits: each class draws a bar at its own position
/// and angle, plus pixel noise.
pub fn synthetic_set(n: usize, classes: usize, seed: u64) -> ImageSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut px = Array4::<f32>::zeros((n, 32, 32, 1));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        labels.push(c);
        let angle = std::f32::consts::PI * c as f32 / classes as f32;
        let (s, co) = angle.sin_cos();
        let shift = rng.random_range(-1.5f32..1.5);
        for y in 0..32 {
            for x in 0..32 {
                let (dy, dx) = (y as f32 - 15.5, x as f32 - 15.5);
                let dist = (dx * s - dy * co + shift).abs();
                let along = (dx * co + dy * s).abs();
                let ink = if dist < 2.0 && along < 11.0 { 0.9 } else { 0.0 };
                px[[i, y, x, 0]] = (ink + rng.random_range(0.0f32..0.1)).min(1.0);
            }
        }
    }
    ImageSet::new(px, Some(labels), classes, ColorTag::Gray).unwrap()
}
