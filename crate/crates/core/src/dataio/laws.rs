//! 3×3 Laws texture kernels.

use ndarray::{Array4, Axis, Zip};

use super::{to_luma, ColorTag, ImageSet};
use crate::{FfError, Result};

const L3: [f32; 3] = [1.0, 2.0, 1.0];
const E3: [f32; 3] = [-1.0, 0.0, 1.0];
const S3: [f32; 3] = [-1.0, 2.0, -1.0];

#[derive(Clone, Debug, PartialEq)]
pub struct LawsKernel {
    pub name: &'static str,
    pub weights: [[f32; 3]; 3],
}

/// The nine outer products `u ⊗ v` for u, v in {L3, E3, S3}, in
/// L3L3, L3E3, L3S3, E3L3, ..., S3S3 order.
pub fn laws_filter_bank() -> Vec<LawsKernel> {
    const NAMES: [&str; 9] = [
        "L3L3", "L3E3", "L3S3", "E3L3", "E3E3", "E3S3", "S3L3", "S3E3", "S3S3",
    ];
    let basis = [L3, E3, S3];
    let mut bank = Vec::with_capacity(9);
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            let mut weights = [[0.0; 3]; 3];
            for (r, row) in weights.iter_mut().enumerate() {
                for (c, w) in row.iter_mut().enumerate() {
                    *w = u[r] * v[c];
                }
            }
            bank.push(LawsKernel {
                name: NAMES[i * 3 + j],
                weights,
            });
        }
    }
    bank
}

fn filter(src: &Array4<f32>, kernel: &LawsKernel) -> Array4<f32> {
    let (n, h, w, _) = src.dim();
    let mut out = Array4::<f32>::zeros((n, h, w, 1));
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    Zip::from(out.outer_iter_mut())
        .and(src.outer_iter())
        .par_for_each(|mut dst, img| {
            for y in 0..h {
                for x in 0..w {
                    let mut acc = 0.0;
                    for (dy, row) in kernel.weights.iter().enumerate() {
                        let yy = clamp(y as isize + dy as isize - 1, h);
                        for (dx, &k) in row.iter().enumerate() {
                            let xx = clamp(x as isize + dx as isize - 1, w);
                            acc += k * img[[yy, xx, 0]];
                        }
                    }
                    dst[[y, x, 0]] = acc;
                }
            }
        });
    out
}

fn luma_plane(set: &ImageSet) -> Result<ImageSet> {
    if set.height() == 0 || set.width() == 0 {
        return Err(FfError::dim("empty image plane"));
    }
    let gray = to_luma(set)?;
    if gray.pixels().len_of(Axis(3)) != 1 {
        return Err(FfError::dim("laws filtering needs one channel"));
    }
    Ok(gray)
}

/// Filters a grayscale set (RGB is reduced to luma first) with every kernel
/// of the bank, "same" size with edge replication. Output k is tagged
/// `Laws(k)`.
pub fn apply_laws(set: &ImageSet) -> Result<Vec<ImageSet>> {
    let gray = luma_plane(set)?;
    let labels = set.labels().map(<[usize]>::to_vec);
    laws_filter_bank()
        .iter()
        .enumerate()
        .map(|(k, kernel)| {
            ImageSet::new(
                filter(gray.pixels(), kernel),
                labels.clone(),
                set.num_classes(),
                ColorTag::Laws(k as u8),
            )
        })
        .collect()
}

/// Only the `k`-th map of [`apply_laws`].
pub fn apply_laws_kernel(set: &ImageSet, k: usize) -> Result<ImageSet> {
    let bank = laws_filter_bank();
    let kernel = bank
        .get(k)
        .ok_or_else(|| FfError::config(format!("laws kernel index {k} outside 0..9")))?;
    let gray = luma_plane(set)?;
    ImageSet::new(
        filter(gray.pixels(), kernel),
        set.labels().map(<[usize]>::to_vec),
        set.num_classes(),
        ColorTag::Laws(k as u8),
    )
}
