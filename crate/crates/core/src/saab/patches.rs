use ndarray::{Array1, Array2, ArrayView3, ArrayView4, Axis};
use rand::seq::index;

use crate::dataio::ImageSet;
use crate::seeds;
use crate::{FfError, Result};

/// Sliding-window geometry of one conv stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub height: usize,
    pub width: usize,
    pub stride: usize,
    pub in_channels: usize,
}

impl Window {
    pub fn square(size: usize, in_channels: usize) -> Self {
        Window {
            height: size,
            width: size,
            stride: 1,
            in_channels,
        }
    }

    /// Flattened patch length `h·w·c`.
    pub fn patch_len(&self) -> usize {
        self.height * self.width * self.in_channels
    }

    /// Valid-mode output grid for an `h×w` map.
    pub fn output_grid(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        if self.stride == 0 || self.height == 0 || self.width == 0 {
            return Err(FfError::dim("window and stride must be positive"));
        }
        if self.height > h || self.width > w {
            return Err(FfError::dim(format!(
                "{}×{} window does not fit {h}×{w} image",
                self.height, self.width
            )));
        }
        Ok((
            (h - self.height) / self.stride + 1,
            (w - self.width) / self.stride + 1,
        ))
    }

    pub(crate) fn check_channels(&self, c: usize) -> Result<()> {
        if c != self.in_channels {
            return Err(FfError::dim(format!(
                "window expects {} channels, maps have {c}",
                self.in_channels
            )));
        }
        Ok(())
    }
}

/// Copies the patch at output cell `(oy, ox)` into `out`, channels fastest
/// then columns then rows.
pub(crate) fn copy_patch(img: ArrayView3<f32>, win: &Window, oy: usize, ox: usize, out: &mut [f32]) {
    let c = win.in_channels;
    let row_len = win.width * c;
    let (y0, x0) = (oy * win.stride, ox * win.stride);
    match img.as_slice() {
        Some(flat) => {
            let w = img.len_of(Axis(1));
            for dy in 0..win.height {
                let start = ((y0 + dy) * w + x0) * c;
                out[dy * row_len..(dy + 1) * row_len].copy_from_slice(&flat[start..start + row_len]);
            }
        }
        None => {
            let mut k = 0;
            for dy in 0..win.height {
                for dx in 0..win.width {
                    for ch in 0..c {
                        out[k] = img[[y0 + dy, x0 + dx, ch]];
                        k += 1;
                    }
                }
            }
        }
    }
}

/// All valid-mode patches of every image, one row per patch, images in
/// order and positions row-major within an image.
pub fn extract_patches(set: &ImageSet, win: &Window) -> Result<Array2<f64>> {
    win.check_channels(set.channels())?;
    let (oh, ow) = win.output_grid(set.height(), set.width())?;
    let n = win.patch_len();
    let mut out = Array2::<f64>::zeros((set.len() * oh * ow, n));
    let mut buf = vec![0f32; n];
    let mut row = 0;
    for img in set.pixels().outer_iter() {
        for oy in 0..oh {
            for ox in 0..ow {
                copy_patch(img, win, oy, ox, &mut buf);
                for (d, &s) in out.row_mut(row).iter_mut().zip(&buf) {
                    *d = f64::from(s);
                }
                row += 1;
            }
        }
    }
    Ok(out)
}

/// First and second moments of a (possibly sampled) patch population.
pub(crate) struct PatchMoments {
    pub count: usize,
    pub mean: Array1<f64>,
    pub covariance: Array2<f64>,
}

const MOMENT_CHUNK: usize = 4096;

/// Moments over at most `cap` patch positions drawn without replacement.
pub(crate) fn sampled_moments(
    maps: ArrayView4<f32>,
    win: &Window,
    cap: usize,
    seed: u64,
) -> Result<PatchMoments> {
    let (n_img, h, w, c) = maps.dim();
    win.check_channels(c)?;
    let (oh, ow) = win.output_grid(h, w)?;
    let per_img = oh * ow;
    let total = n_img * per_img;
    if total == 0 {
        return Err(FfError::dim("no patches to fit"));
    }
    let positions: Vec<usize> = if cap == 0 || total <= cap {
        (0..total).collect()
    } else {
        let mut v = index::sample(&mut seeds::rng(seed), total, cap).into_vec();
        v.sort_unstable();
        v
    };
    let n = win.patch_len();
    let mut sum = Array1::<f64>::zeros(n);
    let mut second = Array2::<f64>::zeros((n, n));
    let mut buf = vec![0f32; n];
    for chunk in positions.chunks(MOMENT_CHUNK) {
        let mut block = Array2::<f64>::zeros((chunk.len(), n));
        for (r, &pos) in chunk.iter().enumerate() {
            let (i, cell) = (pos / per_img, pos % per_img);
            copy_patch(maps.index_axis(Axis(0), i), win, cell / ow, cell % ow, &mut buf);
            for (d, &s) in block.row_mut(r).iter_mut().zip(&buf) {
                *d = f64::from(s);
            }
        }
        sum += &block.sum_axis(Axis(0));
        second += &block.t().dot(&block);
    }
    let count = positions.len();
    let mean = sum / count as f64;
    let outer = mean
        .view()
        .insert_axis(Axis(1))
        .dot(&mean.view().insert_axis(Axis(0)));
    let covariance = second / count as f64 - outer;
    Ok(PatchMoments {
        count,
        mean,
        covariance,
    })
}

/// Largest patch L2 norm over every valid position of every map.
pub(crate) fn max_patch_norm(maps: ArrayView4<f32>, win: &Window) -> Result<f64> {
    let (_, h, w, c) = maps.dim();
    win.check_channels(c)?;
    let (oh, ow) = win.output_grid(h, w)?;
    let mut best = 0.0f64;
    // Per-image summed-area table of squared pixels.
    let mut table = vec![0f64; (h + 1) * (w + 1)];
    for img in maps.outer_iter() {
        for y in 0..h {
            let mut row_acc = 0.0;
            for x in 0..w {
                let sq: f64 = (0..c).map(|ch| f64::from(img[[y, x, ch]]).powi(2)).sum();
                row_acc += sq;
                table[(y + 1) * (w + 1) + x + 1] = table[y * (w + 1) + x + 1] + row_acc;
            }
        }
        for oy in 0..oh {
            for ox in 0..ow {
                let (y0, x0) = (oy * win.stride, ox * win.stride);
                let (y1, x1) = (y0 + win.height, x0 + win.width);
                let s = table[y1 * (w + 1) + x1] - table[y0 * (w + 1) + x1] - table[y1 * (w + 1) + x0]
                    + table[y0 * (w + 1) + x0];
                best = best.max(s);
            }
        }
    }
    Ok(best.max(0.0).sqrt())
}
