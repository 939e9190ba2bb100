use ndarray::{s, Array1, Array2, Array4, ArrayView1, ArrayView2, ArrayView4, Axis};
use rayon::prelude::*;

use super::patches::{copy_patch, max_patch_norm, PatchMoments, Window};
use crate::dataio::ImageSet;
use crate::numerics::{covariance, symmetric_eigen_desc};
use crate::{FfError, Result};

/// One Saab stage: a DC kernel, `k − 1` orthonormal AC kernels and a single
/// bias added to every response.
#[derive(Clone, Debug, PartialEq)]
pub struct SaabLayer {
    pub window: Window,
    /// k × n; row 0 is the DC kernel `1/√n`.
    pub kernels: Array2<f64>,
    pub bias: f64,
    /// Variance of each AC kernel's response on the fitting patches.
    pub ac_energy: Array1<f64>,
}

impl SaabLayer {
    pub fn num_kernels(&self) -> usize {
        self.kernels.nrows()
    }

    pub fn dc_kernel(&self) -> ArrayView1<'_, f64> {
        self.kernels.row(0)
    }

    pub fn ac_kernels(&self) -> ArrayView2<'_, f64> {
        self.kernels.slice(s![1.., ..])
    }

    /// Builds the kernels from patch moments and a precomputed bias.
    pub(crate) fn from_moments(
        moments: &PatchMoments,
        num_kernels: usize,
        window: Window,
        bias: f64,
    ) -> Result<Self> {
        let n = window.patch_len();
        if moments.mean.len() != n {
            return Err(FfError::dim(format!(
                "patch length {} does not match window ({n})",
                moments.mean.len()
            )));
        }
        if num_kernels == 0 || num_kernels > n {
            return Err(FfError::dim(format!(
                "{num_kernels} kernels requested for patch length {n}"
            )));
        }
        if moments.count < num_kernels {
            return Err(FfError::dim(format!(
                "{} patches cannot fit {num_kernels} kernels",
                moments.count
            )));
        }
        let dc = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
        // Covariance of DC-removed patches: P·C·P with P = I − dc·dcᵀ.
        let projector = Array2::<f64>::eye(n)
            - dc.view()
                .insert_axis(Axis(1))
                .dot(&dc.view().insert_axis(Axis(0)));
        let ac_cov = projector.dot(&moments.covariance).dot(&projector);
        let (values, vectors) = symmetric_eigen_desc(ac_cov.view());

        let mut kernels = Array2::<f64>::zeros((num_kernels, n));
        kernels.row_mut(0).assign(&dc);
        let mut energy = Vec::with_capacity(num_kernels - 1);
        let mut accepted = 1;
        for (v, &lambda) in vectors.rows().into_iter().zip(values.iter()) {
            if accepted == num_kernels {
                break;
            }
            // Re-orthogonalize; eigenvectors of a degenerate null space can
            // mix in the DC direction.
            let mut cand = v.to_owned();
            for prev in kernels.rows().into_iter().take(accepted) {
                let proj = cand.dot(&prev);
                cand.scaled_add(-proj, &prev);
            }
            let norm = cand.dot(&cand).sqrt();
            if norm < 1e-6 {
                continue;
            }
            cand /= norm;
            let sign = cand.iter().find(|x| x.abs() > 1e-10).map_or(1.0, |x| x.signum());
            kernels.row_mut(accepted).assign(&(cand * sign));
            energy.push(lambda);
            accepted += 1;
        }
        if accepted < num_kernels {
            return Err(FfError::dim("could not complete an orthonormal kernel set"));
        }
        Ok(SaabLayer {
            window,
            kernels,
            bias,
            ac_energy: Array1::from(energy),
        })
    }

    /// Responses `kernels·patch + bias` over the valid grid, then, when
    /// `pool` is set, odd trailing rows/columns are dropped and 2×2 max
    /// pooling is applied. Work is done in image chunks so the unpooled map
    /// is never materialized for the whole batch.
    pub(crate) fn apply_maps(&self, maps: ArrayView4<f32>, pool: bool) -> Result<Array4<f32>> {
        let (n_img, h, w, c) = maps.dim();
        self.window.check_channels(c)?;
        let (oh, ow) = self.window.output_grid(h, w)?;
        let k = self.num_kernels();
        let (ph, pw) = if pool { (oh / 2, ow / 2) } else { (oh, ow) };
        if pool && (ph == 0 || pw == 0) {
            return Err(FfError::dim("response map too small to pool"));
        }
        let n = self.window.patch_len();
        let kernels_t: Array2<f32> = self.kernels.t().mapv(|v| v as f32);
        let bias = self.bias as f32;
        let chunk = (4_000_000 / (oh * ow * n).max(1)).clamp(1, 512);

        let mut out = Array4::<f32>::zeros((n_img, ph, pw, k));
        out.axis_chunks_iter_mut(Axis(0), chunk)
            .into_par_iter()
            .zip(maps.axis_chunks_iter(Axis(0), chunk).into_par_iter())
            .for_each(|(mut dst, src)| {
                let cn = src.len_of(Axis(0));
                let mut cols = Array2::<f32>::zeros((cn * oh * ow, n));
                let mut r = 0;
                for img in src.outer_iter() {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            copy_patch(img, &self.window, oy, ox, cols.row_mut(r).as_slice_mut().unwrap());
                            r += 1;
                        }
                    }
                }
                let mut resp = cols.dot(&kernels_t);
                resp += bias;
                let resp = resp.into_shape_with_order((cn, oh, ow, k)).expect("shape");
                if pool {
                    for i in 0..cn {
                        for y in 0..ph {
                            for x in 0..pw {
                                for ch in 0..k {
                                    let m = resp[[i, 2 * y, 2 * x, ch]]
                                        .max(resp[[i, 2 * y, 2 * x + 1, ch]])
                                        .max(resp[[i, 2 * y + 1, 2 * x, ch]])
                                        .max(resp[[i, 2 * y + 1, 2 * x + 1, ch]]);
                                    dst[[i, y, x, ch]] = m;
                                }
                            }
                        }
                    }
                } else {
                    dst.assign(&resp);
                }
            });
        Ok(out)
    }
}

/// Fits a Saab layer on explicit patch rows. The bias is the largest patch
/// norm, which bounds every unit-kernel response from below by zero.
pub fn fit_saab_layer(patches: ArrayView2<f64>, num_kernels: usize, window: Window) -> Result<SaabLayer> {
    if patches.ncols() != window.patch_len() {
        return Err(FfError::dim("patch width does not match window"));
    }
    let (mean, cov) = covariance(patches)?;
    let moments = PatchMoments {
        count: patches.nrows(),
        mean,
        covariance: cov,
    };
    let bias = patches
        .rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt())
        .fold(0.0, f64::max);
    SaabLayer::from_moments(&moments, num_kernels, window, bias)
}

/// Fits a Saab layer on every patch of `maps` with the bias bound taken over
/// all positions.
pub(crate) fn fit_on_maps(
    maps: ArrayView4<f32>,
    window: Window,
    num_kernels: usize,
    patch_cap: usize,
    seed: u64,
) -> Result<SaabLayer> {
    let moments = super::patches::sampled_moments(maps, &window, patch_cap, seed)?;
    let bias = max_patch_norm(maps, &window)?;
    SaabLayer::from_moments(&moments, num_kernels, window, bias)
}

pub fn apply_saab_layer(set: &ImageSet, layer: &SaabLayer) -> Result<ImageSet> {
    let maps = layer.apply_maps(set.pixels().view(), false)?;
    ImageSet::new(
        maps,
        set.labels().map(<[usize]>::to_vec),
        set.num_classes(),
        set.tag(),
    )
}

/// 2×2 max pooling with stride 2.
pub fn max_pool(set: &ImageSet) -> Result<ImageSet> {
    let (n, h, w, c) = set.pixels().dim();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(FfError::dim(format!("cannot 2×2-pool an {h}×{w} map")));
    }
    let src = set.pixels();
    let out = Array4::from_shape_fn((n, h / 2, w / 2, c), |(i, y, x, ch)| {
        src[[i, 2 * y, 2 * x, ch]]
            .max(src[[i, 2 * y, 2 * x + 1, ch]])
            .max(src[[i, 2 * y + 1, 2 * x, ch]])
            .max(src[[i, 2 * y + 1, 2 * x + 1, ch]])
    });
    ImageSet::new(
        out,
        set.labels().map(<[usize]>::to_vec),
        set.num_classes(),
        set.tag(),
    )
}
