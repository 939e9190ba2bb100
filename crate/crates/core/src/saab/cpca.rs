use ndarray::{s, Array2, ArrayView4, Axis};
use rayon::prelude::*;

use crate::numerics::{covariance, symmetric_eigen_desc, PcaModel};
use crate::{FfError, Result};

/// One PCA per channel over that channel's flattened spatial map.
#[derive(Clone, Debug, PartialEq)]
pub struct CpcaModel {
    pub channels: Vec<PcaModel>,
    pub spatial_dim: usize,
    pub reduced_dim: usize,
}

fn channel_matrix(maps: ArrayView4<f32>, ch: usize) -> Array2<f64> {
    let (n, h, w, _) = maps.dim();
    let plane = maps.index_axis(Axis(3), ch);
    Array2::from_shape_fn((n, h * w), |(i, k)| f64::from(plane[[i, k / w, k % w]]))
}

/// Fits one spatial PCA per channel keeping `reduced_dim` components.
/// A single sample is allowed; its components span an arbitrary basis.
pub fn fit_cpca(maps: ArrayView4<f32>, reduced_dim: usize) -> Result<CpcaModel> {
    let (n, h, w, c) = maps.dim();
    let spatial = h * w;
    if reduced_dim == 0 || reduced_dim > spatial {
        return Err(FfError::dim(format!(
            "c-pca width {reduced_dim} outside [1, {spatial}]"
        )));
    }
    if n == 0 || c == 0 {
        return Err(FfError::dim("c-pca on empty maps"));
    }
    let channels = (0..c)
        .into_par_iter()
        .map(|ch| {
            let data = channel_matrix(maps, ch);
            let (mean, cov) = covariance(data.view())?;
            let (values, vectors) = symmetric_eigen_desc(cov.view());
            Ok(PcaModel {
                mean,
                components: vectors.slice(s![..reduced_dim, ..]).to_owned(),
                eigenvalues: values.slice(s![..reduced_dim]).to_owned(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CpcaModel {
        channels,
        spatial_dim: spatial,
        reduced_dim,
    })
}

impl CpcaModel {
    pub fn output_dim(&self) -> usize {
        self.channels.len() * self.reduced_dim
    }

    /// N × (channels·s′), channel-major.
    pub fn transform(&self, maps: ArrayView4<f32>) -> Result<Array2<f64>> {
        let (n, h, w, c) = maps.dim();
        if c != self.channels.len() || h * w != self.spatial_dim {
            return Err(FfError::dim(format!(
                "c-pca fitted on {} channels × {} values, got {c} × {}",
                self.channels.len(),
                self.spatial_dim,
                h * w
            )));
        }
        let mut out = Array2::<f64>::zeros((n, self.output_dim()));
        for (ch, model) in self.channels.iter().enumerate() {
            let reduced = model.transform(channel_matrix(maps, ch).view())?;
            out.slice_mut(s![.., ch * self.reduced_dim..(ch + 1) * self.reduced_dim])
                .assign(&reduced);
        }
        Ok(out)
    }
}

pub fn apply_cpca(model: &CpcaModel, maps: ArrayView4<f32>) -> Result<Array2<f64>> {
    model.transform(maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array4;

    fn maps() -> Array4<f32> {
        Array4::from_shape_fn((7, 5, 5, 3), |(i, y, x, c)| {
            (((i * 13 + y * 5 + x * 3 + c * 11) % 19) as f32) * 0.1
        })
    }

    #[test]
    fn output_widths() {
        let m = fit_cpca(maps().view(), 4).unwrap();
        assert_eq!(m.output_dim(), 12);
        assert_eq!(m.transform(maps().view()).unwrap().dim(), (7, 12));
    }

    #[test]
    fn full_width_is_lossless() {
        let data = maps();
        let m = fit_cpca(data.view(), 25).unwrap();
        let z = m.transform(data.view()).unwrap();
        for ch in 0..3 {
            let coeffs = z.slice(s![.., ch * 25..(ch + 1) * 25]);
            let back = m.channels[ch].inverse_transform(coeffs).unwrap();
            let orig = channel_matrix(data.view(), ch);
            for (a, b) in back.iter().zip(orig.iter()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn width_checks() {
        assert!(matches!(fit_cpca(maps().view(), 26), Err(FfError::Dim(_))));
        let m = fit_cpca(maps().view(), 5).unwrap();
        let wrong = Array4::<f32>::zeros((1, 4, 4, 3));
        assert!(matches!(m.transform(wrong.view()), Err(FfError::Dim(_))));
    }

    #[test]
    fn single_sample_fits() {
        let one = Array4::<f32>::from_elem((1, 5, 5, 2), 0.5);
        let m = fit_cpca(one.view(), 20).unwrap();
        let z = m.transform(one.view()).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-12));
    }
}
