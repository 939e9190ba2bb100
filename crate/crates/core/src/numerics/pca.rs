use nalgebra::SymmetricEigen;
use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::to_dmatrix;
use crate::{FfError, Result};

/// Principal axes of a data set.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// k×d, orthonormal rows in descending eigenvalue order.
    pub components: Array2<f64>,
    pub eigenvalues: Array1<f64>,
}

const CHUNK_ROWS: usize = 4096;

/// Column means and the population covariance `(1/n)·XcᵀXc`, accumulated in
/// row chunks so large patch matrices never need a centered copy.
pub fn covariance(data: ArrayView2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = data.nrows();
    if n == 0 {
        return Err(FfError::dim("covariance of an empty matrix"));
    }
    let mean = data.mean_axis(Axis(0)).expect("non-empty");
    let d = data.ncols();
    let mut cov = Array2::<f64>::zeros((d, d));
    for chunk in data.axis_chunks_iter(Axis(0), CHUNK_ROWS) {
        let centered = &chunk - &mean;
        cov += &centered.t().dot(&centered);
    }
    cov /= n as f64;
    Ok((mean, cov))
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending and
/// clamped at zero; eigenvectors returned as rows with the first
/// non-negligible entry made positive.
pub fn symmetric_eigen_desc(sym: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let d = sym.nrows();
    let eig = SymmetricEigen::new(to_dmatrix(sym));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut values = Array1::zeros(d);
    let mut vectors = Array2::zeros((d, d));
    for (row, &idx) in order.iter().enumerate() {
        values[row] = eig.eigenvalues[idx].max(0.0);
        let col = eig.eigenvectors.column(idx);
        let sign = col
            .iter()
            .find(|v| v.abs() > 1e-10)
            .map_or(1.0, |v| v.signum());
        for j in 0..d {
            vectors[[row, j]] = sign * col[j];
        }
    }
    (values, vectors)
}

fn full_decomposition(data: ArrayView2<f64>) -> Result<(Array1<f64>, Array1<f64>, Array2<f64>)> {
    if data.nrows() < 2 {
        return Err(FfError::dim(format!(
            "pca needs at least 2 samples, got {}",
            data.nrows()
        )));
    }
    let (mean, cov) = covariance(data)?;
    let (values, vectors) = symmetric_eigen_desc(cov.view());
    Ok((mean, values, vectors))
}

/// Top-`k` principal components of the rows of `data`.
pub fn fit_pca(data: ArrayView2<f64>, k: usize) -> Result<PcaModel> {
    let (n, d) = data.dim();
    if k == 0 || k > n.min(d) {
        return Err(FfError::dim(format!(
            "pca rank {k} outside [1, {}]",
            n.min(d)
        )));
    }
    let (mean, values, vectors) = full_decomposition(data)?;
    Ok(PcaModel {
        mean,
        components: vectors.slice(s![..k, ..]).to_owned(),
        eigenvalues: values.slice(s![..k]).to_owned(),
    })
}

/// PCA keeping the smallest number of components whose eigenvalues carry at
/// least `threshold` of the total eigenvalue mass.
pub fn fit_pca_energy(data: ArrayView2<f64>, threshold: f64) -> Result<PcaModel> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(FfError::config(format!(
            "energy threshold {threshold} outside (0, 1]"
        )));
    }
    let (n, d) = data.dim();
    let (mean, values, vectors) = full_decomposition(data)?;
    let max_k = n.min(d);
    let total: f64 = values.sum();
    let mut k = max_k;
    if total > 0.0 {
        let mut acc = 0.0;
        for (i, v) in values.iter().take(max_k).enumerate() {
            acc += v;
            if acc >= threshold * total * (1.0 - 1e-12) {
                k = i + 1;
                break;
            }
        }
        // Components beyond the numerical rank carry no energy.
        if threshold >= 1.0 {
            let rank = values.iter().filter(|&&v| v > total * 1e-12).count();
            k = rank.clamp(1, max_k);
        }
    } else {
        k = 1;
    }
    Ok(PcaModel {
        mean,
        components: vectors.slice(s![..k, ..]).to_owned(),
        eigenvalues: values.slice(s![..k]).to_owned(),
    })
}

impl PcaModel {
    pub fn dim_in(&self) -> usize {
        self.mean.len()
    }

    pub fn dim_out(&self) -> usize {
        self.components.nrows()
    }

    /// `(data − mean)·componentsᵀ`
    pub fn transform(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        if data.ncols() != self.dim_in() {
            return Err(FfError::dim(format!(
                "pca expects width {}, got {}",
                self.dim_in(),
                data.ncols()
            )));
        }
        Ok((&data - &self.mean).dot(&self.components.t()))
    }

    pub fn inverse_transform(&self, coeffs: ArrayView2<f64>) -> Result<Array2<f64>> {
        if coeffs.ncols() != self.dim_out() {
            return Err(FfError::dim("coefficient width does not match pca rank"));
        }
        Ok(coeffs.dot(&self.components) + &self.mean)
    }
}

pub fn apply_pca(model: &PcaModel, data: ArrayView2<f64>) -> Result<Array2<f64>> {
    model.transform(data)
}
