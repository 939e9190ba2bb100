//! Dense linear-algebra and learning primitives shared by the conv, FC and
//! fusion stages.

mod kmeans;
mod lsq;
mod pca;
mod svm;

pub use kmeans::{kmeans, KmeansParams, KmeansResult};
pub use lsq::{default_ridge, gram, solve_least_squares, solve_normal_equations};
pub use pca::{apply_pca, covariance, fit_pca, fit_pca_energy, symmetric_eigen_desc, PcaModel};
pub use svm::{default_gamma, fit_rbf_svm, predict_rbf_svm, RbfSvmModel, SvmParams};

use ndarray::{ArrayView1, ArrayView2};

pub(crate) fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn to_dmatrix(m: ArrayView2<f64>) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

/// Row index of the largest entry; ties resolve to the lowest index.
pub fn argmax(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(array![0.1, 0.9, 0.2].view()), 1);
        assert_eq!(argmax(array![0.5, 0.5, 0.1].view()), 0);
    }
}
