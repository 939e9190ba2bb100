use nalgebra::{Cholesky, DMatrix};
use ndarray::{Array2, ArrayView2};

use super::to_dmatrix;
use crate::{FfError, Result};

/// `ZᵀZ`
pub fn gram(z: ArrayView2<f64>) -> Array2<f64> {
    z.t().dot(&z)
}

/// `scale · trace(G) / d`, the ridge used by the FC stages.
pub fn default_ridge(gram: ArrayView2<f64>, scale: f64) -> f64 {
    let d = gram.nrows().max(1);
    scale * gram.diag().sum() / d as f64
}

/// Solves `(G + ridge·I) W = B` by Cholesky factorization.
pub fn solve_normal_equations(
    gram: ArrayView2<f64>,
    rhs: ArrayView2<f64>,
    ridge: f64,
) -> Result<Array2<f64>> {
    let d = gram.nrows();
    if gram.ncols() != d || rhs.nrows() != d {
        return Err(FfError::dim("normal equations shape mismatch"));
    }
    if !(ridge >= 0.0) {
        return Err(FfError::config(format!("ridge {ridge} must be non-negative")));
    }
    let mut a = to_dmatrix(gram);
    for i in 0..d {
        a[(i, i)] += ridge;
    }
    let max_diag = (0..d).map(|i| a[(i, i)]).fold(0.0, f64::max);
    let chol = Cholesky::new(a).ok_or(FfError::Singular)?;
    // A PSD matrix that is singular in exact arithmetic can still factor
    // with a tiny pivot; treat that as singular too.
    let l = chol.l_dirty();
    let min_pivot = (0..d).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if d > 0 && !(min_pivot > 1e-13 * max_diag) {
        return Err(FfError::Singular);
    }
    let b: DMatrix<f64> = to_dmatrix(rhs);
    let w = chol.solve(&b);
    Ok(Array2::from_shape_fn((d, rhs.ncols()), |(i, j)| w[(i, j)]))
}

/// `W = (ZᵀZ + ridge·I)⁻¹ ZᵀY` with samples as rows.
pub fn solve_least_squares(z: ArrayView2<f64>, y: ArrayView2<f64>, ridge: f64) -> Result<Array2<f64>> {
    if z.nrows() != y.nrows() {
        return Err(FfError::dim(format!(
            "{} feature rows vs {} target rows",
            z.nrows(),
            y.nrows()
        )));
    }
    if z.nrows() == 0 {
        return Err(FfError::dim("least squares with no samples"));
    }
    let g = gram(z);
    let zty = z.t().dot(&y);
    solve_normal_equations(g.view(), zty.view(), ridge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn square_invertible_interpolates() {
        let z = array![[2.0, 1.0, 0.0], [0.0, 1.0, 3.0], [1.0, 0.0, 1.0]];
        let w = solve_least_squares(z.view(), z.view(), 0.0).unwrap();
        for ((i, j), v) in w.indexed_iter() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_targets_zero_weights() {
        let z = array![[1.0, 2.0], [3.0, 4.0], [5.0, 7.0]];
        let w = solve_least_squares(z.view(), Array2::zeros((3, 2)).view(), 0.0).unwrap();
        assert!(w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn singular_without_ridge() {
        let z = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let y = array![[1.0], [2.0], [3.0]];
        assert!(matches!(
            solve_least_squares(z.view(), y.view(), 0.0),
            Err(FfError::Singular)
        ));
        assert!(solve_least_squares(z.view(), y.view(), 1e-3).is_ok());
    }

    #[test]
    fn row_mismatch_is_dim_error() {
        let z = Array2::<f64>::zeros((3, 2));
        let y = Array2::<f64>::zeros((2, 1));
        assert!(matches!(
            solve_least_squares(z.view(), y.view(), 1.0),
            Err(FfError::Dim(_))
        ));
    }

    #[test]
    fn default_ridge_scales_trace() {
        let g = array![[2.0, 0.0], [0.0, 4.0]];
        assert!((default_ridge(g.view(), 1e-4) - 3e-4).abs() < 1e-15);
    }
}
