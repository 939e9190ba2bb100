use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use crate::numerics::{default_ridge, gram, solve_normal_equations};
use crate::{FfError, Result};

/// Ridge strength of a least-squares stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ridge {
    Fixed(f64),
    /// `scale · trace(ZᵀZ) / d` on the augmented design matrix.
    TraceScaled(f64),
}

impl Default for Ridge {
    fn default() -> Self {
        Ridge::TraceScaled(1e-4)
    }
}

/// An affine least-squares regressor, optionally rectified.
#[derive(Clone, Debug, PartialEq)]
pub struct LsrStage {
    /// (d + 1) × m; the last row is the bias.
    pub weights: Array2<f64>,
    pub apply_relu: bool,
}

impl LsrStage {
    pub fn input_dim(&self) -> usize {
        self.weights.nrows() - 1
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }

    /// `relu([z, 1]·W)` row-wise (no ReLU on a linear stage).
    pub fn apply(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        let d = self.input_dim();
        if z.ncols() != d {
            return Err(FfError::dim(format!("stage expects width {d}, got {}", z.ncols())));
        }
        let mut out = z.dot(&self.weights.slice(s![..d, ..]));
        out += &self.weights.row(d);
        if self.apply_relu {
            out.mapv_inplace(|v| v.max(0.0));
        }
        Ok(out)
    }
}

pub fn apply_stage(stage: &LsrStage, z: ArrayView2<f64>) -> Result<Array2<f64>> {
    stage.apply(z)
}

pub(crate) fn augment(z: ArrayView2<f64>) -> Array2<f64> {
    let mut a = Array2::ones((z.nrows(), z.ncols() + 1));
    a.slice_mut(s![.., ..z.ncols()]).assign(&z);
    a
}

/// Solves the affine regression of `y` on `z`.
pub(crate) fn fit_lsr(z: ArrayView2<f64>, y: ArrayView2<f64>, ridge: Ridge, apply_relu: bool) -> Result<LsrStage> {
    if z.nrows() != y.nrows() {
        return Err(FfError::dim(format!(
            "{} feature rows vs {} target rows",
            z.nrows(),
            y.nrows()
        )));
    }
    if z.nrows() == 0 {
        return Err(FfError::dim("least-squares stage with no rows"));
    }
    let za = augment(z);
    let g = gram(za.view());
    let lambda = match ridge {
        Ridge::Fixed(r) => r,
        Ridge::TraceScaled(scale) => default_ridge(g.view(), scale),
    };
    let rhs = za.t().dot(&y);
    let weights = solve_normal_equations(g.view(), rhs.view(), lambda)?;
    Ok(LsrStage {
        weights,
        apply_relu,
    })
}

/// Rectified stage fitted on labeled rows with one-hot pseudo-labels stacked
/// over selected unlabeled rows with soft pseudo-labels.
pub fn fit_ssl_stage(
    z_l: ArrayView2<f64>,
    y_p: ArrayView2<f64>,
    z_ul: ArrayView2<f64>,
    p_ul: ArrayView2<f64>,
    ridge: Ridge,
) -> Result<LsrStage> {
    if z_l.ncols() != z_ul.ncols() && z_ul.nrows() > 0 {
        return Err(FfError::dim("labeled and unlabeled feature widths differ"));
    }
    if y_p.ncols() != p_ul.ncols() && p_ul.nrows() > 0 {
        return Err(FfError::dim("one-hot and soft target widths differ"));
    }
    if z_l.nrows() != y_p.nrows() || z_ul.nrows() != p_ul.nrows() {
        return Err(FfError::dim("feature and target row counts differ"));
    }
    if z_ul.nrows() == 0 {
        return fit_lsr(z_l, y_p, ridge, true);
    }
    let z = concatenate(Axis(0), &[z_l, z_ul]).map_err(|e| FfError::dim(e.to_string()))?;
    let y = concatenate(Axis(0), &[y_p, p_ul]).map_err(|e| FfError::dim(e.to_string()))?;
    fit_lsr(z.view(), y.view(), ridge, true)
}
