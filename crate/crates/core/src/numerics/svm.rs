//! One-vs-rest RBF-kernel SVM trained by SMO with second-order working-set
//! selection.

use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use super::{argmax, squared_distance};
use crate::{FfError, Result};

const TAU: f64 = 1e-12;
/// Kernel matrices up to this many rows are precomputed in full.
const DENSE_KERNEL_ROWS: usize = 6000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    /// `None` selects [`default_gamma`].
    pub gamma: Option<f64>,
    /// KKT violation tolerance for stopping.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 5.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RbfSvmModel {
    pub classes: Vec<usize>,
    pub support_vectors: Array2<f64>,
    /// classes × support vectors, entries `αᵢ·yᵢ`.
    pub dual_coef: Array2<f64>,
    pub bias: Array1<f64>,
    pub gamma: f64,
    pub c: f64,
}

/// `1 / (d · mean per-feature variance)`, or `1/d` for constant features.
pub fn default_gamma(x: ArrayView2<f64>) -> f64 {
    let d = x.ncols().max(1) as f64;
    let mean_var = x.var_axis(Axis(0), 0.0).mean().unwrap_or(0.0);
    if mean_var > 0.0 {
        1.0 / (d * mean_var)
    } else {
        1.0 / d
    }
}

fn rbf(a: ArrayView1<f64>, b: ArrayView1<f64>, gamma: f64) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

enum KernelRows<'a> {
    Dense(Array2<f64>),
    Lazy {
        x: ArrayView2<'a, f64>,
        gamma: f64,
        cache: HashMap<usize, Vec<f64>>,
    },
}

impl<'a> KernelRows<'a> {
    fn new(x: ArrayView2<'a, f64>, gamma: f64) -> Self {
        let n = x.nrows();
        if n <= DENSE_KERNEL_ROWS {
            let mut k = Array2::zeros((n, n));
            k.axis_iter_mut(Axis(0))
                .into_par_iter()
                .enumerate()
                .for_each(|(i, mut row)| {
                    for j in 0..n {
                        row[j] = rbf(x.row(i), x.row(j), gamma);
                    }
                });
            KernelRows::Dense(k)
        } else {
            KernelRows::Lazy {
                x,
                gamma,
                cache: HashMap::new(),
            }
        }
    }

    fn row(&mut self, i: usize) -> Vec<f64> {
        match self {
            KernelRows::Dense(k) => k.row(i).to_vec(),
            KernelRows::Lazy { x, gamma, cache } => {
                if let Some(r) = cache.get(&i) {
                    return r.clone();
                }
                if cache.len() > 512 {
                    cache.clear();
                }
                let r: Vec<f64> = (0..x.nrows())
                    .into_par_iter()
                    .map(|j| rbf(x.row(i), x.row(j), *gamma))
                    .collect();
                cache.insert(i, r.clone());
                r
            }
        }
    }
}

/// Binary C-SVC dual; returns `(α, bias)` with decision `Σ αᵢyᵢK(xᵢ,x) + bias`.
fn solve_binary(kernel: &mut KernelRows<'_>, y: &[f64], params: &SvmParams) -> (Vec<f64>, f64) {
    let n = y.len();
    let c = params.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];

    for _ in 0..params.max_iter {
        // i: maximal violator in I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if in_up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else { break };
        let k_i = kernel.row(i);

        let mut gmax2 = f64::NEG_INFINITY;
        let mut obj_min = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            let in_low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            let grad_diff = gmax + v;
            if grad_diff > 0.0 {
                let quad = (2.0 - 2.0 * k_i[t]).max(TAU);
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = Some(t);
                }
            }
        }
        let Some(j) = j_sel else { break };
        if gmax + gmax2 < params.tol {
            break;
        }
        let k_j = kernel.row(j);

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let q_ij = y[i] * y[j] * k_i[j];
        if y[i] != y[j] {
            let quad = (2.0 + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (2.0 - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k_i[t] * di + y[j] * k_j[t] * dj);
        }
    }

    // Bias from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    };
    (alpha, -rho)
}

/// Trains one binary scorer per class present in `labels`.
pub fn fit_rbf_svm(x: ArrayView2<f64>, labels: &[usize], params: &SvmParams) -> Result<RbfSvmModel> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(FfError::dim("svm label count differs from row count"));
    }
    if n < 2 {
        return Err(FfError::Degenerate("svm needs at least two samples".into()));
    }
    if !(params.c > 0.0) {
        return Err(FfError::config("svm C must be positive"));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(FfError::Degenerate("svm needs at least two classes".into()));
    }
    let gamma = params.gamma.unwrap_or_else(|| default_gamma(x));
    if !(gamma > 0.0) {
        return Err(FfError::config("svm gamma must be positive"));
    }

    let mut kernel = KernelRows::new(x, gamma);
    let mut coef_full = Array2::<f64>::zeros((classes.len(), n));
    let mut bias = Array1::zeros(classes.len());
    for (ci, &class) in classes.iter().enumerate() {
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        let (alpha, b) = solve_binary(&mut kernel, &y, params);
        for t in 0..n {
            coef_full[[ci, t]] = alpha[t] * y[t];
        }
        bias[ci] = b;
    }

    let support: Vec<usize> = (0..n)
        .filter(|&t| coef_full.column(t).iter().any(|&v| v != 0.0))
        .collect();
    Ok(RbfSvmModel {
        classes,
        support_vectors: x.select(Axis(0), &support),
        dual_coef: coef_full.select(Axis(1), &support),
        bias,
        gamma,
        c: params.c,
    })
}

impl RbfSvmModel {
    /// N × classes decision values.
    pub fn decision_function(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.support_vectors.ncols() {
            return Err(FfError::dim(format!(
                "svm expects width {}, got {}",
                self.support_vectors.ncols(),
                x.ncols()
            )));
        }
        let nsv = self.support_vectors.nrows();
        let mut k = Array2::<f64>::zeros((x.nrows(), nsv));
        k.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, mut row)| {
                for s in 0..nsv {
                    row[s] = rbf(x.row(i), self.support_vectors.row(s), self.gamma);
                }
            });
        Ok(k.dot(&self.dual_coef.t()) + &self.bias)
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>)> {
        let dec = self.decision_function(x)?;
        let labels = dec
            .rows()
            .into_iter()
            .map(|r| self.classes[argmax(r)])
            .collect();
        Ok((labels, dec))
    }
}

pub fn predict_rbf_svm(model: &RbfSvmModel, x: ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>)> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn params(c: f64, gamma: f64) -> SvmParams {
        SvmParams {
            c,
            gamma: Some(gamma),
            ..SvmParams::default()
        }
    }

    #[test]
    fn separable_pair() {
        let x = array![[0.0, 0.0], [1.0, 1.0]];
        let m = fit_rbf_svm(x.view(), &[0, 1], &params(5.0, 1.0)).unwrap();
        assert_eq!(m.predict(x.view()).unwrap().0, vec![0, 1]);
    }

    #[test]
    fn xor_is_separated() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let y = [0, 0, 1, 1];
        let m = fit_rbf_svm(x.view(), &y, &params(10.0, 1.0)).unwrap();
        let (pred, dec) = m.predict(x.view()).unwrap();
        assert_eq!(pred, y.to_vec());
        // Grid oracle: class-0 scorer is positive near the (0,0)/(1,1)
        // diagonal corners and negative near the off-diagonal ones.
        for (px, py, want) in [(0.05, 0.05, 0), (0.95, 0.9, 0), (0.1, 0.9, 1), (0.9, 0.1, 1)] {
            let d = m.decision_function(array![[px, py]].view()).unwrap();
            assert_eq!(argmax(d.row(0)), want);
        }
        assert!(dec.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn conflicting_duplicates_fit() {
        let x = array![[0.0], [0.0], [1.0], [1.0]];
        let y = [0, 1, 0, 1];
        let m = fit_rbf_svm(x.view(), &y, &params(0.01, 1.0)).unwrap();
        let (pred, dec) = m.predict(x.view()).unwrap();
        let acc = pred.iter().zip(&y).filter(|(a, b)| a == b).count();
        assert!(acc <= 4);
        assert!(dec.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = array![[0.0], [1.0]];
        assert!(matches!(
            fit_rbf_svm(x.view(), &[2, 2], &SvmParams::default()),
            Err(FfError::Degenerate(_))
        ));
    }

    #[test]
    fn default_gamma_uses_mean_variance() {
        let x = array![[0.0, 0.0], [2.0, 4.0]];
        // per-feature variances 1 and 4, mean 2.5, d=2
        assert!((default_gamma(x.view()) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn lazy_and_dense_kernels_agree() {
        let x = array![[0.0, 1.0], [1.0, 0.5], [2.0, -1.0]];
        let mut dense = KernelRows::new(x.view(), 0.7);
        let mut lazy = KernelRows::Lazy {
            x: x.view(),
            gamma: 0.7,
            cache: HashMap::new(),
        };
        for i in 0..3 {
            assert_eq!(dense.row(i), lazy.row(i));
        }
    }
}
