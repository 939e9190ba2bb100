use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::numerics::{kmeans, KmeansParams};
use crate::seeds::{self, Purpose};
use crate::{FfError, Result};

/// K-means sub-clusters of every original class.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoCategorySet {
    /// K × d
    pub centroids: Array2<f64>,
    /// Original class of each pseudo-category.
    pub class_of: Vec<usize>,
    /// Sub-cluster count per original class.
    pub per_class: Vec<usize>,
    /// Pseudo-category of each labeled sample the set was built from.
    pub assignments: Vec<usize>,
}

impl PseudoCategorySet {
    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.per_class.len()
    }

    /// One-hot pseudo-labels of the labeled samples, N × K.
    pub fn one_hot(&self) -> Array2<f64> {
        let mut y = Array2::zeros((self.assignments.len(), self.len()));
        for (i, &k) in self.assignments.iter().enumerate() {
            y[[i, k]] = 1.0;
        }
        y
    }

    /// K × L membership indicator.
    pub fn membership(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.len(), self.num_classes()));
        for (k, &c) in self.class_of.iter().enumerate() {
            m[[k, c]] = 1.0;
        }
        m
    }
}

/// Splits `n_out` categories over classes: `floor(n_out/L)` each, one extra
/// for the first `n_out mod L` classes, then clamped to each class's
/// population with the excess handed round-robin to classes that still have
/// room.
pub fn split_counts(n_out: usize, populations: &[usize]) -> Vec<usize> {
    let l = populations.len();
    let mut counts: Vec<usize> = (0..l)
        .map(|i| (n_out / l + usize::from(i < n_out % l)).min(populations[i]))
        .collect();
    let mut deficit = n_out - counts.iter().sum::<usize>();
    while deficit > 0 {
        let mut progressed = false;
        for i in 0..l {
            if deficit > 0 && counts[i] < populations[i] {
                counts[i] += 1;
                deficit -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    counts
}

/// Per-class K-means on labeled features. Class `i` gets the `i`-th entry
/// of [`split_counts`] clusters, with pseudo-category indices assigned
/// class by class.
pub fn build_pseudo_categories(
    z_l: ArrayView2<f64>,
    y_l: &[usize],
    num_classes: usize,
    n_out: usize,
    seed: u64,
) -> Result<PseudoCategorySet> {
    if z_l.nrows() != y_l.len() {
        return Err(FfError::dim("labeled features and labels differ in length"));
    }
    if n_out < num_classes {
        return Err(FfError::config(format!(
            "stage width {n_out} is below the class count {num_classes}"
        )));
    }
    let mut members = vec![Vec::new(); num_classes];
    for (i, &c) in y_l.iter().enumerate() {
        if c >= num_classes {
            return Err(FfError::config(format!("label {c} outside [0, {num_classes})")));
        }
        members[c].push(i);
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(FfError::config(format!("class {empty} has no labeled sample")));
    }
    let pops: Vec<usize> = members.iter().map(Vec::len).collect();
    let per_class = split_counts(n_out, &pops);

    let fits = members
        .par_iter()
        .enumerate()
        .map(|(c, idx)| {
            let data = z_l.select(Axis(0), idx);
            let params = KmeansParams::new(per_class[c], seeds::derive(seed, Purpose::Kmeans, c as u64));
            kmeans(data.view(), &params)
        })
        .collect::<Result<Vec<_>>>()?;

    let total: usize = per_class.iter().sum();
    let mut centroids = Array2::zeros((total, z_l.ncols()));
    let mut class_of = Vec::with_capacity(total);
    let mut assignments = vec![0; y_l.len()];
    let mut offset = 0;
    for (c, fit) in fits.iter().enumerate() {
        let k = per_class[c];
        centroids.slice_mut(s![offset..offset + k, ..]).assign(&fit.centroids);
        class_of.extend(std::iter::repeat_n(c, k));
        for (&i, &a) in members[c].iter().zip(&fit.assignments) {
            assignments[i] = offset + a;
        }
        offset += k;
    }
    Ok(PseudoCategorySet {
        centroids,
        class_of,
        per_class,
        assignments,
    })
}

/// Soft pseudo-label of one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVector {
    pub p: Array1<f64>,
    /// Cosine similarity to each centroid.
    pub d: Array1<f64>,
    pub alpha: f64,
}

fn softmax_in_place(row: &mut [f64], alpha: f64) {
    let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(alpha * v));
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (alpha * *v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// `p_k = exp(α·d_k) / Σ_j exp(α·d_j)` with `d_k = cos(z, c_k)`.
pub fn pseudo_probabilities(
    z: ArrayView1<f64>,
    cats: &PseudoCategorySet,
    alpha: f64,
) -> Result<ProbabilityVector> {
    if z.len() != cats.centroids.ncols() {
        return Err(FfError::dim("feature width differs from centroid width"));
    }
    let zn = z.dot(&z).sqrt();
    if zn == 0.0 {
        return Err(FfError::Degenerate("zero-norm feature vector".into()));
    }
    let mut d = Array1::zeros(cats.len());
    for (k, c) in cats.centroids.rows().into_iter().enumerate() {
        let cn = c.dot(&c).sqrt();
        if cn == 0.0 {
            return Err(FfError::Degenerate(format!("pseudo-category {k} has a zero centroid")));
        }
        d[k] = (z.dot(&c) / (zn * cn)).clamp(-1.0, 1.0);
    }
    let mut p = d.clone();
    softmax_in_place(p.as_slice_mut().unwrap(), alpha);
    Ok(ProbabilityVector { p, d, alpha })
}

/// Row-wise [`pseudo_probabilities`] for a batch, N × K. Rows with zero
/// norm (e.g. a sample that every ReLU unit rejected) and zero centroids get
/// cosine 0, which yields a uniform row instead of an error.
pub fn pseudo_probabilities_batch(
    z: ArrayView2<f64>,
    cats: &PseudoCategorySet,
    alpha: f64,
) -> Result<Array2<f64>> {
    if z.ncols() != cats.centroids.ncols() {
        return Err(FfError::dim("feature width differs from centroid width"));
    }
    let normalize = |m: ArrayView2<f64>| {
        let mut out = m.to_owned();
        for mut row in out.rows_mut() {
            let n = row.dot(&row).sqrt();
            if n > 0.0 {
                row /= n;
            }
        }
        out
    };
    let zn = normalize(z);
    let cn = normalize(cats.centroids.view());
    let mut p = zn.dot(&cn.t());
    p.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut row| {
        row.mapv_inplace(|v| v.clamp(-1.0, 1.0));
        softmax_in_place(row.as_slice_mut().unwrap(), alpha);
    });
    Ok(p)
}
