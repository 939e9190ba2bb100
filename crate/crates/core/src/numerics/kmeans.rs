use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;

use super::squared_distance;
use crate::seeds;
use crate::{FfError, Result};

#[derive(Clone, Copy, Debug)]
pub struct KmeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once an iteration lowers the inertia by less than this.
    pub tol: f64,
}

impl KmeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        KmeansParams {
            k,
            seed,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KmeansResult {
    pub centroids: Array2<f64>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assignment step, starting with the seeding.
    pub history: Vec<f64>,
}

fn nearest(point: ndarray::ArrayView1<f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let d = squared_distance(point, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(data: ArrayView2<f64>, centroids: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    data.axis_iter(Axis(0))
        .into_par_iter()
        .map(|p| nearest(p, centroids))
        .unzip()
}

fn plus_plus_init(data: ArrayView2<f64>, k: usize, rng: &mut impl Rng) -> Array2<f64> {
    let n = data.nrows();
    let mut centroids = Array2::zeros((k, data.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&data.row(first));
    let mut dist: Vec<f64> = data
        .rows()
        .into_iter()
        .map(|r| squared_distance(r, data.row(first)))
        .collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // Guard against landing on a zero-weight tail through rounding.
            if dist[chosen] == 0.0 {
                chosen = dist
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&data.row(pick));
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(squared_distance(data.row(i), data.row(pick)));
        }
    }
    centroids
}

/// Lloyd's algorithm from k-means++ seeding. Empty clusters are re-seeded at
/// the point farthest from its current centroid.
pub fn kmeans(data: ArrayView2<f64>, params: &KmeansParams) -> Result<KmeansResult> {
    let (n, d) = data.dim();
    let k = params.k;
    if k == 0 || k > n {
        return Err(FfError::dim(format!("k-means with k={k} on {n} points")));
    }
    let mut rng = seeds::rng(params.seed);
    let mut centroids = plus_plus_init(data, k, &mut rng);
    let (mut assignments, mut dists) = assign(data, &centroids);
    let mut inertia: f64 = dists.iter().sum();
    let mut history = vec![inertia];

    for _ in 0..params.max_iter {
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (row, &a) in data.rows().into_iter().zip(&assignments) {
            let mut s = sums.row_mut(a);
            s += &row;
            counts[a] += 1;
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                let mean = &sums.row(c) / counts[c] as f64;
                centroids.row_mut(c).assign(&mean);
            } else {
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .unwrap_or(0);
                taken[far] = true;
                centroids.row_mut(c).assign(&data.row(far));
            }
        }
        let (next_assign, next_dists) = assign(data, &centroids);
        let next_inertia: f64 = next_dists.iter().sum();
        let improvement = inertia - next_inertia;
        assignments = next_assign;
        dists = next_dists;
        inertia = next_inertia;
        history.push(inertia);
        if improvement < params.tol {
            break;
        }
    }

    Ok(KmeansResult {
        centroids,
        assignments,
        inertia,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn k_equals_n_distinct_gives_zero_inertia() {
        let data = array![[0.0, 0.0], [1.0, 0.0], [0.0, 3.0], [5.0, 5.0], [2.0, 2.0]];
        let res = kmeans(data.view(), &KmeansParams::new(5, 9)).unwrap();
        assert_eq!(res.inertia, 0.0);
    }

    #[test]
    fn k_greater_than_n_is_error() {
        let data = array![[0.0], [1.0]];
        assert!(matches!(
            kmeans(data.view(), &KmeansParams::new(3, 0)),
            Err(FfError::Dim(_))
        ));
    }

    #[test]
    fn two_blobs_recovered() {
        let mut rng = seeds::rng(42);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let n = 200;
        let data = Array2::from_shape_fn((n, 2), |(i, _)| {
            let center = if i < n / 2 { 0.0 } else { 10.0 };
            center + noise.sample(&mut rng)
        });
        // Oracle: the sample mean of each generated blob.
        let blob_a = data.slice(ndarray::s![..n / 2, ..]).mean_axis(Axis(0)).unwrap();
        let blob_b = data.slice(ndarray::s![n / 2.., ..]).mean_axis(Axis(0)).unwrap();
        let res = kmeans(data.view(), &KmeansParams::new(2, 5)).unwrap();
        for blob in [blob_a, blob_b] {
            let closest = res
                .centroids
                .rows()
                .into_iter()
                .map(|c| squared_distance(c, blob.view()).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(closest < 0.5, "centroid {closest} away from blob mean");
        }
        for (p, &a) in data.rows().into_iter().zip(&res.assignments) {
            assert_eq!(nearest(p, &res.centroids).0, a);
        }
    }

    #[test]
    fn inertia_history_is_monotone_and_deterministic() {
        let mut rng = seeds::rng(1);
        let data = Array2::from_shape_fn((120, 3), |_| rng.random::<f64>() * 4.0);
        let a = kmeans(data.view(), &KmeansParams::new(7, 11)).unwrap();
        for w in a.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let recomputed: f64 = data
            .rows()
            .into_iter()
            .zip(&a.assignments)
            .map(|(p, &c)| squared_distance(p, a.centroids.row(c)))
            .sum();
        assert!((recomputed - a.inertia).abs() < 1e-9);
        let b = kmeans(data.view(), &KmeansParams::new(7, 11)).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.centroids, b.centroids);
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let data = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [2.0, 2.0]];
        let res = kmeans(data.view(), &KmeansParams::new(3, 3)).unwrap();
        assert_eq!(res.inertia, 0.0);
    }
}
