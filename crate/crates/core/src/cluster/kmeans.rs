//! Lloyd's k-means with k-means++ seeding and best-of-restarts selection.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Array2<f64>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances from each row to its centroid.
    pub inertia: f64,
    /// Inertia after each centroid update of the winning restart.
    pub inertia_trace: Vec<f64>,
    /// Index of the winning restart.
    pub restart: usize,
}

pub(crate) fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub(crate) fn nearest(centroids: ArrayView2<f64>, x: ArrayView1<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(row, x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Clusters the rows of `x` into `k` groups.
///
/// Restart `r` uses the random stream `stream_rng(seed, r)`. Restarts run
/// in parallel; the winner is the lowest inertia, ties to the lowest
/// restart index, so the result does not depend on the thread count.
pub fn kmeans(x: ArrayView2<f64>, k: usize, seed: u64, params: &KMeansParams) -> Result<KMeansFit> {
    let n = x.nrows();
    if k < 1 || n < k {
        return Err(Error::invalid(format!("kmeans: need 1 <= k <= n, got k={k}, n={n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("kmeans: non-finite input"));
    }
    let restarts = params.restarts.max(1);
    let fits: Vec<KMeansFit> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut fit = lloyd(x, k, &mut stream_rng(seed, r as u64), params);
            fit.restart = r;
            fit
        })
        .collect();
    let mut best = None::<KMeansFit>;
    for fit in fits {
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus_init(x: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = x.nrows();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = x.rows().into_iter().map(|r| sq_dist(r, x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // Every row coincides with a chosen center.
            (0..n).find(|i| !chosen.contains(i)).expect("n >= k")
        };
        chosen.push(next);
        for (i, row) in x.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(row, x.row(next)));
        }
    }
    let mut c = Array2::zeros((k, x.ncols()));
    for (j, &i) in chosen.iter().enumerate() {
        c.row_mut(j).assign(&x.row(i));
    }
    c
}

fn assign_all(x: ArrayView2<f64>, centroids: ArrayView2<f64>) -> (Vec<usize>, Vec<f64>) {
    x.rows()
        .into_iter()
        .map(|row| nearest(centroids, row))
        .unzip()
}

/// Moves the row farthest from its centroid (taken from a cluster with
/// more than one member) into each empty cluster.
fn repair_empty(assign: &mut [usize], dist: &mut [f64], k: usize) {
    let mut counts = vec![0usize; k];
    assign.iter().for_each(|&c| counts[c] += 1);
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far = None::<usize>;
        for i in 0..assign.len() {
            if counts[assign[i]] > 1 && far.is_none_or(|f| dist[i] > dist[f]) {
                far = Some(i);
            }
        }
        let i = far.expect("n >= k leaves a donor cluster");
        counts[assign[i]] -= 1;
        counts[empty] += 1;
        assign[i] = empty;
        dist[i] = 0.0;
    }
}

fn centroid_means(x: ArrayView2<f64>, assign: &[usize], k: usize) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((k, x.ncols()));
    let mut counts = vec![0usize; k];
    for (row, &c) in x.rows().into_iter().zip(assign) {
        let mut s = sums.row_mut(c);
        s += &row;
        counts[c] += 1;
    }
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 {
            sums.row_mut(c).mapv_inplace(|v| v / n as f64);
        }
    }
    sums
}

fn inertia_of(x: ArrayView2<f64>, centroids: ArrayView2<f64>, assign: &[usize]) -> f64 {
    x.rows()
        .into_iter()
        .zip(assign)
        .map(|(row, &c)| sq_dist(row, centroids.row(c)))
        .sum()
}

fn lloyd(x: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng, params: &KMeansParams) -> KMeansFit {
    let mut centroids = plus_plus_init(x, k, rng);
    let mut assign: Vec<usize> = Vec::new();
    let mut trace = Vec::new();

    for iter in 0..params.max_iter.max(1) {
        let (mut next, mut dist) = assign_all(x.view(), centroids.view());
        repair_empty(&mut next, &mut dist, k);
        if iter > 0 && next == assign {
            break;
        }
        assign = next;
        let assigned_inertia = inertia_of(x, centroids.view(), &assign);
        let updated = centroid_means(x, &assign, k);
        let movement = centroids
            .rows()
            .into_iter()
            .zip(updated.rows())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        let inertia = inertia_of(x, centroids.view(), &assign);
        debug_assert!(
            inertia <= assigned_inertia * (1.0 + 1e-12) + 1e-12,
            "centroid update increased inertia: {assigned_inertia} -> {inertia}"
        );
        debug_assert!(
            trace.last().is_none_or(|&prev: &f64| inertia <= prev * (1.0 + 1e-12) + 1e-12),
            "inertia rose between iterations"
        );
        trace.push(inertia);
        if movement < params.tol {
            break;
        }
    }

    let inertia = inertia_of(x, centroids.view(), &assign);
    KMeansFit {
        centroids,
        assignments: assign,
        inertia,
        inertia_trace: trace,
        restart: 0,
    }
}
