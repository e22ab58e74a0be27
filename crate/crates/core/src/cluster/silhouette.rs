use std::collections::BTreeMap;

use ndarray::ArrayView2;
use rayon::prelude::*;

use super::kmeans::sq_dist;
use crate::error::{Error, Result};

/// Pairwise Euclidean distances, kept in memory for repeated silhouette
/// evaluations over the same rows.
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(x: ArrayView2<f64>) -> Self {
        let n = x.nrows();
        let d = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let xi = x.row(i);
                (0..n).map(move |j| sq_dist(xi, x.row(j)).sqrt())
            })
            .collect();
        Self { n, d }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

/// Mean silhouette of a labeling. Labels need not be contiguous; a point
/// alone in its cluster scores 0.
pub fn silhouette(x: ArrayView2<f64>, assignments: &[usize]) -> Result<f64> {
    if x.nrows() != assignments.len() {
        return Err(Error::invalid(format!(
            "silhouette: {} rows but {} assignments",
            x.nrows(),
            assignments.len()
        )));
    }
    silhouette_by(assignments, |i, j| sq_dist(x.row(i), x.row(j)).sqrt())
}

/// [`silhouette`] over precomputed distances.
pub fn silhouette_precomputed(dist: &DistanceMatrix, assignments: &[usize]) -> Result<f64> {
    if dist.len() != assignments.len() {
        return Err(Error::invalid(format!(
            "silhouette: {} rows but {} assignments",
            dist.len(),
            assignments.len()
        )));
    }
    silhouette_by(assignments, |i, j| dist.get(i, j))
}

fn silhouette_by<F>(assignments: &[usize], dist: F) -> Result<f64>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    // Compact labels to 0..m.
    let mut ids = BTreeMap::new();
    for &a in assignments {
        let next = ids.len();
        ids.entry(a).or_insert(next);
    }
    let m = ids.len();
    if m < 2 {
        return Err(Error::invalid("silhouette: need at least 2 clusters"));
    }
    let labels: Vec<usize> = assignments.iter().map(|a| ids[a]).collect();
    let mut sizes = vec![0usize; m];
    labels.iter().for_each(|&l| sizes[l] += 1);

    let scores: Vec<f64> = (0..labels.len())
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; m];
            for (j, &l) in labels.iter().enumerate() {
                if j != i {
                    sums[l] += dist(i, j);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..m)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn two_tight_pairs() {
        let x = array![[0.0], [0.1], [10.0], [10.1]];
        let s = silhouette(x.view(), &[0, 0, 1, 1]).unwrap();
        // Per-point scores: 1 - 0.1/10.05, 1 - 0.1/9.95 (twice each).
        let oracle = (2.0 * (1.0 - 0.1 / 10.05) + 2.0 * (1.0 - 0.1 / 9.95)) / 4.0;
        assert!((s - oracle).abs() < 1e-12);
        assert!((s - 0.990).abs() < 0.001);
    }

    #[test]
    fn coincident_clusters_score_one() {
        let x = array![[1.0, 1.0], [1.0, 1.0], [4.0, 0.0], [4.0, 0.0], [4.0, 0.0]];
        assert_eq!(silhouette(x.view(), &[0, 0, 1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn random_split_of_one_blob_scores_low() {
        let mut rng = stream_rng(3, 0);
        let x = Array2::from_shape_fn((400, 3), |_| rng.sample::<f64, _>(StandardNormal));
        let labels: Vec<usize> = (0..400).map(|_| rng.gen_range(0..2)).collect();
        let s = silhouette(x.view(), &labels).unwrap();
        assert!(s < 0.25, "{s}");
    }

    #[test]
    fn singleton_scores_zero_and_single_cluster_rejected() {
        let x = array![[0.0], [5.0], [5.1]];
        let s = silhouette(x.view(), &[0, 1, 1]).unwrap();
        let pair = 1.0 - 0.1 / 5.0;
        let pair2 = 1.0 - 0.1 / 5.1;
        assert!((s - (0.0 + pair + pair2) / 3.0).abs() < 1e-12);
        assert!(silhouette(x.view(), &[2, 2, 2]).is_err());
    }

    #[test]
    fn precomputed_matches_direct() {
        let mut rng = stream_rng(4, 0);
        let x = Array2::from_shape_fn((60, 2), |_| rng.gen::<f64>());
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let dm = DistanceMatrix::new(x.view());
        assert_eq!(
            silhouette(x.view(), &labels).unwrap(),
            silhouette_precomputed(&dm, &labels).unwrap()
        );
    }
}
