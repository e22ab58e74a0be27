use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, nearest, KMeansFit, KMeansParams};
use super::silhouette::{silhouette, silhouette_precomputed, DistanceMatrix};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::rng::stream_seed;

/// Above this many rows the silhouette sweep computes distances on the fly
/// instead of caching an n × n matrix.
const MAX_CACHED_ROWS: usize = 4096;

/// Silhouette scores closer than this are treated as a tie.
const TIE_EPS: f64 = 1e-12;

/// Trained classifier: the centroids of the selected k-means solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub seed: u64,
    pub silhouette_by_k: BTreeMap<usize, f64>,
}

impl ClusterModel {
    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    fn centroid_array(&self) -> Array2<f64> {
        let d = self.dim();
        Array2::from_shape_fn((self.k, d), |(i, j)| self.centroids[i][j])
    }

    /// Nearest-centroid labels for every row of `x`.
    pub fn assign_rows(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        if x.ncols() != self.dim() {
            return Err(Error::invalid(format!(
                "feature dimension {} does not match model dimension {}",
                x.ncols(),
                self.dim()
            )));
        }
        let c = self.centroid_array();
        Ok(x.rows().into_iter().map(|r| nearest(c.view(), r).0).collect())
    }
}

/// Nearest centroid by Euclidean distance, ties to the lowest index.
pub fn assign(model: &ClusterModel, x: &FeatureVector) -> Result<usize> {
    if x.values.len() != model.dim() {
        return Err(Error::invalid(format!(
            "feature dimension {} does not match model dimension {}",
            x.values.len(),
            model.dim()
        )));
    }
    let c = model.centroid_array();
    Ok(nearest(c.view(), ndarray::ArrayView1::from(&x.values)).0)
}

/// Result of a cluster-count sweep: the chosen model and the k-means fit behind it.
#[derive(Debug, Clone)]
pub struct Selection {
    pub model: ClusterModel,
    pub fit: KMeansFit,
}

/// Runs k-means for every `k` in `k_min..=k_max` and keeps the one with
/// the highest mean silhouette, preferring the smaller `k` on ties.
///
/// The sweep for `k` is seeded with `stream_seed(seed, k)`.
pub fn select_k(
    x: ArrayView2<f64>,
    k_min: usize,
    k_max: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<Selection> {
    let n = x.nrows();
    if k_min < 2 || k_max < k_min {
        return Err(Error::invalid(format!("select_k: need 2 <= k_min <= k_max, got {k_min}..={k_max}")));
    }
    if k_max > n {
        return Err(Error::invalid(format!("select_k: k_max {k_max} exceeds {n} rows")));
    }
    let cache = (n <= MAX_CACHED_ROWS).then(|| DistanceMatrix::new(x));

    let mut scores = BTreeMap::new();
    let mut fits = BTreeMap::new();
    for k in k_min..=k_max {
        let fit = kmeans(x, k, stream_seed(seed, k as u64), params)?;
        let s = match &cache {
            Some(dm) => silhouette_precomputed(dm, &fit.assignments)?,
            None => silhouette(x, &fit.assignments)?,
        };
        scores.insert(k, s);
        fits.insert(k, fit);
    }
    let best_k = best_k(&scores).expect("non-empty sweep");
    let fit = fits.remove(&best_k).expect("fit for best k");
    let model = ClusterModel {
        k: best_k,
        centroids: fit.centroids.rows().into_iter().map(|r| r.to_vec()).collect(),
        inertia: fit.inertia,
        seed,
        silhouette_by_k: scores,
    };
    Ok(Selection { model, fit })
}

/// Arg-max over the score map; scores within `1e-12` of each other tie
/// and the smaller `k` wins.
pub fn best_k(scores: &BTreeMap<usize, f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (&k, &s) in scores {
        if best.is_none_or(|(_, b)| s > b + TIE_EPS) {
            best = Some((k, s));
        }
    }
    best.map(|(k, _)| k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand_distr::{Normal, Distribution};

    fn blobs(centers: &[(f64, f64)], per: usize, sigma: f64, seed: u64) -> Array2<f64> {
        let mut rng = stream_rng(seed, 0);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut x = Array2::zeros((centers.len() * per, 2));
        for (c, &(cx, cy)) in centers.iter().enumerate() {
            for i in 0..per {
                x[[c * per + i, 0]] = cx + noise.sample(&mut rng);
                x[[c * per + i, 1]] = cy + noise.sample(&mut rng);
            }
        }
        x
    }

    #[test]
    fn four_blobs_pick_four() {
        let x = blobs(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)], 25, 0.01, 7);
        let sel = select_k(x.view(), 2, 8, 3, &KMeansParams::default()).unwrap();
        assert_eq!(sel.model.k, 4);
        assert_eq!(sel.model.silhouette_by_k.len(), 7);
    }

    #[test]
    fn coincident_pair_picks_two() {
        let x = array![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [3.0, 1.0], [3.0, 1.0], [3.0, 1.0]];
        let sel = select_k(x.view(), 2, 5, 0, &KMeansParams::default()).unwrap();
        assert_eq!(sel.model.k, 2);
        assert_eq!(sel.model.silhouette_by_k[&2], 1.0);
    }

    #[test]
    fn ties_prefer_smaller_k() {
        let scores: BTreeMap<usize, f64> = [(2, 0.4), (3, 0.7), (4, 0.7), (5, 0.6)].into_iter().collect();
        assert_eq!(best_k(&scores), Some(3));
    }

    #[test]
    fn assign_nearest_with_low_index_ties() {
        let model = ClusterModel {
            k: 3,
            centroids: vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![5.0, 5.0]],
            inertia: 0.0,
            seed: 0,
            silhouette_by_k: BTreeMap::new(),
        };
        let fv = |v: Vec<f64>| FeatureVector { values: v, snapshot_id: 0, event_id: None };
        assert_eq!(assign(&model, &fv(vec![5.0, 5.0])).unwrap(), 2);
        assert_eq!(assign(&model, &fv(vec![1.0, 0.0])).unwrap(), 0);
        assert!(assign(&model, &fv(vec![1.0])).is_err());
    }

    #[test]
    fn training_rows_reassign_to_their_clusters() {
        let mut rng = stream_rng(5, 0);
        let x = Array2::from_shape_fn((150, 3), |_| rng.gen::<f64>());
        let sel = select_k(x.view(), 2, 6, 11, &KMeansParams::default()).unwrap();
        assert_eq!(sel.model.assign_rows(x.view()).unwrap(), sel.fit.assignments);
    }

    #[test]
    fn rejects_bad_range() {
        let x = array![[0.0], [1.0], [2.0]];
        assert!(select_k(x.view(), 1, 2, 0, &KMeansParams::default()).is_err());
        assert!(select_k(x.view(), 2, 4, 0, &KMeansParams::default()).is_err());
    }
}
