//! Unsupervised event discovery: k-means with silhouette-based choice of
//! the cluster count, and evaluation against ground truth the classifier
//! never sees.

mod eval;
mod kmeans;
mod model;
mod silhouette;

pub use eval::{ari, hungarian_max, match_labels, positioning_report, EvaluationReport, LabelMatch};
pub use kmeans::{kmeans, KMeansFit, KMeansParams};
pub use model::{assign, best_k, select_k, ClusterModel, Selection};
pub use silhouette::{silhouette, silhouette_precomputed, DistanceMatrix};
