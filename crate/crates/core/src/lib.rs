//! Device-free indoor monitoring over a visible light link.
//!
//! An LED transmits DCO-OFDM frames; photodetectors estimate per-subcarrier
//! channel state from block pilots to equalize the data. Objects in the room
//! shadow line-of-sight and wall-reflected paths, so the same estimates act
//! as a signature of the room's state. Clustering unlabeled signatures
//! recovers the monitored events, and the clusters can be mapped to object
//! positions.
//!
//! | module | role |
//! |---|---|
//! | [`scene`] | room, luminaire, photodetectors, obstacles, events |
//! | [`channel`] | LOS + single-bounce diffuse response, LED low-pass |
//! | [`ofdm`] | DCO-OFDM modem, LS channel estimation, dataset simulation |
//! | [`features`] | log-magnitude, centered, unit-norm CSI features |
//! | [`cluster`] | k-means, silhouette sweep, matching and scoring |
//! | [`pipeline`] | file-based simulate / train / evaluate stages |

pub mod channel;
pub mod cluster;
pub mod error;
pub mod features;
pub mod ofdm;
pub mod pipeline;
pub mod rng;
pub mod scene;

pub use error::{Error, Result};
