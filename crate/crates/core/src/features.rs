//! CSI snapshot to clustering feature.
//!
//! A feature is the concatenation over photodetectors of the per-subcarrier
//! log-magnitude `20·log10|h|`, centered and scaled to unit Euclidean norm.
//! A common gain on every entry becomes an additive offset in the log
//! domain and disappears with the centering; phase is discarded.
//!
//! The logarithm is taken as `log2 |h| = e + log2 m` on the binary
//! exponent/mantissa split of each magnitude, with exponents made relative
//! to the first entry in integer arithmetic. A power-of-two gain then
//! leaves the feature bit-identical; any other gain changes it only by
//! rounding (about 1e-15 per entry).

use std::io::Write;

use ndarray::Array2;
use num_traits::Float;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ofdm::CsiSnapshot;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub snapshot_id: u64,
    /// Ground truth; never read by clustering.
    pub event_id: Option<u32>,
}

/// Row-to-snapshot bookkeeping for a feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowId {
    pub snapshot_id: u64,
    pub event_id: Option<u32>,
}

/// dB per octave of magnitude.
const DB_PER_LOG2: f64 = 6.020599913279624;

pub fn build_feature(s: &CsiSnapshot) -> Result<FeatureVector> {
    let mut split = Vec::with_capacity(s.h_est.len());
    for ((p, k), h) in s.h_est.indexed_iter() {
        let mag = h.norm();
        if !(mag > 0.0 && mag.is_finite()) {
            return Err(Error::invalid(format!(
                "snapshot {}: CSI magnitude at pd {p}, subcarrier {} is {mag}",
                s.snapshot_id,
                k + 1
            )));
        }
        let (mantissa, exponent, _) = mag.integer_decode();
        split.push((exponent as i64, (mantissa as f64).log2()));
    }
    let e0 = split[0].0;
    let mut v: Vec<f64> = split
        .iter()
        .map(|&(e, m)| DB_PER_LOG2 * ((e - e0) as f64 + m))
        .collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    // Equal log-magnitudes leave only rounding residue after centering.
    if norm <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::DegenerateFeature {
            snapshot_id: s.snapshot_id,
        });
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(FeatureVector {
        values: v,
        snapshot_id: s.snapshot_id,
        event_id: s.event_id,
    })
}

/// Features of every snapshot as an `n × (P·K)` matrix, plus the ids of each row.
pub fn build_matrix(dataset: &[CsiSnapshot]) -> Result<(Array2<f64>, Vec<RowId>)> {
    let Some(first) = dataset.first() else {
        return Err(Error::invalid("build_matrix: empty dataset"));
    };
    let dim = first.h_est.dim();
    if let Some(bad) = dataset.iter().find(|s| s.h_est.dim() != dim) {
        return Err(Error::invalid(format!(
            "build_matrix: snapshot {} has shape {:?}, expected {:?}",
            bad.snapshot_id,
            bad.h_est.dim(),
            dim
        )));
    }
    let rows: Vec<FeatureVector> = dataset.par_iter().map(build_feature).collect::<Result<_>>()?;
    let d = dim.0 * dim.1;
    let mut x = Array2::zeros((rows.len(), d));
    for (i, f) in rows.iter().enumerate() {
        x.row_mut(i).assign(&ndarray::ArrayView1::from(&f.values));
    }
    let ids = rows
        .iter()
        .map(|f| RowId {
            snapshot_id: f.snapshot_id,
            event_id: f.event_id,
        })
        .collect();
    Ok((x, ids))
}

/// Debug dump: `snapshot_id,event_id,f_0,...,f_{D-1}`.
pub fn write_feature_csv<W: Write>(x: &Array2<f64>, ids: &[RowId], mut out: W) -> Result<()> {
    let io = |e| Error::io("<feature csv>", e);
    let cols: Vec<String> = (0..x.ncols()).map(|i| format!("f_{i}")).collect();
    writeln!(out, "snapshot_id,event_id,{}", cols.join(",")).map_err(io)?;
    for (row, id) in x.rows().into_iter().zip(ids) {
        let vals: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        let event = id.event_id.map(|e| e.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{}", id.snapshot_id, event, vals.join(",")).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn snap(id: u64, rows: usize, vals: Vec<Complex64>) -> CsiSnapshot {
        let cols = vals.len() / rows;
        CsiSnapshot {
            event_id: Some(id as u32),
            snapshot_id: id,
            h_est: Array2::from_shape_vec((rows, cols), vals).unwrap(),
        }
    }

    #[test]
    fn hand_computed_two_bins() {
        let s = snap(0, 1, vec![Complex64::new(1.0, 0.0), Complex64::new(10.0, 0.0)]);
        let f = build_feature(&s).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.values[0] + r).abs() < 1e-12);
        assert!((f.values[1] - r).abs() < 1e-12);
    }

    #[test]
    fn matches_plain_decibels() {
        let vals: Vec<Complex64> = (1..=6).map(|i| Complex64::new(1e-7 * i as f64, 3e-8)).collect();
        let f = build_feature(&snap(0, 2, vals.clone())).unwrap();
        let mut db: Vec<f64> = vals.iter().map(|h| 20.0 * h.norm().log10()).collect();
        let mean = db.iter().sum::<f64>() / 6.0;
        db.iter_mut().for_each(|x| *x -= mean);
        let norm = db.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (a, b) in f.values.iter().zip(&db) {
            assert!((a - b / norm).abs() < 1e-12);
        }
    }

    #[test]
    fn power_of_two_gain_is_bit_exact() {
        let vals: Vec<Complex64> = (1..=8).map(|i| Complex64::new(i as f64 * 0.013, -0.002 * i as f64)).collect();
        let a = build_feature(&snap(1, 2, vals.clone())).unwrap();
        for g in [0.5, 2.0, 1024.0, 2f64.powi(-40)] {
            let b = build_feature(&snap(1, 2, vals.iter().map(|v| v * g).collect())).unwrap();
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn scale_by_three_is_invisible() {
        let vals: Vec<Complex64> = (1..=8).map(|i| Complex64::new(i as f64 * 0.01, 0.003 * i as f64)).collect();
        let a = build_feature(&snap(1, 2, vals.clone())).unwrap();
        let b = build_feature(&snap(1, 2, vals.iter().map(|v| v * 3.0).collect())).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_entry_and_flat_magnitude_rejected() {
        let s = snap(2, 1, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert!(matches!(build_feature(&s), Err(Error::InvalidInput(_))));
        let s = snap(3, 1, vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5)]);
        assert!(matches!(build_feature(&s), Err(Error::DegenerateFeature { snapshot_id: 3 })));
    }

    #[test]
    fn matrix_shape_and_ids() {
        let d: Vec<CsiSnapshot> = (0..5)
            .map(|i| snap(i, 2, (0..6).map(|j| Complex64::new(1.0 + (i * j + j) as f64, 0.1)).collect()))
            .collect();
        let (x, ids) = build_matrix(&d).unwrap();
        assert_eq!(x.dim(), (5, 6));
        assert_eq!(ids[3], RowId { snapshot_id: 3, event_id: Some(3) });
        // Permuted input permutes rows.
        let rev: Vec<CsiSnapshot> = d.iter().rev().cloned().collect();
        let (xr, _) = build_matrix(&rev).unwrap();
        for i in 0..5 {
            assert_eq!(x.row(i), xr.row(4 - i));
        }
    }

    #[test]
    fn heterogeneous_shapes_rejected() {
        let a = snap(0, 1, vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)]);
        let b = snap(1, 1, vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0)]);
        assert!(build_matrix(&[a, b]).is_err());
    }

    proptest! {
        #[test]
        fn normalized_and_invariant(
            mags in prop::collection::vec(1e-6..1.0f64, 6),
            phases in prop::collection::vec(-3.2..3.2f64, 6),
            gain in 1e-3..1e3f64,
            rot in -3.2..3.2f64,
        ) {
            let vals: Vec<Complex64> = mags.iter().zip(&phases).map(|(m, p)| Complex64::from_polar(*m, *p)).collect();
            let Ok(f) = build_feature(&snap(0, 2, vals.clone())) else { return Ok(()); };
            let mean = f.values.iter().sum::<f64>() / 6.0;
            let norm = f.values.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((norm - 1.0).abs() < 1e-9);

            let scaled: Vec<Complex64> = vals.iter().map(|v| v * gain * Complex64::from_polar(1.0, rot)).collect();
            let g = build_feature(&snap(0, 2, scaled)).unwrap();
            for (a, b) in f.values.iter().zip(&g.values) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
