//! Simulated CSI collection and the dataset CSV format.
//!
//! CSV header: `snapshot_id,event_id,pd_index,subcarrier_index,h_real,h_imag`,
//! one row per (snapshot, pd, subcarrier). `subcarrier_index` is the FFT
//! bin, `1..=K`. The `event_id` column is optional when reading.

use std::collections::HashMap;
use std::io::{Read, Write};

use ndarray::{concatenate, s, Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::link::{apply_channel, ber, equalize_and_demap, estimate_csi, pilot_grid};
use super::{CsiSnapshot, OfdmConfig};
use crate::channel::{frequency_response, ChannelResponse};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, stream_seed};
use crate::scene::{validate_scenario, Scenario};

/// Data-symbol bit error rate of one event, averaged over its snapshots and photodetectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkQuality {
    pub event_id: u32,
    pub mean_ber: f64,
    pub bits: u64,
}

#[derive(Debug, Clone)]
pub struct Collection {
    pub snapshots: Vec<CsiSnapshot>,
    pub link: Vec<LinkQuality>,
}

/// Simulates `snapshots_per_event` pilot transmissions per event and
/// returns their CSI estimates in event-major order.
pub fn collect_dataset(
    scene: &Scenario,
    cfg: &OfdmConfig,
    snapshots_per_event: usize,
    seed: u64,
) -> Result<Vec<CsiSnapshot>> {
    Ok(collect_dataset_with_link(scene, cfg, snapshots_per_event, seed)?.snapshots)
}

/// Like [`collect_dataset`], also demodulating the data symbols of every
/// frame with the estimated CSI to report per-event BER.
///
/// Snapshot `i` (global, event-major) draws its data bits from
/// `stream_rng(stream_seed(seed, i), 1)` and its noise from
/// `stream_seed(seed, i)`, so the dataset is identical for any thread count.
pub fn collect_dataset_with_link(
    scene: &Scenario,
    cfg: &OfdmConfig,
    snapshots_per_event: usize,
    seed: u64,
) -> Result<Collection> {
    let violations = validate_scenario(scene);
    if !violations.is_empty() {
        return Err(Error::InvalidScenario(violations));
    }
    cfg.validate()?;
    let qam = cfg.qam()?;
    let freqs = cfg.subcarrier_freqs();
    let n_pds = scene.pds.len();
    let k = cfg.active_subcarriers;

    let responses: Vec<Vec<ChannelResponse>> = scene
        .events
        .par_iter()
        .map(|ev| {
            (0..n_pds)
                .map(|p| frequency_response(scene, ev, p, &freqs))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let pilots = pilot_grid(cfg);
    let n_pilot = cfg.n_pilot_symbols;
    let data_bits_len = cfg.n_data_symbols * k * qam.bits_per_symbol();

    let jobs: Vec<(usize, u64)> = (0..scene.events.len())
        .flat_map(|e| (0..snapshots_per_event).map(move |s| (e, (e * snapshots_per_event + s) as u64)))
        .collect();

    let results: Vec<(CsiSnapshot, usize)> = jobs
        .par_iter()
        .map(|&(e, snapshot_id)| {
            let snap_seed = stream_seed(seed, snapshot_id);
            let mut bit_rng = stream_rng(snap_seed, 1);
            let bits: Vec<u8> = (0..data_bits_len).map(|_| bit_rng.gen_range(0..2u8)).collect();
            let data = Array2::from_shape_vec((cfg.n_data_symbols, k), qam.map(&bits)?)
                .expect("bit count matches grid");
            let grid = concatenate![Axis(0), pilots, data];

            let received = apply_channel(cfg, grid.view(), &responses[e], snap_seed)?;
            let rx_pilots: Vec<Array2<Complex64>> = received
                .iter()
                .map(|y| y.slice(s![..n_pilot, ..]).to_owned())
                .collect();
            let h_est = estimate_csi(cfg, &rx_pilots, pilots.view())?;

            let mut errors = 0usize;
            if data_bits_len > 0 {
                for (p, y) in received.iter().enumerate() {
                    let rx_bits = equalize_and_demap(cfg, y.slice(s![n_pilot.., ..]), h_est.row(p), p)?;
                    errors += (ber(&bits, &rx_bits)? * bits.len() as f64).round() as usize;
                }
            }
            let snap = CsiSnapshot {
                event_id: Some(scene.events[e].event_id),
                snapshot_id,
                h_est,
            };
            Ok((snap, errors))
        })
        .collect::<Result<_>>()?;

    let per_snapshot_bits = (data_bits_len * n_pds) as u64;
    let link = scene
        .events
        .iter()
        .enumerate()
        .map(|(e, ev)| {
            let chunk = &results[e * snapshots_per_event..(e + 1) * snapshots_per_event];
            let bits = per_snapshot_bits * snapshots_per_event as u64;
            let errors: usize = chunk.iter().map(|(_, n)| n).sum();
            LinkQuality {
                event_id: ev.event_id,
                mean_ber: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 },
                bits,
            }
        })
        .collect();

    Ok(Collection {
        snapshots: results.into_iter().map(|(s, _)| s).collect(),
        link,
    })
}

/// Writes snapshots in the dataset CSV format with 17 significant digits,
/// enough for an exact round trip.
pub fn write_csi_csv<W: Write>(snapshots: &[CsiSnapshot], mut out: W) -> Result<()> {
    let io = |e| Error::io("<csi csv>", e);
    writeln!(out, "snapshot_id,event_id,pd_index,subcarrier_index,h_real,h_imag").map_err(io)?;
    for snap in snapshots {
        let event = snap.event_id.map(|e| e.to_string()).unwrap_or_default();
        for ((p, j), h) in snap.h_est.indexed_iter() {
            writeln!(
                out,
                "{},{},{},{},{:.16e},{:.16e}",
                snap.snapshot_id,
                event,
                p,
                j + 1,
                h.re,
                h.im
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

struct Partial {
    snapshot_id: u64,
    event_id: Option<u32>,
    entries: Vec<(usize, usize, Complex64)>,
}

/// Parses a dataset CSV. Snapshots keep their order of first appearance.
/// `source` names the input in error messages.
pub fn read_csi_csv<R: Read>(input: R, source: &str) -> Result<Vec<CsiSnapshot>> {
    let perr = |msg: String| Error::parse(source, msg);
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(|e| perr(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = |name: &str| col(name).ok_or_else(|| perr(format!("missing column `{name}`")));
    let c_snap = required("snapshot_id")?;
    let c_pd = required("pd_index")?;
    let c_sub = required("subcarrier_index")?;
    let c_re = required("h_real")?;
    let c_im = required("h_imag")?;
    let c_event = col("event_id");

    let mut order: Vec<Partial> = Vec::new();
    let mut index: HashMap<u64, usize> = HashMap::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| perr(format!("line {line}: {e}")))?;
        let field = |c: usize, name: &str| {
            record
                .get(c)
                .map(str::trim)
                .ok_or_else(|| perr(format!("line {line}: missing field `{name}`")))
        };
        let num = |c: usize, name: &str| -> Result<f64> {
            let f = field(c, name)?;
            f.parse::<f64>()
                .map_err(|_| perr(format!("line {line}: field `{name}` is not a number: {f:?}")))
        };
        let int = |c: usize, name: &str| -> Result<u64> {
            let f = field(c, name)?;
            f.parse::<u64>()
                .map_err(|_| perr(format!("line {line}: field `{name}` is not an integer: {f:?}")))
        };
        let snapshot_id = int(c_snap, "snapshot_id")?;
        let pd = int(c_pd, "pd_index")? as usize;
        let sub = int(c_sub, "subcarrier_index")? as usize;
        if sub == 0 {
            return Err(perr(format!("line {line}: subcarrier_index starts at 1")));
        }
        let h = Complex64::new(num(c_re, "h_real")?, num(c_im, "h_imag")?);
        let event_id = match c_event {
            Some(c) => {
                let f = field(c, "event_id")?;
                if f.is_empty() {
                    None
                } else {
                    Some(f.parse::<u32>().map_err(|_| perr(format!("line {line}: bad event_id {f:?}")))?)
                }
            }
            None => None,
        };
        let slot = *index.entry(snapshot_id).or_insert_with(|| {
            order.push(Partial {
                snapshot_id,
                event_id,
                entries: Vec::new(),
            });
            order.len() - 1
        });
        let partial = &mut order[slot];
        if partial.event_id != event_id {
            return Err(perr(format!("line {line}: snapshot {snapshot_id} has inconsistent event_id")));
        }
        partial.entries.push((pd, sub - 1, h));
    }

    order
        .into_iter()
        .map(|p| {
            let n_pd = p.entries.iter().map(|e| e.0).max().map_or(0, |m| m + 1);
            let n_sub = p.entries.iter().map(|e| e.1).max().map_or(0, |m| m + 1);
            if p.entries.len() != n_pd * n_sub {
                return Err(perr(format!(
                    "snapshot {} has {} entries, expected a full {n_pd}x{n_sub} grid",
                    p.snapshot_id,
                    p.entries.len()
                )));
            }
            let mut h = Array2::from_elem((n_pd, n_sub), Complex64::new(f64::NAN, 0.0));
            for (pd, sub, v) in p.entries {
                if !h[[pd, sub]].re.is_nan() {
                    return Err(perr(format!(
                        "snapshot {} repeats pd {pd}, subcarrier {}",
                        p.snapshot_id,
                        sub + 1
                    )));
                }
                h[[pd, sub]] = v;
            }
            Ok(CsiSnapshot {
                event_id: p.event_id,
                snapshot_id: p.snapshot_id,
                h_est: h,
            })
        })
        .collect()
}
