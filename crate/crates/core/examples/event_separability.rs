//! How far apart the ten desk events are, and how much SNR the silhouette
//! sweep needs to tell all of them apart.
//!
//! The two photodetectors see each event mostly as a level difference, so
//! the features of all events sit along one curve; the sweep below shows
//! the selected k climbing to 10 as noise shrinks.
//!
//! ```text
//! cargo run --release --example event_separability [snr_db ...]
//! ```

use vlc_sense::cluster::{match_labels, select_k, KMeansParams};
use vlc_sense::features::{build_feature, build_matrix};
use vlc_sense::ofdm::{collect_dataset, OfdmConfig};
use vlc_sense::scene::Scenario;

fn main() -> vlc_sense::Result<()> {
    let scene = Scenario::desk_default();
    let clean_cfg = OfdmConfig { snr_db: f64::INFINITY, ..OfdmConfig::default() };
    let clean = collect_dataset(&scene, &clean_cfg, 1, 0)?;
    let feats: Vec<Vec<f64>> = clean
        .iter()
        .map(|s| build_feature(s).map(|f| f.values))
        .collect::<vlc_sense::Result<_>>()?;

    println!("noiseless mean level per photodetector:");
    for s in &clean {
        let level = |p: usize| s.h_est.row(p).iter().map(|h| 20.0 * h.norm().log10()).sum::<f64>() / s.h_est.ncols() as f64;
        println!("  event {:?}: {:8.3} dB {:8.3} dB  (difference {:+.3})", s.event_id.unwrap(), level(0), level(1), level(0) - level(1));
    }
    let mut closest = (f64::INFINITY, 0, 0);
    for i in 0..feats.len() {
        for j in i + 1..feats.len() {
            let d = feats[i].iter().zip(&feats[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if d < closest.0 {
                closest = (d, i, j);
            }
        }
    }
    println!("closest pair: events {} and {}, feature distance {:.4}", closest.1, closest.2, closest.0);

    let sweep: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let sweep = if sweep.is_empty() { vec![25.0, 30.0, 35.0, 40.0] } else { sweep };
    let params = KMeansParams { restarts: 10, ..KMeansParams::default() };
    for snr_db in sweep {
        let cfg = OfdmConfig { snr_db, ..OfdmConfig::default() };
        let data = collect_dataset(&scene, &cfg, 100, 1)?;
        let (x, ids) = build_matrix(&data)?;
        let sel = select_k(x.view(), 2, 14, 1, &params)?;
        let truth: Vec<u32> = ids.iter().map(|r| r.event_id.unwrap()).collect();
        let m = match_labels(&sel.fit.assignments, &truth)?;
        println!("snr {snr_db:>5} dB: k = {:>2}, accuracy {:.3}", sel.model.k, m.accuracy);
    }
    Ok(())
}
