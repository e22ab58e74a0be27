//! The full file-based pipeline on the bundled scenario: simulate a CSI
//! dataset, train on it without labels, then evaluate positioning. Writes
//! its artifacts to `target/monitoring` (or the directory given as the
//! first argument).
//!
//! ```text
//! cargo run --release --example monitoring
//! ```

use std::path::PathBuf;
use std::time::Instant;

use vlc_sense::ofdm::OfdmConfig;
use vlc_sense::pipeline::{self, RunConfig};
use vlc_sense::scene::DESK_SNR_DB;

fn main() -> vlc_sense::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("target/monitoring"), PathBuf::from);
    let cfg = RunConfig {
        ofdm: OfdmConfig { snr_db: DESK_SNR_DB, ..OfdmConfig::default() },
        output_dir: out,
        ..RunConfig::default()
    };
    let start = Instant::now();

    let sim = pipeline::simulate(&cfg, false)?;
    let worst = sim.link.events.iter().map(|q| q.mean_ber).fold(0.0, f64::max);
    println!("simulated {} snapshots at {DESK_SNR_DB} dB, worst event BER {worst:.2e}", sim.snapshots.len());

    let model = pipeline::train(&sim.csi_path, &cfg)?;
    println!("trained: k = {} (silhouette {:.4})", model.k, model.silhouette_by_k[&model.k]);

    let model_path = cfg.output_dir.join(pipeline::MODEL_FILE);
    let eval = pipeline::evaluate(&sim.csi_path, &model_path, &cfg)?;
    let r = &eval.report;
    println!("accuracy {:.4}, ARI {:.4}, detection misses {}", r.accuracy, r.ari, r.detection_misses);
    if let (Some(median), Some(mean)) = (r.median_error, r.mean_error) {
        println!("positioning error: median {:.3} m, mean {:.4} m", median, mean);
    }
    for (event, acc) in &r.per_event_accuracy {
        println!("  event {event}: {acc:.3}");
    }
    println!("artifacts in {} ({:.1} s)", cfg.output_dir.display(), start.elapsed().as_secs_f64());
    Ok(())
}
