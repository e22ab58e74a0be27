//! Simulate a small labeled CSI dataset, write it as CSV, and read it back
//! with and without the ground-truth column.
//!
//! ```text
//! cargo run --release --example csi_dataset
//! ```

use vlc_sense::ofdm::{collect_dataset, read_csi_csv, write_csi_csv, OfdmConfig};
use vlc_sense::scene::{Scenario, DESK_SNR_DB};

fn main() -> vlc_sense::Result<()> {
    let scene = Scenario::desk_default();
    let cfg = OfdmConfig { snr_db: DESK_SNR_DB, ..OfdmConfig::default() };
    let data = collect_dataset(&scene, &cfg, 5, 1)?;

    let mut csv = Vec::new();
    write_csi_csv(&data, &mut csv)?;
    let text = String::from_utf8(csv).expect("csv is utf-8");
    println!("{} rows; first lines:", text.lines().count() - 1);
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    let back = read_csi_csv(text.as_bytes(), "<memory>")?;
    assert_eq!(back, data);

    // Drop the event_id column: the snapshots come back unlabeled.
    let unlabeled: String = text
        .lines()
        .map(|l| {
            let mut cols: Vec<&str> = l.split(',').collect();
            cols.remove(1);
            cols.join(",") + "\n"
        })
        .collect();
    let blind = read_csi_csv(unlabeled.as_bytes(), "<memory>")?;
    println!(
        "unlabeled copy: {} snapshots, labels present: {}",
        blind.len(),
        blind.iter().any(|s| s.event_id.is_some())
    );
    let s = &data[7];
    println!("snapshot {} (event {:?}), pd 0 first subcarriers:", s.snapshot_id, s.event_id);
    for h in s.h_est.row(0).iter().take(4) {
        println!("  {:.4e} {:+.4e}j", h.re, h.im);
    }
    Ok(())
}
