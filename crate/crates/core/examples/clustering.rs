//! Features, k-means++ with a silhouette sweep, and scoring against the
//! hidden labels, all in memory on the bundled scenario.
//!
//! ```text
//! cargo run --release --example clustering
//! ```

use vlc_sense::cluster::{ari, match_labels, select_k, KMeansParams};
use vlc_sense::features::build_matrix;
use vlc_sense::ofdm::{collect_dataset, OfdmConfig};
use vlc_sense::scene::{Scenario, DESK_SNR_DB};

fn main() -> vlc_sense::Result<()> {
    let scene = Scenario::desk_default();
    let cfg = OfdmConfig { snr_db: DESK_SNR_DB, ..OfdmConfig::default() };
    let data = collect_dataset(&scene, &cfg, 100, 3)?;
    let (x, ids) = build_matrix(&data)?;
    println!("feature matrix {} x {}", x.nrows(), x.ncols());

    let params = KMeansParams { restarts: 10, ..KMeansParams::default() };
    let sel = select_k(x.view(), 2, 14, 3, &params)?;
    for (k, s) in &sel.model.silhouette_by_k {
        let mark = if *k == sel.model.k { " <-" } else { "" };
        println!("  k = {k:>2}  silhouette {s:.4}{mark}");
    }
    println!(
        "winning restart {} of {}, {} Lloyd iterations, inertia {:.4}",
        sel.fit.restart,
        params.restarts,
        sel.fit.inertia_trace.len(),
        sel.fit.inertia
    );

    let truth: Vec<u32> = ids.iter().map(|r| r.event_id.expect("simulated data is labeled")).collect();
    let m = match_labels(&sel.fit.assignments, &truth)?;
    println!("accuracy {:.4}, ARI {:.4}", m.accuracy, ari(&sel.fit.assignments, &truth)?);
    for (c, e) in m.matched_map.iter().enumerate() {
        println!("  cluster {c} -> event {e:?}");
    }
    Ok(())
}
