//! Line-of-sight and single-bounce channel of the bundled scenario: tap
//! statistics and the per-subcarrier magnitude seen by each photodetector,
//! with and without an object on the desk.
//!
//! ```text
//! cargo run --release --example channel_response
//! ```

use vlc_sense::channel::{diffuse_gains, frequency_response, los_gain};
use vlc_sense::ofdm::OfdmConfig;
use vlc_sense::scene::Scenario;

fn main() -> vlc_sense::Result<()> {
    let scene = Scenario::desk_default();
    let freqs = OfdmConfig::default().subcarrier_freqs();

    for event in [&scene.events[0], &scene.events[5]] {
        println!("{}:", event.label);
        for (p, pd) in scene.pds.iter().enumerate() {
            let los = los_gain(&scene.luminaire, pd, &event.obstacles)?;
            let taps = diffuse_gains(&scene, event, p)?;
            let diffuse: f64 = taps.iter().map(|t| t.gain).sum();
            let (first, last) = taps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), t| (a.min(t.delay), b.max(t.delay)));
            println!(
                "  pd {p}: LOS {los:.3e}, diffuse {diffuse:.3e} over {} patches, delays {:.1}..{:.1} ns",
                taps.len(),
                first * 1e9,
                last * 1e9
            );
            let r = frequency_response(&scene, event, p, &freqs)?;
            let db: Vec<String> = r.h.iter().step_by(4).map(|h| format!("{:6.2}", 20.0 * h.norm().log10())).collect();
            println!("    |H| dB every 4th subcarrier: {}", db.join(" "));
        }
    }
    Ok(())
}
