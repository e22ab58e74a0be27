//! Build the bundled desk scenario, save it as JSON, break it, and show
//! what validation reports. Also probes a few rays against an obstacle.
//!
//! ```text
//! cargo run --example scene_validate
//! ```

use vlc_sense::scene::{ray_occluded, validate_scenario, Scenario, Vec3};

fn main() -> vlc_sense::Result<()> {
    let scene = Scenario::desk_default();
    println!(
        "room {} x {} x {} m, {} photodetectors, {} events",
        scene.room.width,
        scene.room.depth,
        scene.room.height,
        scene.pds.len(),
        scene.events.len()
    );
    for e in &scene.events {
        println!("  event {}: {}", e.event_id, e.label);
    }

    let path = std::env::temp_dir().join("vlc-sense-desk.json");
    std::fs::write(&path, scene.to_json_pretty()).expect("temp dir is writable");
    let loaded = Scenario::load(&path)?;
    println!("{} -> {:?}", path.display(), validate_scenario(&loaded));

    let mut broken = loaded.clone();
    broken.pds[1].position.z = 3.5;
    broken.pds[0].fov_half_angle = 0.0;
    broken.events[4].event_id = 2;
    broken.patch_size = -0.1;
    println!("broken copy:");
    for v in validate_scenario(&broken) {
        println!("  {v}");
    }

    let object = &scene.events[5].obstacles;
    let led = scene.luminaire.position;
    for pd in &scene.pds {
        let low = pd.position + Vec3::new(0.0, 0.0, 0.1);
        let across = Vec3::new(5.0 - pd.position.x, pd.position.y, pd.position.z + 0.2);
        println!(
            "pd at ({:.1}, {:.1}): LED ray blocked {}, ray across the desk blocked {}",
            pd.position.x,
            pd.position.y,
            ray_occluded(led, low, object)?,
            ray_occluded(low, across, object)?
        );
    }
    Ok(())
}
