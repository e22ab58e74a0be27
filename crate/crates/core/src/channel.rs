//! Optical-to-electrical channel: Lambertian line of sight, single-bounce
//! diffuse reflections from tessellated room surfaces, obstacle shadowing
//! and the first-order low-pass response of the phosphor-converted LED.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{ray_occluded, Event, Luminaire, Obstacle, Photodetector, Room, Scenario, Vec3};

/// Propagation speed used for path delays, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// One propagation path: photocurrent per transmitted optical watt and its delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub gain: f64,
    /// Seconds.
    pub delay: f64,
}

/// Ground-truth complex frequency response seen by one photodetector.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResponse {
    pub pd_index: usize,
    pub event_id: u32,
    pub freqs: Vec<f64>,
    pub h: Vec<Complex64>,
}

/// Room surface element used for the diffuse bounce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Patch {
    pub center: Vec3,
    /// Inward-facing unit normal.
    pub normal: Vec3,
    pub area: f64,
    pub reflectivity: f64,
}

/// Line-of-sight DC gain from the luminaire to a photodetector.
///
/// `R · (m+1)·A / (2π d²) · cos^m(φ) · cos(ψ)` inside the field of view and
/// with an unobstructed path, zero otherwise.
pub fn los_gain(lum: &Luminaire, pd: &Photodetector, obstacles: &[Obstacle]) -> Result<f64> {
    if lum.position == pd.position {
        return Err(Error::invalid("los_gain: luminaire and photodetector coincide"));
    }
    let gain = pd.responsivity
        * lambertian_link(
            lum.position,
            lum.orientation,
            lum.lambertian_order,
            pd.position,
            pd.orientation,
            pd.area,
            Some(pd.fov_half_angle),
        );
    if gain == 0.0 || ray_occluded(lum.position, pd.position, obstacles)? {
        return Ok(0.0);
    }
    Ok(gain)
}

/// Unoccluded Lambertian power transfer from an emitter to a receiving
/// aperture. Returns zero when either end faces away or the arrival angle
/// exceeds `fov`.
fn lambertian_link(
    tx: Vec3,
    tx_normal: Vec3,
    order: f64,
    rx: Vec3,
    rx_normal: Vec3,
    rx_area: f64,
    fov: Option<f64>,
) -> f64 {
    let delta = rx - tx;
    let d2 = delta.dot(delta);
    let d = d2.sqrt();
    let cos_emit = tx_normal.dot(delta) / d;
    let cos_incidence = -rx_normal.dot(delta) / d;
    if cos_emit < 0.0 || cos_incidence < 0.0 {
        return 0.0;
    }
    if let Some(fov) = fov {
        if cos_incidence.clamp(-1.0, 1.0).acos() > fov {
            return 0.0;
        }
    }
    (order + 1.0) * rx_area / (2.0 * PI * d2) * cos_emit.powf(order) * cos_incidence
}

/// Tessellates the six room surfaces into near-square patches of side
/// `patch_size`. A surface whose extent is not a multiple of `patch_size`
/// is split into `ceil(extent / patch_size)` equal cells.
pub fn surface_patches(room: &Room, patch_size: f64) -> Vec<Patch> {
    let (w, d, h) = (room.width, room.depth, room.height);
    let rho = room.wall_reflectivity;
    let mut patches = Vec::new();
    let cells = |extent: f64| ((extent / patch_size).ceil().max(1.0)) as usize;

    // (fixed axis, fixed value, inward normal, reflectivity)
    let walls = [
        (0usize, 0.0, Vec3::new(1.0, 0.0, 0.0), rho.west),
        (0, w, Vec3::new(-1.0, 0.0, 0.0), rho.east),
        (1, 0.0, Vec3::new(0.0, 1.0, 0.0), rho.south),
        (1, d, Vec3::new(0.0, -1.0, 0.0), rho.north),
        (2, 0.0, Vec3::UP, rho.floor),
        (2, h, Vec3::DOWN, rho.ceiling),
    ];
    for (axis, value, normal, reflectivity) in walls {
        // The two in-plane axes and their extents.
        let (ext_u, ext_v) = match axis {
            0 => (d, h),
            1 => (w, h),
            _ => (w, d),
        };
        let (nu, nv) = (cells(ext_u), cells(ext_v));
        let (du, dv) = (ext_u / nu as f64, ext_v / nv as f64);
        for i in 0..nu {
            for j in 0..nv {
                let u = (i as f64 + 0.5) * du;
                let v = (j as f64 + 0.5) * dv;
                let center = match axis {
                    0 => Vec3::new(value, u, v),
                    1 => Vec3::new(u, value, v),
                    _ => Vec3::new(u, v, value),
                };
                patches.push(Patch {
                    center,
                    normal,
                    area: du * dv,
                    reflectivity,
                });
            }
        }
    }
    patches
}

/// Single-bounce tap through one patch, or `None` when the patch contributes nothing.
pub fn patch_tap(
    lum: &Luminaire,
    pd: &Photodetector,
    patch: &Patch,
    obstacles: &[Obstacle],
) -> Result<Option<Tap>> {
    if patch.reflectivity == 0.0 {
        return Ok(None);
    }
    let incoming = lambertian_link(
        lum.position,
        lum.orientation,
        lum.lambertian_order,
        patch.center,
        patch.normal,
        patch.area,
        None,
    );
    if incoming == 0.0 {
        return Ok(None);
    }
    let outgoing = lambertian_link(
        patch.center,
        patch.normal,
        1.0,
        pd.position,
        pd.orientation,
        pd.area,
        Some(pd.fov_half_angle),
    );
    if outgoing == 0.0 {
        return Ok(None);
    }
    if ray_occluded(lum.position, patch.center, obstacles)?
        || ray_occluded(patch.center, pd.position, obstacles)?
    {
        return Ok(None);
    }
    let gain = pd.responsivity * incoming * patch.reflectivity * outgoing;
    let delay = (lum.position.distance(patch.center) + patch.center.distance(pd.position)) / SPEED_OF_LIGHT;
    Ok(Some(Tap { gain, delay }))
}

/// First-bounce diffuse taps for one photodetector under one event.
/// Patches with zero gain are omitted.
pub fn diffuse_gains(scene: &Scenario, event: &Event, pd_index: usize) -> Result<Vec<Tap>> {
    let pd = photodetector(scene, pd_index)?;
    let mut taps = Vec::new();
    for patch in surface_patches(&scene.room, scene.patch_size) {
        if let Some(tap) = patch_tap(&scene.luminaire, pd, &patch, &event.obstacles)? {
            taps.push(tap);
        }
    }
    Ok(taps)
}

/// Complex response of the LED's first-order low-pass modulation filter.
pub fn led_response(freq_hz: f64, cutoff_hz: f64) -> Complex64 {
    Complex64::new(1.0, 0.0) / Complex64::new(1.0, freq_hz / cutoff_hz)
}

/// Frequency response `H_led(f) · (g_LOS e^{-j2πfτ_LOS} + Σ g_i e^{-j2πfτ_i})`.
pub fn frequency_response(
    scene: &Scenario,
    event: &Event,
    pd_index: usize,
    freqs: &[f64],
) -> Result<ChannelResponse> {
    if freqs.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::invalid("frequency_response: frequencies must be finite and >= 0"));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("frequency_response: frequencies must be strictly increasing"));
    }
    let pd = photodetector(scene, pd_index)?;
    let lum = &scene.luminaire;
    let los = Tap {
        gain: los_gain(lum, pd, &event.obstacles)?,
        delay: lum.position.distance(pd.position) / SPEED_OF_LIGHT,
    };
    let diffuse = diffuse_gains(scene, event, pd_index)?;

    let h = freqs
        .iter()
        .map(|&f| {
            let paths: Complex64 = std::iter::once(&los)
                .chain(diffuse.iter())
                .map(|tap| Complex64::from_polar(tap.gain, -2.0 * PI * f * tap.delay))
                .sum();
            led_response(f, lum.led_cutoff_hz) * paths
        })
        .collect();

    Ok(ChannelResponse {
        pd_index,
        event_id: event.event_id,
        freqs: freqs.to_vec(),
        h,
    })
}

/// Writes the diffuse taps of every (event, pd) pair as CSV with columns
/// `event_id,pd_index,gain,delay_s`. Line-of-sight taps are included with
/// the same columns when their gain is nonzero.
pub fn write_taps_csv<W: Write>(scene: &Scenario, mut out: W) -> Result<()> {
    let io = |e| Error::io("<taps csv>", e);
    writeln!(out, "event_id,pd_index,gain,delay_s").map_err(io)?;
    for event in &scene.events {
        for (p, pd) in scene.pds.iter().enumerate() {
            let g = los_gain(&scene.luminaire, pd, &event.obstacles)?;
            if g > 0.0 {
                let delay = scene.luminaire.position.distance(pd.position) / SPEED_OF_LIGHT;
                writeln!(out, "{},{},{:.15e},{:.15e}", event.event_id, p, g, delay).map_err(io)?;
            }
            for tap in diffuse_gains(scene, event, p)? {
                writeln!(out, "{},{},{:.15e},{:.15e}", event.event_id, p, tap.gain, tap.delay)
                    .map_err(io)?;
            }
        }
    }
    Ok(())
}

fn photodetector(scene: &Scenario, pd_index: usize) -> Result<&Photodetector> {
    scene
        .pds
        .get(pd_index)
        .ok_or_else(|| Error::invalid(format!("pd_index {pd_index} out of range ({} pds)", scene.pds.len())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::SurfaceReflectivity;

    fn overhead_pair() -> (Luminaire, Photodetector) {
        let lum = Luminaire {
            position: Vec3::new(2.5, 2.5, 3.0),
            orientation: Vec3::DOWN,
            lambertian_order: 1.0,
            optical_power: 1.0,
            led_cutoff_hz: 2e6,
        };
        let pd = Photodetector {
            position: Vec3::new(2.5, 2.5, 1.0),
            orientation: Vec3::UP,
            area: 1e-4,
            fov_half_angle: 1.2,
            responsivity: 1.0,
        };
        (lum, pd)
    }

    fn dark_room(mut s: Scenario) -> Scenario {
        s.room.wall_reflectivity = SurfaceReflectivity::uniform(0.0);
        s
    }

    /// The bundled PDs look sideways; these tests need line of sight.
    fn facing_up(mut s: Scenario) -> Scenario {
        for pd in &mut s.pds {
            pd.orientation = Vec3::UP;
            pd.fov_half_angle = 85f64.to_radians();
        }
        s
    }

    #[test]
    fn los_gain_directly_below() {
        let (lum, pd) = overhead_pair();
        let g = los_gain(&lum, &pd, &[]).unwrap();
        assert!((g - 7.9577e-6).abs() < 1e-10, "{g}");
        assert!((g - 2.0e-4 / (2.0 * PI * 4.0)).abs() < 1e-18);
    }

    #[test]
    fn los_gain_outside_fov_is_zero() {
        let (lum, mut pd) = overhead_pair();
        // Tilt the PD so the LOS arrives at fov + 0.01 rad.
        let tilt = pd.fov_half_angle + 0.01;
        pd.orientation = Vec3::new(tilt.sin(), 0.0, tilt.cos());
        assert_eq!(los_gain(&lum, &pd, &[]).unwrap(), 0.0);
        let tilt = pd.fov_half_angle - 0.01;
        pd.orientation = Vec3::new(tilt.sin(), 0.0, tilt.cos());
        assert!(los_gain(&lum, &pd, &[]).unwrap() > 0.0);
    }

    #[test]
    fn los_gain_blocked_by_box() {
        let (lum, pd) = overhead_pair();
        let b = Obstacle::centered(2.5, 2.5, 1.5, 0.2, 0.2, 0.2).unwrap();
        assert_eq!(los_gain(&lum, &pd, &[b]).unwrap(), 0.0);
    }

    #[test]
    fn los_gain_coincident_is_error() {
        let (lum, mut pd) = overhead_pair();
        pd.position = lum.position;
        assert!(los_gain(&lum, &pd, &[]).is_err());
    }

    #[test]
    fn dark_room_has_no_diffuse_taps() {
        let s = dark_room(Scenario::desk_default());
        for p in 0..s.pds.len() {
            assert!(diffuse_gains(&s, &s.events[0], p).unwrap().is_empty());
        }
    }

    #[test]
    fn diffuse_gain_is_linear_in_reflectivity() {
        let s = Scenario::desk_default();
        let mut half = s.clone();
        half.room.wall_reflectivity = s.room.wall_reflectivity.scaled(0.5);
        let full = diffuse_gains(&s, &s.events[3], 1).unwrap();
        let halved = diffuse_gains(&half, &half.events[3], 1).unwrap();
        assert_eq!(full.len(), halved.len());
        assert!(!full.is_empty());
        for (a, b) in full.iter().zip(&halved) {
            assert!((b.gain - 0.5 * a.gain).abs() <= 1e-15 * a.gain);
            assert_eq!(a.delay, b.delay);
        }
    }

    #[test]
    fn diffuse_total_converges_with_patch_size() {
        let mut coarse = Scenario::desk_default();
        coarse.patch_size = 0.5;
        let mut fine = coarse.clone();
        fine.patch_size = 0.25;
        for p in 0..2 {
            let total = |s: &Scenario| -> f64 {
                diffuse_gains(s, &s.events[0], p).unwrap().iter().map(|t| t.gain).sum()
            };
            let (c, f) = (total(&coarse), total(&fine));
            assert!(((c - f) / f).abs() < 0.05, "pd {p}: coarse {c} fine {f}");
        }
    }

    #[test]
    fn dc_response_equals_los_gain_in_dark_room() {
        let s = facing_up(dark_room(Scenario::desk_default()));
        let r = frequency_response(&s, &s.events[0], 0, &[0.0]).unwrap();
        let g = los_gain(&s.luminaire, &s.pds[0], &[]).unwrap();
        assert!(g > 0.0);
        assert_eq!(r.h[0], Complex64::new(g, 0.0));
    }

    #[test]
    fn led_filter_is_3db_at_cutoff() {
        let ratio = led_response(2e6, 2e6).norm() / led_response(0.0, 2e6).norm();
        assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn single_tap_response_is_low_pass() {
        let s = facing_up(dark_room(Scenario::desk_default()));
        let freqs: Vec<f64> = (0..200).map(|i| i as f64 * 5e4).collect();
        let r = frequency_response(&s, &s.events[0], 1, &freqs).unwrap();
        let dc = r.h[0].norm();
        for h in &r.h {
            assert!(h.norm() <= dc * (1.0 + 1e-15));
        }
        let led: Vec<f64> = freqs.iter().map(|&f| led_response(f, 2e6).norm()).collect();
        assert!(led.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn occluding_one_pd_leaves_other_untouched() {
        let s = facing_up(dark_room(Scenario::desk_default()));
        // Small box on PD 1's line of sight, well clear of PD 0's.
        let lum = s.luminaire.position;
        let pd1 = s.pds[1].position;
        let mid = lum + (pd1 - lum) * 0.5;
        let blocker = Obstacle::centered(mid.x, mid.y, mid.z - 0.05, 0.1, 0.1, 0.1).unwrap();
        let empty = Event { event_id: 0, obstacles: vec![], label: "none".into(), reference_point: None };
        let blocked = Event { event_id: 1, obstacles: vec![blocker], label: "blk".into(), reference_point: Some(mid) };
        let freqs: Vec<f64> = (1..=24).map(|k| k as f64 * 5e4).collect();
        let a0 = frequency_response(&s, &empty, 0, &freqs).unwrap();
        let b0 = frequency_response(&s, &blocked, 0, &freqs).unwrap();
        assert_eq!(a0.h, b0.h);
        let a1 = frequency_response(&s, &empty, 1, &freqs).unwrap();
        let b1 = frequency_response(&s, &blocked, 1, &freqs).unwrap();
        assert!(a1.h.iter().zip(&b1.h).all(|(x, y)| x != y));
    }

    #[test]
    fn los_gain_falls_with_distance() {
        let (lum, mut pd) = overhead_pair();
        let mut last = f64::INFINITY;
        for i in 0..=40 {
            let d = 1.0 + i as f64 * 0.1;
            pd.position = Vec3::new(2.5, 2.5, 3.0 - d);
            let g = los_gain(&lum, &pd, &[]).unwrap();
            assert!(g <= last);
            last = g;
        }
    }

    #[test]
    fn rejects_unsorted_frequencies() {
        let s = Scenario::desk_default();
        assert!(frequency_response(&s, &s.events[0], 0, &[2.0, 1.0]).is_err());
        assert!(frequency_response(&s, &s.events[0], 0, &[-1.0]).is_err());
        assert!(frequency_response(&s, &s.events[0], 5, &[1.0]).is_err());
    }

    #[test]
    fn response_is_deterministic() {
        let s = Scenario::desk_default();
        let freqs: Vec<f64> = (1..=24).map(|k| k as f64 * 5e4).collect();
        let a = frequency_response(&s, &s.events[4], 0, &freqs).unwrap();
        let b = frequency_response(&s, &s.events[4], 0, &freqs).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn taps_csv_has_header_and_rows() {
        let s = Scenario::desk_default();
        let mut buf = Vec::new();
        write_taps_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("event_id,pd_index,gain,delay_s\n"));
        assert!(text.lines().count() > 10);
    }
}
