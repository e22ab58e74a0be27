//! Indoor geometry: room, luminaire, photodetectors, obstacles and the
//! catalog of monitored events.
//!
//! Obstacles are fully absorbing axis-aligned boxes. A light path is
//! blocked as soon as the segment touches a box, faces included.

use std::collections::HashSet;
use std::ops::{Add, Mul, Sub};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point or direction in room coordinates, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);
    pub const DOWN: Vec3 = Vec3::new(0.0, 0.0, -1.0);

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    fn axis(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    /// Lexicographic comparison, used to canonicalize segment direction.
    fn lex_le(self, other: Vec3) -> bool {
        (self.x, self.y, self.z) <= (other.x, other.y, other.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Diffuse reflectivity of each room surface, in `[0, 1]`.
///
/// West/east walls sit at `x = 0` / `x = width`, south/north at `y = 0` /
/// `y = depth`, floor at `z = 0`, ceiling at `z = height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceReflectivity {
    pub west: f64,
    pub east: f64,
    pub south: f64,
    pub north: f64,
    pub floor: f64,
    pub ceiling: f64,
}

impl SurfaceReflectivity {
    pub const fn uniform(rho: f64) -> Self {
        Self {
            west: rho,
            east: rho,
            south: rho,
            north: rho,
            floor: rho,
            ceiling: rho,
        }
    }

    pub fn as_array(&self) -> [(&'static str, f64); 6] {
        [
            ("west", self.west),
            ("east", self.east),
            ("south", self.south),
            ("north", self.north),
            ("floor", self.floor),
            ("ceiling", self.ceiling),
        ]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            west: self.west * s,
            east: self.east * s,
            south: self.south * s,
            north: self.north * s,
            floor: self.floor * s,
            ceiling: self.ceiling * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    pub wall_reflectivity: SurfaceReflectivity,
}

impl Room {
    /// Closed-box containment test.
    pub fn contains(&self, p: Vec3) -> bool {
        p.is_finite()
            && (0.0..=self.width).contains(&p.x)
            && (0.0..=self.depth).contains(&p.y)
            && (0.0..=self.height).contains(&p.z)
    }
}

/// Single LED source with a generalized Lambertian radiation pattern and a
/// first-order modulation response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Luminaire {
    pub position: Vec3,
    /// Unit boresight vector.
    pub orientation: Vec3,
    pub lambertian_order: f64,
    /// Watts.
    pub optical_power: f64,
    /// 3-dB modulation bandwidth of the phosphor-converted LED, hertz.
    pub led_cutoff_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Photodetector {
    pub position: Vec3,
    /// Unit boresight vector.
    pub orientation: Vec3,
    /// Active area, m².
    pub area: f64,
    /// Field-of-view half angle, radians in `(0, π/2]`.
    pub fov_half_angle: f64,
    /// Amperes per watt.
    pub responsivity: f64,
}

/// Fully absorbing axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub min_corner: Vec3,
    pub max_corner: Vec3,
}

impl Obstacle {
    pub fn new(min_corner: Vec3, max_corner: Vec3) -> Result<Self> {
        let o = Self {
            min_corner,
            max_corner,
        };
        if !o.is_well_formed() {
            return Err(Error::invalid(format!(
                "obstacle corners {min_corner:?} / {max_corner:?} are not strictly ordered"
            )));
        }
        Ok(o)
    }

    /// Box of the given footprint and height resting on `z = base`, centered at `(cx, cy)`.
    pub fn centered(cx: f64, cy: f64, base: f64, size_x: f64, size_y: f64, height: f64) -> Result<Self> {
        Self::new(
            Vec3::new(cx - size_x / 2.0, cy - size_y / 2.0, base),
            Vec3::new(cx + size_x / 2.0, cy + size_y / 2.0, base + height),
        )
    }

    fn is_well_formed(&self) -> bool {
        self.min_corner.is_finite()
            && self.max_corner.is_finite()
            && self.min_corner.x < self.max_corner.x
            && self.min_corner.y < self.max_corner.y
            && self.min_corner.z < self.max_corner.z
    }
}

/// One monitored static configuration of the room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub event_id: u32,
    pub obstacles: Vec<Obstacle>,
    pub label: String,
    /// Nominal object position; `None` marks the "no object" baseline.
    pub reference_point: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub room: Room,
    pub luminaire: Luminaire,
    pub pds: Vec<Photodetector>,
    pub events: Vec<Event>,
    /// Side of the square wall patches used for the diffuse bounce, meters.
    pub patch_size: f64,
}

impl Scenario {
    /// Builds a scenario, rejecting it if any invariant is violated.
    pub fn new(
        room: Room,
        luminaire: Luminaire,
        pds: Vec<Photodetector>,
        events: Vec<Event>,
        patch_size: f64,
    ) -> Result<Self> {
        let s = Self {
            room,
            luminaire,
            pds,
            events,
            patch_size,
        };
        let violations = validate_scenario(&s);
        if violations.is_empty() {
            Ok(s)
        } else {
            Err(Error::InvalidScenario(violations))
        }
    }

    pub fn event(&self, event_id: u32) -> Option<&Event> {
        self.events.iter().find(|e| e.event_id == event_id)
    }

    pub fn from_json_str(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Reads a scenario file without validating it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Bundled desk-scale scenario: a 5 × 5 × 3 m room lit by one
    /// ceiling-center LED with a 0.5 MHz cutoff, two photodetectors 1 m
    /// apart at desk height looking across the desk, and a 3 × 3 grid of
    /// object positions at 0.10 m pitch plus a no-object baseline (10 events).
    ///
    /// All ten events separate cleanly at [`DESK_SNR_DB`].
    pub fn desk_default() -> Self {
        let room = Room {
            width: 5.0,
            depth: 5.0,
            height: 3.0,
            wall_reflectivity: SurfaceReflectivity {
                west: 0.8,
                east: 0.8,
                south: 0.8,
                north: 0.8,
                floor: 0.3,
                ceiling: 0.8,
            },
        };
        let luminaire = Luminaire {
            position: Vec3::new(2.5, 2.5, 3.0),
            orientation: Vec3::DOWN,
            lambertian_order: 1.0,
            optical_power: 1.0,
            led_cutoff_hz: LED_CUTOFF_HZ,
        };
        let pd = |x: f64, azimuth_deg: f64| {
            let (az, el) = (azimuth_deg.to_radians(), PD_ELEVATION_DEG.to_radians());
            Photodetector {
                position: Vec3::new(x, 2.5, DESK_HEIGHT),
                orientation: Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()),
                area: 1.0e-4,
                fov_half_angle: PD_FOV_DEG.to_radians(),
                responsivity: 0.4,
            }
        };
        // Facing each other across the desk, both turned 30° counterclockwise so
        // that no grid position is a mirror image of another.
        let pds = vec![pd(2.0, 30.0), pd(3.0, 210.0)];

        let mut events = vec![Event {
            event_id: 0,
            obstacles: Vec::new(),
            label: "no object".to_string(),
            reference_point: None,
        }];
        let mut id = 1;
        for row in 0..3 {
            for col in 0..3 {
                let cx = OBJECT_GRID_ORIGIN.0 + OBJECT_GRID_PITCH * col as f64;
                let cy = OBJECT_GRID_ORIGIN.1 + OBJECT_GRID_PITCH * row as f64;
                let (sx, sy, h) = OBJECT_SIZE;
                let obstacle = Obstacle::centered(cx, cy, DESK_HEIGHT, sx, sy, h)
                    .expect("object grid boxes are well formed");
                events.push(Event {
                    event_id: id,
                    obstacles: vec![obstacle],
                    label: format!("object at ({cx:.2}, {cy:.2})"),
                    reference_point: Some(Vec3::new(cx, cy, DESK_HEIGHT)),
                });
                id += 1;
            }
        }

        Self::new(room, luminaire, pds, events, 0.25).expect("bundled scenario is valid")
    }
}

/// Receiver SNR at which the bundled scenario is meant to be monitored.
///
/// Two photodetectors give an essentially one-dimensional signature (their
/// level difference), and ten clusters along one axis need roughly 38 dB
/// before silhouette resolves all of them.
pub const DESK_SNR_DB: f64 = 40.0;

const DESK_HEIGHT: f64 = 0.8;
const LED_CUTOFF_HZ: f64 = 0.5e6;
/// The photodetectors look across the desk, tilted up by this much.
const PD_ELEVATION_DEG: f64 = 20.0;
const PD_FOV_DEG: f64 = 30.0;
const OBJECT_GRID_ORIGIN: (f64, f64) = (2.3, 2.45);
const OBJECT_GRID_PITCH: f64 = 0.10;
/// Footprint x, footprint y, height of the object placed on the grid.
const OBJECT_SIZE: (f64, f64, f64) = (0.1, 0.3, 0.6);

/// True iff the open segment `(origin, dest)` touches any obstacle box.
///
/// Evaluation is canonicalized on the lexicographically smaller endpoint so
/// the result is exactly symmetric in its two endpoints.
pub fn ray_occluded(origin: Vec3, dest: Vec3, obstacles: &[Obstacle]) -> Result<bool> {
    if origin == dest {
        return Err(Error::invalid("ray_occluded: zero-length segment"));
    }
    let (a, b) = if origin.lex_le(dest) {
        (origin, dest)
    } else {
        (dest, origin)
    };
    Ok(obstacles.iter().any(|o| segment_hits_box(a, b, o)))
}

/// Slab test of `a + t (b - a)`, `t ∈ (0, 1)`, against a closed box.
fn segment_hits_box(a: Vec3, b: Vec3, bx: &Obstacle) -> bool {
    let d = b - a;
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for axis in 0..3 {
        let o = a.axis(axis);
        let dir = d.axis(axis);
        let lo = bx.min_corner.axis(axis);
        let hi = bx.max_corner.axis(axis);
        if dir == 0.0 {
            if o < lo || o > hi {
                return false;
            }
            continue;
        }
        let (t0, t1) = {
            let t0 = (lo - o) / dir;
            let t1 = (hi - o) / dir;
            if t0 <= t1 {
                (t0, t1)
            } else {
                (t1, t0)
            }
        };
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
        if t_enter > t_exit {
            return false;
        }
    }
    t_enter < 1.0 && t_exit > 0.0
}

/// Lists every violated scenario invariant; an empty list means valid.
pub fn validate_scenario(s: &Scenario) -> Vec<String> {
    let mut v = Vec::new();
    let room = &s.room;

    for (name, dim) in [
        ("room.width", room.width),
        ("room.depth", room.depth),
        ("room.height", room.height),
    ] {
        if !(dim.is_finite() && dim > 0.0) {
            v.push(format!("{name} must be > 0"));
        }
    }
    for (surface, rho) in room.wall_reflectivity.as_array() {
        if !(0.0..=1.0).contains(&rho) {
            v.push(format!("room.wall_reflectivity.{surface} not in [0,1]"));
        }
    }

    let lum = &s.luminaire;
    if !room.contains(lum.position) {
        v.push("luminaire.position outside room".to_string());
    }
    if !is_unit(lum.orientation) {
        v.push("luminaire.orientation not a unit vector".to_string());
    }
    if !(lum.lambertian_order >= 1.0 && lum.lambertian_order.is_finite()) {
        v.push("luminaire.lambertian_order must be >= 1".to_string());
    }
    if !(lum.optical_power > 0.0 && lum.optical_power.is_finite()) {
        v.push("luminaire.optical_power must be > 0".to_string());
    }
    if !(lum.led_cutoff_hz > 0.0 && lum.led_cutoff_hz.is_finite()) {
        v.push("luminaire.led_cutoff_hz must be > 0".to_string());
    }

    if s.pds.is_empty() {
        v.push("pds must contain at least one photodetector".to_string());
    }
    for (i, pd) in s.pds.iter().enumerate() {
        if !room.contains(pd.position) {
            v.push(format!("pd[{i}].position outside room"));
        }
        if !is_unit(pd.orientation) {
            v.push(format!("pd[{i}].orientation not a unit vector"));
        }
        if !(pd.area > 0.0 && pd.area.is_finite()) {
            v.push(format!("pd[{i}].area must be > 0"));
        }
        if !(pd.fov_half_angle > 0.0 && pd.fov_half_angle <= std::f64::consts::FRAC_PI_2) {
            v.push(format!("pd[{i}].fov_half_angle not in (0, pi/2]"));
        }
        if !(pd.responsivity > 0.0 && pd.responsivity.is_finite()) {
            v.push(format!("pd[{i}].responsivity must be > 0"));
        }
        if pd.position == lum.position {
            v.push(format!("pd[{i}].position coincides with luminaire"));
        }
    }

    if s.events.len() < 2 {
        v.push("events must contain at least 2 events".to_string());
    }
    let mut seen = HashSet::new();
    for (i, ev) in s.events.iter().enumerate() {
        if !seen.insert(ev.event_id) {
            v.push(format!("duplicate event_id {}", ev.event_id));
        }
        if let Some(p) = ev.reference_point {
            if !room.contains(p) {
                v.push(format!("events[{i}].reference_point outside room"));
            }
        }
        for (j, o) in ev.obstacles.iter().enumerate() {
            if !o.is_well_formed() {
                v.push(format!("events[{i}].obstacles[{j}] min_corner not < max_corner"));
            }
            if !(room.contains(o.min_corner) && room.contains(o.max_corner)) {
                v.push(format!("events[{i}].obstacles[{j}] outside room"));
            }
        }
    }

    if !(s.patch_size > 0.0 && s.patch_size.is_finite()) {
        v.push("patch_size must be > 0".to_string());
    }
    v
}

fn is_unit(v: Vec3) -> bool {
    v.is_finite() && (v.norm() - 1.0).abs() <= 1e-9
}
