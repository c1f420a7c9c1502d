//! Scenario parameters for the cubic room, transmitter and RIS panels.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::math::Vec3;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One face of the cubic room `[0, L]^3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wall {
    XMin,
    XMax,
    YMin,
    YMax,
    /// Floor.
    ZMin,
    /// Ceiling.
    ZMax,
}

impl Wall {
    pub const ALL: [Wall; 6] = [
        Wall::XMin,
        Wall::XMax,
        Wall::YMin,
        Wall::YMax,
        Wall::ZMin,
        Wall::ZMax,
    ];

    pub const VERTICAL: [Wall; 4] = [Wall::XMin, Wall::XMax, Wall::YMin, Wall::YMax];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            Wall::XMin => "x_min",
            Wall::XMax => "x_max",
            Wall::YMin => "y_min",
            Wall::YMax => "y_max",
            Wall::ZMin => "z_min",
            Wall::ZMax => "z_max",
        }
    }

    pub fn from_name(name: &str) -> Option<Wall> {
        Wall::ALL.into_iter().find(|w| w.name() == name)
    }

    /// Unit normal pointing out of the room.
    pub fn outward_normal(self) -> Vec3 {
        match self {
            Wall::XMin => Vec3::new(-1.0, 0.0, 0.0),
            Wall::XMax => Vec3::new(1.0, 0.0, 0.0),
            Wall::YMin => Vec3::new(0.0, -1.0, 0.0),
            Wall::YMax => Vec3::new(0.0, 1.0, 0.0),
            Wall::ZMin => Vec3::new(0.0, 0.0, -1.0),
            Wall::ZMax => Vec3::new(0.0, 0.0, 1.0),
        }
    }

    /// Maps in-plane coordinates `(u, v)` to a point on the wall.
    ///
    /// Vertical walls use `v` as height (z); the floor and ceiling use
    /// `(u, v) = (x, y)`.
    pub fn point(self, side: f64, u: f64, v: f64) -> Vec3 {
        match self {
            Wall::XMin => Vec3::new(0.0, u, v),
            Wall::XMax => Vec3::new(side, u, v),
            Wall::YMin => Vec3::new(u, 0.0, v),
            Wall::YMax => Vec3::new(u, side, v),
            Wall::ZMin => Vec3::new(u, v, 0.0),
            Wall::ZMax => Vec3::new(u, v, side),
        }
    }

    /// Mirror image of `p` across the wall plane.
    pub fn mirror(self, side: f64, p: Vec3) -> Vec3 {
        match self {
            Wall::XMin => Vec3::new(-p.x, p.y, p.z),
            Wall::XMax => Vec3::new(2.0 * side - p.x, p.y, p.z),
            Wall::YMin => Vec3::new(p.x, -p.y, p.z),
            Wall::YMax => Vec3::new(p.x, 2.0 * side - p.y, p.z),
            Wall::ZMin => Vec3::new(p.x, p.y, -p.z),
            Wall::ZMax => Vec3::new(p.x, p.y, 2.0 * side - p.z),
        }
    }
}

/// Adjacency stencil used for mutual coupling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Neighborhood {
    #[default]
    Four,
    Eight,
}

impl Neighborhood {
    pub fn from_count(n: u32) -> Option<Self> {
        match n {
            4 => Some(Neighborhood::Four),
            8 => Some(Neighborhood::Eight),
            _ => None,
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Neighborhood::Four => 4,
            Neighborhood::Eight => 8,
        }
    }
}

/// A rectangular RIS panel placed on one wall.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelSpec {
    pub wall: Wall,
    pub rows: usize,
    pub cols: usize,
    /// Panel center in wall coordinates `(u, v)`; `None` centers it on the wall.
    pub center: Option<[f64; 2]>,
}

impl PanelSpec {
    pub fn centered(wall: Wall, rows: usize, cols: usize) -> Self {
        Self {
            wall,
            rows,
            cols,
            center: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("room side must be positive, got {0}")]
    RoomSide(f64),
    #[error("frequency must be positive, got {0}")]
    Frequency(f64),
    #[error("element spacing must be positive, got {0}")]
    Spacing(f64),
    #[error("transmitter must lie strictly inside the room")]
    TransmitterOutside,
    #[error("transmitter direction must be a unit vector (norm {0})")]
    TxDirection(f64),
    #[error("{name} must be finite and non-negative, got {value}")]
    Exponent { name: &'static str, value: f64 },
    #[error("coupling strength must lie in [0, 1], got {0}")]
    Coupling(f64),
    #[error("wall reflectivity for {wall} must be finite and non-negative, got {value}")]
    Reflectivity { wall: &'static str, value: f64 },
    #[error("no RIS panels configured")]
    NoPanels,
    #[error("panel {index} on {wall} is empty")]
    EmptyPanel { index: usize, wall: &'static str },
    #[error("panel {index} ({rows}x{cols}) does not fit on wall {wall}")]
    PanelDoesNotFit {
        index: usize,
        wall: &'static str,
        rows: usize,
        cols: usize,
    },
}

/// Non-fatal findings from [`SceneConfig::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum SceneWarning {
    /// `d > lambda / 4`: the aperture undersamples the impinging field.
    CoarseSpacing { spacing: f64, quarter_wavelength: f64 },
}

/// Full electromagnetic scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    /// Cube side `L` (m).
    pub room_side: f64,
    /// Carrier frequency (Hz).
    pub frequency: f64,
    pub tx_position: Vec3,
    pub tx_direction: Vec3,
    /// Transmitter pattern exponent `m`.
    pub tx_beam_exponent: f64,
    /// Element cosine-response exponent `p`.
    pub element_angle_exponent: f64,
    /// Mutual coupling strength, dimensionless in `[0, 1]`.
    pub coupling_strength: f64,
    /// Reflectivity per wall, indexed by [`Wall::index`]. Only walls without
    /// panels produce image sources.
    pub wall_reflectivity: [f64; 6],
    /// Element pitch `d` (m).
    pub element_spacing: f64,
    pub panels: Vec<PanelSpec>,
    pub neighborhood: Neighborhood,
}

impl SceneConfig {
    /// The desk-scale default: 1.5 m room at 6 GHz, one 20x20 panel on each
    /// vertical wall at quarter-wavelength pitch, coupling 0.15, transmitter at
    /// `[0.2L, 0.25L, 0.5L]`, floor and ceiling reflecting with 0.6.
    pub fn desk() -> Self {
        Self::with_panels(
            Wall::VERTICAL
                .into_iter()
                .map(|w| PanelSpec::centered(w, 20, 20))
                .collect(),
        )
    }

    /// Desk-scale defaults with a custom panel layout.
    pub fn with_panels(panels: Vec<PanelSpec>) -> Self {
        let room_side = 1.5;
        let frequency = 6.0e9;
        Self {
            room_side,
            frequency,
            tx_position: Vec3::new(0.2 * room_side, 0.25 * room_side, 0.5 * room_side),
            tx_direction: Vec3::new(1.0, 0.0, 0.0),
            tx_beam_exponent: 0.0,
            element_angle_exponent: 1.0,
            coupling_strength: 0.15,
            wall_reflectivity: [0.6; 6],
            element_spacing: SPEED_OF_LIGHT / frequency / 4.0,
            panels,
            neighborhood: Neighborhood::Four,
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }

    pub fn wavenumber(&self) -> f64 {
        core::f64::consts::TAU / self.wavelength()
    }

    pub fn is_covered(&self, wall: Wall) -> bool {
        self.panels.iter().any(|p| p.wall == wall)
    }

    /// Uncovered walls with non-zero reflectivity, in [`Wall::ALL`] order.
    pub fn reflective_walls(&self) -> impl Iterator<Item = (Wall, f64)> + '_ {
        Wall::ALL
            .into_iter()
            .filter(move |w| !self.is_covered(*w))
            .map(move |w| (w, self.wall_reflectivity[w.index()]))
            .filter(|(_, beta)| *beta > 0.0)
    }

    pub fn set_uncovered_reflectivity(&mut self, beta: f64) {
        self.wall_reflectivity = [beta; 6];
    }

    /// Strictly inside the open cube `(0, L)^3`.
    pub fn contains_strictly(&self, p: Vec3) -> bool {
        let l = self.room_side;
        [p.x, p.y, p.z].iter().all(|c| *c > 0.0 && *c < l)
    }

    /// Inside the closed cube `[0, L]^3`.
    pub fn contains(&self, p: Vec3) -> bool {
        let l = self.room_side;
        [p.x, p.y, p.z].iter().all(|c| *c >= 0.0 && *c <= l)
    }

    /// Panel center `(u, v)` in wall coordinates.
    pub(crate) fn panel_frame(&self, panel: &PanelSpec) -> [f64; 2] {
        panel
            .center
            .unwrap_or([0.5 * self.room_side, 0.5 * self.room_side])
    }

    pub fn validate(&self) -> Result<Vec<SceneWarning>, SceneError> {
        if !(self.room_side > 0.0 && self.room_side.is_finite()) {
            return Err(SceneError::RoomSide(self.room_side));
        }
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(SceneError::Frequency(self.frequency));
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(SceneError::Spacing(self.element_spacing));
        }
        if !self.contains_strictly(self.tx_position) {
            return Err(SceneError::TransmitterOutside);
        }
        let u_norm = self.tx_direction.norm();
        if !((u_norm - 1.0).abs() <= 1e-12) {
            return Err(SceneError::TxDirection(u_norm));
        }
        for (name, value) in [
            ("tx_beam_exponent", self.tx_beam_exponent),
            ("element_angle_exponent", self.element_angle_exponent),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(SceneError::Exponent { name, value });
            }
        }
        if !(0.0..=1.0).contains(&self.coupling_strength) {
            return Err(SceneError::Coupling(self.coupling_strength));
        }
        for w in Wall::ALL {
            let value = self.wall_reflectivity[w.index()];
            if !(value >= 0.0 && value.is_finite()) {
                return Err(SceneError::Reflectivity {
                    wall: w.name(),
                    value,
                });
            }
        }
        if self.panels.is_empty() {
            return Err(SceneError::NoPanels);
        }
        let l = self.room_side;
        let d = self.element_spacing;
        for (index, panel) in self.panels.iter().enumerate() {
            if panel.rows == 0 || panel.cols == 0 {
                return Err(SceneError::EmptyPanel {
                    index,
                    wall: panel.wall.name(),
                });
            }
            let [cu, cv] = self.panel_frame(panel);
            let half_u = 0.5 * panel.cols as f64 * d;
            let half_v = 0.5 * panel.rows as f64 * d;
            let fits = cu - half_u >= 0.0
                && cu + half_u <= l
                && cv - half_v >= 0.0
                && cv + half_v <= l;
            if !fits {
                return Err(SceneError::PanelDoesNotFit {
                    index,
                    wall: panel.wall.name(),
                    rows: panel.rows,
                    cols: panel.cols,
                });
            }
        }
        let quarter = self.wavelength() / 4.0;
        // relative slack so that d = lambda/4 computed independently does not warn
        let mut warnings = Vec::new();
        if d > quarter * (1.0 + 1e-12) {
            warnings.push(SceneWarning::CoarseSpacing {
                spacing: d,
                quarter_wavelength: quarter,
            });
        }
        Ok(warnings)
    }

    /// Hex SHA-256 over a canonical encoding of every scene parameter and the
    /// resulting element ordering.
    pub fn fingerprint(&self, element_positions: &[Vec3]) -> String {
        let mut h = Sha256::new();
        h.update(b"risorch-scene/1");
        let mut put = |x: f64| h.update(x.to_le_bytes());
        put(self.room_side);
        put(self.frequency);
        for v in [self.tx_position, self.tx_direction] {
            for c in v.to_array() {
                put(c);
            }
        }
        put(self.tx_beam_exponent);
        put(self.element_angle_exponent);
        put(self.coupling_strength);
        for beta in self.wall_reflectivity {
            put(beta);
        }
        put(self.element_spacing);
        let mut ints = vec![self.neighborhood.count() as u64, self.panels.len() as u64];
        for p in &self.panels {
            ints.extend([p.wall.index() as u64, p.rows as u64, p.cols as u64]);
            let [cu, cv] = self.panel_frame(p);
            ints.extend([cu.to_bits(), cv.to_bits()]);
        }
        ints.push(element_positions.len() as u64);
        for i in ints {
            h.update(i.to_le_bytes());
        }
        for p in element_positions {
            for c in p.to_array() {
                h.update(c.to_le_bytes());
            }
        }
        let digest = h.finalize();
        let mut out = String::with_capacity(64);
        for b in digest.iter() {
            let _ = write!(out, "{b:02x}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_is_valid_without_warnings() {
        let s = SceneConfig::desk();
        assert_eq!(s.validate().unwrap(), vec![]);
        assert!((s.wavelength() - 0.049965).abs() < 1e-6);
    }

    #[test]
    fn reflective_walls_skip_covered() {
        let s = SceneConfig::desk();
        let walls: Vec<_> = s.reflective_walls().map(|(w, _)| w).collect();
        assert_eq!(walls, vec![Wall::ZMin, Wall::ZMax]);
    }

    #[test]
    fn coarse_spacing_warns() {
        let mut s = SceneConfig::desk();
        s.element_spacing = s.wavelength() / 2.0;
        let w = s.validate().unwrap();
        assert!(matches!(w[0], SceneWarning::CoarseSpacing { .. }));
    }

    #[test]
    fn invalid_inputs_rejected() {
        let mut s = SceneConfig::desk();
        s.tx_position = Vec3::new(0.0, 0.5, 0.5);
        assert_eq!(s.validate(), Err(SceneError::TransmitterOutside));

        let mut s = SceneConfig::desk();
        s.tx_direction = Vec3::new(1.0, 1.0, 0.0);
        assert!(matches!(s.validate(), Err(SceneError::TxDirection(_))));

        let mut s = SceneConfig::desk();
        s.panels = vec![PanelSpec::centered(Wall::XMin, 121, 10)];
        assert!(matches!(
            s.validate(),
            Err(SceneError::PanelDoesNotFit { .. })
        ));
    }

    #[test]
    fn mirror_is_involution() {
        let p = Vec3::new(0.3, 0.4, 0.5);
        for w in Wall::ALL {
            assert!(w.mirror(1.5, w.mirror(1.5, p)).distance(p) < 1e-15);
            assert_eq!(Wall::from_name(w.name()), Some(w));
        }
    }

    #[test]
    fn fingerprint_tracks_frequency() {
        let a = SceneConfig::desk();
        let mut b = a.clone();
        b.frequency = 6.1e9;
        assert_ne!(a.fingerprint(&[]), b.fingerprint(&[]));
        assert_eq!(a.fingerprint(&[]), a.clone().fingerprint(&[]));
    }
}
