//! Incident-field model, coupled-system solver and reradiated field.
//!
//! The field impinging on element `n` is the sum of the direct spherical wave
//! from the transmitter, image-source wall reflections and re-illumination by
//! adjacent elements:
//!
//! ```text
//! E_inc[n] = E_dir[n] + E_sec[n] + a * sum_{m in N(n)} G[m] E_inc[m] * (d / r_nm) e^{j k r_nm}
//! ```
//!
//! Coupling distances are measured in units of the element pitch `d` so that
//! the coupling strength `a` stays dimensionless; nearest neighbors couple with
//! magnitude exactly `a`. Because the coupling term depends on `E_inc`, the
//! system is solved by Jacobi fixed-point iteration from `E_dir + E_sec`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use thiserror::Error;

use crate::geometry::RisGeometry;
use crate::math::{cis, spherical_wave, wrap_phase, Complex64, Vec3};
use crate::scene::SceneConfig;

/// Power floor used by [`snr_db`]; a null field maps to -300 dB.
pub const POWER_FLOOR: f64 = 1e-30;
pub const SNR_FLOOR_DB: f64 = -300.0;

/// Distances below this are treated as coincident points.
const COINCIDENT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("transmitter coincides with element {0}")]
    SourceOnElement(usize),
    #[error("state has {got} elements but the geometry has {expected}")]
    StateLength { expected: usize, got: usize },
    #[error("field vector has {got} elements but the geometry has {expected}")]
    FieldLength { expected: usize, got: usize },
    #[error("coupled solver diverged: residual {residual:e} after {iterations} iterations")]
    Divergence { iterations: usize, residual: f64 },
    #[error("observation point coincides with element {0}")]
    PointOnElement(usize),
    #[error("observation point ({x}, {y}, {z}) lies outside the room")]
    OutsideRoom { x: f64, y: f64, z: f64 },
    #[error("observation grid axis {axis} is empty")]
    EmptyAxis { axis: usize },
}

/// Per-element reflection state `Gamma_n = rho_n e^{j phi_n}` with `rho_n` in {0, 1}.
#[derive(Clone, Debug, PartialEq)]
pub struct RisState {
    on: Vec<bool>,
    phases: Vec<f64>,
}

impl RisState {
    /// Builds a state, wrapping every phase into `[-pi, pi)`.
    ///
    /// # Panics
    /// If `on` and `phases` differ in length.
    pub fn new(on: Vec<bool>, mut phases: Vec<f64>) -> Self {
        assert_eq!(on.len(), phases.len(), "amplitude/phase length mismatch");
        for p in &mut phases {
            *p = wrap_phase(*p);
        }
        Self { on, phases }
    }

    /// Every element on, with the given phases.
    pub fn all_on(phases: Vec<f64>) -> Self {
        Self::new(vec![true; phases.len()], phases)
    }

    /// Every element on with zero phase.
    pub fn uniform(n: usize) -> Self {
        Self::all_on(vec![0.0; n])
    }

    /// Every element off.
    pub fn dark(n: usize) -> Self {
        Self::new(vec![false; n], vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn is_on(&self, n: usize) -> bool {
        self.on[n]
    }

    pub fn amplitude(&self, n: usize) -> f64 {
        if self.on[n] {
            1.0
        } else {
            0.0
        }
    }

    pub fn phase(&self, n: usize) -> f64 {
        self.phases[n]
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn on_flags(&self) -> &[bool] {
        &self.on
    }

    pub fn gamma(&self, n: usize) -> Complex64 {
        if self.on[n] {
            cis(self.phases[n])
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Adds `phi0` to every phase.
    pub fn rotated(&self, phi0: f64) -> Self {
        Self::new(
            self.on.clone(),
            self.phases.iter().map(|p| p + phi0).collect(),
        )
    }
}

/// Complex field sample per element (normalized units).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FieldVector(pub Vec<Complex64>);

impl FieldVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Deref for FieldVector {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for FieldVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

/// `max{0, c}^p` with `0^0 = 1`.
fn cosine_weight(c: f64, p: f64) -> f64 {
    libm::pow(c.max(0.0), p)
}

/// Direct spherical-wave illumination of every element.
pub fn direct_field(scene: &SceneConfig, geometry: &RisGeometry) -> Result<FieldVector, FieldError> {
    let k = geometry.wavenumber;
    let s = scene.tx_position;
    let m = scene.tx_beam_exponent;
    let p = scene.element_angle_exponent;
    let mut out = Vec::with_capacity(geometry.len());
    for (n, (pos, normal)) in geometry.positions.iter().zip(&geometry.normals).enumerate() {
        let d = *pos - s;
        let r = d.norm();
        if r < COINCIDENT {
            return Err(FieldError::SourceOnElement(n));
        }
        let dhat = d.scale(1.0 / r);
        let cos_el = dhat.dot(*normal);
        if cos_el < 0.0 {
            // element faces away from the transmitter
            out.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let weight = libm::pow(dhat.dot(scene.tx_direction).abs(), m) * cosine_weight(cos_el, p);
        out.push(spherical_wave(k, r) * weight);
    }
    Ok(FieldVector(out))
}

/// Image-source contributions of every reflective uncovered wall.
///
/// The cosine factor is applied only when the element exponent is positive;
/// with `p = 0` the purely geometric image contribution remains.
pub fn secondary_field(scene: &SceneConfig, geometry: &RisGeometry) -> FieldVector {
    let k = geometry.wavenumber;
    let p = scene.element_angle_exponent;
    let mut out = FieldVector::zeros(geometry.len());
    for image in &geometry.image_sources {
        for (n, (pos, normal)) in geometry.positions.iter().zip(&geometry.normals).enumerate() {
            let d = *pos - image.position;
            let r = d.norm();
            let weight = if p > 0.0 {
                cosine_weight(d.scale(1.0 / r).dot(*normal), p)
            } else {
                1.0
            };
            out[n] += spherical_wave(k, r) * (image.reflectivity * weight);
        }
    }
    out
}

/// Jacobi iteration controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    /// Stop once `max|x_new - x| <= tolerance * max|x_new|`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Unconverged solves whose residual exceeds this are reported as divergent.
    pub divergence_residual: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 100,
            divergence_residual: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncidentSolution {
    pub field: FieldVector,
    pub iterations: usize,
    /// Max-norm of `x - F(x)` at the returned field.
    pub residual: f64,
    pub converged: bool,
}

/// Precomputed source field and coupling kernel for one scene.
///
/// Building the solver once and calling [`IncidentSolver::solve`] per state
/// avoids recomputing the state-independent terms.
#[derive(Clone, Debug)]
pub struct IncidentSolver<'g> {
    geometry: &'g RisGeometry,
    source: FieldVector,
    /// Coupling coefficient per CSR adjacency entry.
    kernel: Vec<Complex64>,
    coupled: bool,
    settings: SolverSettings,
}

impl<'g> IncidentSolver<'g> {
    pub fn new(scene: &SceneConfig, geometry: &'g RisGeometry) -> Result<Self, FieldError> {
        let mut source = direct_field(scene, geometry)?;
        let secondary = secondary_field(scene, geometry);
        for (a, b) in source.iter_mut().zip(secondary.iter()) {
            *a += *b;
        }
        let alpha = scene.coupling_strength;
        let k = geometry.wavenumber;
        let d = geometry.spacing;
        let (offsets, indices) = geometry.adjacency();
        let mut kernel = Vec::with_capacity(indices.len());
        for n in 0..geometry.len() {
            for &m in &indices[offsets[n]..offsets[n + 1]] {
                let r = geometry.positions[n].distance(geometry.positions[m]);
                kernel.push(cis(k * r) * (alpha * d / r));
            }
        }
        Ok(Self {
            geometry,
            source,
            kernel,
            coupled: alpha != 0.0 && !indices.is_empty(),
            settings: SolverSettings::default(),
        })
    }

    pub fn with_settings(mut self, settings: SolverSettings) -> Self {
        self.settings = settings;
        self
    }

    /// `E_dir + E_sec`.
    pub fn source(&self) -> &FieldVector {
        &self.source
    }

    pub fn geometry(&self) -> &'g RisGeometry {
        self.geometry
    }

    /// Writes `F(x) = source + coupling(Gamma * x)` into `out`.
    fn apply(&self, state: &RisState, x: &[Complex64], scratch: &mut [Complex64], out: &mut [Complex64]) {
        for (m, y) in scratch.iter_mut().enumerate() {
            *y = state.gamma(m) * x[m];
        }
        let (offsets, indices) = self.geometry.adjacency();
        for n in 0..x.len() {
            let lo = offsets[n];
            let hi = offsets[n + 1];
            let mut acc = self.source[n];
            for (kv, &m) in self.kernel[lo..hi].iter().zip(&indices[lo..hi]) {
                acc += kv * scratch[m];
            }
            out[n] = acc;
        }
    }

    fn check_state(&self, state: &RisState) -> Result<(), FieldError> {
        if state.len() != self.geometry.len() {
            return Err(FieldError::StateLength {
                expected: self.geometry.len(),
                got: state.len(),
            });
        }
        Ok(())
    }

    /// Max-norm of `x - F(x)` for a candidate incident field `x`.
    pub fn residual(&self, state: &RisState, field: &FieldVector) -> Result<f64, FieldError> {
        self.check_state(state)?;
        if field.len() != self.geometry.len() {
            return Err(FieldError::FieldLength {
                expected: self.geometry.len(),
                got: field.len(),
            });
        }
        let n = field.len();
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        let mut image = vec![Complex64::new(0.0, 0.0); n];
        self.apply(state, field, &mut scratch, &mut image);
        Ok(field
            .iter()
            .zip(&image)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn solve(&self, state: &RisState) -> Result<IncidentSolution, FieldError> {
        self.check_state(state)?;
        let n = self.geometry.len();
        if !self.coupled {
            return Ok(IncidentSolution {
                field: self.source.clone(),
                iterations: 1,
                residual: 0.0,
                converged: true,
            });
        }
        let mut x = self.source.0.clone();
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.settings.max_iterations {
            iterations += 1;
            self.apply(state, &x, &mut scratch, &mut next);
            let mut update = 0.0f64;
            let mut scale = 0.0f64;
            for (a, b) in next.iter().zip(&x) {
                update = update.max((a - b).norm());
                scale = scale.max(a.norm());
            }
            core::mem::swap(&mut x, &mut next);
            if !update.is_finite() {
                break;
            }
            if update <= self.settings.tolerance * scale {
                converged = true;
                break;
            }
        }
        let field = FieldVector(x);
        let residual = if field.is_finite() {
            self.residual(state, &field)?
        } else {
            f64::INFINITY
        };
        if !converged && !(residual <= self.settings.divergence_residual) {
            return Err(FieldError::Divergence {
                iterations,
                residual,
            });
        }
        Ok(IncidentSolution {
            field,
            iterations,
            residual,
            converged,
        })
    }
}

/// Solves the coupled incident-field system for one state.
pub fn solve_incident_field(
    scene: &SceneConfig,
    geometry: &RisGeometry,
    state: &RisState,
) -> Result<IncidentSolution, FieldError> {
    IncidentSolver::new(scene, geometry)?.solve(state)
}

/// Coherent superposition of all reradiated contributions at `r`.
pub fn total_field(
    geometry: &RisGeometry,
    state: &RisState,
    e_inc: &FieldVector,
    r: Vec3,
) -> Result<Complex64, FieldError> {
    if state.len() != geometry.len() {
        return Err(FieldError::StateLength {
            expected: geometry.len(),
            got: state.len(),
        });
    }
    if e_inc.len() != geometry.len() {
        return Err(FieldError::FieldLength {
            expected: geometry.len(),
            got: e_inc.len(),
        });
    }
    let k = geometry.wavenumber;
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, pos) in geometry.positions.iter().enumerate() {
        let dist = r.distance(*pos);
        if dist < COINCIDENT {
            return Err(FieldError::PointOnElement(n));
        }
        if state.is_on(n) {
            acc += state.gamma(n) * e_inc[n] * spherical_wave(k, dist);
        }
    }
    Ok(acc)
}

/// `10 log10(max(|e|^2, 1e-30))`.
pub fn snr_db(e: Complex64) -> f64 {
    10.0 * libm::log10(e.norm_sqr().max(POWER_FLOOR))
}

/// One axis of an observation grid: `count` evenly spaced samples over
/// `[min, max]`; a single sample sits at `min`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn fixed(value: f64) -> Self {
        Self {
            min: value,
            max: value,
            count: 1,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn step(&self) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            (self.max - self.min) / (self.count - 1) as f64
        }
    }
}

/// Axis-aligned plane or volume of observation points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub x: AxisSpec,
    pub y: AxisSpec,
    pub z: AxisSpec,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.x.count * self.y.count * self.z.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in row-major order: `z` slowest, `x` fastest.
    pub fn points(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.z.count).flat_map(move |iz| {
            (0..self.y.count).flat_map(move |iy| {
                (0..self.x.count)
                    .map(move |ix| Vec3::new(self.x.value(ix), self.y.value(iy), self.z.value(iz)))
            })
        })
    }

    pub fn validate(&self, scene: &SceneConfig) -> Result<(), FieldError> {
        for (axis, a) in [self.x, self.y, self.z].iter().enumerate() {
            if a.count == 0 {
                return Err(FieldError::EmptyAxis { axis });
            }
        }
        // axes are monotone, so the extreme corners bound every point
        let lo = Vec3::new(self.x.value(0), self.y.value(0), self.z.value(0));
        let hi = Vec3::new(
            self.x.value(self.x.count - 1),
            self.y.value(self.y.count - 1),
            self.z.value(self.z.count - 1),
        );
        for p in [lo, hi] {
            if !scene.contains(p) {
                return Err(FieldError::OutsideRoom {
                    x: p.x,
                    y: p.y,
                    z: p.z,
                });
            }
        }
        Ok(())
    }
}

/// SNR raster over a [`GridSpec`], row-major (`x` fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct SnrRaster {
    pub grid: GridSpec,
    pub points: Vec<Vec3>,
    pub snr_db: Vec<f64>,
    /// Points that coincide with an element; their value is the floor.
    pub flagged: Vec<bool>,
}

impl SnrRaster {
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, v) in self.snr_db.iter().enumerate() {
            if best.is_none_or(|b| *v > self.snr_db[b]) {
                best = Some(i);
            }
        }
        best
    }
}

/// Evaluates the SNR raster for an already solved incident field.
pub fn snr_raster(
    scene: &SceneConfig,
    geometry: &RisGeometry,
    state: &RisState,
    e_inc: &FieldVector,
    grid: &GridSpec,
) -> Result<SnrRaster, FieldError> {
    grid.validate(scene)?;
    let points: Vec<Vec3> = grid.points().collect();
    let mut values = Vec::with_capacity(points.len());
    let mut flagged = Vec::with_capacity(points.len());
    for p in &points {
        match total_field(geometry, state, e_inc, *p) {
            Ok(e) => {
                values.push(snr_db(e));
                flagged.push(false);
            }
            Err(FieldError::PointOnElement(_)) => {
                values.push(SNR_FLOOR_DB);
                flagged.push(true);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SnrRaster {
        grid: *grid,
        points,
        snr_db: values,
        flagged,
    })
}

/// Solves the incident field under `state` and rasterizes the SNR.
pub fn snr_map(
    scene: &SceneConfig,
    geometry: &RisGeometry,
    state: &RisState,
    grid: &GridSpec,
) -> Result<SnrRaster, FieldError> {
    let solution = solve_incident_field(scene, geometry, state)?;
    snr_raster(scene, geometry, state, &solution.field, grid)
}
