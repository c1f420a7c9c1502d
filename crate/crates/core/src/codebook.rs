//! Offline codebook compilation.
//!
//! For every candidate user location the compiler produces a focusing state by
//! near-field phase conjugation, a per-element influence score and the
//! single-user optimal SNR. Because mutual coupling makes the incident field
//! depend on the deployed state, conjugation is repeated over a fixed number of
//! outer rounds, each re-solving the incident field under the previous
//! round's phases.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::fanout::Fanout;
use crate::field::{snr_db, total_field, FieldError, FieldVector, IncidentSolver, RisState};
use crate::geometry::{build_geometry, GeometryError, RisGeometry};
use crate::math::{arg, wrap_phase, Vec3};
use crate::scene::SceneConfig;

/// Identifies the compilation procedure recorded in every codebook.
pub const COMPILER_VERSION: &str = "nf-conjugate/rounds=2/box3x3/v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("location ({x}, {y}, {z}) is not strictly inside the room")]
    LocationOutside { x: f64, y: f64, z: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodebookError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("no locations to compile")]
    NoLocations,
    #[error("location {index}: {source}")]
    Entry {
        index: usize,
        #[source]
        source: CompileError,
    },
    #[error("entry {index} has {got} elements, expected {expected}")]
    ElementCount {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("codebook was compiled for scene {expected}, current scene is {found}")]
    FingerprintMismatch { expected: String, found: String },
}

/// Spatial smoothing applied to raw influence before normalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Smoothing {
    /// Per-panel 3x3 box average over the available neighbors.
    #[default]
    Box3x3,
    /// Normalization only.
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompileOptions {
    pub outer_rounds: usize,
    pub smoothing: Smoothing,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            outer_rounds: 2,
            smoothing: Smoothing::Box3x3,
        }
    }
}

/// Per-location compilation product.
#[derive(Clone, Debug, PartialEq)]
pub struct CodebookEntry {
    pub location: Vec3,
    /// Continuous focusing phases in `[-pi, pi)`.
    pub phases: Vec<f64>,
    /// Smoothed, max-normalized influence in `[0, 1]`.
    pub influence: Vec<f64>,
    /// Single-user SNR (dB) under `phases` with every element on.
    pub optimal_snr: f64,
}

impl CodebookEntry {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn state(&self) -> RisState {
        RisState::all_on(self.phases.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub fingerprint: String,
    pub version: String,
    pub element_count: usize,
    pub entries: Vec<CodebookEntry>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks that every entry carries `element_count` elements.
    pub fn validate(&self) -> Result<(), CodebookError> {
        for (index, e) in self.entries.iter().enumerate() {
            for got in [e.phases.len(), e.influence.len()] {
                if got != self.element_count {
                    return Err(CodebookError::ElementCount {
                        index,
                        expected: self.element_count,
                        got,
                    });
                }
            }
        }
        Ok(())
    }

    /// Refuses a scene whose fingerprint differs from the compiled one.
    pub fn check_scene(&self, scene: &SceneConfig, geometry: &RisGeometry) -> Result<(), CodebookError> {
        let found = scene.fingerprint(&geometry.positions);
        if found != self.fingerprint {
            return Err(CodebookError::FingerprintMismatch {
                expected: self.fingerprint.clone(),
                found,
            });
        }
        Ok(())
    }
}

/// Phases that bring every element's contribution into phase at `r`:
/// `phi_n = -arg(E_inc[n]) - k |r - p_n|`.
pub fn conjugate_phases(geometry: &RisGeometry, e_inc: &FieldVector, r: Vec3) -> Vec<f64> {
    let k = geometry.wavenumber;
    geometry
        .positions
        .iter()
        .zip(e_inc.iter())
        .map(|(p, e)| wrap_phase(-arg(*e) - k * r.distance(*p)))
        .collect()
}

/// Per-panel box filter followed by division by the global maximum.
pub fn smooth_influence(raw: &[f64], geometry: &RisGeometry) -> Vec<f64> {
    smooth_influence_with(raw, geometry, Smoothing::Box3x3)
}

pub fn smooth_influence_with(raw: &[f64], geometry: &RisGeometry, smoothing: Smoothing) -> Vec<f64> {
    debug_assert_eq!(raw.len(), geometry.len());
    debug_assert!(raw.iter().all(|v| v.is_finite() && *v >= 0.0));
    let mut out = match smoothing {
        Smoothing::Identity => raw.to_vec(),
        Smoothing::Box3x3 => {
            let mut out = vec![0.0; raw.len()];
            for panel in &geometry.panels {
                for row in 0..panel.rows {
                    let r0 = row.saturating_sub(1);
                    let r1 = (row + 1).min(panel.rows - 1);
                    for col in 0..panel.cols {
                        let c0 = col.saturating_sub(1);
                        let c1 = (col + 1).min(panel.cols - 1);
                        let mut sum = 0.0;
                        for rr in r0..=r1 {
                            for cc in c0..=c1 {
                                sum += raw[panel.index(rr, cc)];
                            }
                        }
                        let count = ((r1 - r0 + 1) * (c1 - c0 + 1)) as f64;
                        out[panel.index(row, col)] = sum / count;
                    }
                }
            }
            out
        }
    };
    let max = out.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for v in &mut out {
            *v /= max;
        }
    } else {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    out
}

/// Compiles one entry against a prepared solver.
pub fn compile_entry_with(
    solver: &IncidentSolver<'_>,
    location: Vec3,
    options: &CompileOptions,
) -> Result<CodebookEntry, CompileError> {
    let geometry = solver.geometry();
    let inside = location.is_finite()
        && [location.x, location.y, location.z]
            .iter()
            .all(|c| *c > 0.0 && *c < geometry.room_side);
    if !inside {
        return Err(CompileError::LocationOutside {
            x: location.x,
            y: location.y,
            z: location.z,
        });
    }
    let mut state = RisState::uniform(geometry.len());
    for _ in 0..options.outer_rounds {
        let solution = solver.solve(&state)?;
        state = RisState::all_on(conjugate_phases(geometry, &solution.field, location));
    }
    let solution = solver.solve(&state)?;
    let raw: Vec<f64> = geometry
        .positions
        .iter()
        .zip(solution.field.iter())
        .map(|(p, e)| e.norm() / location.distance(*p))
        .collect();
    let influence = smooth_influence_with(&raw, geometry, options.smoothing);
    let optimal_snr = snr_db(total_field(geometry, &state, &solution.field, location)?);
    Ok(CodebookEntry {
        location,
        phases: state.phases().to_vec(),
        influence,
        optimal_snr,
    })
}

/// Compiles a single entry with the default options.
pub fn compile_entry(
    scene: &SceneConfig,
    geometry: &RisGeometry,
    location: Vec3,
) -> Result<CodebookEntry, CompileError> {
    let solver = IncidentSolver::new(scene, geometry)?;
    compile_entry_with(&solver, location, &CompileOptions::default())
}

/// Compiles one entry per location, preserving order.
pub fn compile_codebook<X: Fanout>(
    scene: &SceneConfig,
    locations: &[Vec3],
    options: &CompileOptions,
    fanout: &X,
) -> Result<Codebook, CodebookError> {
    if locations.is_empty() {
        return Err(CodebookError::NoLocations);
    }
    let geometry = build_geometry(scene)?;
    let solver = IncidentSolver::new(scene, &geometry)?;
    let results = fanout.map(locations.len(), |i| {
        compile_entry_with(&solver, locations[i], options)
    });
    let mut entries = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        entries.push(r.map_err(|source| CodebookError::Entry { index, source })?);
    }
    Ok(Codebook {
        fingerprint: scene.fingerprint(&geometry.positions),
        version: COMPILER_VERSION.to_string(),
        element_count: geometry.len(),
        entries,
    })
}
