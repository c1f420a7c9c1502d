//! Element placement, adjacency and image sources derived from a scene.

use alloc::vec::Vec;

use thiserror::Error;

use crate::math::Vec3;
use crate::scene::{Neighborhood, SceneConfig, SceneError, SceneWarning, Wall};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid scene: {0}")]
    Scene(#[from] SceneError),
}

/// Placement of one panel inside the flat element arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelLayout {
    pub wall: Wall,
    pub rows: usize,
    pub cols: usize,
    /// Index of the panel's first element.
    pub offset: usize,
}

impl PanelLayout {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        self.offset + row * self.cols + col
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Transmitter image across one reflective wall.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageSource {
    pub wall: Wall,
    pub position: Vec3,
    pub reflectivity: f64,
}

/// Element positions, per-element normals, adjacency (CSR) and image sources.
///
/// Elements are ordered panel-major, then row-major within a panel.
#[derive(Clone, Debug)]
pub struct RisGeometry {
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub panels: Vec<PanelLayout>,
    /// Panel index of each element.
    pub panel_of: Vec<u32>,
    pub image_sources: Vec<ImageSource>,
    pub wavenumber: f64,
    pub spacing: f64,
    pub room_side: f64,
    neighbor_offsets: Vec<usize>,
    neighbor_indices: Vec<usize>,
    warnings: Vec<SceneWarning>,
}

impl RisGeometry {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn neighbors(&self, n: usize) -> &[usize] {
        &self.neighbor_indices[self.neighbor_offsets[n]..self.neighbor_offsets[n + 1]]
    }

    /// CSR view of the adjacency: `(offsets, indices)`.
    pub fn adjacency(&self) -> (&[usize], &[usize]) {
        (&self.neighbor_offsets, &self.neighbor_indices)
    }

    pub fn warnings(&self) -> &[SceneWarning] {
        &self.warnings
    }
}

pub fn build_geometry(scene: &SceneConfig) -> Result<RisGeometry, GeometryError> {
    let warnings = scene.validate()?;
    let d = scene.element_spacing;
    let l = scene.room_side;

    let total: usize = scene.panels.iter().map(|p| p.rows * p.cols).sum();
    let mut positions = Vec::with_capacity(total);
    let mut normals = Vec::with_capacity(total);
    let mut panel_of = Vec::with_capacity(total);
    let mut panels = Vec::with_capacity(scene.panels.len());

    for (pi, spec) in scene.panels.iter().enumerate() {
        let [cu, cv] = scene.panel_frame(spec);
        let normal = spec.wall.outward_normal();
        panels.push(PanelLayout {
            wall: spec.wall,
            rows: spec.rows,
            cols: spec.cols,
            offset: positions.len(),
        });
        for row in 0..spec.rows {
            let v = cv + (row as f64 - 0.5 * (spec.rows as f64 - 1.0)) * d;
            for col in 0..spec.cols {
                let u = cu + (col as f64 - 0.5 * (spec.cols as f64 - 1.0)) * d;
                positions.push(spec.wall.point(l, u, v));
                normals.push(normal);
                panel_of.push(pi as u32);
            }
        }
    }

    let mut neighbor_offsets = Vec::with_capacity(total + 1);
    let mut neighbor_indices = Vec::with_capacity(total * scene.neighborhood.count() as usize);
    neighbor_offsets.push(0);
    let stencil: &[(isize, isize)] = match scene.neighborhood {
        Neighborhood::Four => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
        Neighborhood::Eight => &[
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ],
    };
    for panel in &panels {
        for row in 0..panel.rows {
            for col in 0..panel.cols {
                for &(dr, dc) in stencil {
                    let r = row as isize + dr;
                    let c = col as isize + dc;
                    if r >= 0 && c >= 0 && (r as usize) < panel.rows && (c as usize) < panel.cols {
                        neighbor_indices.push(panel.index(r as usize, c as usize));
                    }
                }
                neighbor_offsets.push(neighbor_indices.len());
            }
        }
    }

    let image_sources = scene
        .reflective_walls()
        .map(|(wall, reflectivity)| ImageSource {
            wall,
            position: wall.mirror(l, scene.tx_position),
            reflectivity,
        })
        .collect();

    Ok(RisGeometry {
        positions,
        normals,
        panels,
        panel_of,
        image_sources,
        wavenumber: scene.wavenumber(),
        spacing: d,
        room_side: l,
        neighbor_offsets,
        neighbor_indices,
        warnings,
    })
}
