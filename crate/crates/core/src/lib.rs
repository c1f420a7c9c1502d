//! Physics-backed simulation and orchestration for multi-user RIS deployments.
//!
//! The crate is `no_std` (with `alloc`) and carries no IO. It covers:
//!
//! - [`scene`], [`geometry`], [`field`]: the electromagnetic model of an
//!   indoor room whose walls carry RIS panels (direct illumination, local
//!   mutual coupling solved as a coupled system, image-source wall
//!   reflections, coherent reradiation and SNR).
//! - [`codebook`]: offline compilation of per-location focusing states,
//!   element influence scores and single-user optimal SNR.
//! - [`orchestrator`]: operating-phase decisions over compiled entries
//!   (tier/influence weighted voting, element deactivation, admission).
//! - [`evaluation`]: seeded Monte Carlo experiments and their aggregates.
//!
//! Parallel execution is delegated to callers through [`fanout::Fanout`].

#![no_std]

extern crate alloc;

pub mod codebook;
pub mod evaluation;
pub mod fanout;
pub mod field;
pub mod geometry;
pub mod math;
pub mod orchestrator;
pub mod scene;
pub mod stats;

pub use codebook::{Codebook, CodebookEntry};
pub use field::{FieldVector, RisState};
pub use geometry::RisGeometry;
pub use math::{Complex64, Vec3};
pub use scene::SceneConfig;
