//! Single-excitation dynamics of an emitter coupled to a waveguide whose
//! Bragg mirrors are held in a superposition of reflective and transparent
//! configurations.

pub mod cli;
pub mod dynamics;
pub mod eraser;
pub mod error;
pub mod field;
pub mod linalg;
pub mod model;
pub mod oracle;

pub use dynamics::{propagate, propagate_with, PropagationMethod, Trajectory};
pub use error::{Error, Result};
pub use model::{BranchLabel, BranchSystem, Geometry, MirrorState, PhysicalParams, C64};
