//! Two-phase (ink/air) incompressible flow with a single-step conservative
//! level set, plus the harness that measures mass-conservation error of
//! simulated extrusion-deposition strands.

pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod grid;
pub mod levelset;
pub mod scenario;
pub mod sweep_cli;

pub use error::{Error, Result};
