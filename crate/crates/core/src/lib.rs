//! Simulator for a fiber taper coupled to a high-index semiconductor channel.
//!
//! Pipeline: [`geometry`] rasterizes the cross-section, [`modesolver`] finds
//! the hybrid supermodes, [`coupling`] measures their overlap with the bare
//! fiber mode, [`emission`] turns fields at the dipole into rates and
//! collection efficiencies, and [`transmission`] evaluates the resonant
//! single-dipole response of the fiber output.

pub mod coupling;
pub mod emission;
pub mod error;
pub mod geometry;
pub mod modesolver;
pub mod pipeline;
pub mod transmission;

pub use error::{CouplerError, Result};
pub use qdc_sparse::C64;
