//! Pseudo-spectral toolkit for periodic two-dimensional gravity water waves
//! with constant vorticity in holomorphic coordinates.

pub mod energies;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod fit;
pub mod io;
pub mod linearized;
pub mod normal_form;
pub mod spectral;
pub mod wavestate;

pub use error::{Error, Result};
pub use spectral::{Domain, Grid, SpectralField};
pub use wavestate::{Params, Tolerances, WaveState};
