//! Traveling waves of the public goods game reaction–diffusion system:
//! construction by monotone iteration, tail asymptotics, weighted spectra and
//! time-dependent stability experiments.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod fit;
pub mod grid;
pub mod interp;
pub mod io;
pub mod kpp;
pub mod linalg;
pub mod model;
pub mod spectrum;
pub mod wave;

pub use error::{Error, Result};
pub use grid::{make_grid, Grid, Profile};
pub use model::{derive_params, ModelParams, StateVec};
