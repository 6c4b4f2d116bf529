//! Plane-strain finite-element simulation of moisture-driven damage in
//! fibre-reinforced composites.

pub mod config;
pub mod constitutive;
pub mod diffusion;
pub mod driver;
pub mod element;
pub mod error;
pub mod fe;
pub mod fibres;
pub mod indicator;
pub mod materials;
pub mod mechanics;
pub mod mesh;
pub mod oracles;
pub mod output;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
