//! Radial SLE simulation and numerical checks of vertex-correlator
//! martingale observables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod error;
pub mod loewner;
pub mod mc;
pub mod observables;
pub mod params;
pub mod vertex;

pub use error::{Error, Result};
pub use params::{params_from_kappa, vertex_dimensions, DimensionSet, SleCftParams};
