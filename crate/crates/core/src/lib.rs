//! Emitter–cavity quantum electrodynamics at chiral exceptional points.
//!
//! The core is generic over the real scalar type (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blockade;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod ldos;
pub mod master;
mod rk4;
pub mod scalar;
pub mod spectra;

pub use error::{Error, Result};
pub use hilbert::{Mode, OperatorRep, Slot, SpaceLayout};
pub use master::{DensityMatrix, DriveSpec, Emitter, Liouvillian, ModelParams};
pub use scalar::Real;

pub type Params = ModelParams<f64>;
pub type Params32 = ModelParams<f32>;
pub type Density = DensityMatrix<f64>;
pub type Density32 = DensityMatrix<f32>;
pub type Drive = DriveSpec<f64>;
pub type Drive32 = DriveSpec<f32>;
pub type Generator = Liouvillian<f64>;
pub type Generator32 = Liouvillian<f32>;
