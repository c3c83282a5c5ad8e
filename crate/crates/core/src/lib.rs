//! Kinematical conservation laws (KCL) for propagating curves in the plane
//! and surfaces in space.
//!
//! The crate is organised bottom-up:
//!
//! * [`scalar_claw`] holds the one-dimensional scalar conservation-law
//!   machinery (jump speeds, Lax admissibility, a monotone finite-volume
//!   solver) together with the gasdynamic characteristic speeds.
//! * [`ray_tracer`] integrates the characteristic (ray) system of the
//!   eikonal equation and the Huygens construction.
//! * [`closure`] supplies the relation that determines the front speed `m`.
//! * [`kcl2d`] is the finite-volume solver for the 2-D KCL in ray
//!   coordinates, with kink detection and front reconstruction.
//! * [`kcl3d`] evolves smooth surfaces with the 3-D KCL and monitors the
//!   geometrical solenoidal constraint.
//! * [`harness`] ties everything to scenario configs and CSV output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod closure;
pub mod error;
pub mod harness;
pub mod kcl2d;
pub mod kcl3d;
pub mod numerics;
pub mod ray_tracer;
pub mod scalar_claw;

pub use error::{KclError, Result};
