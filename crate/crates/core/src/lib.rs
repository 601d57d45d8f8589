//! Core library for a two-axis flexured-gimbal force/torque sensor used to
//! characterize sub-gram flapping-wing robots.
//!
//! The crate is split along the measurement pipeline:
//!
//! - [`model`] — unit-safe domain types and the closed-form device formulas
//!   (flexure stiffness, sensitivity, offset-weight torque, drive-signal
//!   envelope).
//! - [`dynamics`] — the ground-truth voltage→(torque, thrust) plant, rigid
//!   body equations of motion for the gimbal-mounted robot, a fixed-step RK4
//!   integrator, trial simulation, and the integral trimming controller.
//! - [`estimation`] — every fitted quantity and error metric of the
//!   measurement campaign: calibration sensitivity, steady-state extraction,
//!   voltage→torque mapping, cross-axis coupling, thrust trends, inertial
//!   bias estimation, and free-flight validation.
//!
//! All quantities are SI (N·m, rad, kg, m, V, s). The crate is `no_std`
//! compatible (`alloc` required); file formats and the CLI live in the
//! companion `flexgim` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dynamics;
pub mod estimation;
pub mod model;

pub use model::STANDARD_GRAVITY;
