//! Antiferromagnetic tunnel junction simulation toolkit.
//!
//! The crate is layered bottom-up:
//!
//! * [`dynamics`]: effective fields, torques and the coupled LLG right-hand side
//! * [`integrator`] / [`thermal`]: adaptive RK4 and the Brown thermal field
//! * [`device`]: AFMTJ / MTJ parameters, TMR readout, switching detection
//! * [`transient`]: write and read co-simulation, latency and energy
//! * [`sweep`] / [`calibrate`]: voltage sweeps and parameter fitting
//! * [`bitline`]: multi-row activation logic with sense-amplifier references
//! * [`imc`]: hierarchical in-memory-computing speedup and energy model
//! * [`config`]: JSON ingestion with unit conversion and fail-closed keys

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bitline;
pub mod calibrate;
pub mod config;
pub mod constants;
pub mod device;
pub mod dynamics;
pub mod error;
pub mod imc;
pub mod integrator;
pub mod io;
pub mod simplex;
pub mod sweep;
pub mod thermal;
pub mod transient;
pub mod vec3;

pub use error::{Error, Result};
pub use vec3::Vec3;
