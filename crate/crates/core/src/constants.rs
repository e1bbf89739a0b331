//! CODATA 2018 constants in SI units.

use serde::Serialize;

/// Gyromagnetic ratio of the electron, rad/(s*T).
pub const GAMMA: f64 = 1.760_859e11;
/// Vacuum permeability, T*m/A.
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Reduced Planck constant, J*s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// 1 emu/cm^3 expressed in A/m.
pub const EMU_CM3_TO_A_M: f64 = 1.0e3;
pub const NM: f64 = 1.0e-9;
pub const PS: f64 = 1.0e-12;
pub const FJ: f64 = 1.0e-15;

/// Snapshot of the constants, emitted into run manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    pub gamma: f64,
    pub mu0: f64,
    pub hbar: f64,
    pub e: f64,
    pub k_b: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        gamma: GAMMA,
        mu0: MU0,
        hbar: HBAR,
        e: E_CHARGE,
        k_b: K_B,
    };
}
