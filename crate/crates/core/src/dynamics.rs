//! Effective fields, torques and the explicit coupled LLG right-hand side.
//!
//! Each sublattice `i` obeys the Gilbert-form equation
//!
//! ```text
//! dm_i/dt = -gamma mu0 m_i x H_i + alpha m_i x dm_i/dt + T_i
//! ```
//!
//! where `T_i` collects spin-transfer and (optionally) exchange torques. All
//! of them are perpendicular to `m_i`, so the implicit damping term can be
//! eliminated exactly:
//!
//! ```text
//! (1 + alpha^2) dm_i/dt = -gamma mu0 m_i x H_i - gamma mu0 alpha m_i x (m_i x H_i)
//!                         + T_i + alpha m_i x T_i
//! ```

use serde::{Deserialize, Serialize};

use crate::constants::{E_CHARGE, GAMMA, HBAR, MU0};
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Tolerance on `|m| - 1` at public boundaries.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Unit magnetization directions of the two sublattices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SublatticeState {
    pub m1: Vec3,
    pub m2: Vec3,
}

impl SublatticeState {
    pub fn new(m1: Vec3, m2: Vec3) -> Result<Self> {
        let s = Self { m1, m2 };
        s.check()?;
        Ok(s)
    }

    /// Rigid antiparallel pair with Neel vector `l` (normalized).
    pub fn from_neel(l: Vec3) -> Self {
        let l = l.normalized();
        Self { m1: l, m2: -l }
    }

    pub fn check(&self) -> Result<()> {
        for (name, m) in [("m1", self.m1), ("m2", self.m2)] {
            if !m.is_finite() {
                return Err(Error::Invariant(format!("{name} is not finite: {m:?}")));
            }
            let drift = (m.norm() - 1.0).abs();
            if drift > UNIT_NORM_TOL {
                return Err(Error::Invariant(format!(
                    "{name} is not a unit vector (|{name}| - 1 = {drift:.3e})"
                )));
            }
        }
        Ok(())
    }

    pub fn renormalized(self) -> Self {
        Self {
            m1: self.m1.normalized(),
            m2: self.m2.normalized(),
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [
            self.m1.x, self.m1.y, self.m1.z, self.m2.x, self.m2.y, self.m2.z,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            m1: Vec3::new(a[0], a[1], a[2]),
            m2: Vec3::new(a[3], a[4], a[5]),
        }
    }
}

/// Material parameters shared by both sublattices. Easy axis is +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Saturation magnetization, A/m.
    pub ms: f64,
    /// Gilbert damping.
    pub alpha: f64,
    /// Spin polarization.
    pub p0: f64,
    /// Uniaxial anisotropy field, A/m.
    pub hk: f64,
    /// Demagnetization factor along z.
    pub nz: f64,
    /// Dimensionless scale on the Slonczewski prefactor, fitted per device.
    pub stt_efficiency: f64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ms > 0.0 && self.ms.is_finite()) {
            return Err(Error::param("ms", format!("must be > 0, got {}", self.ms)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be > 0, got {}", self.alpha)));
        }
        if !(self.p0 > 0.0 && self.p0 <= 1.0) {
            return Err(Error::param("p0", format!("must lie in (0, 1], got {}", self.p0)));
        }
        if !(0.0..=1.0).contains(&self.nz) {
            return Err(Error::param("nz", format!("must lie in [0, 1], got {}", self.nz)));
        }
        if !self.hk.is_finite() {
            return Err(Error::param("hk", "must be finite"));
        }
        if !(self.stt_efficiency > 0.0 && self.stt_efficiency.is_finite()) {
            return Err(Error::param(
                "stt_efficiency",
                format!("must be > 0, got {}", self.stt_efficiency),
            ));
        }
        Ok(())
    }
}

/// How the inter-sublattice exchange enters the equation of motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeChannel {
    #[default]
    Torque,
    Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeParams {
    /// Bare coupling constant as tabulated; carried as metadata only.
    pub j_af_raw: f64,
    /// Exchange precession rate, rad/s.
    pub omega_e: f64,
    pub channel: ExchangeChannel,
}

impl ExchangeParams {
    pub const TABULATED_J_AF: f64 = 5e-3;

    pub fn new(omega_e: f64) -> Result<Self> {
        let ex = Self {
            j_af_raw: Self::TABULATED_J_AF,
            omega_e,
            channel: ExchangeChannel::Torque,
        };
        ex.validate()?;
        Ok(ex)
    }

    pub fn decoupled() -> Self {
        Self {
            j_af_raw: 0.0,
            omega_e: 0.0,
            channel: ExchangeChannel::Torque,
        }
    }

    /// Equivalent exchange field magnitude, A/m.
    pub fn h_e(&self) -> f64 {
        self.omega_e / (GAMMA * MU0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_e >= 0.0 && self.omega_e.is_finite()) {
            return Err(Error::param(
                "omega_e",
                format!("must be finite and >= 0, got {}", self.omega_e),
            ));
        }
        Ok(())
    }
}

/// Field contributions acting on one sublattice, A/m.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FieldParts {
    pub anisotropy: Vec3,
    pub demag: Vec3,
    pub thermal: Vec3,
    pub exchange: Vec3,
}

impl FieldParts {
    pub fn total(&self) -> Vec3 {
        self.local() + self.exchange
    }

    /// Everything except the inter-sublattice exchange.
    pub fn local(&self) -> Vec3 {
        self.anisotropy + self.demag + self.thermal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EffectiveField {
    pub parts: [FieldParts; 2],
}

impl EffectiveField {
    pub fn h1(&self) -> Vec3 {
        self.parts[0].total()
    }

    pub fn h2(&self) -> Vec3 {
        self.parts[1].total()
    }
}

/// Whether both sublattices evolve or only `m1` does (ferromagnetic MTJ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sublattices {
    Coupled,
    Single,
}

fn field_parts(
    m: Vec3,
    m_other: Vec3,
    m_net_z: f64,
    mat: &MaterialParams,
    h_e: f64,
    h_thermal: Vec3,
) -> FieldParts {
    FieldParts {
        anisotropy: Vec3::Z * (mat.hk * m.z),
        demag: Vec3::Z * (-mat.nz * mat.ms * m_net_z),
        thermal: h_thermal,
        exchange: m_other * (-h_e),
    }
}

fn effective_field_raw(
    state: &SublatticeState,
    mat: &MaterialParams,
    ex: &ExchangeParams,
    h_thermal: [Vec3; 2],
) -> EffectiveField {
    let m_net_z = 0.5 * (state.m1.z + state.m2.z);
    let h_e = ex.h_e();
    EffectiveField {
        parts: [
            field_parts(state.m1, state.m2, m_net_z, mat, h_e, h_thermal[0]),
            field_parts(state.m2, state.m1, m_net_z, mat, h_e, h_thermal[1]),
        ],
    }
}

/// Effective field on both sublattices: uniaxial anisotropy, demagnetization
/// of the net moment `(m1 + m2)/2`, thermal field and the antiparallel
/// exchange field `-h_E m_j`.
///
/// The exchange part is always reported; whether the equation of motion uses
/// it or the equivalent torque is decided by [`ExchangeChannel`].
pub fn effective_field(
    state: &SublatticeState,
    mat: &MaterialParams,
    ex: &ExchangeParams,
    h_thermal: [Vec3; 2],
) -> Result<EffectiveField> {
    state.check()?;
    Ok(effective_field_raw(state, mat, ex, h_thermal))
}

/// Exchange torque on `m_self` from `m_other`, rad/s.
///
/// This is `-gamma mu0 m_self x (-h_E m_other) = omega_E m_self x m_other`,
/// i.e. exactly the precession produced by the antiparallel exchange field.
pub fn exchange_torque(m_self: Vec3, m_other: Vec3, ex: &ExchangeParams) -> Vec3 {
    m_self.cross(m_other) * ex.omega_e
}

/// Slonczewski prefactor `a_J`, rad/s.
pub fn stt_prefactor(j_density: f64, mat: &MaterialParams, t_f: f64) -> f64 {
    mat.stt_efficiency * GAMMA * HBAR * mat.p0 * j_density / (2.0 * E_CHARGE * mat.ms * t_f)
}

/// Damping-like spin-transfer torque `-a_J m x (m x p)`, rad/s. Positive
/// current density pulls `m` towards `p`.
pub fn stt_torque(m: Vec3, p: Vec3, j_density: f64, mat: &MaterialParams, t_f: f64) -> Result<Vec3> {
    if !(t_f > 0.0) {
        return Err(Error::param("t_f", format!("thickness must be > 0, got {t_f}")));
    }
    Ok(stt_torque_raw(m, p, stt_prefactor(j_density, mat, t_f)))
}

#[inline]
fn stt_torque_raw(m: Vec3, p: Vec3, a_j: f64) -> Vec3 {
    m.cross(m.cross(p)) * (-a_j)
}

/// Explicit Gilbert form for one sublattice.
#[inline]
pub fn gilbert_explicit(m: Vec3, h: Vec3, torque: Vec3, alpha: f64) -> Vec3 {
    let g = GAMMA * MU0;
    let mxh = m.cross(h);
    let mxmxh = m.cross(mxh);
    let mxt = m.cross(torque);
    let k = 1.0 / (1.0 + alpha * alpha);
    (mxh * (-g) + mxmxh * (-g * alpha) + torque + mxt * alpha) * k
}

/// Full static description of the two-sublattice system: everything the
/// right-hand side needs besides the state, drive and thermal field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlgSystem {
    pub material: MaterialParams,
    pub exchange: ExchangeParams,
    /// Free-layer thickness used in the STT prefactor, m.
    pub thickness: f64,
    pub polarizers: [Vec3; 2],
    pub sublattices: Sublattices,
}

impl LlgSystem {
    /// Right-hand side without unit-norm checks (RK stages are slightly off the sphere).
    pub fn rhs_unchecked(
        &self,
        state: &SublatticeState,
        j_density: f64,
        h_thermal: [Vec3; 2],
    ) -> [Vec3; 2] {
        let mat = &self.material;
        let a_j = stt_prefactor(j_density, mat, self.thickness);
        match self.sublattices {
            Sublattices::Single => {
                let m = state.m1;
                let h = Vec3::Z * ((mat.hk - mat.nz * mat.ms) * m.z) + h_thermal[0];
                let t = stt_torque_raw(m, self.polarizers[0], a_j);
                [gilbert_explicit(m, h, t, mat.alpha), Vec3::ZERO]
            }
            Sublattices::Coupled => {
                let ex = &self.exchange;
                let f = effective_field_raw(state, mat, ex, h_thermal);
                let ms = [state.m1, state.m2];
                let mut out = [Vec3::ZERO; 2];
                for i in 0..2 {
                    let (m, other) = (ms[i], ms[1 - i]);
                    let parts = f.parts[i];
                    let mut t = stt_torque_raw(m, self.polarizers[i], a_j);
                    let h = match ex.channel {
                        ExchangeChannel::Torque => {
                            t += exchange_torque(m, other, ex);
                            parts.local()
                        }
                        ExchangeChannel::Field => parts.total(),
                    };
                    out[i] = gilbert_explicit(m, h, t, mat.alpha);
                }
                out
            }
        }
    }

    pub fn rhs(
        &self,
        state: &SublatticeState,
        j_density: f64,
        h_thermal: [Vec3; 2],
    ) -> Result<[Vec3; 2]> {
        state.check()?;
        Ok(self.rhs_unchecked(state, j_density, h_thermal))
    }
}

/// Coupled two-sublattice LLG right-hand side `(dm1/dt, dm2/dt)`, rad/s.
#[allow(clippy::too_many_arguments)]
pub fn llg_rhs(
    state: &SublatticeState,
    mat: &MaterialParams,
    ex: &ExchangeParams,
    j_density: f64,
    t_f: f64,
    polarizers: [Vec3; 2],
    h_thermal: [Vec3; 2],
) -> Result<[Vec3; 2]> {
    if j_density != 0.0 && !(t_f > 0.0) {
        return Err(Error::param("t_f", format!("thickness must be > 0, got {t_f}")));
    }
    let sys = LlgSystem {
        material: *mat,
        exchange: *ex,
        thickness: t_f,
        polarizers,
        sublattices: Sublattices::Coupled,
    };
    sys.rhs(state, j_density, h_thermal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn bare() -> MaterialParams {
        MaterialParams {
            ms: 6e5,
            alpha: 0.01,
            p0: 0.8,
            hk: 0.0,
            nz: 0.0,
            stt_efficiency: 1.0,
        }
    }

    fn unit(theta: f64, phi: f64) -> Vec3 {
        Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    #[test]
    fn field_vanishes_without_contributions() {
        let s = SublatticeState::from_neel(Vec3::Z);
        let f = effective_field(&s, &bare(), &ExchangeParams::decoupled(), [Vec3::ZERO; 2]).unwrap();
        assert_eq!(f.h1(), Vec3::ZERO);
        assert_eq!(f.h2(), Vec3::ZERO);
    }

    #[test]
    fn anisotropy_along_easy_axis() {
        let s = SublatticeState::from_neel(Vec3::Z);
        let mat = MaterialParams { hk: 4e4, ..bare() };
        let f = effective_field(&s, &mat, &ExchangeParams::decoupled(), [Vec3::ZERO; 2]).unwrap();
        assert_eq!(f.h1(), Vec3::new(0.0, 0.0, 4e4));
        assert_eq!(f.parts[0].anisotropy, Vec3::new(0.0, 0.0, 4e4));
    }

    #[test]
    fn exchange_field_points_against_other_sublattice() {
        let s = SublatticeState::from_neel(Vec3::Z);
        let ex = ExchangeParams::new(1e4 * GAMMA * MU0).unwrap();
        let f = effective_field(&s, &bare(), &ex, [Vec3::ZERO; 2]).unwrap();
        let hx = f.parts[0].exchange;
        assert!((hx.z - 1e4).abs() < 1e-9 && hx.x == 0.0 && hx.y == 0.0);
    }

    #[test]
    fn demag_uses_net_moment_only() {
        let mat = MaterialParams { nz: 1.0, ..bare() };
        let anti = SublatticeState::from_neel(Vec3::Z);
        let f = effective_field(&anti, &mat, &ExchangeParams::decoupled(), [Vec3::ZERO; 2]).unwrap();
        assert_eq!(f.parts[0].demag, Vec3::ZERO);
        let para = SublatticeState::new(Vec3::Z, Vec3::Z).unwrap();
        let f = effective_field(&para, &mat, &ExchangeParams::decoupled(), [Vec3::ZERO; 2]).unwrap();
        assert_eq!(f.parts[1].demag, Vec3::new(0.0, 0.0, -6e5));
    }

    #[test]
    fn non_unit_state_is_rejected() {
        let s = SublatticeState {
            m1: Vec3::new(0.0, 0.0, 1.1),
            m2: -Vec3::Z,
        };
        assert!(matches!(
            effective_field(&s, &bare(), &ExchangeParams::decoupled(), [Vec3::ZERO; 2]),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn exchange_torque_examples() {
        let ex = ExchangeParams::new(1e9).unwrap();
        assert_eq!(exchange_torque(Vec3::Z, -Vec3::Z, &ex), Vec3::ZERO);
        // omega_E * (z x x) = omega_E * y
        assert_eq!(exchange_torque(Vec3::Z, Vec3::X, &ex), Vec3::new(0.0, 1e9, 0.0));
    }

    #[test]
    fn exchange_channels_agree() {
        let mat = MaterialParams { hk: 3e4, nz: 0.5, ..bare() };
        let mut ex = ExchangeParams::new(2e12).unwrap();
        let s = SublatticeState::new(unit(0.3, 0.2), unit(2.5, 3.0)).unwrap();
        let p = [-Vec3::Z, Vec3::Z];
        let a = llg_rhs(&s, &mat, &ex, 1e11, 1e-9, p, [Vec3::ZERO; 2]).unwrap();
        ex.channel = ExchangeChannel::Field;
        let b = llg_rhs(&s, &mat, &ex, 1e11, 1e-9, p, [Vec3::ZERO; 2]).unwrap();
        for i in 0..2 {
            assert!(a[i].max_abs_diff(b[i]) <= 1e-12 * a[i].norm());
        }
    }

    #[test]
    fn stt_examples() {
        let mat = bare();
        assert_eq!(stt_torque(Vec3::Z, Vec3::X, 0.0, &mat, 1e-9).unwrap(), Vec3::ZERO);
        assert_eq!(stt_torque(Vec3::Z, Vec3::Z, 1e11, &mat, 1e-9).unwrap(), Vec3::ZERO);
        // m x (m x p) = m (m.p) - p = -x for m = z, p = x, so tau = +a_J x.
        let a_j = HBAR * GAMMA * 0.8 * 1e11 / (2.0 * E_CHARGE * 6e5 * 1e-9);
        let tau = stt_torque(Vec3::Z, Vec3::X, 1e11, &mat, 1e-9).unwrap();
        assert!((tau.x - a_j).abs() <= 1e-12 * a_j);
        assert_eq!((tau.y, tau.z), (0.0, 0.0));
        assert!(matches!(
            stt_torque(Vec3::Z, Vec3::X, 1e11, &mat, 0.0),
            Err(Error::Param { .. })
        ));
    }

    #[test]
    fn equilibrium_has_zero_rhs() {
        let mat = MaterialParams { hk: 4e4, ..bare() };
        let s = SublatticeState::from_neel(Vec3::Z);
        let d = llg_rhs(&s, &mat, &ExchangeParams::new(1e12).unwrap(), 0.0, 1e-9, [Vec3::Z, -Vec3::Z], [Vec3::ZERO; 2]).unwrap();
        assert_eq!(d, [Vec3::ZERO; 2]);
    }

    #[test]
    fn undamped_precession_rate_matches_larmor() {
        // m = x, mu0 H = 0.1 T along z: |dm/dt| = gamma * 0.1 T.
        let mat = MaterialParams { alpha: 1e-300, ..bare() };
        let h = Vec3::new(0.0, 0.0, 0.1 / MU0);
        let d = gilbert_explicit(Vec3::X, h, Vec3::ZERO, mat.alpha);
        assert!((d.norm() - GAMMA * 0.1).abs() < 1e-6 * GAMMA * 0.1);
        // -gamma (x cross z) = +gamma y
        assert!(d.y > 0.0);
    }

    proptest! {
        #[test]
        fn rhs_is_tangent(t1 in 0.0..PI, p1 in 0.0..TAU, t2 in 0.0..PI, p2 in 0.0..TAU,
                          j in -5e11..5e11f64, we in 0.0..1e13f64, hk in 0.0..1e5f64) {
            let mat = MaterialParams { hk, nz: 1.0, ..bare() };
            let ex = ExchangeParams::new(we).unwrap();
            let s = SublatticeState::new(unit(t1, p1), unit(t2, p2)).unwrap();
            let d = llg_rhs(&s, &mat, &ex, j, 0.45e-9, [-Vec3::Z, Vec3::Z], [Vec3::ZERO; 2]).unwrap();
            prop_assert!(s.m1.dot(d[0]).abs() <= 1e-12 * d[0].norm() + 1e-300);
            prop_assert!(s.m2.dot(d[1]).abs() <= 1e-12 * d[1].norm() + 1e-300);
        }

        #[test]
        fn exchange_torque_antisymmetric(t1 in 0.0..PI, p1 in 0.0..TAU, t2 in 0.0..PI, p2 in 0.0..TAU) {
            let ex = ExchangeParams::new(3.7e12).unwrap();
            let (a, b) = (unit(t1, p1), unit(t2, p2));
            prop_assert_eq!(exchange_torque(a, b, &ex) + exchange_torque(b, a, &ex), Vec3::ZERO);
        }

        #[test]
        fn stt_linear_in_current(j in -1e12..1e12f64, t in 0.0..PI) {
            let mat = bare();
            let m = unit(t, 0.4);
            let one = stt_torque(m, Vec3::Z, j, &mat, 1e-9).unwrap();
            let two = stt_torque(m, Vec3::Z, 2.0 * j, &mat, 1e-9).unwrap();
            prop_assert!((one * 2.0).max_abs_diff(two) <= 1e-12 * two.norm() + 1e-300);
        }
    }

    #[test]
    fn decoupled_limit_matches_isolated_macrospin() {
        let mat = MaterialParams { hk: 4e4, ..bare() };
        let s = SublatticeState::new(unit(0.4, 0.1), unit(2.0, 1.0)).unwrap();
        let p = [-Vec3::Z, Vec3::Z];
        let d = llg_rhs(&s, &mat, &ExchangeParams::decoupled(), 2e11, 1e-9, p, [Vec3::ZERO; 2]).unwrap();
        let f = effective_field(&s, &mat, &ExchangeParams::decoupled(), [Vec3::ZERO; 2]).unwrap();
        let a_j = stt_prefactor(2e11, &mat, 1e-9);
        let iso = gilbert_explicit(s.m1, f.h1(), stt_torque_raw(s.m1, p[0], a_j), mat.alpha);
        assert_eq!(d[0], iso);
    }
}
