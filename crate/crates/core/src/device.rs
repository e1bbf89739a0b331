//! AFMTJ and baseline MTJ device descriptions: geometry, TMR readout, order
//! parameter, bias current and switching detection.

use serde::{Deserialize, Serialize};

use crate::constants::{EMU_CM3_TO_A_M, NM};
use crate::dynamics::{ExchangeParams, LlgSystem, MaterialParams, SublatticeState, Sublattices};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::vec3::Vec3;

/// Largest admissible TMR ratio (500 %).
pub const TMR_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DeviceKind {
    #[serde(rename = "AFMTJ")]
    Afmtj,
    #[serde(rename = "MTJ")]
    Mtj,
}

impl DeviceKind {
    pub fn label(self) -> &'static str {
        match self {
            DeviceKind::Afmtj => "AFMTJ",
            DeviceKind::Mtj => "MTJ",
        }
    }
}

impl std::fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for DeviceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "AFMTJ" => Ok(DeviceKind::Afmtj),
            "MTJ" => Ok(DeviceKind::Mtj),
            other => Err(Error::Input(format!("unknown device kind `{other}`"))),
        }
    }
}

/// Free-layer dimensions, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceGeometry {
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
}

impl DeviceGeometry {
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn volume(&self) -> f64 {
        self.lx * self.ly * self.lz
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lx", self.lx), ("ly", self.ly), ("lz", self.lz)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResistanceModel {
    /// Parallel-state resistance, ohm.
    pub r_p: f64,
    pub tmr: f64,
}

impl ResistanceModel {
    pub fn r_ap(&self) -> f64 {
        self.r_p * (1.0 + self.tmr)
    }

    /// `R(theta) = 2 r_p r_ap / ((r_ap + r_p) + (r_ap - r_p) cos theta)`.
    pub fn at_cos(&self, cos_theta: f64) -> f64 {
        let (rp, rap) = (self.r_p, self.r_ap());
        2.0 * rp * rap / ((rap + rp) + (rap - rp) * cos_theta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_p > 0.0 && self.r_p.is_finite()) {
            return Err(Error::param("r_p", format!("must be > 0, got {}", self.r_p)));
        }
        if !(self.tmr >= 0.0 && self.tmr <= TMR_MAX) {
            return Err(Error::param(
                "tmr",
                format!("must lie in [0, {TMR_MAX}] (TMR up to 500 %), got {}", self.tmr),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub kind: DeviceKind,
    pub geometry: DeviceGeometry,
    pub material: MaterialParams,
    pub exchange: ExchangeParams,
    pub resistance: ResistanceModel,
    /// Spin polarization direction seen by each free sublattice.
    pub polarizers: [Vec3; 2],
    /// Order-parameter direction of the fixed layer; `theta = 0` reads `r_p`.
    pub reference: Vec3,
    /// Kelvin.
    pub temperature: f64,
}

impl DeviceParams {
    /// AFMTJ with the tabulated material values and fitted defaults for the
    /// parameters the table does not list.
    pub fn afmtj_default() -> Self {
        Self {
            kind: DeviceKind::Afmtj,
            geometry: DeviceGeometry { lx: 45.0 * NM, ly: 45.0 * NM, lz: 0.45 * NM },
            material: MaterialParams {
                ms: 600.0 * EMU_CM3_TO_A_M,
                alpha: 0.01,
                p0: 0.8,
                hk: 4e4,
                nz: 1.0,
                stt_efficiency: 1.0,
            },
            exchange: ExchangeParams::new(1e12).expect("positive exchange"),
            resistance: ResistanceModel { r_p: 2900.0, tmr: 0.8 },
            polarizers: [-Vec3::Z, Vec3::Z],
            reference: -Vec3::Z,
            temperature: 0.0,
        }
    }

    /// Single-macrospin perpendicular MTJ baseline.
    pub fn mtj_default() -> Self {
        Self {
            kind: DeviceKind::Mtj,
            geometry: DeviceGeometry { lx: 45.0 * NM, ly: 45.0 * NM, lz: 1.1 * NM },
            material: MaterialParams {
                ms: 1210.0 * EMU_CM3_TO_A_M,
                alpha: 0.028,
                p0: 0.6,
                hk: 1.6e6,
                nz: 1.0,
                stt_efficiency: 1.0,
            },
            exchange: ExchangeParams::decoupled(),
            resistance: ResistanceModel { r_p: 2500.0, tmr: 1.0 },
            polarizers: [-Vec3::Z, -Vec3::Z],
            reference: -Vec3::Z,
            temperature: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.material.validate()?;
        self.exchange.validate()?;
        self.resistance.validate()?;
        match self.kind {
            DeviceKind::Afmtj if !(self.exchange.omega_e > 0.0) => {
                return Err(Error::param("omega_e", "AFMTJ requires omega_E > 0"));
            }
            DeviceKind::Mtj if self.exchange.omega_e != 0.0 => {
                return Err(Error::param(
                    "omega_e",
                    "MTJ is a single macrospin; omega_E must be 0",
                ));
            }
            _ => {}
        }
        if (self.reference.x, self.reference.y) != (0.0, 0.0) || self.reference.z.abs() != 1.0 {
            return Err(Error::param("reference", "fixed-layer reference must be +z or -z"));
        }
        for p in self.polarizers {
            if (p.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::param("polarizers", "polarizers must be unit vectors"));
            }
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::param("temperature", format!("must be >= 0, got {}", self.temperature)));
        }
        Ok(())
    }

    pub fn system(&self) -> LlgSystem {
        LlgSystem {
            material: self.material,
            exchange: self.exchange,
            thickness: self.geometry.lz,
            polarizers: self.polarizers,
            sublattices: match self.kind {
                DeviceKind::Afmtj => Sublattices::Coupled,
                DeviceKind::Mtj => Sublattices::Single,
            },
        }
    }

    /// Write starting point: order parameter antiparallel to the reference,
    /// tilted by `tilt` radians towards +x.
    pub fn write_initial_state(&self, tilt: f64) -> SublatticeState {
        let l = Vec3::new(tilt.sin(), 0.0, -self.reference.z * tilt.cos());
        match self.kind {
            DeviceKind::Afmtj => SublatticeState::from_neel(l),
            // m2 is not evolved for the MTJ; park it on the fixed axis.
            DeviceKind::Mtj => SublatticeState { m1: l, m2: self.reference },
        }
    }

    /// Stored-bit state: bit 1 is parallel to the reference.
    pub fn bit_state(&self, bit: bool) -> SublatticeState {
        let l = if bit { self.reference } else { -self.reference };
        match self.kind {
            DeviceKind::Afmtj => SublatticeState::from_neel(l),
            DeviceKind::Mtj => SublatticeState { m1: l, m2: self.reference },
        }
    }
}

/// Deterministic initial tilt of the order parameter for writes, rad.
pub const WRITE_TILT: f64 = std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchCriterion {
    pub threshold: f64,
    pub guard: f64,
}

impl Default for SwitchCriterion {
    fn default() -> Self {
        Self { threshold: 0.9, guard: 0.5 }
    }
}

impl SwitchCriterion {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.guard && self.guard < self.threshold && self.threshold <= 1.0) {
            return Err(Error::param(
                "switch_criterion",
                format!("need 0 < guard < threshold <= 1, got guard {} threshold {}", self.guard, self.threshold),
            ));
        }
        Ok(())
    }
}

/// Neel vector `(m1 - m2)/2` for the AFMTJ, `m1` for the MTJ.
pub fn order_parameter(state: &SublatticeState, kind: DeviceKind) -> Vec3 {
    match kind {
        DeviceKind::Afmtj => (state.m1 - state.m2) * 0.5,
        DeviceKind::Mtj => state.m1,
    }
}

/// Cosine between the order parameter and the fixed reference. A vanishing
/// order parameter reads as `cos = 0`.
pub fn cos_to_reference(state: &SublatticeState, device: &DeviceParams) -> f64 {
    let l = order_parameter(state, device.kind);
    let n = l.norm();
    if n == 0.0 {
        0.0
    } else {
        (l.dot(device.reference) / n).clamp(-1.0, 1.0)
    }
}

pub fn resistance(state: &SublatticeState, device: &DeviceParams) -> f64 {
    device.resistance.at_cos(cos_to_reference(state, device))
}

/// Current (A) and current density (A/m^2) under bias `v`.
pub fn bias_current(v: f64, state: &SublatticeState, device: &DeviceParams) -> (f64, f64) {
    let i = v / resistance(state, device);
    (i, i / device.geometry.area())
}

/// Write latency: first time (linearly interpolated) where the order
/// parameter's projection on its initial z direction falls to `-threshold`,
/// provided it stays at or below `-guard` for the rest of the trajectory.
pub fn detect_switch(traj: &Trajectory, crit: &SwitchCriterion, kind: DeviceKind) -> Result<Option<f64>> {
    if traj.len() < 2 {
        return Err(Error::Input(format!(
            "switch detection needs at least 2 samples, got {}",
            traj.len()
        )));
    }
    crit.validate()?;
    let lz: Vec<f64> = traj.states.iter().map(|s| order_parameter(s, kind).z).collect();
    let sign = if lz[0] >= 0.0 { 1.0 } else { -1.0 };
    let proj: Vec<f64> = lz.iter().map(|z| sign * z).collect();

    let Some(k) = proj.iter().position(|&p| p <= -crit.threshold) else {
        return Ok(None);
    };
    if proj[k..].iter().any(|&p| p > -crit.guard) {
        return Ok(None);
    }
    if k == 0 {
        return Ok(Some(traj.times[0]));
    }
    let (p0, p1) = (proj[k - 1], proj[k]);
    let (t0, t1) = (traj.times[k - 1], traj.times[k]);
    let w = (p0 + crit.threshold) / (p0 - p1);
    Ok(Some(t0 + w * (t1 - t0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn traj_from_lz(times: &[f64], lz: &[f64]) -> Trajectory {
        Trajectory {
            times: times.to_vec(),
            states: lz
                .iter()
                .map(|&z| {
                    let x = (1.0 - z * z).max(0.0).sqrt();
                    SublatticeState::from_neel(Vec3::new(x, 0.0, z))
                })
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn order_parameter_examples() {
        let s = SublatticeState::from_neel(Vec3::Z);
        assert_eq!(order_parameter(&s, DeviceKind::Afmtj), Vec3::Z);
        let same = SublatticeState::new(Vec3::Z, Vec3::Z).unwrap();
        assert_eq!(order_parameter(&same, DeviceKind::Afmtj), Vec3::ZERO);
        let th = 0.7f64;
        let tilted = SublatticeState::new(
            Vec3::new(th.sin(), 0.0, th.cos()),
            Vec3::new(-th.sin(), 0.0, -th.cos()),
        )
        .unwrap();
        let l = order_parameter(&tilted, DeviceKind::Afmtj);
        assert!(l.max_abs_diff(Vec3::new(th.sin(), 0.0, th.cos())) < 1e-15);
        assert!((l.norm() - 1.0).abs() < 1e-15);
        assert_eq!(order_parameter(&tilted, DeviceKind::Mtj), tilted.m1);
    }

    #[test]
    fn resistance_endpoints_and_midpoint() {
        let r = ResistanceModel { r_p: 2900.0, tmr: 0.8 };
        assert_eq!(r.at_cos(1.0), 2900.0);
        assert!((r.at_cos(-1.0) - 5220.0).abs() < 1e-9);
        let hm = 2.0 * 2900.0 * 5220.0 / (2900.0 + 5220.0);
        assert!((r.at_cos((PI / 2.0).cos()) - hm).abs() < 1e-9);
        let mut dev = DeviceParams::afmtj_default();
        dev.resistance = r;
        assert_eq!(resistance(&dev.bit_state(true), &dev), 2900.0);
        assert!((resistance(&dev.bit_state(false), &dev) - 5220.0).abs() < 1e-9);
    }

    #[test]
    fn resistance_is_monotone_in_cos() {
        let r = ResistanceModel { r_p: 1000.0, tmr: 1.5 };
        let vals: Vec<f64> = (0..=100).map(|i| r.at_cos(1.0 - i as f64 / 50.0)).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn bias_current_examples() {
        let mut dev = DeviceParams::afmtj_default();
        dev.resistance.r_p = 2900.0;
        let p = dev.bit_state(true);
        assert_eq!(bias_current(0.0, &p, &dev), (0.0, 0.0));
        let (i, j) = bias_current(1.0, &p, &dev);
        assert!((i - 344.8e-6).abs() < 0.05e-6);
        assert!((j - 1.703e11).abs() < 0.001e11);
        let (i_neg, j_neg) = bias_current(-1.0, &p, &dev);
        assert!(i_neg < 0.0 && j_neg < 0.0);
    }

    #[test]
    fn validation_rules() {
        let mut mtj = DeviceParams::mtj_default();
        mtj.validate().unwrap();
        mtj.exchange.omega_e = 1e12;
        assert!(mtj.validate().is_err());
        let mut afm = DeviceParams::afmtj_default();
        afm.validate().unwrap();
        afm.exchange.omega_e = 0.0;
        assert!(afm.validate().is_err());
        let mut afm = DeviceParams::afmtj_default();
        afm.resistance.tmr = 6.0;
        let msg = afm.validate().unwrap_err().to_string();
        assert!(msg.contains("500 %"), "{msg}");
    }

    #[test]
    fn quiescent_trajectory_never_switches() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 1e-12).collect();
        let tr = traj_from_lz(&t, &vec![1.0; 50]);
        assert_eq!(detect_switch(&tr, &SwitchCriterion::default(), DeviceKind::Afmtj).unwrap(), None);
    }

    #[test]
    fn crossing_at_100ps_is_found() {
        // l_z falls linearly from +1 at 0 to -1 at 190/1.9*... crossing -0.9 at 100 ps exactly.
        let t: Vec<f64> = (0..=300).map(|i| i as f64 * 1e-12).collect();
        let lz: Vec<f64> = t
            .iter()
            .map(|&x| (1.0 - 1.9 * x / 100e-12).max(-1.0))
            .collect();
        let tr = traj_from_lz(&t, &lz);
        let lat = detect_switch(&tr, &SwitchCriterion::default(), DeviceKind::Afmtj).unwrap().unwrap();
        assert!((lat - 100e-12).abs() < 1e-20);
    }

    #[test]
    fn backhopping_is_not_a_switch() {
        let t: Vec<f64> = (0..5).map(|i| i as f64 * 1e-12).collect();
        let tr = traj_from_lz(&t, &[1.0, 0.0, -0.95, 0.0, 1.0]);
        assert_eq!(detect_switch(&tr, &SwitchCriterion::default(), DeviceKind::Afmtj).unwrap(), None);
    }

    #[test]
    fn too_short_trajectory_is_an_input_error() {
        let tr = traj_from_lz(&[0.0], &[1.0]);
        assert!(matches!(
            detect_switch(&tr, &SwitchCriterion::default(), DeviceKind::Afmtj),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn latency_shifts_with_time_origin() {
        let t: Vec<f64> = (0..=200).map(|i| i as f64 * 1e-12).collect();
        let lz: Vec<f64> = t.iter().map(|&x| (-(x - 80e-12) / 10e-12).tanh()).collect();
        let a = detect_switch(&traj_from_lz(&t, &lz), &SwitchCriterion::default(), DeviceKind::Afmtj)
            .unwrap()
            .unwrap();
        let shifted: Vec<f64> = t.iter().map(|x| x + 37e-12).collect();
        let b = detect_switch(&traj_from_lz(&shifted, &lz), &SwitchCriterion::default(), DeviceKind::Afmtj)
            .unwrap()
            .unwrap();
        assert!((b - a - 37e-12).abs() < 1e-22);
    }
}
