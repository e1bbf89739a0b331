//! JSON ingestion. Files use engineering units (nm, emu/cm^3, ps, fJ) and
//! are converted to SI on load. Unknown keys are rejected.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::constants::{EMU_CM3_TO_A_M, NM, PS};
use crate::device::{DeviceGeometry, DeviceKind, DeviceParams, ResistanceModel};
use crate::dynamics::{ExchangeParams, MaterialParams};
use crate::error::{Error, Result};
use crate::integrator::SolverOptions;
use crate::io::read_to_string;

/// Parse `text` as `T`, reporting the failing key path.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, format!("{origin}: {}", e.inner()))
    })
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(&read_to_string(path)?, &path.display().to_string())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn one() -> f64 {
    1.0
}

/// On-disk device description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct DeviceFile {
    pub kind: DeviceKind,
    pub lx_nm: f64,
    pub ly_nm: f64,
    pub lz_nm: f64,
    pub Ms_emu_cm3: f64,
    pub alpha: f64,
    pub P0: f64,
    pub tmr: f64,
    pub r_p_ohm: f64,
    pub omega_E_rad_s: f64,
    pub Hk_A_m: f64,
    pub Nz: f64,
    pub temperature_K: f64,
    /// Dimensionless scale on the spin-torque prefactor.
    #[serde(default = "one")]
    pub stt_efficiency: f64,
}

/// File key for a parameter name used by the validators.
fn file_key(param: &str) -> &'static str {
    match param {
        "lx" => "lx_nm",
        "ly" => "ly_nm",
        "lz" => "lz_nm",
        "ms" => "Ms_emu_cm3",
        "alpha" => "alpha",
        "p0" => "P0",
        "tmr" => "tmr",
        "r_p" => "r_p_ohm",
        "omega_e" => "omega_E_rad_s",
        "hk" => "Hk_A_m",
        "nz" => "Nz",
        "temperature" => "temperature_K",
        "stt_efficiency" => "stt_efficiency",
        _ => "kind",
    }
}

impl DeviceFile {
    pub fn to_params(&self) -> Result<DeviceParams> {
        let base = match self.kind {
            DeviceKind::Afmtj => DeviceParams::afmtj_default(),
            DeviceKind::Mtj => DeviceParams::mtj_default(),
        };
        let exchange = ExchangeParams { omega_e: self.omega_E_rad_s, ..base.exchange };
        let d = DeviceParams {
            kind: self.kind,
            geometry: DeviceGeometry { lx: self.lx_nm * NM, ly: self.ly_nm * NM, lz: self.lz_nm * NM },
            material: MaterialParams {
                ms: self.Ms_emu_cm3 * EMU_CM3_TO_A_M,
                alpha: self.alpha,
                p0: self.P0,
                hk: self.Hk_A_m,
                nz: self.Nz,
                stt_efficiency: self.stt_efficiency,
            },
            exchange,
            resistance: ResistanceModel { r_p: self.r_p_ohm, tmr: self.tmr },
            polarizers: base.polarizers,
            reference: base.reference,
            temperature: self.temperature_K,
        };
        d.validate().map_err(|e| match e {
            Error::Param { name, reason } => Error::config(file_key(name), reason),
            other => other,
        })?;
        Ok(d)
    }

    pub fn from_params(d: &DeviceParams) -> Self {
        Self {
            kind: d.kind,
            lx_nm: d.geometry.lx / NM,
            ly_nm: d.geometry.ly / NM,
            lz_nm: d.geometry.lz / NM,
            Ms_emu_cm3: d.material.ms / EMU_CM3_TO_A_M,
            alpha: d.material.alpha,
            P0: d.material.p0,
            tmr: d.resistance.tmr,
            r_p_ohm: d.resistance.r_p,
            omega_E_rad_s: d.exchange.omega_e,
            Hk_A_m: d.material.hk,
            Nz: d.material.nz,
            temperature_K: d.temperature,
            stt_efficiency: d.material.stt_efficiency,
        }
    }
}

pub fn parse_device(text: &str, origin: &str) -> Result<DeviceParams> {
    parse_json::<DeviceFile>(text, origin)?
        .to_params()
        .map_err(|e| match e {
            Error::Config { path, reason } => Error::config(path, format!("{origin}: {reason}")),
            other => other,
        })
}

pub fn load_device(path: &Path) -> Result<DeviceParams> {
    parse_device(&read_to_string(path)?, &path.display().to_string())
}

pub fn device_json(d: &DeviceParams) -> String {
    to_json(&DeviceFile::from_params(d))
}

/// Solver overrides in picoseconds; absent keys keep the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverFile {
    pub dt_base_ps: Option<f64>,
    pub dt_min_ps: Option<f64>,
    pub dt_max_ps: Option<f64>,
    pub rel_tol: Option<f64>,
    pub sample_interval_ps: Option<f64>,
}

impl SolverFile {
    pub fn to_options(&self) -> Result<SolverOptions> {
        let d = SolverOptions::default();
        let o = SolverOptions {
            dt_base: self.dt_base_ps.map_or(d.dt_base, |v| v * PS),
            dt_min: self.dt_min_ps.map_or(d.dt_min, |v| v * PS),
            dt_max: self.dt_max_ps.map_or(d.dt_max, |v| v * PS),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            sample_interval: self.sample_interval_ps.map_or(d.sample_interval, |v| v * PS),
            ..d
        };
        o.validate().map_err(|e| match e {
            Error::Param { name, reason } => Error::config(format!("solver.{name}"), reason),
            other => other,
        })?;
        Ok(o)
    }
}
