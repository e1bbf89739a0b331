//! Subcommand configuration files. Every file is JSON, unknown keys are
//! rejected, and relative paths resolve against the directory holding the
//! config.

use std::path::{Path, PathBuf};

use afmtj_core::calibrate::{FreeParam, Target};
use afmtj_core::config::{load_json, SolverFile};
use afmtj_core::constants::{FJ, PS};
use afmtj_core::device::DeviceKind;
use afmtj_core::imc::{CpuBaseline, DeviceCard, HierarchyConfig, Level, SenseTiming, WorkloadProfile};
use afmtj_core::transient::PulseSpec;
use afmtj_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// A config file together with the directory its relative paths hang off.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub dir: PathBuf,
    /// Raw bytes, hashed into the run manifest.
    pub bytes: Vec<u8>,
}

impl<T> Loaded<T> {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.dir.join(p)
        }
    }
}

pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Loaded<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    let value = load_json(path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { value, dir, bytes })
}

fn plus_one() -> i8 {
    1
}

fn nominal_voltage() -> f64 {
    1.0
}

fn pulse_width(ps: Option<f64>) -> Result<f64> {
    match ps {
        None => Ok(PulseSpec::DEFAULT_WIDTH),
        Some(w) if w > 0.0 && w.is_finite() => Ok(w * PS),
        Some(w) => Err(Error::Config { path: "pulse_width_ps".into(), reason: format!("must be > 0, got {w}") }),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WriteSimConfig {
    pub device: PathBuf,
    #[serde(rename = "voltage_V")]
    pub voltage_v: f64,
    #[serde(default)]
    pub pulse_width_ps: Option<f64>,
    #[serde(default = "plus_one")]
    pub polarity: i8,
    #[serde(default)]
    pub solver: SolverFile,
}

impl WriteSimConfig {
    pub fn pulse(&self) -> Result<PulseSpec> {
        let p = PulseSpec { amplitude: self.voltage_v, width: pulse_width(self.pulse_width_ps)?, polarity: self.polarity };
        p.validate().map_err(|e| match e {
            Error::Param { name, reason } => {
                let key = match name {
                    "amplitude" => "voltage_V",
                    other => other,
                };
                Error::Config { path: key.into(), reason }
            }
            other => other,
        })?;
        Ok(p)
    }
}

/// Sense timing used to derive device cards from the nominal-voltage writes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CardSpec {
    #[serde(rename = "voltage_V", default = "nominal_voltage")]
    pub voltage_v: f64,
    pub t_sense_ps: f64,
    #[serde(rename = "v_sense_V")]
    pub v_sense_v: f64,
}

impl CardSpec {
    pub fn timing(&self) -> SenseTiming {
        SenseTiming { t_sense: self.t_sense_ps * PS, v_sense: self.v_sense_v }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFileConfig {
    pub devices: Vec<PathBuf>,
    #[serde(rename = "voltages_V", default)]
    pub voltages_v: Option<Vec<f64>>,
    #[serde(default)]
    pub pulse_width_ps: Option<f64>,
    #[serde(default)]
    pub solver: SolverFile,
    #[serde(default)]
    pub cards: Option<CardSpec>,
}

impl SweepFileConfig {
    pub fn pulse_width(&self) -> Result<f64> {
        pulse_width(self.pulse_width_ps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetPreset {
    /// Latency at 0.5 V and 1.2 V, energy at 1.0 V.
    ThreePoint,
    /// All sixteen reference latency and energy points.
    Fig3,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Preset(TargetPreset),
    List(Vec<Target>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    /// Starting device; its values anchor the log-space search.
    pub device: PathBuf,
    pub targets: TargetSpec,
    #[serde(default)]
    pub free: Option<Vec<FreeParam>>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub max_evals: Option<usize>,
    #[serde(default)]
    pub solver: SolverFile,
}

fn tmr_grid() -> Vec<f64> {
    vec![0.3, 0.5, 0.8, 1.5, 3.0, 5.0]
}

fn v_read() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogicConfig {
    pub r_p_ohm: f64,
    #[serde(default = "tmr_grid")]
    pub tmr_grid: Vec<f64>,
    #[serde(rename = "v_read_V", default = "v_read")]
    pub v_read_v: f64,
}

/// On-disk device card in ps and fJ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CardFile {
    pub label: DeviceKind,
    pub t_write_ps: f64,
    #[serde(rename = "e_write_fJ")]
    pub e_write_fj: f64,
    pub t_sense_ps: f64,
    #[serde(rename = "e_sense_fJ")]
    pub e_sense_fj: f64,
}

impl CardFile {
    pub fn from_card(c: &DeviceCard) -> Self {
        Self {
            label: c.label,
            t_write_ps: c.t_write / PS,
            e_write_fj: c.e_write / FJ,
            t_sense_ps: c.t_sense / PS,
            e_sense_fj: c.e_sense / FJ,
        }
    }

    pub fn to_card(&self) -> Result<DeviceCard> {
        let c = DeviceCard {
            label: self.label,
            t_write: self.t_write_ps * PS,
            e_write: self.e_write_fj * FJ,
            t_sense: self.t_sense_ps * PS,
            e_sense: self.e_sense_fj * FJ,
        };
        c.validate()?;
        Ok(c)
    }
}

pub fn load_cards(path: &Path) -> Result<Vec<DeviceCard>> {
    let files: Vec<CardFile> = load_json(path)?;
    files.iter().map(CardFile::to_card).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyFile {
    pub levels: Vec<Level>,
    pub t_ctrl_ps: f64,
    #[serde(rename = "e_ctrl_fJ")]
    pub e_ctrl_fj: f64,
}

impl HierarchyFile {
    pub fn to_config(&self) -> Result<HierarchyConfig> {
        let h = HierarchyConfig { levels: self.levels.clone(), t_ctrl: self.t_ctrl_ps * PS, e_ctrl: self.e_ctrl_fj * FJ };
        h.validate()?;
        Ok(h)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpuFile {
    #[serde(rename = "f_cpu_GHz")]
    pub f_cpu_ghz: f64,
    #[serde(rename = "avg_power_W")]
    pub avg_power_w: f64,
}

impl CpuFile {
    pub fn to_baseline(&self) -> Result<CpuBaseline> {
        let b = CpuBaseline { f_cpu: self.f_cpu_ghz * 1e9, avg_power: self.avg_power_w };
        b.validate()?;
        Ok(b)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImcConfig {
    pub cards: PathBuf,
    pub profiles: Vec<PathBuf>,
    #[serde(default)]
    pub hierarchy: Option<HierarchyFile>,
    #[serde(default)]
    pub cpu: Option<CpuFile>,
}

/// Everything the IMC evaluator needs, loaded and validated.
#[derive(Debug, Clone)]
pub struct ImcInputs {
    pub cards: Vec<DeviceCard>,
    pub profiles: Vec<WorkloadProfile>,
    pub hierarchy: HierarchyConfig,
    pub cpu: CpuBaseline,
}

impl Loaded<ImcConfig> {
    pub fn inputs(&self) -> Result<ImcInputs> {
        let c = &self.value;
        let cards = load_cards(&self.resolve(&c.cards))?;
        let profiles = c
            .profiles
            .iter()
            .map(|p| {
                let prof: WorkloadProfile = load_json(&self.resolve(p))?;
                prof.validate()?;
                Ok(prof)
            })
            .collect::<Result<Vec<_>>>()?;
        let hierarchy = match &c.hierarchy {
            Some(h) => h.to_config()?,
            None => HierarchyConfig::default(),
        };
        let cpu = match &c.cpu {
            Some(b) => b.to_baseline()?,
            None => CpuBaseline::default(),
        };
        Ok(ImcInputs { cards, profiles, hierarchy, cpu })
    }
}

/// Inputs for the `validate` subcommand: the other subcommands' configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub write_sim: PathBuf,
    pub sweep: PathBuf,
    /// One calibration per device kind.
    pub calibrate: Vec<PathBuf>,
    pub logic: PathBuf,
    pub imc: PathBuf,
    /// Thermal-field samples for the variance check; 100000 when absent.
    #[serde(default)]
    pub thermal_samples: Option<usize>,
}
