//! Voltage sweeps over one or more devices and their CSV/JSON tables.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{FJ, PS};
use crate::device::{DeviceKind, DeviceParams, SwitchCriterion};
use crate::error::{Error, Result};
use crate::integrator::SolverOptions;
use crate::io::{read_to_string, write_string_atomic};
use crate::transient::{run_write, PulseSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// V, strictly increasing.
    pub voltages: Vec<f64>,
    pub devices: Vec<DeviceParams>,
    pub solver: SolverOptions,
    pub criterion: SwitchCriterion,
    /// s.
    pub pulse_width: f64,
}

impl SweepConfig {
    pub fn fig3_voltages() -> Vec<f64> {
        (5..=12).map(|k| k as f64 / 10.0).collect()
    }

    pub fn new(devices: Vec<DeviceParams>) -> Self {
        Self {
            voltages: Self::fig3_voltages(),
            devices,
            solver: SolverOptions::default(),
            criterion: SwitchCriterion::default(),
            pulse_width: PulseSpec::DEFAULT_WIDTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.voltages.is_empty() {
            return Err(Error::param("voltages", "voltage list is empty"));
        }
        if self.voltages.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("voltages", "voltages must be strictly increasing"));
        }
        if self.devices.is_empty() {
            return Err(Error::param("devices", "no devices to sweep"));
        }
        let mut kinds: Vec<DeviceKind> = self.devices.iter().map(|d| d.kind).collect();
        kinds.sort();
        if kinds.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("devices", "each device kind may appear once per sweep"));
        }
        for d in &self.devices {
            d.validate()?;
        }
        self.solver.validate()?;
        self.criterion.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub device: DeviceKind,
    #[serde(rename = "voltage_V")]
    pub voltage_v: f64,
    pub latency_ps: Option<f64>,
    #[serde(rename = "energy_fJ")]
    pub energy_fj: Option<f64>,
    pub switched: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn get(&self, device: DeviceKind, voltage: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.device == device && (r.voltage_v - voltage).abs() < 1e-9)
    }

    pub fn for_device(&self, device: DeviceKind) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.device == device)
    }
}

/// One write transient per (device, voltage). Rows are keyed by device kind
/// then voltage, so the table does not depend on the device order in the
/// config. A failed transient becomes an unswitched row.
pub fn voltage_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let mut devices = cfg.devices.clone();
    devices.sort_by_key(|d| d.kind);
    let jobs: Vec<(&DeviceParams, f64)> = devices
        .iter()
        .flat_map(|d| cfg.voltages.iter().map(move |&v| (d, v)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(d, v)| {
            let pulse = PulseSpec { width: cfg.pulse_width, ..PulseSpec::new(v) };
            match run_write(d, &pulse, &cfg.solver, &cfg.criterion) {
                Ok(r) => SweepRow {
                    device: d.kind,
                    voltage_v: v,
                    latency_ps: r.latency.map(|t| t / PS),
                    energy_fj: r.energy.map(|e| e / FJ),
                    switched: r.switched,
                },
                Err(_) => SweepRow {
                    device: d.kind,
                    voltage_v: v,
                    latency_ps: None,
                    energy_fj: None,
                    switched: false,
                },
            }
        })
        .collect();
    Ok(SweepTable { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
}

pub const SWEEP_CSV_HEADER: &str = "device,voltage_V,latency_ps,energy_fJ,switched";

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.device,
            r.voltage_v,
            opt_cell(r.latency_ps),
            opt_cell(r.energy_fj),
            r.switched
        ));
    }
    out
}

pub fn parse_sweep_csv(text: &str) -> Result<SweepTable> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Input(format!("sweep csv: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.join(",") != SWEEP_CSV_HEADER {
        return Err(Error::Input(format!("unexpected sweep csv header `{}`", header.join(","))));
    }
    let rows = rdr
        .deserialize::<SweepRow>()
        .map(|r| r.map_err(|e| Error::Input(format!("sweep csv: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows })
}

pub fn emit_results(table: &SweepTable, format: TableFormat, path: &Path) -> Result<()> {
    let body = match format {
        TableFormat::Csv => sweep_csv(table),
        TableFormat::Json => {
            let mut s = serde_json::to_string_pretty(table).expect("table serializes");
            s.push('\n');
            s
        }
    };
    write_string_atomic(path, &body)
}

pub fn read_results(format: TableFormat, path: &Path) -> Result<SweepTable> {
    let text = read_to_string(path)?;
    match format {
        TableFormat::Csv => parse_sweep_csv(&text),
        TableFormat::Json => serde_json::from_str(&text)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display()))),
    }
}
