//! Subcommand bodies. Each one produces its data files in memory; the
//! caller writes them atomically and adds the run manifest.

use std::path::{Path, PathBuf};

use afmtj_core::bitline::{truth_table, LogicOp, SenseConfig};
use afmtj_core::calibrate::{
    calibrate, default_free, full_targets, three_point_free, three_point_targets, CalibrationProblem, CalibrationReport,
};
use afmtj_core::config::{device_json, load_device, to_json};
use afmtj_core::constants::{FJ, PS};
use afmtj_core::device::{order_parameter, DeviceKind, DeviceParams, ResistanceModel, SwitchCriterion};
use afmtj_core::imc::{report_csv, speedup_report, DeviceCard};
use afmtj_core::integrator::SolverOptions;
use afmtj_core::sweep::{sweep_csv, voltage_sweep, SweepConfig, SweepTable, TableFormat};
use afmtj_core::transient::{run_write, trajectory_csv};
use afmtj_core::Error;
use anyhow::{Context, Result};
use serde::Serialize;

use crate::files::{
    load, CalibrateConfig, CardFile, ImcConfig, Loaded, LogicConfig, SweepFileConfig, TargetPreset, TargetSpec,
    WriteSimConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    WriteSim,
    Sweep,
    Calibrate,
    Logic,
    Imc,
    Validate,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::WriteSim => "write-sim",
            Subcommand::Sweep => "sweep",
            Subcommand::Calibrate => "calibrate",
            Subcommand::Logic => "logic",
            Subcommand::Imc => "imc",
            Subcommand::Validate => "validate",
        }
    }
}

/// Outcomes that still produce output files but map to a failing exit code.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("calibration did not converge: max |residual| {max_residual:.4} exceeds tolerance {tolerance}")]
    NotConverged { max_residual: f64, tolerance: f64 },
    #[error("{failed} of {total} acceptance checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

/// Data files of one run plus the inputs they were derived from.
#[derive(Debug, Default)]
pub struct Output {
    /// (file name, contents), in emission order.
    pub files: Vec<(String, String)>,
    pub inputs: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub failure: Option<Failure>,
}

impl Output {
    fn file(&mut self, name: impl Into<String>, body: String) {
        self.files.push((name.into(), body));
    }
}

/// Maps an error to the process exit code: 1 validation or configuration,
/// 2 numerical failure, 3 calibration that missed its tolerance.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if let Some(f) = err.downcast_ref::<Failure>() {
        return match f {
            Failure::NotConverged { .. } => 3,
            Failure::ChecksFailed { .. } => 1,
        };
    }
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Numerical { .. } | Error::Stiff { .. }) => 2,
        _ => 1,
    }
}

fn solver(file: &afmtj_core::config::SolverFile, seed: u64) -> Result<SolverOptions> {
    Ok(SolverOptions { rng_seed: seed, ..file.to_options()? })
}

fn device_at(dir_of: &Loaded<impl Sized>, p: &Path, out: &mut Output) -> Result<DeviceParams> {
    let path = dir_of.resolve(p);
    let d = load_device(&path)?;
    out.inputs.push(path);
    Ok(d)
}

/// Runs one subcommand (other than `validate`) without touching the disk
/// beyond reading its inputs.
pub fn produce(cmd: Subcommand, config: &Path, seed: u64, format: TableFormat) -> Result<Output> {
    let ctx = || format!("{} config {}", cmd.name(), config.display());
    match cmd {
        Subcommand::WriteSim => write_sim(&load(config).with_context(ctx)?, seed),
        Subcommand::Sweep => sweep(&load(config).with_context(ctx)?, seed, format),
        Subcommand::Calibrate => calibrate_cmd(&load(config).with_context(ctx)?, seed),
        Subcommand::Logic => logic(&load(config).with_context(ctx)?, format),
        Subcommand::Imc => imc(&load(config).with_context(ctx)?, format),
        Subcommand::Validate => crate::checks::validate(&load(config).with_context(ctx)?, seed),
    }
}

#[derive(Serialize)]
struct WriteSummary {
    device: DeviceKind,
    #[serde(rename = "voltage_V")]
    voltage_v: f64,
    polarity: i8,
    pulse_width_ps: f64,
    switched: bool,
    latency_ps: Option<f64>,
    #[serde(rename = "energy_fJ")]
    energy_fj: Option<f64>,
    final_order_z: f64,
    accepted_steps: u64,
    rejected_steps: u64,
    max_norm_drift: f64,
}

fn write_sim(cfg: &Loaded<WriteSimConfig>, seed: u64) -> Result<Output> {
    let mut out = Output::default();
    let c = &cfg.value;
    let device = device_at(cfg, &c.device, &mut out)?;
    let pulse = c.pulse()?;
    let r = run_write(&device, &pulse, &solver(&c.solver, seed)?, &SwitchCriterion::default())?;
    let s = WriteSummary {
        device: device.kind,
        voltage_v: pulse.amplitude,
        polarity: pulse.polarity,
        pulse_width_ps: pulse.width / PS,
        switched: r.switched,
        latency_ps: r.latency.map(|t| t / PS),
        energy_fj: r.energy.map(|e| e / FJ),
        final_order_z: order_parameter(&r.final_state, device.kind).z,
        accepted_steps: r.trajectory.stats.accepted,
        rejected_steps: r.trajectory.stats.rejected,
        max_norm_drift: r.trajectory.stats.max_norm_drift,
    };
    out.summary.push(match (s.latency_ps, s.energy_fj) {
        (Some(t), Some(e)) => format!("{} at {} V: switched in {t:.2} ps, {e:.2} fJ", s.device, s.voltage_v),
        _ => format!("{} at {} V: no switch within {} ps", s.device, s.voltage_v, s.pulse_width_ps),
    });
    out.file("trajectory.csv", trajectory_csv(&r.trajectory, &device)?);
    out.file("write_result.json", to_json(&s));
    Ok(out)
}

/// Wide plot table: one row per voltage, one column per device.
fn plot_csv(table: &SweepTable, kinds: &[DeviceKind], voltages: &[f64], unit: &str, pick: fn(&afmtj_core::sweep::SweepRow) -> Option<f64>) -> String {
    let mut s = String::from("voltage_V");
    for k in kinds {
        s.push_str(&format!(",{k}_{unit}"));
    }
    s.push('\n');
    for &v in voltages {
        s.push_str(&v.to_string());
        for &k in kinds {
            let cell = table.get(k, v).and_then(pick).map(|x| x.to_string()).unwrap_or_default();
            s.push(',');
            s.push_str(&cell);
        }
        s.push('\n');
    }
    s
}

fn sweep(cfg: &Loaded<SweepFileConfig>, seed: u64, format: TableFormat) -> Result<Output> {
    let mut out = Output::default();
    let c = &cfg.value;
    let devices = c.devices.iter().map(|p| device_at(cfg, p, &mut out)).collect::<Result<Vec<_>>>()?;
    let mut sc = SweepConfig::new(devices.clone());
    if let Some(v) = &c.voltages_v {
        sc.voltages = v.clone();
    }
    sc.solver = solver(&c.solver, seed)?;
    sc.pulse_width = c.pulse_width()?;
    let table = voltage_sweep(&sc)?;

    let mut kinds: Vec<DeviceKind> = devices.iter().map(|d| d.kind).collect();
    kinds.sort();
    let switched = table.rows.iter().filter(|r| r.switched).count();
    out.summary.push(format!("{} of {} operating points switched", switched, table.rows.len()));
    match format {
        TableFormat::Csv => out.file("sweep.csv", sweep_csv(&table)),
        TableFormat::Json => out.file("sweep.json", to_json(&table)),
    }
    out.file("fig3_latency.csv", plot_csv(&table, &kinds, &sc.voltages, "latency_ps", |r| r.latency_ps));
    out.file("fig3_energy.csv", plot_csv(&table, &kinds, &sc.voltages, "energy_fJ", |r| r.energy_fj));

    if let Some(spec) = c.cards {
        let mut cards = Vec::new();
        for d in &devices {
            let row = table.get(d.kind, spec.voltage_v).ok_or_else(|| Error::Config {
                path: "cards.voltage_V".into(),
                reason: format!("{} V is not on the sweep grid", spec.voltage_v),
            })?;
            let (Some(t), Some(e)) = (row.latency_ps, row.energy_fj) else {
                return Err(Error::Input(format!("{} does not switch at {} V; no card", d.kind, spec.voltage_v)).into());
            };
            cards.push(DeviceCard::from_write(d.kind, t * PS, e * FJ, &d.resistance, &spec.timing())?);
        }
        cards.sort_by_key(|c| c.label);
        let files: Vec<CardFile> = cards.iter().map(CardFile::from_card).collect();
        out.file("cards.json", to_json(&files));
    }
    Ok(out)
}

/// Builds the calibration problem described by a config.
pub fn calibration_problem(cfg: &Loaded<CalibrateConfig>, seed: u64) -> Result<(CalibrationProblem, DeviceParams, PathBuf)> {
    let c = &cfg.value;
    let path = cfg.resolve(&c.device);
    let base = load_device(&path)?;
    let (targets, free) = match &c.targets {
        TargetSpec::Preset(TargetPreset::ThreePoint) => (three_point_targets(base.kind), three_point_free()),
        TargetSpec::Preset(TargetPreset::Fig3) => (full_targets(base.kind), default_free(base.kind)),
        TargetSpec::List(t) => (t.clone(), default_free(base.kind)),
    };
    let mut p = CalibrationProblem::new(c.free.clone().unwrap_or(free), targets);
    if let Some(t) = c.tolerance {
        p.tolerance = t;
    }
    if let Some(n) = c.max_evals {
        p.max_evals = n;
    }
    p.solver = solver(&c.solver, seed)?;
    Ok((p, base, path))
}

pub fn run_calibration(cfg: &Loaded<CalibrateConfig>, seed: u64) -> Result<CalibrationReport> {
    let (problem, base, _) = calibration_problem(cfg, seed)?;
    Ok(calibrate(&problem, &base)?)
}

fn calibrate_cmd(cfg: &Loaded<CalibrateConfig>, seed: u64) -> Result<Output> {
    let mut out = Output::default();
    let (problem, base, path) = calibration_problem(cfg, seed)?;
    out.inputs.push(path);
    let report = calibrate(&problem, &base)?;
    for r in &report.residuals {
        let t = &r.target;
        let sim = r.simulated.map_or("no switch".to_owned(), |s| format!("{s:.2}"));
        out.summary.push(format!(
            "{} {:?} at {} V: target {} sim {} ({:+.1}%)",
            t.device,
            t.observable,
            t.voltage_v,
            t.value,
            sim,
            100.0 * r.residual
        ));
    }
    out.summary.push(format!("objective {:.3e} after {} evaluations", report.objective, report.evals));
    if !report.converged {
        out.failure = Some(Failure::NotConverged { max_residual: report.max_abs_residual(), tolerance: problem.tolerance });
    }
    out.file("calibration_report.json", to_json(&report));
    out.file("calibrated_device.json", device_json(&report.device));
    Ok(out)
}

#[derive(Serialize)]
pub struct LogicRow {
    pub tmr: f64,
    pub op: LogicOp,
    pub a: u8,
    pub b: u8,
    pub out: u8,
    pub expected: u8,
    #[serde(rename = "G_uS")]
    pub g_us: f64,
    #[serde(rename = "I_uA")]
    pub i_ua: f64,
    #[serde(rename = "margin_uS")]
    pub margin_us: f64,
}

#[derive(Serialize)]
struct LogicReport {
    r_p_ohm: f64,
    #[serde(rename = "v_read_V")]
    v_read_v: f64,
    references: Vec<SenseConfig>,
    rows: Vec<LogicRow>,
}

/// Truth tables for NAND and XOR at every TMR of the grid.
pub fn logic_rows(c: &LogicConfig) -> Result<(Vec<SenseConfig>, Vec<LogicRow>)> {
    let mut refs = Vec::new();
    let mut rows = Vec::new();
    for &tmr in &c.tmr_grid {
        let r = ResistanceModel { r_p: c.r_p_ohm, tmr };
        let sense = SenseConfig::auto(&r, c.v_read_v).with_context(|| format!("tmr {tmr}"))?;
        refs.push(sense);
        for op in [LogicOp::Nand, LogicOp::Xor] {
            for o in truth_table(op, &r, &sense)? {
                rows.push(LogicRow {
                    tmr,
                    op,
                    a: o.a.into(),
                    b: o.b.into(),
                    out: o.out.into(),
                    expected: op.reference(o.a, o.b).into(),
                    g_us: o.conductance * 1e6,
                    i_ua: o.current * 1e6,
                    margin_us: o.margin * 1e6,
                });
            }
        }
    }
    Ok((refs, rows))
}

impl LogicRow {
    pub fn correct(&self) -> bool {
        self.out == self.expected && self.margin_us > 0.0
    }
}

fn logic(cfg: &Loaded<LogicConfig>, format: TableFormat) -> Result<Output> {
    let mut out = Output::default();
    let c = &cfg.value;
    let (references, rows) = logic_rows(c)?;
    let wrong = rows.iter().filter(|r| !r.correct()).count();
    out.summary.push(format!("{} truth-table rows over {} TMR values, {wrong} wrong", rows.len(), c.tmr_grid.len()));
    match format {
        TableFormat::Csv => {
            let mut s = String::from("tmr,op,a,b,out,expected,G_uS,I_uA,margin_uS\n");
            for r in &rows {
                let op = if r.op == LogicOp::Nand { "nand" } else { "xor" };
                s.push_str(&format!(
                    "{},{op},{},{},{},{},{},{},{}\n",
                    r.tmr, r.a, r.b, r.out, r.expected, r.g_us, r.i_ua, r.margin_us
                ));
            }
            out.file("logic.csv", s);
        }
        TableFormat::Json => {
            let report = LogicReport { r_p_ohm: c.r_p_ohm, v_read_v: c.v_read_v, references, rows };
            out.file("logic.json", to_json(&report));
        }
    }
    Ok(out)
}

fn imc(cfg: &Loaded<ImcConfig>, format: TableFormat) -> Result<Output> {
    let mut out = Output::default();
    let c = &cfg.value;
    out.inputs.push(cfg.resolve(&c.cards));
    out.inputs.extend(c.profiles.iter().map(|p| cfg.resolve(p)));
    let inp = cfg.inputs()?;
    let report = speedup_report(&inp.profiles, &inp.cards, &inp.hierarchy, &inp.cpu)?;
    for a in &report.averages {
        out.summary.push(format!(
            "{}: average speedup {:.2}x, energy savings {:.2}x",
            a.device, a.speedup, a.energy_savings
        ));
    }
    match format {
        TableFormat::Csv => out.file("fig4_report.csv", report_csv(&report)),
        TableFormat::Json => out.file("fig4_report.json", to_json(&report)),
    }
    Ok(out)
}
