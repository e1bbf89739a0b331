//! Acceptance checks. Each criterion yields one pass/fail line; `validate`
//! runs them all against the shipped configs.

use std::fmt;

use afmtj_core::calibrate::{fig3_data, CalibrationReport};
use afmtj_core::config::to_json;
use afmtj_core::constants::{FJ, GAMMA, MU0, PS};
use afmtj_core::device::{DeviceKind, DeviceParams, SwitchCriterion};
use afmtj_core::dynamics::{exchange_torque, LlgSystem, MaterialParams, Sublattices, SublatticeState};
use afmtj_core::imc::{fig4_targets, speedup_report, WORKLOADS};
use afmtj_core::integrator::{rk4_raw, rk4_step, SolverOptions};
use afmtj_core::sweep::{SweepConfig, TableFormat};
use afmtj_core::thermal::{sample_thermal_field, thermal_variance, ThermalSource};
use afmtj_core::transient::{run_write, PulseSpec, TransientResult};
use afmtj_core::vec3::Vec3;
use anyhow::{bail, Context, Result};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{logic_rows, produce, run_calibration, Failure, Output, Subcommand};
use crate::files::{load, CalibrateConfig, ImcConfig, Loaded, LogicConfig, ValidateConfig};

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    fn new(id: u8, name: &'static str, passed: bool, detail: String) -> Self {
        Self { id, name, passed, detail }
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {} {tag}: {} ({})", self.id, self.name, self.detail)
    }
}

/// One calibrated device and its transients on the 0.5..=1.2 V grid.
pub struct Fig3Run {
    pub report: CalibrationReport,
    pub voltages: Vec<f64>,
    pub runs: Vec<TransientResult>,
}

impl Fig3Run {
    pub fn kind(&self) -> DeviceKind {
        self.report.device.kind
    }

    fn latency_ps(&self, k: usize) -> Option<f64> {
        self.runs[k].latency.map(|t| t / PS)
    }

    fn energy_fj(&self, k: usize) -> Option<f64> {
        self.runs[k].energy.map(|e| e / FJ)
    }

    fn index(&self, v: f64) -> usize {
        self.voltages.iter().position(|&x| (x - v).abs() < 1e-9).expect("grid voltage")
    }
}

/// Calibrates from each config, then simulates the calibrated device at every
/// grid voltage.
pub fn fig3_runs(cfgs: &[Loaded<CalibrateConfig>], seed: u64) -> Result<Vec<Fig3Run>> {
    let mut out = Vec::new();
    for cfg in cfgs {
        let report = run_calibration(cfg, seed)?;
        let voltages = SweepConfig::fig3_voltages();
        let opts = SolverOptions { rng_seed: seed, ..SolverOptions::default() };
        let runs = voltages
            .par_iter()
            .map(|&v| run_write(&report.device, &PulseSpec::new(v), &opts, &SwitchCriterion::default()))
            .collect::<afmtj_core::Result<Vec<_>>>()?;
        out.push(Fig3Run { report, voltages, runs });
    }
    let mut kinds: Vec<DeviceKind> = out.iter().map(Fig3Run::kind).collect();
    kinds.sort();
    if kinds != [DeviceKind::Afmtj, DeviceKind::Mtj] {
        bail!("need exactly one AFMTJ and one MTJ calibration, got {kinds:?}");
    }
    Ok(out)
}

fn rel(sim: Option<f64>, target: f64) -> f64 {
    sim.map_or(f64::INFINITY, |s| (s - target) / target)
}

fn find(runs: &[Fig3Run], kind: DeviceKind) -> &Fig3Run {
    runs.iter().find(|r| r.kind() == kind).expect("both kinds present")
}

/// Latency curve within 15 % and fitted targets within 10 %.
pub fn latency_check(runs: &[Fig3Run]) -> CheckLine {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in runs {
        let (lat, _) = fig3_data(r.kind());
        let worst = (0..8).map(|k| rel(r.latency_ps(k), lat[k])).fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
        let fit = r.report.max_abs_residual();
        ok &= worst.abs() <= 0.15 && fit <= 0.10;
        parts.push(format!("{} worst latency {:+.1}%, worst fitted target {:.1}%", r.kind(), 100.0 * worst, 100.0 * fit));
    }
    CheckLine::new(1, "write latency versus voltage", ok, parts.join("; "))
}

/// Energy curve within 15 %; the MTJ is checked at 0.5, 0.9, 1.0 and 1.2 V.
pub fn energy_check(runs: &[Fig3Run]) -> CheckLine {
    let mut misses = Vec::new();
    let mut checked = 0;
    for r in runs {
        let (_, en) = fig3_data(r.kind());
        let points: Vec<f64> = match r.kind() {
            DeviceKind::Afmtj => r.voltages.clone(),
            DeviceKind::Mtj => vec![0.5, 0.9, 1.0, 1.2],
        };
        for v in points {
            let k = r.index(v);
            let d = rel(r.energy_fj(k), en[k]);
            checked += 1;
            if d.abs() > 0.15 {
                misses.push(format!("{} {v} V {:+.1}%", r.kind(), 100.0 * d));
            }
        }
    }
    let detail = if misses.is_empty() {
        format!("{checked} points within 15%")
    } else {
        format!("{} of {checked} points outside 15%: {}", misses.len(), misses.join(", "))
    };
    CheckLine::new(2, "write energy versus voltage", misses.is_empty(), detail)
}

/// MTJ/AFMTJ latency and energy ratios at 1.0 V.
pub fn ratio_check(runs: &[Fig3Run]) -> CheckLine {
    let (a, m) = (find(runs, DeviceKind::Afmtj), find(runs, DeviceKind::Mtj));
    let (ka, km) = (a.index(1.0), m.index(1.0));
    let ratio = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => x / y,
        _ => f64::NAN,
    };
    let lat = ratio(m.latency_ps(km), a.latency_ps(ka));
    let en = ratio(m.energy_fj(km), a.energy_fj(ka));
    let ok = (6.4..=9.6).contains(&lat) && (7.2..=10.8).contains(&en);
    CheckLine::new(3, "MTJ to AFMTJ ratios at 1.0 V", ok, format!("latency {lat:.2}x, energy {en:.2}x"))
}

fn larmor_system(alpha: f64) -> LlgSystem {
    LlgSystem {
        material: MaterialParams { ms: 1e6, alpha, p0: 0.0, hk: 0.0, nz: 0.0, stt_efficiency: 1.0 },
        exchange: afmtj_core::dynamics::ExchangeParams::decoupled(),
        thickness: 1e-9,
        polarizers: [Vec3::Z, Vec3::Z],
        sublattices: Sublattices::Single,
    }
}

/// Relative error of the simulated precession frequency in a static field.
pub fn larmor_error(dt: f64) -> Result<f64> {
    let h = 1e6;
    let field = [Vec3::Z * h, Vec3::ZERO];
    let sys = larmor_system(0.0);
    let expected = GAMMA * MU0 * h / (2.0 * std::f64::consts::PI);
    let n = (10.0 / expected / dt).round() as usize;
    let mut s = SublatticeState { m1: Vec3::X, m2: Vec3::Z };
    let mut phase = 0.0;
    let mut last = 0.0_f64;
    for k in 0..n {
        s = rk4_step(|_, st| sys.rhs_unchecked(st, 0.0, field), k as f64 * dt, &s, dt)?.state;
        let a = s.m1.y.atan2(s.m1.x);
        let mut d = a - last;
        if d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        } else if d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        phase += d;
        last = a;
    }
    let f = phase.abs() / (2.0 * std::f64::consts::PI * n as f64 * dt);
    Ok((f - expected).abs() / expected)
}

/// Error ratio between step sizes dt and dt/2, each measured against dt/4.
pub fn rk4_convergence_ratio() -> Result<f64> {
    let sys = larmor_system(0.1);
    let field = [Vec3::new(2e5, 0.0, 8e5), Vec3::ZERO];
    let y0 = SublatticeState { m1: Vec3::new(0.6, 0.0, 0.8), m2: Vec3::Z }.to_array();
    let t_end = 40.0 * PS;
    let run = |dt: f64| -> Result<[f64; 6]> {
        let mut f = |_: f64, y: &[f64; 6]| {
            let d = sys.rhs_unchecked(&SublatticeState::from_array(*y), 0.0, field);
            [d[0].x, d[0].y, d[0].z, d[1].x, d[1].y, d[1].z]
        };
        let n = (t_end / dt).round() as usize;
        let mut y = y0;
        for k in 0..n {
            y = rk4_raw(&mut f, k as f64 * dt, &y, dt)?;
        }
        Ok(y)
    };
    let dt = 1.0 * PS;
    let (a, b, c) = (run(dt)?, run(dt / 2.0)?, run(dt / 4.0)?);
    let dist = |x: &[f64; 6], y: &[f64; 6]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    Ok(dist(&a, &b) / dist(&b, &c))
}

fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Largest `|m . dm/dt| / |dm/dt|` over random states, drives and fields.
pub fn worst_orthogonality(devices: &[&DeviceParams], samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for k in 0..samples {
        let d = devices[k % devices.len()];
        let sys = d.system();
        let s = SublatticeState { m1: random_unit(&mut rng), m2: random_unit(&mut rng) };
        let j = rng.random_range(-1e12..1e12);
        let h = [random_unit(&mut rng) * rng.random_range(0.0..1e5), random_unit(&mut rng) * rng.random_range(0.0..1e5)];
        let dm = sys.rhs_unchecked(&s, j, h);
        let live = if sys.sublattices == Sublattices::Single { 1 } else { 2 };
        for (m, dm) in [s.m1, s.m2].iter().zip(dm).take(live) {
            let n = dm.norm();
            if n > 0.0 {
                worst = worst.max(m.dot(dm).abs() / n);
            }
        }
    }
    worst
}

pub fn numerics_check(runs: &[Fig3Run], seed: u64) -> Result<CheckLine> {
    let larmor = larmor_error(0.1 * PS)?;
    let ratio = rk4_convergence_ratio()?;
    let devices: Vec<&DeviceParams> = runs.iter().map(|r| &r.report.device).collect();
    let ortho = worst_orthogonality(&devices, 100_000, seed);
    let drift = runs
        .iter()
        .flat_map(|r| &r.runs)
        .map(|t| t.trajectory.stats.max_norm_drift)
        .fold(0.0, f64::max);
    let ok = larmor < 1e-3 && (12.0..=20.0).contains(&ratio) && ortho <= 1e-12 && drift <= 1e-6;
    Ok(CheckLine::new(
        4,
        "integrator and right-hand-side oracles",
        ok,
        format!(
            "Larmor error {:.2e}, RK4 halving ratio {ratio:.2}, worst |m.dm|/|dm| {ortho:.1e}, worst norm drift {drift:.1e}",
            larmor
        ),
    ))
}

/// Flips y and z: a proper rotation, so torques transform like the state.
fn rot(v: Vec3) -> Vec3 {
    Vec3::new(v.x, -v.y, -v.z)
}

/// A positive pulse on `d` against a negative pulse on the device with the
/// reference flipped, started from the rotated state.
pub fn mirror_deviation(d: &DeviceParams, v: f64) -> Result<f64> {
    let opts = SolverOptions::default();
    let crit = SwitchCriterion::default();
    let a = run_write(d, &PulseSpec::new(v), &opts, &crit)?;
    let flipped = DeviceParams { reference: -d.reference, ..*d };
    let b = run_write(&flipped, &PulseSpec { polarity: -1, ..PulseSpec::new(v) }, &opts, &crit)?;
    if a.trajectory.len() != b.trajectory.len() || a.switched != b.switched {
        return Ok(f64::INFINITY);
    }
    let mut worst = 0.0_f64;
    for (sa, sb) in a.trajectory.states.iter().zip(&b.trajectory.states) {
        worst = worst.max((rot(sa.m1) - sb.m1).norm()).max((rot(sa.m2) - sb.m2).norm());
    }
    if let (Some(la), Some(lb)) = (a.latency, b.latency) {
        worst = worst.max((la - lb).abs() / la);
    }
    Ok(worst)
}

pub fn physics_check(runs: &[Fig3Run], seed: u64) -> Result<CheckLine> {
    let afm = &find(runs, DeviceKind::Afmtj).report.device;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut antisym_bad = 0;
    for _ in 0..10_000 {
        let (m1, m2) = (random_unit(&mut rng), random_unit(&mut rng));
        if exchange_torque(m1, m2, &afm.exchange) != -exchange_torque(m2, m1, &afm.exchange) {
            antisym_bad += 1;
        }
    }

    let quiet = DeviceParams { temperature: 0.0, ..*afm };
    let idle = PulseSpec { amplitude: 0.0, width: 1000.0 * PS, polarity: 1 };
    let r = run_write(&quiet, &idle, &SolverOptions::default(), &SwitchCriterion::default())?;
    let worst_dot = r.trajectory.states.iter().map(|s| s.m1.dot(s.m2)).fold(-1.0, f64::max);

    let mirror = runs.iter().map(|r| mirror_deviation(&r.report.device, 1.0)).collect::<Result<Vec<_>>>()?;
    let mirror = mirror.into_iter().fold(0.0, f64::max);
    let ok = antisym_bad == 0 && worst_dot <= -0.999 && mirror <= 1e-9;
    Ok(CheckLine::new(
        5,
        "exchange antisymmetry, ground state, polarity mirror",
        ok,
        format!("{antisym_bad} asymmetric pairs of 10000, max m1.m2 over 1 ns {worst_dot:.6}, mirror deviation {mirror:.1e}"),
    ))
}

/// Counts every word drawn from the wrapped generator.
struct Counting<R>(R, u64);

impl<R: RngCore> RngCore for Counting<R> {
    fn next_u32(&mut self) -> u32 {
        self.1 += 1;
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.1 += 1;
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.1 += 1;
        self.0.fill_bytes(dst)
    }
}

pub fn thermal_check(runs: &[Fig3Run], samples: usize, seed: u64) -> CheckLine {
    let d = &find(runs, DeviceKind::Afmtj).report.device;
    let (vol, dt) = (d.geometry.volume(), 0.1 * PS);
    let expected = thermal_variance(&d.material, vol, 300.0, dt);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..samples)
        .flat_map(|_| {
            let h = sample_thermal_field(&d.material, vol, 300.0, dt, &mut rng);
            [h.x, h.y, h.z]
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    let dev = (var - expected) / expected;

    let mut counting = Counting(ChaCha8Rng::seed_from_u64(seed), 0);
    let cold = (0..1000).all(|_| sample_thermal_field(&d.material, vol, 0.0, dt, &mut counting) == Vec3::ZERO);
    let src = ThermalSource { material: d.material, volume: vol, temperature: 0.0, seed };
    let cold = cold && (0..1000).all(|k| src.normals(k).is_none());
    let ok = dev.abs() <= 0.05 && cold && counting.1 == 0;
    CheckLine::new(
        6,
        "thermal field statistics",
        ok,
        format!("variance {:+.2}% from closed form over {samples} samples, {} draws at T = 0", 100.0 * dev, counting.1),
    )
}

pub fn logic_check(cfg: &LogicConfig) -> Result<CheckLine> {
    let mut grid = cfg.tmr_grid.clone();
    if !grid.contains(&0.8) {
        grid.push(0.8);
    }
    let c = LogicConfig { tmr_grid: grid, ..cfg.clone() };
    let (_, rows) = logic_rows(&c)?;
    let wrong = rows.iter().filter(|r| !r.correct()).count();
    let min_margin = rows.iter().map(|r| r.margin_us).fold(f64::INFINITY, f64::min);
    Ok(CheckLine::new(
        7,
        "bitline NAND and XOR",
        wrong == 0 && !rows.is_empty(),
        format!("{} rows over TMR {:?}, {wrong} wrong, smallest margin {min_margin:.2} uS", rows.len(), c.tmr_grid),
    ))
}

pub fn imc_check(cfg: &Loaded<ImcConfig>) -> Result<CheckLine> {
    let inp = cfg.inputs()?;
    let rep = speedup_report(&inp.profiles, &inp.cards, &inp.hierarchy, &inp.cpu)?;
    let mut misses = Vec::new();
    let mut worst = 0.0_f64;
    let mut bars = 0;
    let mut check = |label: String, sim: f64, target: f64| {
        let d = (sim - target) / target;
        bars += 1;
        worst = worst.max(d.abs());
        if d.abs() > 0.05 {
            misses.push(format!("{label} {sim:.3} vs {target} ({:+.1}%)", 100.0 * d));
        }
    };
    let mut ordering_ok = true;
    for w in WORKLOADS {
        let t = fig4_targets(w).context("bar targets")?;
        let a = rep.row(w, DeviceKind::Afmtj).context("AFMTJ row")?;
        let m = rep.row(w, DeviceKind::Mtj).context("MTJ row")?;
        check(format!("{w} AFMTJ speedup"), a.speedup, t.speedup_afmtj);
        check(format!("{w} MTJ speedup"), m.speedup, t.speedup_mtj);
        check(format!("{w} AFMTJ savings"), a.energy_savings, t.savings_afmtj);
        check(format!("{w} MTJ savings"), m.energy_savings, t.savings_mtj);
        ordering_ok &= a.speedup > m.speedup;
    }
    let t = fig4_targets("average").context("average targets")?;
    let (a, m) = (rep.average(DeviceKind::Afmtj).context("avg")?, rep.average(DeviceKind::Mtj).context("avg")?);
    check("average AFMTJ speedup".into(), a.speedup, t.speedup_afmtj);
    check("average MTJ speedup".into(), m.speedup, t.speedup_mtj);
    check("average AFMTJ savings".into(), a.energy_savings, t.savings_afmtj);
    check("average MTJ savings".into(), m.energy_savings, t.savings_mtj);
    let bnn_mtj = rep.row("bnn", DeviceKind::Mtj).context("bnn row")?.energy_savings;
    let ok = misses.is_empty() && ordering_ok && bnn_mtj < 1.0;
    let mut detail = format!("{bars} bars, worst deviation {:.2}%, MTJ bnn savings {bnn_mtj:.3}x", 100.0 * worst);
    if !ordering_ok {
        detail.push_str(", AFMTJ speedup not above MTJ everywhere");
    }
    if !misses.is_empty() {
        detail.push_str(&format!(", outside 5%: {}", misses.join(", ")));
    }
    Ok(CheckLine::new(8, "IMC speedup and energy savings", ok, detail))
}

/// Criteria 1 to 8.
pub fn run_checks(cfg: &Loaded<ValidateConfig>, seed: u64) -> Result<Vec<CheckLine>> {
    let c = &cfg.value;
    let cals = c
        .calibrate
        .iter()
        .map(|p| load::<CalibrateConfig>(&cfg.resolve(p)).with_context(|| format!("calibrate config {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let runs = fig3_runs(&cals, seed)?;
    let logic: Loaded<LogicConfig> = load(&cfg.resolve(&c.logic))?;
    let imc: Loaded<ImcConfig> = load(&cfg.resolve(&c.imc))?;
    Ok(vec![
        latency_check(&runs),
        energy_check(&runs),
        ratio_check(&runs),
        numerics_check(&runs, seed)?,
        physics_check(&runs, seed)?,
        thermal_check(&runs, c.thermal_samples.unwrap_or(100_000), seed),
        logic_check(&logic.value)?,
        imc_check(&imc)?,
    ])
}

/// Every subcommand config that criterion 9 reruns.
pub fn rerun_list(cfg: &Loaded<ValidateConfig>) -> Vec<(Subcommand, std::path::PathBuf)> {
    let c = &cfg.value;
    let mut v = vec![(Subcommand::WriteSim, cfg.resolve(&c.write_sim)), (Subcommand::Sweep, cfg.resolve(&c.sweep))];
    v.extend(c.calibrate.iter().map(|p| (Subcommand::Calibrate, cfg.resolve(p))));
    v.push((Subcommand::Logic, cfg.resolve(&c.logic)));
    v.push((Subcommand::Imc, cfg.resolve(&c.imc)));
    v
}

/// Runs every subcommand twice in process and compares the data files.
pub fn reproducibility_check(cfg: &Loaded<ValidateConfig>, seed: u64) -> Result<CheckLine> {
    let mut diffs = Vec::new();
    let mut files = 0;
    for (cmd, path) in rerun_list(cfg) {
        let a = produce(cmd, &path, seed, TableFormat::Csv)?;
        let b = produce(cmd, &path, seed, TableFormat::Csv)?;
        files += a.files.len();
        if a.files != b.files {
            diffs.push(format!("{} {}", cmd.name(), path.display()));
        }
    }
    Ok(reproducibility_line(files, &diffs))
}

pub fn reproducibility_line(files: usize, diffs: &[String]) -> CheckLine {
    let detail = if diffs.is_empty() {
        format!("{files} data files byte-identical across reruns")
    } else {
        format!("differences in {}", diffs.join(", "))
    };
    CheckLine::new(9, "rerun reproducibility", diffs.is_empty(), detail)
}

pub fn validate(cfg: &Loaded<ValidateConfig>, seed: u64) -> Result<Output> {
    let mut lines = run_checks(cfg, seed)?;
    lines.push(reproducibility_check(cfg, seed)?);
    let failed = lines.iter().filter(|l| !l.passed).count();
    let mut out = Output {
        inputs: rerun_list(cfg).into_iter().map(|(_, p)| p).collect(),
        summary: lines.iter().map(ToString::to_string).collect(),
        ..Output::default()
    };
    if failed > 0 {
        out.failure = Some(Failure::ChecksFailed { failed, total: lines.len() });
    }
    out.files.push(("validation.json".into(), to_json(&lines)));
    Ok(out)
}
