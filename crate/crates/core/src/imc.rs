//! Analytical speedup and energy model for bulk bitwise workloads offloaded
//! to a cache/memory hierarchy with in-place logic.
//!
//! Workload profiles are not measured traces. They are fitted so that one
//! profile reproduces a reference speedup/energy pair under two device cards
//! at once, which makes the evaluator a regression harness rather than a
//! prediction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bitline::DEFAULT_T_SENSE;
use crate::device::{DeviceKind, ResistanceModel};
use crate::error::{Error, Result};
use crate::simplex::{minimize, SimplexOptions};

pub const PRIMITIVES: [&str; 4] = ["xor", "nand", "write", "read"];

pub const WORKLOADS: [&str; 6] = ["bnn", "img-grayscale", "img-threshold", "mac", "mat_add", "rmse"];

pub const REPORT_CSV_HEADER: &str = "workload,device,t_cpu_s,e_cpu_J,t_imc_s,e_imc_J,speedup,energy_savings";

/// Write phases a primitive spends; `None` for names the model does not know.
pub fn write_phases(primitive: &str) -> Option<f64> {
    match primitive {
        "xor" | "nand" | "write" => Some(1.0),
        "read" => Some(0.0),
        _ => None,
    }
}

/// Per-device operation costs at the nominal write voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceCard {
    pub label: DeviceKind,
    /// s.
    pub t_write: f64,
    /// J.
    pub e_write: f64,
    /// s.
    pub t_sense: f64,
    /// J per activated column.
    pub e_sense: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenseTiming {
    /// s.
    pub t_sense: f64,
    /// Bias across a cell while sensing, V.
    pub v_sense: f64,
}

impl Default for SenseTiming {
    fn default() -> Self {
        Self { t_sense: DEFAULT_T_SENSE, v_sense: 0.1 }
    }
}

impl DeviceCard {
    /// Card from a measured write; sense energy is `v^2 G t` with the mean of
    /// the parallel and antiparallel conductances.
    pub fn from_write(label: DeviceKind, t_write: f64, e_write: f64, r: &ResistanceModel, sense: &SenseTiming) -> Result<Self> {
        r.validate()?;
        let g = 0.5 * (1.0 / r.r_p + 1.0 / r.r_ap());
        let card = Self {
            label,
            t_write,
            e_write,
            t_sense: sense.t_sense,
            e_sense: sense.v_sense * sense.v_sense * g * sense.t_sense,
        };
        card.validate()?;
        Ok(card)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_write", self.t_write),
            ("e_write", self.e_write),
            ("t_sense", self.t_sense),
            ("e_sense", self.e_sense),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("card values must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level {
    pub name: String,
    pub capacity_bytes: u64,
    /// Columns computed by one bulk operation.
    pub parallel_width: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyConfig {
    pub levels: Vec<Level>,
    /// Controller overhead per bulk op, s.
    pub t_ctrl: f64,
    /// Controller energy per bulk op, J.
    pub e_ctrl: f64,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        let lvl = |name: &str, capacity_bytes, parallel_width| Level { name: name.into(), capacity_bytes, parallel_width };
        Self {
            levels: vec![
                lvl("L1", 32 << 10, 64),
                lvl("L2", 1 << 20, 128),
                lvl("main", 8 << 30, 256),
            ],
            t_ctrl: 20e-12,
            e_ctrl: 1e-15,
        }
    }
}

impl HierarchyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::param("levels", "hierarchy has no levels"));
        }
        if self.levels.windows(2).any(|w| w[1].capacity_bytes <= w[0].capacity_bytes) {
            return Err(Error::param("levels", "capacities must increase down the hierarchy"));
        }
        if self.levels.iter().any(|l| l.parallel_width == 0) {
            return Err(Error::param("parallel_width", "must be >= 1"));
        }
        for (i, l) in self.levels.iter().enumerate() {
            if self.levels[..i].iter().any(|o| o.name == l.name) {
                return Err(Error::param("levels", format!("duplicate level `{}`", l.name)));
            }
        }
        if !(self.t_ctrl >= 0.0 && self.e_ctrl >= 0.0) {
            return Err(Error::param("controller", "overheads must be >= 0"));
        }
        Ok(())
    }

    pub fn level(&self, name: &str) -> Result<&Level> {
        self.levels
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::config("level", format!("workload mapped to unknown level `{name}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpuBaseline {
    /// Hz.
    pub f_cpu: f64,
    /// W.
    pub avg_power: f64,
}

impl Default for CpuBaseline {
    fn default() -> Self {
        Self { f_cpu: 2e9, avg_power: 1.5 }
    }
}

impl CpuBaseline {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_cpu > 0.0 && self.avg_power > 0.0) {
            return Err(Error::param("cpu", "frequency and power must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadProfile {
    pub name: String,
    /// Hierarchy level the bulk ops run in.
    pub level: String,
    pub cpu_cycles: f64,
    /// J; `None` falls back to average CPU power.
    #[serde(default)]
    pub cpu_energy: Option<f64>,
    pub bulk_ops: BTreeMap<String, f64>,
    pub bits_per_op: f64,
    pub residual_cpu_cycles: f64,
}

impl WorkloadProfile {
    pub fn validate(&self) -> Result<()> {
        for (k, &v) in &self.bulk_ops {
            if write_phases(k).is_none() {
                return Err(Error::config(format!("bulk_ops.{k}"), "unmapped primitive"));
            }
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("bulk_ops.{k}"), "counts must be >= 0"));
            }
        }
        let fields = [
            ("cpu_cycles", self.cpu_cycles),
            ("bits_per_op", self.bits_per_op),
            ("residual_cpu_cycles", self.residual_cpu_cycles),
            ("cpu_energy", self.cpu_energy.unwrap_or(0.0)),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be >= 0, got {v}")));
            }
        }
        if self.residual_cpu_cycles > self.cpu_cycles {
            return Err(Error::config("residual_cpu_cycles", "exceeds cpu_cycles"));
        }
        Ok(())
    }

    pub fn write_phase_ops(&self) -> f64 {
        self.bulk_ops.iter().map(|(k, v)| v * write_phases(k).unwrap_or(0.0)).sum()
    }

    pub fn total_ops(&self) -> f64 {
        self.bulk_ops.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// s.
    pub time: f64,
    /// J.
    pub energy: f64,
}

pub fn estimate_cpu(profile: &WorkloadProfile, base: &CpuBaseline) -> Estimate {
    let time = profile.cpu_cycles / base.f_cpu;
    Estimate { time, energy: profile.cpu_energy.unwrap_or(base.avg_power * time) }
}

pub fn estimate_imc(profile: &WorkloadProfile, card: &DeviceCard, hier: &HierarchyConfig, base: &CpuBaseline) -> Result<Estimate> {
    profile.validate()?;
    card.validate()?;
    hier.validate()?;
    base.validate()?;
    let width = f64::from(hier.level(&profile.level)?.parallel_width);
    let cpu = estimate_cpu(profile, base);

    let (mut t_ops, mut e_ops) = (0.0, 0.0);
    for (k, &n) in &profile.bulk_ops {
        let nw = write_phases(k).expect("validated primitive");
        t_ops += n * (card.t_sense + nw * card.t_write + hier.t_ctrl);
        e_ops += n * (profile.bits_per_op * (card.e_write * nw + card.e_sense) + hier.e_ctrl);
    }
    let resid_frac = if profile.cpu_cycles > 0.0 { profile.residual_cpu_cycles / profile.cpu_cycles } else { 0.0 };
    Ok(Estimate {
        time: t_ops / width + profile.residual_cpu_cycles / base.f_cpu,
        energy: e_ops + cpu.energy * resid_frac,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub workload: String,
    pub device: DeviceKind,
    pub t_cpu_s: f64,
    #[serde(rename = "e_cpu_J")]
    pub e_cpu_j: f64,
    pub t_imc_s: f64,
    #[serde(rename = "e_imc_J")]
    pub e_imc_j: f64,
    pub speedup: f64,
    pub energy_savings: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageRow {
    pub device: DeviceKind,
    pub speedup: f64,
    pub energy_savings: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub averages: Vec<AverageRow>,
}

impl EvalReport {
    pub fn row(&self, workload: &str, device: DeviceKind) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.workload == workload && r.device == device)
    }

    pub fn average(&self, device: DeviceKind) -> Option<&AverageRow> {
        self.averages.iter().find(|a| a.device == device)
    }
}

/// Every shipped workload against every card. Rows are ordered by workload,
/// then by card order; averages are arithmetic means over the workloads.
pub fn speedup_report(profiles: &[WorkloadProfile], cards: &[DeviceCard], hier: &HierarchyConfig, base: &CpuBaseline) -> Result<EvalReport> {
    for w in WORKLOADS {
        if profiles.iter().filter(|p| p.name == w).count() != 1 {
            return Err(Error::config("profiles", format!("expected exactly one `{w}` profile")));
        }
    }
    if cards.is_empty() {
        return Err(Error::config("cards", "no device cards"));
    }
    let mut rows = Vec::with_capacity(profiles.len() * cards.len());
    for p in profiles {
        let cpu = estimate_cpu(p, base);
        for c in cards {
            let imc = estimate_imc(p, c, hier, base)?;
            rows.push(ReportRow {
                workload: p.name.clone(),
                device: c.label,
                t_cpu_s: cpu.time,
                e_cpu_j: cpu.energy,
                t_imc_s: imc.time,
                e_imc_j: imc.energy,
                speedup: cpu.time / imc.time,
                energy_savings: cpu.energy / imc.energy,
            });
        }
    }
    let averages = cards
        .iter()
        .map(|c| {
            let mine: Vec<&ReportRow> = rows.iter().filter(|r| r.device == c.label).collect();
            let n = mine.len() as f64;
            AverageRow {
                device: c.label,
                speedup: mine.iter().map(|r| r.speedup).sum::<f64>() / n,
                energy_savings: mine.iter().map(|r| r.energy_savings).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(EvalReport { rows, averages })
}

pub fn report_csv(report: &EvalReport) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.workload, r.device, r.t_cpu_s, r.e_cpu_j, r.t_imc_s, r.e_imc_j, r.speedup, r.energy_savings
        ));
    }
    for a in &report.averages {
        out.push_str(&format!("average,{},,,,,{},{}\n", a.device, a.speedup, a.energy_savings));
    }
    out
}

/// Reference bar heights for one workload: (speedup, energy savings) per device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarTargets {
    pub speedup_afmtj: f64,
    pub speedup_mtj: f64,
    pub savings_afmtj: f64,
    pub savings_mtj: f64,
}

pub fn fig4_targets(workload: &str) -> Option<BarTargets> {
    let t = |sa, sm, ea, em| BarTargets { speedup_afmtj: sa, speedup_mtj: sm, savings_afmtj: ea, savings_mtj: em };
    Some(match workload {
        "bnn" => t(55.42, 11.21, 6.54, 0.72),
        "img-grayscale" => t(7.40, 4.85, 22.82, 2.67),
        "img-threshold" => t(12.06, 4.44, 12.13, 1.35),
        "mac" => t(6.87, 3.48, 25.14, 2.85),
        "mat_add" => t(16.50, 8.34, 26.87, 3.05),
        "rmse" => t(6.87, 3.48, 26.01, 2.95),
        "average" => t(17.52, 5.96, 19.92, 2.26),
        _ => return None,
    })
}

/// How write-phase ops split into primitives; fractions are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpMix {
    pub xor: f64,
    pub nand: f64,
    pub write: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub name: String,
    pub level: String,
    pub cpu_cycles: f64,
    pub mix: OpMix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileFit {
    pub profile: WorkloadProfile,
    /// True when the linear model was solved exactly; false when the
    /// least-squares fallback was used.
    pub exact: bool,
}

struct Unknowns {
    writes: f64,
    reads: f64,
    bits: f64,
    resid: f64,
}

fn build_profile(spec: &ProfileSpec, e_cpu: f64, u: &Unknowns) -> WorkloadProfile {
    let m = spec.mix;
    let s = m.xor + m.nand + m.write;
    let mut ops = BTreeMap::new();
    ops.insert("xor".to_owned(), u.writes * m.xor / s);
    ops.insert("nand".to_owned(), u.writes * m.nand / s);
    ops.insert("write".to_owned(), u.writes * m.write / s);
    ops.insert("read".to_owned(), u.reads);
    WorkloadProfile {
        name: spec.name.clone(),
        level: spec.level.clone(),
        cpu_cycles: spec.cpu_cycles,
        cpu_energy: Some(e_cpu),
        bulk_ops: ops,
        bits_per_op: u.bits,
        residual_cpu_cycles: u.resid,
    }
}

/// Fit write ops, read ops, bits per op and residual CPU cycles so that the
/// profile hits all four bars under the AFMTJ and MTJ cards.
///
/// The time equations are linear: their difference fixes the write-phase
/// count. The energy pair then reduces to one equation in the residual cycle
/// count, solved by bisection. When no non-negative solution exists the
/// unknowns are fitted in log space by least squares instead.
pub fn fit_profile(
    spec: &ProfileSpec,
    targets: &BarTargets,
    afmtj: &DeviceCard,
    mtj: &DeviceCard,
    hier: &HierarchyConfig,
    base: &CpuBaseline,
) -> Result<ProfileFit> {
    afmtj.validate()?;
    mtj.validate()?;
    hier.validate()?;
    base.validate()?;
    if afmtj.t_sense != mtj.t_sense {
        return Err(Error::param("t_sense", "cards must share the sense time"));
    }
    if !(mtj.t_write > afmtj.t_write && mtj.e_write > afmtj.e_write) {
        return Err(Error::param("cards", "MTJ card must be slower and costlier to write"));
    }
    if !(spec.cpu_cycles > 0.0) {
        return Err(Error::param("cpu_cycles", "must be > 0"));
    }
    let width = f64::from(hier.level(&spec.level)?.parallel_width);
    let t_cpu = spec.cpu_cycles / base.f_cpu;
    let e_cpu = base.avg_power * t_cpu;
    let (ta, tm) = (t_cpu / targets.speedup_afmtj, t_cpu / targets.speedup_mtj);
    let (ea, em) = (e_cpu / targets.savings_afmtj, e_cpu / targets.savings_mtj);

    let writes = (tm - ta) * width / (mtj.t_write - afmtj.t_write);
    let a = (afmtj.t_sense + hier.t_ctrl) / width;
    let b = 1.0 / base.f_cpu;
    let kt = ta - writes * afmtj.t_write / width;
    let d = e_cpu / spec.cpu_cycles;

    // Given the residual cycles r, time fixes the op count and the energy
    // difference fixes the bits per op; g(r) is the AFMTJ energy mismatch.
    let at = |r: f64| {
        let n = (kt - b * r) / a;
        let bits = (em - ea) / (writes * (mtj.e_write - afmtj.e_write) + n * (mtj.e_sense - afmtj.e_sense));
        let g = bits * (writes * afmtj.e_write + n * afmtj.e_sense) + n * hier.e_ctrl + d * r - ea;
        (n, bits, g)
    };
    let r_hi = ((kt - a * writes) / b).min(spec.cpu_cycles);
    if writes > 0.0 && r_hi >= 0.0 {
        let (_, _, g_lo) = at(0.0);
        let (_, _, g_hi) = at(r_hi);
        if g_lo.signum() != g_hi.signum() || g_lo == 0.0 {
            let (mut lo, mut hi) = (0.0, r_hi);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if at(mid).2.signum() == g_lo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let r = 0.5 * (lo + hi);
            let (n, bits, _) = at(r);
            if bits > 0.0 {
                let u = Unknowns { writes, reads: (n - writes).max(0.0), bits, resid: r };
                return Ok(ProfileFit { profile: build_profile(spec, e_cpu, &u), exact: true });
            }
        }
    }

    // Least-squares fallback over log-parametrized unknowns.
    let scale = [writes.abs().max(1.0), writes.abs().max(1.0), 100.0, spec.cpu_cycles];
    let unpack = |x: &[f64]| Unknowns {
        writes: scale[0] * x[0].exp(),
        reads: scale[1] * x[1].exp(),
        bits: scale[2] * x[2].exp(),
        resid: (scale[3] * x[3].exp()).min(spec.cpu_cycles),
    };
    let cost = |x: &[f64]| {
        let p = build_profile(spec, e_cpu, &unpack(x));
        let (Ok(ia), Ok(im)) = (estimate_imc(&p, afmtj, hier, base), estimate_imc(&p, mtj, hier, base)) else {
            return f64::INFINITY;
        };
        [
            (t_cpu / ia.time / targets.speedup_afmtj).ln(),
            (t_cpu / im.time / targets.speedup_mtj).ln(),
            (e_cpu / ia.energy / targets.savings_afmtj).ln(),
            (e_cpu / im.energy / targets.savings_mtj).ln(),
        ]
        .iter()
        .map(|r| r * r)
        .sum()
    };
    let opts = SimplexOptions { max_evals: 20_000, f_tol: 1e-16, x_tol: 1e-9, initial_step: 0.5 };
    let best = minimize(cost, &[0.0, -3.0, 0.0, -6.0], &opts);
    Ok(ProfileFit { profile: build_profile(spec, e_cpu, &unpack(&best.x)), exact: false })
}
