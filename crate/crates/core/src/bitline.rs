//! Two-row bitline logic: summed cell conductance compared against
//! sense-amplifier references.

use serde::{Deserialize, Serialize};

use crate::device::ResistanceModel;
use crate::error::{Error, Result};

/// Smallest accepted sense margin, as a fraction of the all-parallel conductance.
pub const MIN_RELATIVE_MARGIN: f64 = 0.01;

/// Default behavioral sense time, s.
pub const DEFAULT_T_SENSE: f64 = 200e-12;

/// Stored cell state. `bit = 1` is the parallel (low resistance) state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Antiparallel,
    Parallel,
}

impl CellState {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            CellState::Parallel
        } else {
            CellState::Antiparallel
        }
    }

    pub fn bit(self) -> bool {
        self == CellState::Parallel
    }

    pub fn conductance(self, r: &ResistanceModel) -> f64 {
        match self {
            CellState::Parallel => 1.0 / r.r_p,
            CellState::Antiparallel => 1.0 / r.r_ap(),
        }
    }
}

/// Parallel conductance sum of the activated cells, S.
pub fn bitline_conductance(cells: &[CellState], r: &ResistanceModel) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::Input("no activated cells on the bitline".into()));
    }
    r.validate()?;
    Ok(cells.iter().map(|c| c.conductance(r)).sum())
}

/// Conductance with `ones` parallel cells out of `rows`.
pub fn level(rows: usize, ones: usize, r: &ResistanceModel) -> f64 {
    ones as f64 / r.r_p + (rows - ones) as f64 / r.r_ap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SenseMode {
    And,
    Nand,
    Xor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogicOp {
    Nand,
    Xor,
}

impl LogicOp {
    pub fn mode(self) -> SenseMode {
        match self {
            LogicOp::Nand => SenseMode::Nand,
            LogicOp::Xor => SenseMode::Xor,
        }
    }

    pub fn reference(self, a: bool, b: bool) -> bool {
        match self {
            LogicOp::Nand => !(a && b),
            LogicOp::Xor => a ^ b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenseConfig {
    /// V.
    pub v_read: f64,
    /// S.
    pub ref_and: f64,
    pub ref_xor_lo: f64,
    pub ref_xor_hi: f64,
}

impl SenseConfig {
    /// References at the midpoints between adjacent two-row conductance levels.
    pub fn auto(r: &ResistanceModel, v_read: f64) -> Result<Self> {
        r.validate()?;
        let g: Vec<f64> = (0..=2).map(|k| level(2, k, r)).collect();
        let cfg = Self {
            v_read,
            ref_and: 0.5 * (g[1] + g[2]),
            ref_xor_lo: 0.5 * (g[0] + g[1]),
            ref_xor_hi: 0.5 * (g[1] + g[2]),
        };
        cfg.validate(r)?;
        Ok(cfg)
    }

    /// Checks the references against the two-row levels of `r`, including the
    /// minimum margin.
    pub fn validate(&self, r: &ResistanceModel) -> Result<()> {
        r.validate()?;
        if !(self.v_read >= 0.0 && self.v_read.is_finite()) {
            return Err(Error::param("v_read", "must be >= 0"));
        }
        if !(self.ref_and > 0.0 && self.ref_xor_lo > 0.0 && self.ref_xor_hi > 0.0) {
            return Err(Error::param("references", "all references must be > 0"));
        }
        if self.ref_xor_lo >= self.ref_xor_hi {
            return Err(Error::param("references", "ref_xor_lo must be below ref_xor_hi"));
        }
        let (g0, g1, g2) = (level(2, 0, r), level(2, 1, r), level(2, 2, r));
        let floor = MIN_RELATIVE_MARGIN * g2;
        let gaps = [
            ("ref_and", self.ref_and - g1, g2 - self.ref_and),
            ("ref_xor_lo", self.ref_xor_lo - g0, g1 - self.ref_xor_lo),
            ("ref_xor_hi", self.ref_xor_hi - g1, g2 - self.ref_xor_hi),
        ];
        for (name, below, above) in gaps {
            if below.min(above) < floor {
                return Err(Error::param(
                    "references",
                    format!(
                        "{name} leaves a sense margin of {:.3e} S, below the floor {floor:.3e} S",
                        below.min(above)
                    ),
                ));
            }
        }
        Ok(())
    }
}

pub fn sense(g_total: f64, cfg: &SenseConfig, mode: SenseMode) -> bool {
    match mode {
        SenseMode::And => g_total > cfg.ref_and,
        SenseMode::Nand => g_total <= cfg.ref_and,
        SenseMode::Xor => cfg.ref_xor_lo < g_total && g_total < cfg.ref_xor_hi,
    }
}

/// Distance from `g_total` to the nearest reference the mode compares against.
pub fn sense_margin(g_total: f64, cfg: &SenseConfig, mode: SenseMode) -> f64 {
    match mode {
        SenseMode::And | SenseMode::Nand => (g_total - cfg.ref_and).abs(),
        SenseMode::Xor => (g_total - cfg.ref_xor_lo).abs().min((g_total - cfg.ref_xor_hi).abs()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogicOutcome {
    pub op: LogicOp,
    pub a: bool,
    pub b: bool,
    pub out: bool,
    /// S.
    pub conductance: f64,
    /// A.
    pub current: f64,
    /// S.
    pub margin: f64,
}

pub fn execute_logic(op: LogicOp, bits: (bool, bool), r: &ResistanceModel, cfg: &SenseConfig) -> Result<LogicOutcome> {
    cfg.validate(r)?;
    let cells = [CellState::from_bit(bits.0), CellState::from_bit(bits.1)];
    let g = bitline_conductance(&cells, r)?;
    Ok(LogicOutcome {
        op,
        a: bits.0,
        b: bits.1,
        out: sense(g, cfg, op.mode()),
        conductance: g,
        current: g * cfg.v_read,
        margin: sense_margin(g, cfg, op.mode()),
    })
}

/// Inputs in the order (0,0), (0,1), (1,0), (1,1).
pub fn truth_table(op: LogicOp, r: &ResistanceModel, cfg: &SenseConfig) -> Result<[LogicOutcome; 4]> {
    let pairs = [(false, false), (false, true), (true, false), (true, true)];
    let mut out = Vec::with_capacity(4);
    for p in pairs {
        out.push(execute_logic(op, p, r, cfg)?);
    }
    Ok(out.try_into().expect("four rows"))
}
