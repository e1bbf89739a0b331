//! Classical RK4 with step-doubling error control for the six magnetization
//! components.

use serde::{Deserialize, Serialize};

use crate::constants::PS;
use crate::dynamics::{MaterialParams, SublatticeState};
use crate::error::{Error, Result};
use crate::thermal::ThermalSource;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub dt_base: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Bound on the componentwise difference between one full and two half steps.
    pub rel_tol: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    /// Kelvin.
    pub temperature: f64,
    pub rng_seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dt_base: 0.1 * PS,
            dt_min: 0.01 * PS,
            dt_max: 1.0 * PS,
            rel_tol: 1e-7,
            t_end: 5000.0 * PS,
            sample_interval: 0.1 * PS,
            temperature: 0.0,
            rng_seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let pos = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be > 0, got {v}")))
            }
        };
        pos("dt_min", self.dt_min)?;
        pos("rel_tol", self.rel_tol)?;
        pos("t_end", self.t_end)?;
        pos("sample_interval", self.sample_interval)?;
        if !(self.dt_min <= self.dt_base && self.dt_base <= self.dt_max) {
            return Err(Error::param(
                "dt_base",
                format!(
                    "need dt_min <= dt_base <= dt_max, got {:e} <= {:e} <= {:e}",
                    self.dt_min, self.dt_base, self.dt_max
                ),
            ));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::param("temperature", format!("must be >= 0, got {}", self.temperature)));
        }
        Ok(())
    }
}

/// Material and volume feeding the thermal field; temperature and seed come
/// from [`SolverOptions`].
#[derive(Debug, Clone, Copy)]
pub struct ThermalSpec {
    pub material: MaterialParams,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    /// Largest `| |m| - 1 |` observed before renormalizing an accepted step.
    pub max_norm_drift: f64,
    pub min_dt: f64,
    pub max_dt: f64,
    /// Every accepted step size, in order.
    #[serde(skip)]
    pub dts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SublatticeState>,
    /// Per-sample resistance, ohm. Empty until filled by the transient layer.
    pub resistance: Vec<f64>,
    /// Per-sample current, A. Empty until filled by the transient layer.
    pub current: Vec<f64>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn check(&self) -> Result<()> {
        if self.states.len() != self.times.len()
            || (!self.resistance.is_empty() && self.resistance.len() != self.times.len())
            || (!self.current.is_empty() && self.current.len() != self.times.len())
        {
            return Err(Error::Invariant("trajectory arrays differ in length".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invariant("trajectory times are not strictly increasing".into()));
        }
        self.states.iter().try_for_each(|s| s.check())
    }
}

fn finite_or_fail<const N: usize>(y: &[f64; N], t: f64, what: &str) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical {
            t,
            reason: format!("non-finite {what}: {y:?}"),
        })
    }
}

/// One classical RK4 step on a flat state vector.
pub fn rk4_raw<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], dt: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let axpy = |a: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] {
        std::array::from_fn(|i| a[i] + h * k[i])
    };
    let k1 = f(t, y);
    finite_or_fail(&k1, t, "derivative")?;
    let k2 = f(t + 0.5 * dt, &axpy(y, &k1, 0.5 * dt));
    finite_or_fail(&k2, t, "derivative")?;
    let k3 = f(t + 0.5 * dt, &axpy(y, &k2, 0.5 * dt));
    finite_or_fail(&k3, t, "derivative")?;
    let k4 = f(t + dt, &axpy(y, &k3, dt));
    finite_or_fail(&k4, t, "derivative")?;
    let out = std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    finite_or_fail(&out, t, "state")?;
    Ok(out)
}

fn flat_rhs<F>(rhs: &mut F) -> impl FnMut(f64, &[f64; 6]) -> [f64; 6] + '_
where
    F: FnMut(f64, &SublatticeState) -> [Vec3; 2],
{
    move |t, y| {
        let d = rhs(t, &SublatticeState::from_array(*y));
        [d[0].x, d[0].y, d[0].z, d[1].x, d[1].y, d[1].z]
    }
}

fn norm_drift(y: &[f64; 6]) -> f64 {
    let s = SublatticeState::from_array(*y);
    (s.m1.norm() - 1.0).abs().max((s.m2.norm() - 1.0).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk4Step {
    pub state: SublatticeState,
    /// `| |m| - 1 |` before renormalization, worst sublattice.
    pub norm_drift: f64,
}

/// RK4 update of both sublattices followed by renormalization.
pub fn rk4_step<F>(mut rhs: F, t: f64, state: &SublatticeState, dt: f64) -> Result<Rk4Step>
where
    F: FnMut(f64, &SublatticeState) -> [Vec3; 2],
{
    if !(dt > 0.0) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    let y = rk4_raw(&mut flat_rhs(&mut rhs), t, &state.to_array(), dt)?;
    Ok(Rk4Step {
        state: SublatticeState::from_array(y).renormalized(),
        norm_drift: norm_drift(&y),
    })
}

/// Adaptive integration over `[0, t_end]`.
///
/// Each attempt compares one step of size `dt` with two of size `dt/2`.
/// Attempts whose componentwise difference exceeds `rel_tol` are retried at
/// `dt/2`; if that would go below `dt_min` the run fails. Accepted steps keep
/// the two-half-step result, and `dt` doubles (up to `dt_max`) when the
/// difference is below `rel_tol/32`. The last step may overshoot `t_end`. Output
/// samples on the `sample_interval` grid up to `t_end` come from an RK4
/// substep taken from the start of the enclosing step.
///
/// `rhs` receives the time, the state and the thermal field of the current
/// step (held constant within the step).
pub fn integrate_adaptive<F>(
    mut rhs: F,
    initial: &SublatticeState,
    opts: &SolverOptions,
    thermal: &ThermalSpec,
) -> Result<Trajectory>
where
    F: FnMut(f64, &SublatticeState, [Vec3; 2]) -> [Vec3; 2],
{
    opts.validate()?;
    initial.check()?;
    let source = ThermalSource {
        material: thermal.material,
        volume: thermal.volume,
        temperature: opts.temperature,
        seed: opts.rng_seed,
    };

    let n_samples = (opts.t_end / opts.sample_interval + 1e-9).floor() as usize + 1;
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_samples),
        states: Vec::with_capacity(n_samples),
        ..Default::default()
    };
    traj.times.push(0.0);
    traj.states.push(*initial);
    let mut next_sample = 1usize;

    let mut stats = StepStats {
        min_dt: f64::INFINITY,
        ..Default::default()
    };
    let mut t = 0.0;
    let mut dt = opts.dt_base;
    let mut state = *initial;

    while next_sample < n_samples {
        let normals = source.normals(stats.accepted);
        let h_th = match normals {
            None => [Vec3::ZERO; 2],
            Some(n) => {
                let s = source.sigma(dt);
                [n[0] * s, n[1] * s]
            }
        };
        let mut f = |tt: f64, s: &SublatticeState| rhs(tt, s, h_th);
        let mut flat = flat_rhs(&mut f);
        let y0 = state.to_array();
        let full = rk4_raw(&mut flat, t, &y0, dt)?;
        let half = rk4_raw(&mut flat, t, &y0, 0.5 * dt)?;
        let two_half = rk4_raw(&mut flat, t + 0.5 * dt, &half, 0.5 * dt)?;
        let err = full
            .iter()
            .zip(&two_half)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);

        if err > opts.rel_tol {
            if dt <= opts.dt_min {
                return Err(Error::Stiff { t, err, tol: opts.rel_tol });
            }
            stats.rejected += 1;
            dt = (0.5 * dt).max(opts.dt_min);
            continue;
        }

        stats.max_norm_drift = stats.max_norm_drift.max(norm_drift(&two_half));
        let new_state = SublatticeState::from_array(two_half).renormalized();
        let t_new = t + dt;
        while next_sample < n_samples {
            let ts = next_sample as f64 * opts.sample_interval;
            if ts > t_new {
                break;
            }
            let h = ts - t;
            let sample = if h >= dt {
                new_state
            } else {
                SublatticeState::from_array(rk4_raw(&mut flat, t, &y0, h)?).renormalized()
            };
            traj.times.push(ts);
            traj.states.push(sample);
            next_sample += 1;
        }
        stats.accepted += 1;
        stats.min_dt = stats.min_dt.min(dt);
        stats.max_dt = stats.max_dt.max(dt);
        stats.dts.push(dt);
        state = new_state;
        t = t_new;
        if err < opts.rel_tol / 32.0 {
            dt = (2.0 * dt).min(opts.dt_max);
        }
    }
    traj.stats = stats;
    Ok(traj)
}
