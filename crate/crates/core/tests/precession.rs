//! Integrator behavior on analytic single-macrospin problems.

use std::f64::consts::PI;

use afmtj_core::constants::{GAMMA, MU0, PS};
use afmtj_core::dynamics::{ExchangeParams, LlgSystem, MaterialParams, Sublattices, SublatticeState};
use afmtj_core::integrator::{integrate_adaptive, rk4_raw, rk4_step, SolverOptions, ThermalSpec};
use afmtj_core::Vec3;

fn system(alpha: f64, hk: f64) -> LlgSystem {
    LlgSystem {
        material: MaterialParams { ms: 6e5, alpha, p0: 0.8, hk, nz: 0.0, stt_efficiency: 1.0 },
        exchange: ExchangeParams::decoupled(),
        thickness: 1e-9,
        polarizers: [Vec3::Z, Vec3::Z],
        sublattices: Sublattices::Single,
    }
}

fn thermal(sys: &LlgSystem) -> ThermalSpec {
    ThermalSpec { material: sys.material, volume: 45e-9 * 45e-9 * 1e-9 }
}

#[test]
fn larmor_frequency_at_tenth_of_a_picosecond() {
    // mu0 H = 0.1 T: f = gamma * 0.1 / 2 pi, about 2.80 GHz
    let h = [Vec3::Z * (0.1 / MU0), Vec3::ZERO];
    let sys = system(0.0, 0.0);
    let f0 = GAMMA * 0.1 / (2.0 * PI);
    assert!((f0 / 1e9 - 2.80).abs() < 0.01);
    let dt = 0.1 * PS;
    let mut s = SublatticeState { m1: Vec3::X, m2: Vec3::Z };
    let (mut phase, mut last) = (0.0, 0.0_f64);
    let n = 20_000;
    for k in 0..n {
        s = rk4_step(|_, st| sys.rhs_unchecked(st, 0.0, h), k as f64 * dt, &s, dt).unwrap().state;
        let a = s.m1.y.atan2(s.m1.x);
        phase += (a - last + PI).rem_euclid(2.0 * PI) - PI;
        last = a;
    }
    let f = phase / (2.0 * PI * n as f64 * dt);
    assert!((f - f0).abs() / f0 < 1e-3, "f = {f:e}, expected {f0:e}");
}

#[test]
fn fixed_step_error_is_fourth_order() {
    let h = [Vec3::Z * (0.1 / MU0), Vec3::ZERO];
    let sys = system(0.0, 0.0);
    let period = 2.0 * PI / (GAMMA * 0.1);
    let end = |n: usize| {
        let dt = period / n as f64;
        let mut f = |_: f64, y: &[f64; 6]| {
            let d = sys.rhs_unchecked(&SublatticeState::from_array(*y), 0.0, h);
            [d[0].x, d[0].y, d[0].z, d[1].x, d[1].y, d[1].z]
        };
        let mut y = SublatticeState { m1: Vec3::X, m2: Vec3::Z }.to_array();
        for k in 0..n {
            y = rk4_raw(&mut f, k as f64 * dt, &y, dt).unwrap();
        }
        // exact solution after one period is the starting point
        ((y[0] - 1.0).powi(2) + y[1].powi(2) + y[2].powi(2)).sqrt()
    };
    let ratio = end(40) / end(80);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn undamped_precession_conserves_field_projection() {
    let h = [Vec3::Z * 2e5, Vec3::ZERO];
    let sys = system(0.0, 0.0);
    let m0 = Vec3::new(0.6, 0.0, 0.8);
    let opts = SolverOptions { t_end: 10_000.0 * PS, sample_interval: 10.0 * PS, ..SolverOptions::default() };
    let traj = integrate_adaptive(
        |_, s, _| sys.rhs_unchecked(s, 0.0, h),
        &SublatticeState { m1: m0, m2: Vec3::Z },
        &opts,
        &thermal(&sys),
    )
    .unwrap();
    let worst = traj.states.iter().map(|s| (s.m1.z - 0.8).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "m.H drift {worst:e}");
}

#[test]
fn damping_relaxes_towards_easy_axis() {
    let sys = system(0.01, 8e5);
    let opts = SolverOptions { t_end: 2000.0 * PS, sample_interval: 1.0 * PS, ..SolverOptions::default() };
    let m0 = Vec3::new((0.5f64).sin(), 0.0, (0.5f64).cos());
    let mut orth = 0.0_f64;
    let traj = integrate_adaptive(
        |_, s, th| {
            let d = sys.rhs_unchecked(s, 0.0, th);
            orth = orth.max(s.m1.dot(d[0]).abs() / d[0].norm().max(f64::MIN_POSITIVE));
            d
        },
        &SublatticeState { m1: m0, m2: Vec3::Z },
        &opts,
        &thermal(&sys),
    )
    .unwrap();
    assert!(traj.states.windows(2).all(|w| w[1].m1.z >= w[0].m1.z - 1e-12));
    assert!(traj.states.last().unwrap().m1.z > m0.z);
    assert!(orth < 1e-6);
}

#[test]
fn zero_temperature_ignores_the_seed() {
    let sys = system(0.01, 8e5);
    let m0 = SublatticeState { m1: Vec3::new(0.6, 0.0, 0.8), m2: Vec3::Z };
    let run = |seed| {
        let opts = SolverOptions { t_end: 200.0 * PS, rng_seed: seed, ..SolverOptions::default() };
        integrate_adaptive(|_, s, th| sys.rhs_unchecked(s, 0.0, th), &m0, &opts, &thermal(&sys)).unwrap()
    };
    assert_eq!(run(1).states, run(2).states);
}

#[test]
fn thermal_runs_repeat_bitwise_for_a_seed() {
    let sys = system(0.01, 8e5);
    let m0 = SublatticeState { m1: Vec3::new(0.6, 0.0, 0.8), m2: Vec3::Z };
    let run = |seed| {
        let opts = SolverOptions { t_end: 200.0 * PS, temperature: 300.0, rng_seed: seed, rel_tol: 1e-5, ..SolverOptions::default() };
        integrate_adaptive(|_, s, th| sys.rhs_unchecked(s, 0.0, th), &m0, &opts, &thermal(&sys)).unwrap()
    };
    let a = run(5);
    assert_eq!(a.states, run(5).states);
    assert_ne!(a.states, run(6).states);
}
