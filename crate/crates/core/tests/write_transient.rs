//! Write transients on the shipped calibrated devices.

use std::path::PathBuf;

use afmtj_core::config::load_device;
use afmtj_core::constants::{FJ, PS};
use afmtj_core::device::{DeviceKind, DeviceParams, SwitchCriterion, WRITE_TILT};
use afmtj_core::integrator::{integrate_adaptive, SolverOptions, ThermalSpec};
use afmtj_core::sweep::{voltage_sweep, SweepConfig};
use afmtj_core::transient::{run_write, write_energy, PulseSpec};

fn device(name: &str) -> DeviceParams {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/devices").join(name);
    load_device(&p).unwrap()
}

fn write(d: &DeviceParams, v: f64) -> (f64, f64) {
    let r = run_write(d, &PulseSpec::new(v), &SolverOptions::default(), &SwitchCriterion::default()).unwrap();
    (r.latency.unwrap() / PS, r.energy.unwrap() / FJ)
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    ((x - target) / target).abs() <= tol
}

#[test]
fn afmtj_nominal_write() {
    let (lat, e) = write(&device("afmtj.json"), 1.0);
    assert!(within(lat, 163.6, 0.10), "latency {lat} ps");
    assert!(within(e, 55.65, 0.15), "energy {e} fJ");
}

#[test]
fn mtj_low_voltage_write() {
    let (lat, _) = write(&device("mtj.json"), 0.5);
    assert!(within(lat, 4037.0, 0.15), "latency {lat} ps");
}

#[test]
fn latency_falls_with_voltage_for_both_devices() {
    let table = voltage_sweep(&SweepConfig::new(vec![device("afmtj.json"), device("mtj.json")])).unwrap();
    for kind in [DeviceKind::Afmtj, DeviceKind::Mtj] {
        let lat: Vec<f64> = table.for_device(kind).map(|r| r.latency_ps.unwrap()).collect();
        assert_eq!(lat.len(), 8);
        assert!(lat.windows(2).all(|w| w[1] < w[0]), "{kind:?}: {lat:?}");
    }
}

#[test]
fn sweep_ignores_device_order() {
    let (a, m) = (device("afmtj.json"), device("mtj.json"));
    let cfg = |devices| SweepConfig { voltages: vec![0.9, 1.2], ..SweepConfig::new(devices) };
    assert_eq!(voltage_sweep(&cfg(vec![a, m])).unwrap(), voltage_sweep(&cfg(vec![m, a])).unwrap());
}

#[test]
fn reported_energy_is_the_trapezoid_up_to_latency() {
    let d = device("afmtj.json");
    let pulse = PulseSpec::new(0.8);
    let r = run_write(&d, &pulse, &SolverOptions::default(), &SwitchCriterion::default()).unwrap();
    let lat = r.latency.unwrap();
    assert_eq!(r.energy.unwrap(), write_energy(&r.trajectory, &pulse, lat).unwrap());
}

#[test]
fn reversed_polarity_on_flipped_reference_mirrors() {
    for d in [device("afmtj.json"), device("mtj.json")] {
        let flipped = DeviceParams { reference: -d.reference, ..d };
        let crit = SwitchCriterion::default();
        let opts = SolverOptions::default();
        let a = run_write(&d, &PulseSpec::new(1.0), &opts, &crit).unwrap();
        let b = run_write(&flipped, &PulseSpec { polarity: -1, ..PulseSpec::new(1.0) }, &opts, &crit).unwrap();
        assert_eq!(a.latency, b.latency);
        assert_eq!(a.energy, b.energy);
    }
}

#[test]
fn zero_tmr_matches_constant_current() {
    let mut d = device("mtj.json");
    d.resistance.tmr = 0.0;
    let pulse = PulseSpec { width: 2000.0 * PS, ..PulseSpec::new(1.0) };
    let opts = SolverOptions::default();
    let coupled = run_write(&d, &pulse, &opts, &SwitchCriterion::default()).unwrap();

    let j = 1.0 / (d.resistance.r_p * d.geometry.area());
    let sys = d.system();
    let fixed = integrate_adaptive(
        |_, s, th| sys.rhs_unchecked(s, j, th),
        &d.write_initial_state(WRITE_TILT),
        &SolverOptions { t_end: pulse.width, ..opts },
        &ThermalSpec { material: d.material, volume: d.geometry.volume() },
    )
    .unwrap();
    assert_eq!(coupled.trajectory.len(), fixed.len());
    let worst = coupled
        .trajectory
        .states
        .iter()
        .zip(&fixed.states)
        .map(|(a, b)| (a.m1 - b.m1).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "worst deviation {worst:e}");
}

#[test]
fn thermal_writes_depend_only_on_the_seed() {
    let d = DeviceParams { temperature: 300.0, ..device("afmtj.json") };
    let pulse = PulseSpec { width: 300.0 * PS, ..PulseSpec::new(1.0) };
    let run = |seed| {
        let opts = SolverOptions { rng_seed: seed, ..SolverOptions::default() };
        run_write(&d, &pulse, &opts, &SwitchCriterion::default()).unwrap().trajectory
    };
    let a = run(11);
    assert_eq!(a.states, run(11).states);
    assert_ne!(a.states, run(12).states);
}
