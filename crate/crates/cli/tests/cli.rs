use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(p: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(p).canonicalize().unwrap()
}

fn lab(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afmtj-lab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sweep_writes_plot_tables_and_cards() {
    let out = tempfile::tempdir().unwrap();
    let o = lab(&["sweep"], &data("config/sweep.json"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["sweep.csv", "fig3_latency.csv", "fig3_energy.csv", "cards.json", "run-manifest.json"] {
        assert!(out.path().join(f).exists(), "{f} missing");
    }
    let lat = fs::read_to_string(out.path().join("fig3_latency.csv")).unwrap();
    assert_eq!(lat.lines().next(), Some("voltage_V,AFMTJ_latency_ps,MTJ_latency_ps"));
    assert_eq!(lat.lines().count(), 9);
    // the shipped cards are this sweep's output
    assert_eq!(fs::read_to_string(out.path().join("cards.json")).unwrap(), fs::read_to_string(data("cards.json")).unwrap());
}

#[test]
fn json_format_switches_the_main_table() {
    let out = tempfile::tempdir().unwrap();
    let o = lab(&["imc", "--format", "json"], &data("config/imc.json"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.path().join("fig4_report.json").exists());
    assert!(!out.path().join("fig4_report.csv").exists());
}

#[test]
fn imc_writes_report_and_manifest() {
    let out = tempfile::tempdir().unwrap();
    let o = lab(&["imc", "--seed", "11"], &data("config/imc.json"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.path().join("fig4_report.csv")).unwrap();
    assert!(csv.starts_with("workload,device,t_cpu_s,e_cpu_J,t_imc_s,e_imc_J,speedup,energy_savings\n"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.path().join("run-manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 11);
    assert_eq!(m["subcommand"], "imc");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 7);
}

#[test]
fn unknown_config_key_exits_1_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "logic.json", r#"{"r_p_ohm": 2900, "foo": 1}"#);
    let o = lab(&["logic"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("foo"), "{}", stderr(&o));
}

#[test]
fn out_of_range_tmr_exits_1_citing_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let dev = fs::read_to_string(data("devices/afmtj.json")).unwrap().replace("\"tmr\": 0.8", "\"tmr\": 6.0");
    write(dir.path(), "dev.json", &dev);
    let cfg = write(dir.path(), "ws.json", r#"{"device": "dev.json", "voltage_V": 1.0}"#);
    let o = lab(&["write-sim"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("tmr") && e.contains("500 %"), "{e}");
}

#[test]
fn step_floor_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let dev = data("devices/afmtj.json");
    let cfg = format!(
        r#"{{"device": {dev:?}, "voltage_V": 1.0, "pulse_width_ps": 100,
            "solver": {{"dt_base_ps": 1.0, "dt_min_ps": 1.0, "dt_max_ps": 1.0, "rel_tol": 1e-15}}}}"#
    );
    let cfg = write(dir.path(), "ws.json", &cfg);
    let o = lab(&["write-sim"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unconverged_calibration_exits_3_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let dev = data("devices/mtj_start.json");
    let cfg = format!(r#"{{"device": {dev:?}, "targets": "three_point", "tolerance": 1e-6, "max_evals": 5}}"#);
    let cfg = write(dir.path(), "cal.json", &cfg);
    let out = dir.path().join("out");
    let o = lab(&["calibrate"], &cfg, &out);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(out.join("calibration_report.json").exists());
    assert!(out.join("calibrated_device.json").exists());
}

#[test]
fn jobs_fall_back_to_environment() {
    let out = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_afmtj-lab"))
        .args(["logic", "--config"])
        .arg(data("config/logic.json"))
        .arg("--out")
        .arg(out.path())
        .env("AFMTJ_LAB_JOBS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.path().join("run-manifest.json")).unwrap()).unwrap();
    assert_eq!(m["jobs"], 1);
}

#[test]
fn write_sim_emits_trajectory() {
    let out = tempfile::tempdir().unwrap();
    let o = lab(&["write-sim"], &data("config/write_sim.json"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let traj = fs::read_to_string(out.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t_ps,m1x,m1y,m1z,m2x,m2y,m2z,lz,R_ohm,I_uA\n"));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.path().join("write_result.json")).unwrap()).unwrap();
    assert_eq!(r["switched"], true);
}
