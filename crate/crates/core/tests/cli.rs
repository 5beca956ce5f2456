//! End-to-end runs of the `biphoton` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn biphoton(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biphoton"))
        .args(args)
        .env_remove("BIPHOTON_OUT")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn pm_angle_prints_the_cut() {
    let o = biphoton(&["pm-angle", "--pump-nm", "405"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let theta: f64 = text.lines().next().unwrap().trim_start_matches("theta_deg = ").parse().unwrap();
    assert!(theta > 40.0 && theta < 43.0, "{text}");
    assert!(text.contains("delta_k_rad_per_um"));
}

#[test]
fn coeffs_prints_dispersion_data() {
    let o = biphoton(&["coeffs"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for key in ["rho_p_rad", "rho_s_rad", "d_s_fs_per_um", "d_i_fs_per_um"] {
        assert!(text.contains(key), "{text}");
    }
}

#[test]
fn default_report_shows_heralding_asymmetry() {
    let o = biphoton(&["report"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let get = |name: &str| -> f64 { row[header.iter().position(|h| h == name).unwrap()].parse().unwrap() };
    assert!(get("eta_s") > get("eta_i"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn json_report_is_enveloped() {
    let o = biphoton(&["report", "--format", "json"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.trim_start().starts_with("{\n  \"schema\": \"biphoton-report/1\""), "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["kind"], "report");
    assert_eq!(v["config"]["pump"]["wavelength_um"], 0.405);
    assert_eq!(v["observables"].as_object().unwrap().len(), 8);
}

#[test]
fn schema_and_unit_errors_exit_1_with_a_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "unknown.json", r#"{"pump":{"waste_um":10}}"#);
    let o = biphoton(&["report", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/pump"), "{}", stderr(&o));

    let negative = write(dir.path(), "negative.json", r#"{"pump":{"waist_um":-1}}"#);
    let o = biphoton(&["report", "--config", &negative]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/pump/waist_um"), "{}", stderr(&o));

    assert_eq!(biphoton(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn unnormalizable_config_exits_2_naming_the_direction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "open.json", r#"{"filters":{"signal_mode_um":0}}"#);
    let o = biphoton(&["report", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("q_s^y"), "{}", stderr(&o));
}

#[test]
fn slice_csv_lands_under_the_output_override() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_biphoton"))
        .args(["slice", "--domain", "spectral", "--mask", "none", "--points", "101", "--out", "nested/slice.csv"])
        .env("BIPHOTON_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("nested/slice.csv")).unwrap();
    assert_eq!(text.lines().count(), 102);
    assert!(!text.contains('\r'));
    assert!(text.lines().all(|l| l.split(',').count() == 102));
}

#[test]
fn sweeps_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"axes":[{"paths":["/filters/signal_mode_um"],"start":0,"stop":30,"count":7},
                    {"paths":["/filters/idler_bandwidth_nm"],"start":0.1,"stop":10,"count":5,"scale":"log"}]}"#,
    );
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = biphoton(&["sweep", "--spec", &spec, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 36);
    // w_s = 0 rows are recorded, not fatal.
    assert_eq!(text.lines().filter(|l| l.ends_with("Unnormalizable") || l.ends_with("NotTraceClass")).count(), 5);
}

#[test]
fn shipped_figure_specs_run() {
    let figs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../figs");
    let dir = tempfile::tempdir().unwrap();
    let started = std::time::Instant::now();
    for n in [3, 4, 5, 6, 8, 10, 11] {
        let spec = figs.join(format!("fig{n}.json"));
        let out = dir.path().join(format!("fig{n}.csv"));
        let o = biphoton(&["sweep", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "fig{n}: {}", stderr(&o));
    }
    assert!(started.elapsed().as_secs() < 60);
}

#[test]
fn validate_passes_on_a_pristine_checkout() {
    let o = biphoton(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}
