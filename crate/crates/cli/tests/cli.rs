use std::path::Path;
use std::process::{Command, Output};

fn invbo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invbo")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn bench_info_reports_group_order() {
    let o = invbo(&["bench-info", "Rastrigin5d"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("group order: 3840"), "{s}");
    assert!(s.contains("known optimum: 0"));

    let s = stdout(&invbo(&["bench-info", "WLAN8d"]));
    assert!(s.contains("group order: 24"), "{s}");
    assert!(s.contains("known optimum: none"));
}

#[test]
fn bad_input_exits_with_code_2() {
    assert_eq!(invbo(&["bench-info", "Nope3d"]).status.code(), Some(2));
    assert_eq!(invbo(&["run-bo", "--config", "/nonexistent/exp.toml"]).status.code(), Some(2));
    assert_eq!(invbo(&["frobnicate"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "benchmark = \"Ackley2d\"\n");
    assert_eq!(invbo(&["run-bo", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn psd_check_on_a_psd_group_is_identity() {
    let o = invbo(&["psd-check", "--n", "20", "--seed", "0", "--group", "hyperoctahedral"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("projection is identity"), "{s}");
    assert!(s.contains("oracle: PASS"));
}

#[test]
fn psd_check_on_block_permutations_clips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let o = invbo(&["psd-check", "--n", "30", "--seed", "3", "--out", &out]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("oracle: PASS"));
    let csv = std::fs::read_to_string(dir.path().join("psd_check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 31);
}

#[test]
fn smoke_run_writes_identical_traces_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let body = "benchmarks = [\"Ackley2d\"]\nmodes = [\"plus\"]\nseeds = [0]\nn_iters = 0\nrecord_wall_time = false\n";
    let cfg = write_config(dir.path(), body);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = invbo(&["run-bo", "--config", &cfg, "--out", &out.to_string_lossy()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(out.join("traces").join("Ackley2d_plus_matern52_seed0.csv")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    // Header plus the five initial-design rows.
    assert_eq!(a.lines().count(), 6);
}

#[test]
fn aggregate_has_one_entry_per_benchmark_and_mode() {
    let dir = tempfile::tempdir().unwrap();
    let body = "benchmarks = [\"Rastrigin2d\"]\nmodes = [\"base\", \"avg\", \"plus\"]\nseeds = [0, 1]\nn_iters = 2\n";
    let cfg = write_config(dir.path(), body);
    let out = dir.path().join("res");
    let o = invbo(&["run-bo", "--config", &cfg, "--out", &out.to_string_lossy(), "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("aggregate.json")).unwrap()).unwrap();
    let cells = json["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 3);
    assert!(json["failures"].as_array().unwrap().is_empty());
    assert_eq!(std::fs::read_dir(out.join("traces")).unwrap().count(), 6);
}

#[test]
fn wlan_runs_write_placements() {
    let dir = tempfile::tempdir().unwrap();
    let body = "benchmarks = [\"WLAN4d\"]\nmodes = [\"base\"]\nseeds = [0]\nn_iters = 1\n";
    let cfg = write_config(dir.path(), body);
    let out = dir.path().join("res");
    let o = invbo(&["run-bo", "--config", &cfg, "--out", &out.to_string_lossy()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_dir(out.join("placements")).unwrap().count(), 1);
}

#[test]
fn spectra_writes_reports_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec");
    let body = format!("n = 120\nmodes = [\"base\", \"plus\"]\noutput_dir = {:?}\n", out.to_string_lossy());
    let cfg = write_config(dir.path(), &body);
    let o = invbo(&["spectra", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("combined.csv").exists());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(json.to_string().contains("slope"));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let ok = if name.starts_with("spectra") {
                invbo_cli::config::SpectraConfig::load(&path).is_ok()
            } else {
                invbo_cli::config::ExperimentConfig::load(&path).is_ok()
            };
            assert!(ok, "{name}");
            n += 1;
        }
    }
    assert!(n >= 8);
}
