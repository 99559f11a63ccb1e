use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_shieldsim")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("shieldsim-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, experiment: &str, config: &str, extra: &[&str]) -> Output {
    let path = dir.join("config.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(bin())
        .arg(experiment)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir)
        .args(extra)
        .output()
        .unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

const LEAKAGE: &str = r#"
output = "leak"

[model]
L = 8
Jz = 0.0

[initial_state]
random_band = 1

[grid]
t_max = 6.0
n_steps = 24

[ensemble]
n_realizations = 4
seed = 11

[scan]
variable = "W"
values = [0.5, 1.0]
"#;

#[test]
fn leakage_scan_writes_csv_fit_and_manifest() {
    let dir = scratch("leak");
    let out = run(&dir, "leakage_scan", LEAKAGE, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(&dir.join("leak.csv")), "W,P_leak,stderr,estimate,estimate_fitted,plateau_ok");
    assert_eq!(header(&dir.join("leak.curves.csv")), "W,t,P_b,stderr");
    let fit: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("leak.fit.json")).unwrap()).unwrap();
    assert!(fit["prefactor"]["prefactor"].as_f64().unwrap() > 0.0);
    assert!(fit["fits"][0]["fit"]["slope"].is_number());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("leak.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["realizations"].as_array().unwrap().len(), 4);
    assert!(manifest["rng_algorithm"].as_str().unwrap().contains("ChaCha20"));
    assert_eq!(manifest["config"]["scan"]["values"][1], 1.0);
}

#[test]
fn output_is_byte_identical_across_thread_counts() {
    let a = scratch("repro-a");
    let b = scratch("repro-b");
    assert!(run(&a, "leakage_scan", LEAKAGE, &["--threads", "1"]).status.success());
    assert!(run(&b, "leakage_scan", LEAKAGE, &["--threads", "3"]).status.success());
    for file in ["leak.csv", "leak.curves.csv", "leak.fit.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn propagator_override_changes_nothing_measurable() {
    let cfg = "[model]\nL = 7\nB = 0.5\nJz = 1.0\n[initial_state]\nx_product = \"center_down\"\n[grid]\nt_max = 2.0\nn_steps = 4\n";
    let a = scratch("prop-dense");
    let b = scratch("prop-cheby");
    assert!(run(&a, "lightcone", cfg, &["--propagator", "dense"]).status.success());
    assert!(run(&b, "lightcone", cfg, &["--propagator", "cheby"]).status.success());
    let read = |d: &Path| {
        std::fs::read_to_string(d.join("lightcone.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
            .collect::<Vec<_>>()
    };
    let (x, y) = (read(&a), read(&b));
    assert_eq!(x.len(), 35);
    assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-8));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("lightcone.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["points"][0]["methods"][0], "dense");
}

#[test]
fn schemas_of_the_other_experiments() {
    let dir = scratch("schemas");
    let band = "output = \"bd\"\n[model]\nW = 1.0\n[initial_state]\nrandom_band = 1\n[grid]\nt_max = 2.0\nn_steps = 4\n[ensemble]\nn_realizations = 2\n[scan]\nvariable = \"L\"\nvalues = [6, 8]\n";
    assert!(run(&dir, "band_dynamics", band, &[]).status.success());
    assert_eq!(header(&dir.join("bd.csv")), "L,t,P_b,stderr");

    let fid = "output = \"fid\"\n[model]\nL = 8\nW = 2.0\n[initial_state]\nrandom_band = 1\n[grid]\nt_max = 20.0\nn_steps = 40\n[ensemble]\nn_realizations = 2\n";
    let out = run(&dir, "fidelity_scan", fid, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(&dir.join("fid.csv")), "t,F,stderr");
    assert_eq!(
        header(&dir.join("fid.thalf.csv")),
        "b,T_half,stderr,n_crossed,delta_e,c1_over_delta_e,gauss_tau,gauss_r2"
    );

    let rev = "output = \"rev\"\n[model]\nB = 0.5\n[initial_state]\nx_product = \"center_down\"\n[grid]\nt_max = 100.0\nn_steps = 50\nspacing = \"log\"\nt_min = 0.1\n[scan]\nvariable = \"L\"\nvalues = [3, 5]\n";
    assert!(run(&dir, "reversal_scan", rev, &[]).status.success());
    assert_eq!(header(&dir.join("rev.csv")), "L,alpha,tau_rev,lower_bound,background_crossing,step_gap");
    assert_eq!(header(&dir.join("rev.series.csv")), "L,alpha,t,central,background");

    assert!(run(&dir, "spectrum", "[model]\nL = 6\n", &[]).status.success());
    let spectrum = std::fs::read_to_string(dir.join("spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().next().unwrap(), "b,E_b,dimension,v_min,v_max");
    assert_eq!(spectrum.lines().nth(1).unwrap(), "0,15,2,15,15");

    let out = run(&dir, "estimate", "[model]\nL = 10\nW = 2.0\nJz = 1.0\n", &[]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["pleak_field"].as_f64().unwrap() - 0.016335).abs() < 1e-6, "{v}");
    assert!((v["pleak_nn"].as_f64().unwrap() - 0.0060764).abs() < 1e-7, "{v}");
}

#[test]
fn config_errors_exit_with_2_and_name_the_line() {
    let dir = scratch("errors");
    let out = run(&dir, "leakage_scan", &LEAKAGE.replace("Jz = 0.0", "Jz = 0.0\nJx = 2.0"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 7") && err.contains("Jx"), "{err}");

    let out = run(&dir, "leakage_scan", &LEAKAGE.replace("Jz = 0.0", "W = 1.0"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 6"));

    let out = run(&dir, "leakage_scan", &LEAKAGE.replace("n_steps = 24", "n_steps = 1"), &[]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&dir, "lightcone", LEAKAGE, &[]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&dir, "leakage_scan", LEAKAGE, &["--propagator", "magic"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = scratch("numerical");
    let cfg = "[model]\nL = 6\nW = 0.1\n[initial_state]\nrandom_band = 1\n[grid]\nt_max = 0.5\nn_steps = 2\n[ensemble]\nn_realizations = 1\n";
    let out = run(&dir, "fidelity_scan", cfg, &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no crossing"));
}

#[test]
fn reversal_beyond_the_horizon_is_flagged_not_dropped() {
    let dir = scratch("horizon");
    let rev = "[model]\nL = 5\nB = 0.5\n[initial_state]\nx_product = \"center_down\"\n[grid]\nt_max = 1.0\nn_steps = 4\n";
    let out = run(&dir, "reversal_scan", rev, &[]);
    assert!(out.status.success());
    let table = std::fs::read_to_string(dir.join("reversal_scan.csv")).unwrap();
    assert_eq!(table.lines().nth(1).unwrap(), "5,0,1,true,,");
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = shieldsim::experiments::ExperimentConfig::from_path(&path);
        assert!(cfg.is_ok(), "{}: {:?}", path.display(), cfg.err());
        n += 1;
    }
    assert!(n >= 4);
}
