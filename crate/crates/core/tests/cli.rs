use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dwbec::cli::output::data_section;

fn dwbec(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwbec"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const WEAK: &str = r#"
[[experiment]]
name = "weak"
regime = "weak"
t_final = 0.2
n_samples = 41
observables = ["n_a", "n_c", "n_d", "W", "E_N"]

[experiment.initial]
occupations = [0, 1, 0]

[experiment.model]
n_atoms = 1000
kappa = 40.0
"#;

#[test]
fn odd_atom_number_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "odd.toml", &WEAK.replace("1000", "1001"));
    let o = dwbec(dir.path(), &["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("N must be even") && err.contains("weak"), "{err}");
}

#[test]
fn steady_state_without_decay_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = WEAK.replace("kappa = 40.0", "kappa = 0.0") + "\n[experiment.steady_state]\nt_max = 2.0\n";
    let cfg = write_config(dir.path(), "k0.toml", &body);
    let o = dwbec(dir.path(), &["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("kappa"), "{}", stderr(&o));
}

#[test]
fn usage_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = dwbec(dir.path(), &["simulate", "fig9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fig9"));

    let missing = dir.path().join("nope.toml");
    let o = dwbec(dir.path(), &["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "typo.toml", &WEAK.replace("kappa =", "kapa ="));
    let o = dwbec(dir.path(), &["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kapa"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "obs.toml", &WEAK.replace("\"W\"", "\"n_b\""));
    let o = dwbec(dir.path(), &["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_b"), "{}", stderr(&o));

    let o = dwbec(dir.path(), &["sweep", "--config", &cfg, "--axis", "banana=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runs_are_deterministic_and_manifests_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "weak.toml", WEAK);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(dwbec(&a, &["run", "--config", &cfg]).status.code(), Some(0));
    assert_eq!(dwbec(&b, &["--workers", "1", "run", "--config", &cfg]).status.code(), Some(0));
    let first = fs::read_to_string(a.join("weak.csv")).unwrap();
    assert_eq!(first, fs::read_to_string(b.join("weak.csv")).unwrap());

    let manifest = a.join("weak.manifest.toml");
    let c = dir.path().join("c");
    let o = dwbec(&c, &["run", "--config", manifest.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(first, fs::read_to_string(c.join("weak.csv")).unwrap());

    let header = data_section(&first).lines().next().unwrap().to_string();
    assert_eq!(header, "gt,n_a,n_c,n_d,W,E_N");
    assert_eq!(data_section(&first).lines().count(), 42);
}

#[test]
fn config_reproduces_preset_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let preset_dir = dir.path().join("preset");
    assert_eq!(dwbec(&preset_dir, &["simulate", "fig2"]).status.code(), Some(0));
    let body = r#"
[[experiment]]
name = "fig2_N10000"
regime = "strong"
t_final = 1.0
observables = ["n_a", "n_b"]

[experiment.initial]
occupations = [0, 1]

[experiment.model]
n_atoms = 10000
kappa = 100.0
"#;
    let cfg = write_config(dir.path(), "fig2.toml", body);
    let run_dir = dir.path().join("run");
    assert_eq!(dwbec(&run_dir, &["run", "--config", &cfg]).status.code(), Some(0));
    let a = fs::read_to_string(preset_dir.join("fig2_N10000.csv")).unwrap();
    let b = fs::read_to_string(run_dir.join("fig2_N10000.csv")).unwrap();
    assert_eq!(data_section(&a), data_section(&b));
    assert_eq!(a, b);
}

fn sweep_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    data_section(&text)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn single_point_sweep_equals_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "weak.toml", WEAK);
    assert_eq!(dwbec(dir.path(), &["run", "--config", &cfg]).status.code(), Some(0));
    let o = dwbec(dir.path(), &["sweep", "--config", &cfg, "--axis", "n_atoms=1000", "--stats", "final,max"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("weak_sweep_n_atoms.csv")).unwrap();
    let header: Vec<String> = data_section(&text).lines().next().unwrap().split(',').map(String::from).collect();
    let row = &sweep_rows(&dir.path().join("weak_sweep_n_atoms.csv"))[0];

    let run = fs::read_to_string(dir.path().join("weak.csv")).unwrap();
    let data = data_section(&run);
    let last: Vec<f64> = data.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    let cols: Vec<&str> = data.lines().next().unwrap().split(',').collect();
    for (k, name) in cols.iter().enumerate().skip(1) {
        let idx = header.iter().position(|h| h == &format!("{name}_final")).unwrap();
        assert_eq!(row[idx], last[k], "{name}");
    }
    assert_eq!(row[0], 1000.0);
}

#[test]
fn sweep_over_excitation_number_and_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let body = WEAK.replace("t_final = 0.2", "t_final = 1.0").replace("n_samples = 41", "n_samples = 101")
        + "\n[experiment.steady_state]\n";
    let cfg = write_config(dir.path(), "weak.toml", &body);
    let o = dwbec(dir.path(), &["sweep", "--config", &cfg, "--axis", "n=1,2,3", "--stats", "steady"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("weak_sweep_n.csv")).unwrap();
    let header: Vec<String> = data_section(&text).lines().next().unwrap().split(',').map(String::from).collect();
    let w = header.iter().position(|h| h == "W_steady").unwrap();
    let rows = sweep_rows(&dir.path().join("weak_sweep_n.csv"));
    for (k, row) in rows.iter().enumerate() {
        let n = (k + 1) as f64;
        assert!((row[w] + n / 16.0).abs() < 1e-6, "n={n}: {}", row[w]);
    }

    let o = dwbec(dir.path(), &["sweep", "--config", &cfg, "--axis", "n_atoms=500,2000", "--stats", "max"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = sweep_rows(&dir.path().join("weak_sweep_n_atoms.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], 2000.0);
}

#[test]
fn dark_verify_reports_stationary_family() {
    let dir = tempfile::tempdir().unwrap();
    let o = dwbec(dir.path(), &["dark-verify", "--n-max", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = sweep_rows(&dir.path().join("dark_verify.csv"));
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!(r[1] < 1e-12 && r[2] < 1e-12);
        assert!((r[5] - r[6]).abs() < 1e-12);
    }
    assert!(rows[1][3] < 0.0 && rows[1][4] > 0.0);
}
