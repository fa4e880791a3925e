//! Exit codes and error messages of the `wakereserve` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/study.toml")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wakereserve"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("study.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bundled_config_validates() {
    let o = run(&["validate-config", "--config", bundled().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("5 turbines, 3 cases"));
}

#[test]
fn unknown_key_is_a_config_error_naming_the_key() {
    let dir = scratch("unknown-key");
    let cfg = write_config(&dir, "[farm]\nn = 3\nturbines_per_row = 4\n");
    let o = run(&["validate-config", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("turbines_per_row"), "{}", stderr(&o));
}

#[test]
fn last_turbine_must_not_be_deloaded() {
    let dir = scratch("last-dm");
    let cfg = write_config(
        &dir,
        "[farm]\nn = 3\n[[farm.cases]]\nid = \"A\"\ndm = [0.05, 0.05, 0.05]\n",
    );
    let o = run(&["validate-config", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("farm.cases[0].dm[2]"), "{e}");
    assert!(e.contains("last turbine"), "{e}");
}

#[test]
fn missing_file_and_bad_overrides_exit_2() {
    let o = run(&["optimize", "--config", "/nonexistent/study.toml"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = scratch("overrides");
    let out = dir.join("out");
    let cfg = bundled();
    let base = ["optimize", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let o = run(&[&base[..], &["--case", "IV"]].concat());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("IV"), "{}", stderr(&o));
    let o = run(&[&base[..], &["--v", "40"]].concat());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimize_writes_csv_for_selected_cases() {
    let dir = scratch("optimize");
    let out = dir.join("out");
    let o = run(&[
        "optimize",
        "--config",
        bundled().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--case",
        "II",
        "--v",
        "9",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(out.join("optimize.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[0], "case_id");
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    // five turbines and a total line
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| &r[0] == "II" && &r[1] == "9.0"));
}

#[test]
fn infeasible_optimize_exits_1_but_partial_sweep_exits_0() {
    let dir = scratch("infeasible");
    let cfg = write_config(
        &dir,
        "[farm]\nn = 2\nv_free_mps = 20.0\n\
         [[farm.cases]]\nid = \"X\"\ndm = [0.05, 0.0]\n\
         [farm.sweep]\nv_min_mps = 18.0\nv_max_mps = 20.0\nv_step_mps = 1.0\n",
    );
    let out = dir.join("out");
    let o = run(&["optimize", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("X,18.0,total,")));
    assert!(text.lines().any(|l| l.starts_with("X,20.0,total,") && l.contains("failed")));
}
