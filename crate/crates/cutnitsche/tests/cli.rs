use std::fs;
use std::process::{Command, Output};

use cutnitsche::io::{read_matrix_market, read_mesh, read_table_csv, read_table_json};

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cutnitsche"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("CUTNITSCHE_THREADS", t),
        None => cmd.env_remove("CUTNITSCHE_THREADS"),
    };
    cmd.output().expect("binary runs")
}

#[test]
fn patch_run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("patch.csv");
    let o = run(
        &["--case", "linear-patch", "--variant", "penalty-free", "--levels", "2", "--out", out.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_table_csv(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].ndof > rows[0].ndof);
    for r in &rows {
        assert!(r.err_l2 <= 1e-9 && r.err_energy <= 1e-9);
    }
}

#[test]
fn json_output_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let mesh = dir.path().join("mesh.txt");
    let mtx = dir.path().join("a.mtx");
    let o = run(
        &[
            "--levels", "2", "--n0", "4", "--mu2", "10", "--format", "json",
            "--out", out.to_str().unwrap(),
            "--mesh-out", mesh.to_str().unwrap(),
            "--matrix-out", mtx.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_table_json(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(doc.rows.len(), 2);
    assert_eq!(doc.config.mu2, 10.0);
    let (vertices, cells) = read_mesh(std::io::BufReader::new(fs::File::open(&mesh).unwrap())).unwrap();
    // finest level has n = 8
    assert_eq!(vertices.len(), 81);
    assert_eq!(cells.len(), 128);
    let a = read_matrix_market(std::io::BufReader::new(fs::File::open(&mtx).unwrap())).unwrap();
    assert_eq!(a.nrows(), doc.rows[1].ndof);
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = ["--levels", "3", "--n0", "4", "--variant", "penalty-free"];
    let a = run(&args, None);
    let b = run(&args, Some("1"));
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    // unusable values are ignored with a warning
    let c = run(&args, Some("zero"));
    assert!(c.status.success());
    assert_eq!(a.stdout, c.stdout);
    assert!(String::from_utf8_lossy(&c.stderr).contains("CUTNITSCHE_THREADS"));
}

#[test]
fn conditioning_sweep_table() {
    let o = run(&["--cond-sweep", "--n0", "8", "--variant", "penalty-free", "--no-ghost"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "offset,cond,cond_no_ghost");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.len() == 3 && !r[2].is_empty()));
}

#[test]
fn invalid_configurations_fail() {
    for args in [
        &["--k", "3"][..],
        &["--levels", "1"],
        &["--mu1", "-1"],
        &["--r0", "1.5"],
        &["--gamma-g", "-0.5"],
        &["--tol", "2"],
        &["--case", "square"],
    ] {
        let o = run(args, None);
        assert!(!o.status.success(), "{args:?} succeeded");
        assert!(!o.stderr.is_empty());
    }
}
