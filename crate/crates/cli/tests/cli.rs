use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_affmax");

fn affmax(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn norm_identity_passes_with_three_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ni.toml", "experiment = \"check_norm_identity\"\nn = 2\np = 2.0\n[params]\nt_list = [0.5, 1.0, 2.0]\n");
    let out = dir.path().join("out/ni");
    let o = affmax(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/ni.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("out/ni.json").exists() && dir.path().join("out/ni.txt").exists());
}

#[test]
fn unit_rho_measure_exits_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "rw.toml",
        "experiment = \"check_random_walk_dichotomy\"\nn = 1\n[measure]\ncontractive = [{ x = [0.0], y = 1.0, weight = 1.0 }]\nexpansive = [{ x = [0.0], y = 2.0, weight = 1.0 }]\n",
    );
    let o = affmax(&["--config", &cfg, "--out", dir.path().join("rw").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("precondition") && err.contains("measure"), "{err}");
}

#[test]
fn failing_checks_exit_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k.toml", "experiment = \"check_kernel_blowup\"\nn = 1\n[params]\np_list = [1.5, 2.0]\n");
    let o = affmax(&["--config", &cfg, "--out", dir.path().join("k").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_key_exits_with_status_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "b.toml", "experiment = \"check_growth_lemma\"\nn = 1\np = 2.0\nspeed = 3\n");
    let o = affmax(&["--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`speed`"));
    assert_eq!(affmax(&[]).status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t.toml", "experiment = \"check_trans_weak_type\"\nn = 1\nseed = 5\n[params]\ntrials = 6\n");
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "1", "4"].iter().enumerate() {
        let prefix = dir.path().join(format!("run{i}"));
        let o = affmax(&["--config", &cfg, "--out", prefix.to_str().unwrap(), "--threads", threads]);
        assert_eq!(o.status.code(), Some(0));
        let files: Vec<Vec<u8>> = ["json", "csv", "txt"].iter().map(|e| fs::read(prefix.with_extension(e)).unwrap()).collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let seeded = dir.path().join("seeded");
    affmax(&["--config", &cfg, "--out", seeded.to_str().unwrap(), "--seed", "6"]);
    assert_ne!(fs::read(seeded.with_extension("csv")).unwrap(), outputs[0][1]);
}

#[test]
fn apply_operator_writes_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.toml",
        "experiment = \"apply-operator\"\nn = 1\n[grid]\nx_min = [-1.0]\nx_max = [2.0]\nx_count = [31]\nu_min = -2.0\nu_max = 2.0\nu_count = 41\n\
         [radii]\nmin = 0.1\nmax = 3.0\nratio = 1.5\n\
         [operator]\nname = \"m_dil\"\ninput = { kind = \"indicator\", x_box = [[0.0, 1.0]], y_min = 1.0, y_max = 2.718281828459045, power = 1 }\n",
    );
    let prefix = dir.path().join("apply");
    let o = affmax(&["--config", &cfg, "--out", prefix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let snap = fs::read_to_string(prefix.with_extension("field")).unwrap();
    assert!(snap.starts_with("affine-field 1"));

    // Feed the snapshot back in as the input of a second operator.
    let again = write(
        dir.path(),
        "b.toml",
        &format!(
            "experiment = \"apply-operator\"\nn = 1\n[grid]\nx_min = [-1.0]\nx_max = [2.0]\nx_count = [31]\nu_min = -2.0\nu_max = 2.0\nu_count = 41\n\
             [operator]\nname = \"shift\"\nt = 0.5\ninput = {{ kind = \"snapshot\", path = \"{}\" }}\n",
            prefix.with_extension("field").display()
        ),
    );
    let o = affmax(&["--config", &again, "--out", dir.path().join("b").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn list_experiments_prints_catalog() {
    let o = affmax(&["list-experiments"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("scan_weak_type_failure"));
}
