use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use evofrac::timegrid::read_signal_csv;

const LAW: &str = "dim = 3\nm0 = diag(1, 1, 0)\nfrac 0.3 = diag(0, 1, 0)\nfrac 0.6 = diag(0, -1, 0)\nm1 = diag(0, 0, 1)\n";
const CANONICAL: &str = "dim = 3\np0 = diag(1, 0, 0)\nf0 = diag(0, 1, 0)\nq0 = diag(0, 0, 1)\n";
const MERGED: &str = "dim = 3\np0 = diag(1, 1, 0)\nq0 = diag(0, 0, 1)\n";

fn evofrac(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evofrac")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("law.txt"), LAW).unwrap();
    fs::write(dir.path().join("proj.txt"), CANONICAL).unwrap();
    fs::write(dir.path().join("merged.txt"), MERGED).unwrap();
    dir
}

#[test]
fn check_reports_and_sets_exit_code() {
    let dir = workspace();
    let ok = evofrac(dir.path(), &["check", "--law", "law.txt", "--projectors", "proj.txt"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).trim_end().ends_with("well-posed"));

    let bad = evofrac(dir.path(), &["check", "--law", "law.txt", "--projectors", "merged.txt", "--rho-max", "1e4"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("(b) P0 M_0.6 P0 >= 0"));
}

#[test]
fn solve_from_config_with_oracle() {
    let dir = workspace();
    let cfg = "kind = solve\n[grid]\nspan = 16\nn_steps = 1024\n[law]\nfile = law.txt\n\
               [rhs]\nwaveform = bump\nstart = 0\nend = 2\n[output]\nsolution = sol.csv\n";
    fs::write(dir.path().join("run.cfg"), cfg).unwrap();
    let out = evofrac(dir.path(), &["--config", "run.cfg", "solve", "--oracle", "--projectors", "proj.txt"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("certificate: well-posed"));
    assert!(text.contains("oracle max difference"));
    assert!(dir.path().join("sol.oracle.csv").is_file());

    // identical inputs, identical bytes
    let first = fs::read(dir.path().join("sol.csv")).unwrap();
    evofrac(dir.path(), &["--config", "run.cfg", "solve"]);
    let again = evofrac(dir.path(), &["--config", "run.cfg", "solve", "--oracle", "--projectors", "proj.txt"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("sol.csv")).unwrap(), first);
}

#[test]
fn solve_zero_rhs_gives_zeros() {
    let dir = workspace();
    let cfg = "kind = solve\n[grid]\nspan = 8\nn_steps = 256\nrho = 4\n[law]\nfile = law.txt\n\
               [rhs]\nwaveform = zero\n[output]\nsolution = zero.csv\n";
    fs::write(dir.path().join("zero.cfg"), cfg).unwrap();
    let out = evofrac(dir.path(), &["--config", "zero.cfg", "solve"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read_signal_csv(dir.path().join("zero.csv"), 4.0).unwrap().max_abs(), 0.0);
}

#[test]
fn flags_mirror_config_keys() {
    let dir = workspace();
    let out = evofrac(
        dir.path(),
        &[
            "fracapply",
            "--gamma",
            "-0.5",
            "--output",
            "half.csv",
            "--set",
            "grid.span=8",
            "--set",
            "grid.n_steps=512",
            "--set",
            "rhs.waveform=bump",
            "--set",
            "rhs.end=2",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_signal_csv(dir.path().join("half.csv"), 1.0).unwrap().dim(), 1);

    // compare-kernels streams spectral, convolution and error columns
    let out = evofrac(
        dir.path(),
        &["compare-kernels", "--alpha", "0.5", "--set", "grid.span=8", "--set", "grid.n_steps=512", "--set", "rhs.waveform=bump", "--set", "rhs.end=2"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("t,re_0,im_0,re_1,im_1,re_2,im_2\n"));
}

#[test]
fn ivp_subcommand_with_spatial_operator() {
    let dir = workspace();
    let out = evofrac(
        dir.path(),
        &[
            "ivp",
            "--spatial",
            "grad1d:8:0.5",
            "--ivp-delta",
            "128,sine",
            "--out",
            "ivp.csv",
            "--set",
            "law.builder=fokker_planck",
            "--set",
            "law.alpha=0.5",
            "--set",
            "law.kappa=1",
            "--set",
            "law.mu00=0",
            "--set",
            "law.mu11=1",
            "--set",
            "grid.span=4",
            "--set",
            "grid.n_steps=512",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("jump defect"));
}

#[test]
fn errors_are_prefixed_and_exit_two() {
    let dir = workspace();
    let out = evofrac(dir.path(), &["solve"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: config: missing [law] file"), "{err}");

    fs::write(dir.path().join("typo.cfg"), "kind = check\n[law]\nfiel = law.txt\nfile = law.txt\n").unwrap();
    let out = evofrac(dir.path(), &["--config", "typo.cfg", "check", "--projectors", "proj.txt"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3: unknown key `fiel` in [law]"));

    let out = evofrac(dir.path(), &["solve", "--law", "law.txt", "--set", "grid.span=4", "--set", "grid.n_steps=64", "--set", "rhs.waveform=zero", "--out", "x.csv", "--ivp-delta", "10,1,0,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: solver:"));
}

#[test]
fn thread_cap_is_validated() {
    let dir = workspace();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_evofrac"))
            .current_dir(dir.path())
            .env("EVOFRAC_THREADS", threads)
            .args(["check", "--law", "law.txt", "--projectors", "proj.txt"])
            .output()
            .unwrap()
    };
    assert_eq!(run("1").status.code(), Some(0));
    assert_eq!(run("zero").status.code(), Some(2));
}
