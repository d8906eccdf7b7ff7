use std::path::Path;
use std::process::{Command, Output};

use mfunc_core::coeffs::CoeffCase;
use mfunc_core::density::io::read_grid;
use mfunc_core::forms::{build_builtin, load_form};
use mfunc_core::mtilde::{mtilde_series, MtildeParams};
use mfunc_core::Complex64;
use serde_json::Value;

fn mfunc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfunc")).args(args).env_remove("MFUNC_OUT_DIR").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SERIES: [&str; 13] = [
    "mtilde", "--sigma", "1.5", "--z1", "0.5-0.2i", "--z2", "0.5+0.2i", "--n-max", "4096", "--p-max", "100", "--case", "log_deriv",
];

#[test]
fn exit_codes() {
    assert_eq!(code(&mfunc(&["selfcheck"])), 0);
    assert_eq!(code(&mfunc(&["frobnicate"])), 1);
    assert_eq!(code(&mfunc(&["--help"])), 0);
    assert_eq!(code(&mfunc(&["mtilde", "--sigma", "abc"])), 1);
    assert_eq!(code(&mfunc(&["form", "--p-max", "100000000"])), 1);
    let guard = mfunc(&["mtilde", "--sigma", "1.2", "--z1", "0.5", "--z2", "0.5", "--n-max", "100", "--p-max", "100", "--tol", "1e-15"]);
    assert_eq!(code(&guard), 2);
    assert!(String::from_utf8_lossy(&guard.stderr).contains("numerical guard"));
}

#[test]
fn series_value_matches_library_exactly() {
    let o = mfunc(&SERIES);
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let got = Complex64::new(doc["value"][0].as_f64().unwrap(), doc["value"][1].as_f64().unwrap());
    let f = build_builtin("delta", 100).unwrap();
    let p = MtildeParams { n_max: 4096, p_max: 100, ..MtildeParams::default() };
    let want = mtilde_series(CoeffCase::LogDeriv, &f, Complex64::new(1.5, 0.0), Complex64::new(0.5, -0.2), Complex64::new(0.5, 0.2), &p)
        .unwrap()
        .value;
    assert_eq!(got, want);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let args = ["avg-twists", "--m", "101", "--sigma", "1.25", "--z1", "1", "--z2", "1", "--p-max", "2000", "--n-max", "2000"];
    let base = mfunc(&args);
    assert_eq!(code(&base), 0);
    for threads in ["1", "3"] {
        let mut a = vec!["--threads", threads];
        a.extend(args);
        assert_eq!(stdout(&mfunc(&a)), stdout(&base));
    }
    assert_eq!(stdout(&mfunc(&args)), stdout(&base));
}

#[test]
fn config_file_fills_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# series run\nsigma = 1.5\nz1=0.5-0.2i\nz2=0.5+0.2i\nn_max=4096\np_max=100\ncase=log_deriv\n").unwrap();
    let via_cfg = mfunc(&["mtilde", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&via_cfg), 0);
    assert_eq!(stdout(&via_cfg), stdout(&mfunc(&SERIES)));

    let over = mfunc(&["mtilde", "--config", cfg.to_str().unwrap(), "--case", "log"]);
    let doc: Value = serde_json::from_str(&stdout(&over)).unwrap();
    assert_eq!(doc["case"], "log");

    std::fs::write(&cfg, "sigma=1.5\nbogus=3\n").unwrap();
    let bad = mfunc(&["mtilde", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bogus"));
}

#[test]
fn form_csv_written_under_out_dir_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mfunc"))
        .args(["form", "--form", "11a", "--p-max", "500", "--out", "forms/11a.csv"])
        .env("MFUNC_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let path = dir.path().join("forms/11a.csv");
    let g = load_form(&path).unwrap();
    let f = build_builtin("11a", 500).unwrap();
    assert_eq!(g.primes(), f.primes());
    for &p in f.primes() {
        assert_eq!(g.eta_p(p).unwrap(), f.eta_p(p).unwrap());
    }
    // a form file can stand in for the builtin
    let mut args: Vec<&str> = SERIES.to_vec();
    args.extend(["--form", path.to_str().unwrap()]);
    let a: Value = serde_json::from_str(&stdout(&mfunc(&args))).unwrap();
    let mut b_args: Vec<&str> = SERIES.to_vec();
    b_args.extend(["--form", "11a"]);
    let b: Value = serde_json::from_str(&stdout(&mfunc(&b_args))).unwrap();
    assert_eq!(a["value"], b["value"]);
}

#[test]
fn grid_output_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.mgrd");
    let o = mfunc(&["mtilde", "--method", "grid", "--sigma", "1.25", "--p-max", "50", "--size", "256", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g = read_grid(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!((g.size, g.sigma), (256, 1.25));
    assert!(g.boundary_max() < 1e-10);
    let (cj, ck) = g.center();
    assert_eq!(g.at(cj, ck), Complex64::new(1.0, 0.0));

    assert_eq!(code(&mfunc(&["mtilde", "--method", "grid", "--sigma", "1.25", "--p-max", "50", "--size", "256"])), 1);
    assert!(!Path::new("g.mgrd").exists());
}
