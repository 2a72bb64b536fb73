use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use sigkernel::io::{load_csv, save_csv};
use sigkernel_core::datagen::{brownian, fbm, near_periodic, DEFAULT_SEED};
use sigkernel_core::truncation::gram_error_bound;
use sigkernel_core::{gram_matrix, propagate, propagate_grid, ErrorBoundInputs, TimeSeries, TruncationPolicy};
use tempfile::TempDir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigkernel")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, ts: &TimeSeries) -> PathBuf {
    let p = dir.path().join(name);
    save_csv(ts, &p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn constant_inputs_print_one() {
    let dir = tempfile::tempdir().unwrap();
    let c = TimeSeries::from_points(&[[2.0, 1.0], [2.0, 1.0], [2.0, 1.0]]).unwrap();
    let p = write(&dir, "c.csv", &c);
    let o = cli(&["kernel", s(&p), s(&p)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "K=1.0\n");
}

#[test]
fn unit_increments_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let x = TimeSeries::from_scalars(&[0.0, 1.0]).unwrap();
    let p = write(&dir, "x.csv", &x);
    let o = cli(&["kernel", s(&p), s(&p), "--order", "24"]);
    let expected = propagate(&x, &x, 24).unwrap().value;
    assert_eq!(stdout(&o), format!("K={expected:?}\n"));
    assert!(stdout(&o).starts_with("K=2.2795853"));
}

#[test]
fn random_pairs_match_the_library_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let x = brownian(17 + seed as usize, 3, seed).unwrap();
        let y = brownian(9, 3, seed + 100).unwrap();
        let (px, py) = (write(&dir, "x.csv", &x), write(&dir, "y.csv", &y));
        let o = cli(&["kernel", s(&px), s(&py), "--order", "11"]);
        let v: f64 = stdout(&o).trim().strip_prefix("K=").unwrap().parse().unwrap();
        assert_eq!(v.to_bits(), propagate(&x, &y, 11).unwrap().value.to_bits());
    }
}

#[test]
fn json_metadata_line() {
    let dir = tempfile::tempdir().unwrap();
    let x = brownian(5, 2, 1).unwrap();
    let p = write(&dir, "x.csv", &x);
    let o = cli(&["kernel", s(&p), s(&p), "--tol", "1e-10", "--json"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("K="));
    let meta: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(meta["schema"], 1);
    assert_eq!(meta["command"], "kernel");
    assert_eq!(meta["tiles"], 16);
    assert_eq!(meta["dim"], 2);
}

#[test]
fn grid_output_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let x = brownian(4, 2, 1).unwrap();
    let y = brownian(6, 2, 2).unwrap();
    let (px, py) = (write(&dir, "x.csv", &x), write(&dir, "y.csv", &y));
    let g = dir.path().join("grid.csv");
    let o = cli(&["kernel", s(&px), s(&py), "--order", "9", "--grid", s(&g)]);
    assert_eq!(o.status.code(), Some(0));
    let on_disk = load_csv(&g).unwrap();
    let lib = propagate_grid(&x, &y, 9).unwrap().grid.unwrap();
    assert_eq!((on_disk.len(), on_disk.dim()), (4, 6));
    for i in 0..4 {
        for j in 0..6 {
            assert_eq!(on_disk.point(i)[j].to_bits(), lib.get(i, j).to_bits());
        }
    }
}

#[test]
fn order_with_tol_is_a_usage_error() {
    let o = cli(&["kernel", "a.csv", "b.csv", "--order", "0", "--tol", "1e-9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["kernel", "/nonexistent/x.csv", "/nonexistent/y.csv"]).status.code(), Some(2));
    let a = write(&dir, "a.csv", &brownian(4, 2, 0).unwrap());
    let b = write(&dir, "b.csv", &brownian(4, 3, 0).unwrap());
    let o = cli(&["kernel", s(&a), s(&b)]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2\n3,x\n").unwrap();
    let o = cli(&["kernel", s(&bad), s(&a)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2, column 2"));
    assert_eq!(cli(&["kernel", s(&a), s(&a), "--order", "65"]).status.code(), Some(2));
}

#[test]
fn overflow_exits_three_and_names_the_tile() {
    let dir = tempfile::tempdir().unwrap();
    let x = TimeSeries::from_scalars(&[0.0, 1e30, 2e30]).unwrap();
    let p = write(&dir, "x.csv", &x);
    let o = cli(&["kernel", s(&p), s(&p), "--order", "8"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tile"));
}

#[test]
fn gram_single_file_is_one_by_one() {
    let dir = tempfile::tempdir().unwrap();
    let x = brownian(6, 2, 3).unwrap();
    let p = write(&dir, "x.csv", &x);
    let out = dir.path().join("g.csv");
    let o = cli(&["gram", s(&p), "--order", "12", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let g = load_csv(&out).unwrap();
    assert_eq!((g.len(), g.dim()), (1, 1));
    assert_eq!(g.point(0)[0].to_bits(), propagate(&x, &x, 12).unwrap().value.to_bits());
    assert!(dir.path().join("g.json").exists());
}

#[test]
fn gram_duplicate_file_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "x.csv", &brownian(6, 2, 3).unwrap());
    let out = dir.path().join("g.csv");
    cli(&["gram", s(&p), s(&p), "--out", s(&out)]);
    let g = load_csv(&out).unwrap();
    let v = g.point(0)[0];
    assert!(g.as_flat().iter().all(|e| e.to_bits() == v.to_bits()));
}

#[test]
fn gram_bound_metadata_matches_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("family");
    fs::create_dir(&sub).unwrap();
    let family: Vec<TimeSeries> = (0..3).map(|k| brownian(5 + k, 2, k as u64).unwrap().scaled(0.3)).collect();
    for (k, ts) in family.iter().enumerate() {
        save_csv(ts, sub.join(format!("s{k}.csv"))).unwrap();
    }
    let out = dir.path().join("g.csv");
    let meta_path = dir.path().join("meta.json");
    let o = cli(&["gram", s(&sub), "--order", "10", "--out", s(&out), "--meta", s(&meta_path), "--bound"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(&meta_path).unwrap()).unwrap();
    let lib = gram_matrix(&family, TruncationPolicy::Fixed(10)).unwrap();
    let expected = gram_error_bound(&ErrorBoundInputs {
        family_size: 3,
        len: lib.len,
        max_abs_rho: lib.max_abs_rho,
        order: 10,
    })
    .unwrap();
    assert_eq!(meta["schema"], 1);
    assert_eq!(meta["size"], 3);
    assert_eq!(meta["len"], 7);
    assert_eq!(meta["bound"].as_f64().unwrap().to_bits(), expected.to_bits());
    let csv = load_csv(&out).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(csv.point(i)[j].to_bits(), lib.get(i, j).to_bits());
        }
    }
}

#[test]
fn validate_exit_codes() {
    let o = cli(&["validate", "--suite", "closed-form"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
    let o = cli(&["validate", "--suite", "oracle-triangle", "--cases", "10", "--tol", "1e-2"]);
    assert_eq!(o.status.code(), Some(0));
    let o = cli(&["validate", "--suite", "closed-form,oracle-triangle", "--cases", "5", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn bench_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let start = Instant::now();
    let o = cli(&["bench", "--lengths", "3,5", "--dims", "2", "--repeats", "1", "--out", s(&out)]);
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "len,dim,order,mean_seconds,stdev_seconds,peak_live_series,mape");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("3,2,7,"));
    assert!(!lines[2].ends_with(','));
}

#[test]
fn bench_leaves_mape_blank_beyond_oracle_range() {
    let o = cli(&["bench", "--lengths", "2^6+1", "--repeats", "1"]);
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap().starts_with("65,2,7,"));
    assert!(text.lines().nth(1).unwrap().ends_with(','));
}

#[test]
fn gen_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = cli(&["gen", "brownian", "--len", "9", "--dim", "2", "--seed", "4", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(load_csv(&out).unwrap(), brownian(9, 2, 4).unwrap());

    cli(&["gen", "fbm", "--len", "17", "--hurst", "0.3", "--out", s(&out)]);
    assert_eq!(load_csv(&out).unwrap(), fbm(17, 1, 0.3, DEFAULT_SEED).unwrap());

    cli(&["gen", "near-periodic", "--len", "13", "--dim", "2", "--period", "0.25", "--out", s(&out)]);
    let np = load_csv(&out).unwrap();
    assert_eq!(np, near_periodic(13, 2, 0.25, 1.0, 0.0, DEFAULT_SEED).unwrap());
    // period of three steps, noiseless: repeats exactly
    assert_eq!(np.point(0), np.point(3));
    assert_eq!(np.point(1), np.point(10));
}

#[test]
fn gen_rejects_bad_specs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = cli(&["gen", "fbm", "--len", "9", "--hurst", "1.5", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_defaults_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let x = TimeSeries::from_scalars(&[0.0, 1.0]).unwrap();
    let p = write(&dir, "x.csv", &x);
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"order": 3, "threads": 1}"#).unwrap();
    let o = cli(&["--config", s(&cfg), "kernel", s(&p), s(&p)]);
    assert_eq!(stdout(&o), format!("K={:?}\n", propagate(&x, &x, 3).unwrap().value));
    let o = cli(&["--config", s(&cfg), "kernel", s(&p), s(&p), "--order", "24"]);
    assert_eq!(stdout(&o), format!("K={:?}\n", propagate(&x, &x, 24).unwrap().value));
    let o = cli(&["--config", s(&cfg), "kernel", s(&p), s(&p), "--tol", "1e-12", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"order\":9"));
}
