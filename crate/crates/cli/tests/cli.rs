use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastoscat")).args(args).output().unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

const SMALL: &str = r#"
seed = 3
[background]
rho = 1.0
lambda = 1.0
mu = 2.0

[[obstacles]]
shape = "circle"
center = [0.2, -0.1]
radius = 0.6
[obstacles.material]
rho = 3.0
voigt = [10.5, 3.25, -0.65, 13.0, -1.52, 4.75]

[domain]
radius = 2.0
h = 0.2

[waves]
omegas = [1.5, 2.0]
directions_deg = [0.0, 120.0]

[inversion]
order = 2
steps = 3
n_mea = 32
initial_centers = [[0.0, 0.0]]
initial_radius = 0.5
data_refine = 1.0
extra_modes = 0
"#;

#[test]
fn convergence_reports_expected_orders() {
    let d = scratch("conv");
    let out = d.to_str().unwrap();
    ok(&run(&["convergence", "--out", out]));
    let csv = fs::read_to_string(d.join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "case,omega,level,h,n_nodes,e0,order0,e1,order1");
    let mut checked = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        if f[6].is_empty() {
            continue;
        }
        let (o0, o1): (f64, f64) = (f[6].parse().unwrap(), f[8].parse().unwrap());
        assert!((1.7..=2.3).contains(&o0), "{l}");
        assert!((0.8..=1.3).contains(&o1), "{l}");
        checked += 1;
    }
    assert_eq!(checked, 12);
}

#[test]
fn dtn_checks_have_no_violations() {
    for dim in ["2", "3"] {
        let d = scratch(&format!("dtn{dim}"));
        ok(&run(&["dtn-check", "--dim", dim, "--seed", "11", "--out", d.to_str().unwrap()]));
        let s = fs::read_to_string(d.join(format!("dtn{dim}d_summary.csv"))).unwrap();
        assert!(s.lines().count() > 1);
        for l in s.lines().skip(1) {
            assert!(l.ends_with(",0"), "{l}");
        }
    }
}

#[test]
fn forward_output_is_byte_identical_across_runs() {
    let d = scratch("fwd");
    let cfg = d.join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let (a, b) = (d.join("a"), d.join("b"));
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        ok(&run(&["forward", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--threads", threads]));
    }
    for name in ["mesh.txt", "samples.csv", "field_m0_d1.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn unknown_config_key_is_reported_with_its_path() {
    let d = scratch("bad");
    let cfg = d.join("bad.toml");
    fs::write(&cfg, SMALL.replace("h = 0.2", "h = 0.2\nmesh_size = 0.1")).unwrap();
    let o = run(&["forward", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("domain") && err.contains("mesh_size"), "{err}");
}

#[test]
fn invert_report_round_trips_and_summary_regenerates() {
    let d = scratch("inv");
    let cfg = d.join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    ok(&run(&["invert", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()]));
    let text = fs::read_to_string(d.join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let back: serde_json::Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(v, back);
    let rerror: Vec<f64> = serde_json::from_value(v["rerror"].clone()).unwrap();
    let sd: Vec<f64> = serde_json::from_value(v["relative_symmetric_difference"].clone()).unwrap();
    assert_eq!(rerror.len(), 3);
    let s = &v["summary"];
    assert_eq!(s["initial_rerror"].as_f64().unwrap(), rerror[0]);
    assert_eq!(s["final_rerror"].as_f64().unwrap(), rerror[2]);
    assert_eq!(s["rerror_strictly_decreasing"].as_bool().unwrap(), rerror.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(s["max_relative_symmetric_difference"].as_f64().unwrap(), sd.iter().cloned().fold(0.0, f64::max));
    let log = fs::read_to_string(d.join("log.jsonl")).unwrap();
    for l in log.lines() {
        let r: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(r["schema"], 1);
    }
}
