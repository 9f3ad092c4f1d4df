use std::path::Path;
use std::process::{Command, Output};

fn axisbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_axisbench")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn idle_run_returns_closed_form() {
    let o = axisbench(&["run", "--policy", "idle", "--steps", "500"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["return"].as_f64().unwrap() + 2550.0).abs() < 1e-9);
    assert_eq!(v["episodes_completed"], 1);
}

#[test]
fn run_is_deterministic() {
    let args = ["run", "--config", "hard", "--envs", "3", "--steps", "20", "--seed", "9"];
    let a = axisbench(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&axisbench(&args)));
}

#[test]
fn exit_codes() {
    assert_eq!(axisbench(&["--help"]).status.code(), Some(0));
    assert_eq!(axisbench(&["--version"]).status.code(), Some(0));
    assert_eq!(axisbench(&["run", "--envs", "0"]).status.code(), Some(1));
    assert_eq!(axisbench(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(axisbench(&["suite", "--pair", "layout/99"]).status.code(), Some(1));
    assert_eq!(axisbench(&["suite"]).status.code(), Some(1));
    assert_eq!(axisbench(&["verify-theory", "--instances", "0"]).status.code(), Some(1));
}

#[test]
fn invalid_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.yaml");
    std::fs::write(&p, "episode_length: 0\n").unwrap();
    let o = axisbench(&["run", "--config", p.to_str().unwrap(), "--steps", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn render_png_and_raw_agree_and_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let (png, png2, raw) = (dir.path().join("png"), dir.path().join("png2"), dir.path().join("raw"));
    for (out, fmt) in [(&png, "png"), (&png2, "png"), (&raw, "raw")] {
        let o = axisbench(&[
            "render", "--config", "hard", "--seed", "4", "--frames", "4", "--format", fmt, "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let pngs = read_all(&png);
    assert_eq!(pngs.len(), 4);
    assert_eq!(pngs[0].0, "frame_00000.png");
    assert_eq!(pngs, read_all(&png2));

    let frames = axisbench::renderer::read_raw(std::fs::File::open(raw.join("frames.raw")).unwrap()).unwrap();
    assert_eq!(frames.len(), 4);
    for (f, (_, b)) in frames.iter().zip(&pngs) {
        let img = image::load_from_memory(b).unwrap().to_rgb8();
        assert_eq!((img.height() as usize, img.width() as usize), (f.height, f.width));
        assert_eq!(img.into_raw(), f.data);
    }
}

#[test]
fn bench_throughput_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = axisbench(&[
        "bench-throughput", "--max-envs-pow", "2", "--steps-per-point", "200", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("throughput.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "n_envs,steps_per_second,wall_seconds,config_label");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("4,") && lines[3].ends_with(",easy"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("throughput.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn suite_smoke_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = axisbench(&[
        "suite", "--pair", "filters/4", "--seeds", "2", "--episode-length", "60", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("filters"));
    let report = axisbench::benchkit::Report::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.pairs.len(), 1);
    assert_eq!(report.pairs[0].id, 4);
}

#[test]
fn suite_reads_policy_dir() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.json"), serde_json::to_string(&axisbench::env::PolicySpec::Right).unwrap())
        .unwrap();
    let o = axisbench(&[
        "suite", "--pair", "layout-1", "--seeds", "1", "--episode-length", "40", "--policy-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_theory_passes_and_fails_on_impossible_tolerance() {
    let o = axisbench(&["verify-theory", "--instances", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("5/5"));
    assert_eq!(axisbench(&["verify-theory", "--instances", "2", "--tol", "1e-30"]).status.code(), Some(3));
}
