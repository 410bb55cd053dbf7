use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn flowroi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowroi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = flowroi(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    flowroi(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Every file under `dir` with its bytes, sorted by relative path.
fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn small_dataset(root: &Path, name: &str, cells: &str) -> PathBuf {
    let dir = root.join(name);
    ok(&[
        "synth", "--out", s(&dir), "--cells", cells, "--frames", "4", "--width", "128", "--height", "128",
        "--radius", "5,8", "--seed", "7",
    ]);
    dir
}

#[test]
fn synth_is_deterministic_and_manifest_reproduces() {
    let tmp = tempfile::tempdir().unwrap();
    let a = small_dataset(tmp.path(), "a", "5");
    let b = small_dataset(tmp.path(), "b", "5");
    assert_eq!(snapshot(&a), snapshot(&b));
    assert_eq!(fs::read_dir(a.join("frames")).unwrap().count(), 4);
    assert_eq!(fs::read_dir(a.join("truth")).unwrap().count(), 4);
    let c = tmp.path().join("c");
    ok(&["synth", "--out", s(&c), "--manifest", s(&a.join("manifest.txt"))]);
    assert_eq!(snapshot(&a), snapshot(&c));
    let traj = fs::read_to_string(a.join("trajectories.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 5 * 4);
}

#[test]
fn synth_without_cells_has_empty_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let d = small_dataset(tmp.path(), "d", "0");
    for e in fs::read_dir(d.join("truth")).unwrap() {
        let m = flowroi::io::load_mask(&e.unwrap().path()).unwrap();
        assert!(m.is_empty());
    }
}

#[test]
fn compress_decompress_evaluate_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path(), "data", "4");
    let frames = data.join("frames");
    let froi = tmp.path().join("froi");
    let report = tmp.path().join("compress.json");
    ok(&[
        "compress", "-i", s(&frames), "-o", s(&froi), "--truth", s(&data), "--compression-rate", "20",
        "--report-out", s(&report),
    ]);
    let r = json(&report);
    assert_eq!(r["frames"], 4);
    assert_eq!(r["all_within_budget"], true);
    assert!(r["coverage"]["coverage_rate"].is_number());
    assert!(r["config"]["compression-rate"].is_string());
    assert!(r["config"].get("workers").is_none());
    assert!(r.get("throughput").is_none_or(Value::is_null));
    let mf = r["mask_fraction"]["mean"].as_f64().unwrap();
    assert!((0.15..=0.25).contains(&mf), "mask fraction {mf}");
    for row in r["rows"].as_array().unwrap() {
        assert!(row["bytes"].as_u64().unwrap() <= row["budget_bytes"].as_u64().unwrap());
    }
    let budget = 128 * 128 / 20;
    for e in fs::read_dir(&froi).unwrap() {
        assert!(fs::metadata(e.unwrap().path()).unwrap().len() <= budget as u64 + 64);
    }

    // decoded masks are exactly the extracted masks
    let masks = tmp.path().join("masks");
    ok(&["extract-roi", "-i", s(&frames), "-o", s(&masks)]);
    let dec = tmp.path().join("dec");
    ok(&["decompress", "-i", s(&froi), "-o", s(&dec)]);
    for i in 0..4 {
        let name = format!("mask_{i:04}.pbm");
        assert_eq!(fs::read(masks.join(&name)).unwrap(), fs::read(dec.join(&name)).unwrap());
    }

    let eval = tmp.path().join("eval.json");
    ok(&[
        "evaluate", "--raw", s(&frames), "--decoded", s(&dec), "--truth", s(&data), "--streams", s(&froi),
        "--report-out", s(&eval),
    ]);
    let e = json(&eval);
    assert_eq!(e["quality"]["region_source"], "truth");
    assert!(e["coverage"]["cells_total"].as_u64().unwrap() > 0);
    assert!(e["quality"]["achieved_ratio"]["mean"].as_f64().unwrap() >= 20.0);

    // without truth the coverage section is omitted and masks come from the streams
    let out = ok(&["evaluate", "--raw", s(&frames), "--decoded", s(&dec)]);
    let e: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(e.get("coverage").is_none());
    assert_eq!(e["quality"]["region_source"], "pipeline");
}

#[test]
fn lossless_roundtrip_and_identical_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path(), "data", "3");
    let frames = data.join("frames");
    let froi = tmp.path().join("froi");
    let dec = tmp.path().join("dec");
    ok(&["compress", "-i", s(&frames), "-o", s(&froi), "--lossless"]);
    ok(&["decompress", "-i", s(&froi), "-o", s(&dec)]);
    for i in 0..4 {
        let name = format!("frame_{i:04}.pgm");
        assert_eq!(fs::read(frames.join(&name)).unwrap(), fs::read(dec.join(&name)).unwrap());
    }
    let out = ok(&["evaluate", "--raw", s(&frames), "--decoded", s(&dec)]);
    let e: Value = serde_json::from_slice(&out.stdout).unwrap();
    for row in e["quality"]["rows"].as_array().unwrap() {
        assert_eq!(row["psnr_global"], "inf");
    }
}

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path(), "data", "2");
    let frames = data.join("frames");
    let out = s(&tmp.path().join("x")).to_string();
    assert_eq!(
        code(&["compress", "-i", s(&frames), "-o", &out, "--compression-rate", "1.01", "--lossless"]),
        1
    );
    assert_eq!(code(&["compress", "-i", s(&frames), "-o", &out, "--scaling-factor", "11"]), 1);
    assert_eq!(code(&["compress", "-i", s(&frames)]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["compress", "-i", s(&frames), "-o", &out, "--roi-threshold", "abc"]), 1);
    assert_eq!(code(&["--help"]), 0);
    // a config file value is overridden by the flag
    let cfg = tmp.path().join("c.cfg");
    fs::write(&cfg, "compression-rate = 1.01\n").unwrap();
    assert_eq!(
        code(&["compress", "--config", s(&cfg), "-i", s(&frames), "-o", &out, "--compression-rate", "30"]),
        0
    );
    fs::write(&cfg, "no-such-key = 1\n").unwrap();
    assert_eq!(code(&["compress", "--config", s(&cfg), "-i", s(&frames), "-o", &out]), 1);
}

#[test]
fn data_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing");
    let out = tmp.path().join("out");
    assert_eq!(code(&["compress", "-i", s(&missing), "-o", s(&out)]), 2);
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(code(&["compress", "-i", s(&empty), "-o", s(&out)]), 2);

    // one truncated stream among good ones: the others still decode
    let data = small_dataset(tmp.path(), "data", "2");
    let froi = tmp.path().join("froi");
    ok(&["compress", "-i", s(&data.join("frames")), "-o", s(&froi)]);
    let victim = froi.join("frame_0002.froi");
    let bytes = fs::read(&victim).unwrap();
    fs::write(&victim, &bytes[..bytes.len() / 2]).unwrap();
    let dec = tmp.path().join("dec");
    let res = flowroi(&["decompress", "-i", s(&froi), "-o", s(&dec)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("frame_0002.froi"));
    assert!(dec.join("frame_0001.pgm").exists() && dec.join("frame_0003.pgm").exists());
    assert!(!dec.join("frame_0002.pgm").exists());
}

#[test]
fn outputs_independent_of_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path(), "data", "4");
    let frames = data.join("frames");
    let mut snaps = Vec::new();
    for w in ["1", "3"] {
        let dir = tmp.path().join(format!("w{w}"));
        let rep = tmp.path().join(format!("w{w}.json"));
        ok(&[
            "compress", "-i", s(&frames), "-o", s(&dir), "--workers", w, "--report-out", s(&rep), "--truth", s(&data),
        ]);
        snaps.push((snapshot(&dir), fs::read(&rep).unwrap()));
    }
    assert_eq!(snaps[0], snaps[1]);
}

#[test]
fn sweep_resume_and_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path(), "data", "4");
    let frames = data.join("frames");
    let csv = tmp.path().join("sweep.csv");
    let args = |rates: &str| -> Vec<String> {
        [
            "sweep", "-i", s(&frames), "-o", s(&csv), "--truth", s(&data), "--thresholds", "0.1,0.3",
            "--rates", rates,
        ]
        .iter()
        .map(|a| a.to_string())
        .collect()
    };
    let run = |rates: &str| {
        let a = args(rates);
        ok(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    run("20");
    let first = fs::read_to_string(&csv).unwrap();
    let header = first.lines().next().unwrap();
    assert!(header.contains("config_hash") && header.contains("psnr_roi") && header.contains("method"));
    // two combinations, each with a flowroi and a uniform row
    assert_eq!(first.lines().count(), 1 + 4);
    // second run only adds the new rate; done combinations are skipped
    run("20,40");
    let second = fs::read_to_string(&csv).unwrap();
    assert!(second.starts_with(&first));
    assert_eq!(second.lines().count(), 1 + 8);
    assert_eq!(second.matches("config_hash").count(), 1);
    let log = fs::read_to_string(tmp.path().join("sweep.csv.log")).unwrap();
    assert_eq!(log.lines().filter(|l| l.ends_with(" ok")).count(), 4);

    // infeasible rates are logged, not fatal
    run("5000");
    let log = fs::read_to_string(tmp.path().join("sweep.csv.log")).unwrap();
    assert!(log.lines().any(|l| l.ends_with("infeasible")));

    let svg = tmp.path().join("plot.svg");
    ok(&["plot", "-i", s(&csv), "-o", s(&svg)]);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    assert!(text.contains("polyline") && text.contains("Uniform"));
}

#[test]
fn oversized_sweep_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let list: Vec<String> = (1..=100).map(|i| format!("{}", 2 + i)).collect();
    let thresholds: Vec<String> = (1..=101).map(|i| format!("{:.3}", i as f64 / 103.0)).collect();
    let rc = code(&[
        "sweep", "-i", s(tmp.path()), "-o", s(&tmp.path().join("x.csv")), "--rates", &list.join(","),
        "--thresholds", &thresholds.join(","),
    ]);
    assert_eq!(rc, 1);
}
