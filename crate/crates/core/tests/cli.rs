mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use thermofuse::calibration::RigCalibration;
use thermofuse::formats;
use thermofuse::simulation::{simulate, SimulatedRig, DEFAULT_THERMAL};

use common::*;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_thermofuse"));
    c.env_remove(thermofuse::cli::CONFIG_ENV);
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(
        err.trim_end().lines().count(),
        1,
        "diagnostic not one line: {err:?}"
    );
    err
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/sample")
        .join(name)
}

fn report_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn help_on_every_subcommand() {
    assert!(ok(&["--help"]).contains("simulate"));
    for cmd in ["simulate", "calibrate", "fuse", "evaluate", "track"] {
        assert!(ok(&[cmd, "--help"]).contains("Usage"), "{cmd}");
    }
}

#[test]
fn usage_errors_are_one_line() {
    let err = fails(&["fuse", "--bogus"]);
    assert!(err.contains("--bogus"), "{err}");
    fails(&["frobnicate"]);
    fails(&[]);
    fails(&[
        "fuse",
        "--method",
        "cubic",
        "--calib",
        "a",
        "--depth",
        "b",
        "--thermal",
        "c",
        "--out",
        "d",
    ]);
}

#[test]
fn missing_input_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let err = fails(&[
        "fuse",
        "--calib",
        p(&sample("calib.txt")),
        "--depth",
        p(&sample("depth.pgm")),
        "--thermal",
        p(&missing),
        "--out",
        p(&dir.path().join("f.csv")),
    ]);
    assert!(err.contains("nope.csv"), "{err}");
}

#[test]
fn inconsistent_dimensions_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("small.csv");
    fs::write(&small, "20,21\n22,23\n").unwrap();
    let err = fails(&[
        "fuse",
        "--calib",
        p(&sample("calib.txt")),
        "--depth",
        p(&sample("depth.pgm")),
        "--thermal",
        p(&small),
        "--out",
        p(&dir.path().join("f.csv")),
    ]);
    assert!(err.contains("2x2"), "{err}");
}

#[test]
fn nearest_on_shipped_sample_has_depth_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fused.csv");
    ok(&[
        "fuse",
        "--method",
        "nearest",
        "--calib",
        p(&sample("calib.txt")),
        "--depth",
        p(&sample("depth.pgm")),
        "--thermal",
        p(&sample("thermal.csv")),
        "--out",
        p(&out),
        "--vis",
        p(&dir.path().join("fused.pgm")),
    ]);
    let fused = formats::load_raster_csv::<f64>(&out).unwrap();
    let depth = formats::load_depth::<f64>(&sample("depth.pgm")).unwrap();
    assert_eq!(fused.dims(), depth.dims());
    assert!(fs::read(dir.path().join("fused.pgm"))
        .unwrap()
        .starts_with(b"P5\n# linear"));
}

#[test]
fn evaluating_truth_against_itself_gives_zero() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.txt");
    let truth = sample("truth_thermal.csv");
    let text = ok(&[
        "evaluate",
        "--fused",
        p(&truth),
        "--truth",
        p(&truth),
        "--report",
        p(&report),
    ]);
    assert_eq!(report_value(&text, "mae"), 0.0);
    assert_eq!(
        report_value(&fs::read_to_string(&report).unwrap(), "mae"),
        0.0
    );
    let curve = fs::read_to_string(dir.path().join("r.curve.csv")).unwrap();
    assert!(curve.starts_with("rank,cumulative_error\n"));
    assert!(curve.lines().skip(1).all(|l| l.ends_with(",0")));
}

#[test]
fn simulate_fuse_evaluate_reproduces_error_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(&["simulate", "--out", p(&sim)]);
    for f in [
        "truth_thermal.csv",
        "truth_depth.pgm",
        "depth.pgm",
        "thermal.csv",
        "calib.txt",
    ] {
        assert!(sim.join(f).exists(), "{f}");
    }
    let mut mae = std::collections::HashMap::new();
    for method in ["nearest", "bilinear", "depth", "segment"] {
        let fused = dir.path().join(format!("{method}.csv"));
        ok(&[
            "fuse",
            "--method",
            method,
            "--calib",
            p(&sim.join("calib.txt")),
            "--depth",
            p(&sim.join("depth.pgm")),
            "--thermal",
            p(&sim.join("thermal.csv")),
            "--out",
            p(&fused),
        ]);
        let report = dir.path().join(format!("{method}.txt"));
        let text = ok(&[
            "evaluate",
            "--fused",
            p(&fused),
            "--truth",
            p(&sim.join("truth_thermal.csv")),
            "--report",
            p(&report),
        ]);
        mae.insert(method, report_value(&text, "mae"));
    }
    assert!(mae["segment"] < mae["depth"], "{mae:?}");
    assert!(
        mae["depth"] < mae["bilinear"] && mae["depth"] < mae["nearest"],
        "{mae:?}"
    );
    assert!(mae["segment"] / mae["nearest"] <= 0.25, "{mae:?}");
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&[
        "simulate",
        "--out",
        p(&a),
        "--seed",
        "9",
        "--ir-size",
        "20x15",
    ]);
    ok(&[
        "simulate",
        "--out",
        p(&b),
        "--seed",
        "9",
        "--ir-size",
        "20x15",
    ]);
    for f in ["depth.pgm", "thermal.csv", "calib.txt", "truth_thermal.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let thermal = formats::load_raster_csv::<f64>(&a.join("thermal.csv")).unwrap();
    assert_eq!(thermal.dims(), (20, 15));
}

#[test]
fn config_file_env_var_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let defaults = ok(&["--print-defaults"]);
    assert!(defaults.contains("method = segment"));
    let cfg = dir.path().join("tf.conf");
    fs::write(
        &cfg,
        defaults.replace("method = segment", "method = nearest"),
    )
    .unwrap();

    let fuse = |extra: &[&str], out: &Path, env: Option<&Path>| {
        let mut args = vec![
            "fuse",
            "--calib",
            p(&sample("calib.txt")).to_owned().leak(),
            "--depth",
            p(&sample("depth.pgm")).to_owned().leak(),
            "--thermal",
            p(&sample("thermal.csv")).to_owned().leak(),
            "--out",
            p(out).to_owned().leak(),
        ];
        args.extend_from_slice(extra);
        let mut c = bin();
        if let Some(e) = env {
            c.env(thermofuse::cli::CONFIG_ENV, e);
        }
        let o = c.args(&args).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    let explicit = dir.path().join("explicit.csv");
    assert!(fuse(&["--method", "nearest"], &explicit, None).contains("method = nearest"));
    let from_file = dir.path().join("file.csv");
    assert!(fuse(&["--config", p(&cfg)], &from_file, None).contains("method = nearest"));
    let from_env = dir.path().join("env.csv");
    assert!(fuse(&[], &from_env, Some(&cfg)).contains("method = nearest"));
    assert_eq!(fs::read(&explicit).unwrap(), fs::read(&from_file).unwrap());
    assert_eq!(fs::read(&explicit).unwrap(), fs::read(&from_env).unwrap());
    let overridden = dir.path().join("over.csv");
    assert!(
        fuse(&["--set", "method=bilinear"], &overridden, Some(&cfg)).contains("method = bilinear")
    );
    assert!(fuse(&["--method", "segment"], &overridden, Some(&cfg)).contains("method = segment"));

    fs::write(&cfg, "gate = 3\nunknown_key = 1\n").unwrap();
    let o = bin()
        .args([
            "--config",
            p(&cfg),
            "simulate",
            "--out",
            p(&dir.path().join("x")),
        ])
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn calibrate_recovers_a_known_rotation() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs");
    fs::create_dir(&pairs).unwrap();
    let (tof, ir) = calibration_rig();
    let ext = rig_extrinsics(0.05, -0.03, 0.04);
    for (i, c) in target_grid().into_iter().enumerate() {
        let (d, t, _) = target_pair(&ext, &tof, &ir, c, 12.0);
        formats::save_depth(&d, &pairs.join(format!("{i:03}_depth.pgm"))).unwrap();
        formats::save_raster_csv(&t, &pairs.join(format!("{i:03}_thermal.csv"))).unwrap();
    }
    let intrinsics = RigCalibration {
        ir,
        tof,
        ext: rig_extrinsics(0.0, 0.0, 0.0),
    };
    formats::save_calibration(&intrinsics, &pairs.join("intrinsics.txt")).unwrap();
    let out = dir.path().join("calib.txt");
    let text = ok(&[
        "calibrate",
        "--pairs",
        p(&pairs),
        "--translation",
        "0.05,0,0",
        "--out",
        p(&out),
    ]);
    assert!(text.contains("pairs = 9"), "{text}");
    let calib = formats::load_calibration::<f64>(&out).unwrap();
    assert_eq!(calib.ext.t, ext.t);
    for (a, b) in calib
        .ext
        .angles
        .as_array()
        .iter()
        .zip(ext.angles.as_array())
    {
        assert!((a - b).abs() < 0.02, "{a} vs {b}");
    }
}

#[test]
fn track_finds_the_person() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    fs::create_dir(&frames).unwrap();
    let scene = sequence_scene(None, 0);
    let rig = SimulatedRig::for_scene(&scene, DEFAULT_THERMAL).unwrap();
    let calib = RigCalibration {
        ir: rig.k_ir,
        tof: rig.k_tof,
        ext: rig.ext,
    };
    let calib_path = dir.path().join("calib.txt");
    formats::save_calibration(&calib, &calib_path).unwrap();
    for i in 0..25usize {
        let spec = if i < 5 {
            sequence_scene(None, i as u64)
        } else {
            sequence_scene(Some(i - 5), i as u64)
        };
        let f = simulate(&spec, DEFAULT_THERMAL).unwrap();
        formats::save_depth(&f.depth, &frames.join(format!("{i:04}_depth.pgm"))).unwrap();
        formats::save_raster_csv(&f.thermal, &frames.join(format!("{i:04}_thermal.csv"))).unwrap();
    }
    let out = dir.path().join("tracks.csv");
    let text = ok(&[
        "track",
        "--calib",
        p(&calib_path),
        "--frames",
        p(&frames),
        "--out",
        p(&out),
        "--n-init",
        "5",
    ]);
    assert!(text.contains("person_tracks = 1"), "{text}");
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("frame,track_id,u,v,mean_temp_C,is_person")
    );
    let person_rows = lines.filter(|l| l.ends_with(",1")).count();
    assert!(person_rows >= 18, "{csv}");
}
