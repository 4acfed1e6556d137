use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::{tempdir, TempDir};

use waterscope::eval::ProbabilityMap;
use waterscope::formats;
use waterscope::grid::ValueGrid;
use waterscope::index::{IndexKind, IndexMap};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_waterscope"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Generates a small scene and returns (tempdir, manifest path, truth path).
fn synth_scene(size: u32) -> (TempDir, PathBuf, PathBuf) {
    let dir = tempdir().unwrap();
    let scene_dir = dir.path().join("scene");
    let out = run(&[
        "synth",
        "--out",
        scene_dir.to_str().unwrap(),
        "--size",
        &size.to_string(),
    ]);
    assert_eq!(
        code(&out),
        0,
        "synth failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest = scene_dir.join("manifest.json");
    let truth = scene_dir.join("truth.png");
    assert!(manifest.is_file() && truth.is_file());
    (dir, manifest, truth)
}

#[test]
fn help_and_version_exit_zero() {
    for args in [
        &["--help"][..],
        &["--version"][..],
        &["index", "--help"][..],
    ] {
        let out = run(args);
        assert_eq!(code(&out), 0, "{args:?}");
    }
    let out = run(&["--help"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
}

#[test]
fn usage_errors_exit_one() {
    let cases: &[&[&str]] = &[
        &["--bogus"],
        &["index"],
        &["frobnicate"],
        &["index", "x.json", "--index", "blorp", "--out", "y.tif"],
    ];
    for args in cases {
        assert_eq!(code(&run(args)), 1, "{args:?}");
    }
}

#[test]
fn missing_inputs_exit_two() {
    let dir = tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["index", "nope.json", "--index", "ndwi", "--out", "x.tif"],
    );
    assert_eq!(code(&out), 2);
    let out = run_in(
        dir.path(),
        &["render", "nope.tif", "--palette", "ndwi", "--out", "x.png"],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn end_to_end_chain_succeeds() {
    let (dir, manifest, truth) = synth_scene(64);
    let d = dir.path();
    let m = manifest.to_str().unwrap();

    let out = run_in(d, &["index", m, "--index", "ndwi", "--out", "ndwi.tif"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let payload = stdout_json(&out);
    assert_eq!(payload["kind"], "ndwi");
    assert!(payload["summary"].as_str().unwrap().contains('\u{b1}'));

    let out = run_in(
        d,
        &[
            "segment",
            "ndwi.tif",
            "--method",
            "otsu",
            "--out",
            "water.png",
        ],
    );
    assert_eq!(code(&out), 0);
    let payload = stdout_json(&out);
    assert!(payload["provenance"]["threshold"].is_number());
    assert!(payload["water_fraction"].as_f64().unwrap() > 0.0);

    let out = run_in(
        d,
        &[
            "stats",
            "ndwi.tif",
            "water.png",
            "--sigma",
            "--out",
            "sigma.tif",
        ],
    );
    assert_eq!(code(&out), 0);
    let payload = stdout_json(&out);
    assert_eq!(payload["window"], 5);
    let f = &payload["fractions"];
    let total = f["stable"].as_f64().unwrap()
        + f["transitional"].as_f64().unwrap()
        + f["variable"].as_f64().unwrap();
    assert!((total - 1.0).abs() < 1e-9);

    let out = run_in(
        d,
        &[
            "render",
            "ndwi.tif",
            "--palette",
            "ndwi",
            "--colorbar",
            "--out",
            "ndwi.png",
        ],
    );
    assert_eq!(code(&out), 0);
    assert!(d.join("ndwi.png").is_file());

    let out = run_in(
        d,
        &[
            "render",
            "--overlay",
            "--scene",
            m,
            "--mask",
            truth.to_str().unwrap(),
            "--out",
            "overlay.png",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("overlay.png").is_file());
}

#[test]
fn outputs_are_byte_reproducible() {
    let (dir, manifest, _) = synth_scene(48);
    let d = dir.path();
    let m = manifest.to_str().unwrap();
    for name in ["a", "b"] {
        let tif = format!("{name}.tif");
        let png = format!("{name}.png");
        assert_eq!(
            code(&run_in(d, &["index", m, "--index", "mndwi", "--out", &tif])),
            0
        );
        assert_eq!(
            code(&run_in(
                d,
                &[
                    "render",
                    &tif,
                    "--palette",
                    "mndwi",
                    "--colorbar",
                    "--out",
                    &png
                ]
            )),
            0
        );
    }
    assert_eq!(
        std::fs::read(d.join("a.tif")).unwrap(),
        std::fs::read(d.join("b.tif")).unwrap()
    );
    assert_eq!(
        std::fs::read(d.join("a.json")).unwrap(),
        std::fs::read(d.join("b.json")).unwrap()
    );
    assert_eq!(
        std::fs::read(d.join("a.png")).unwrap(),
        std::fs::read(d.join("b.png")).unwrap()
    );
}

#[test]
fn even_window_is_a_usage_error() {
    let (dir, manifest, truth) = synth_scene(48);
    let d = dir.path();
    let m = manifest.to_str().unwrap();
    assert_eq!(
        code(&run_in(
            d,
            &["index", m, "--index", "ndwi", "--out", "n.tif"]
        )),
        0
    );
    let out = run_in(
        d,
        &[
            "stats",
            "n.tif",
            truth.to_str().unwrap(),
            "--sigma",
            "--window",
            "4",
            "--out",
            "s.tif",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("odd"));
}

#[test]
fn otsu_on_constant_map_exits_three() {
    let dir = tempdir().unwrap();
    let map = IndexMap {
        kind: IndexKind::Ndwi,
        grid: ValueGrid::from_parts(8, 8, vec![0.4; 64], vec![true; 64]).unwrap(),
    };
    let path = dir.path().join("flat.tif");
    formats::write_index_map(&path, &map).unwrap();
    let out = run_in(
        dir.path(),
        &["segment", "flat.tif", "--method", "otsu", "--out", "m.png"],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn preset_equals_explicit_threshold() {
    let (dir, manifest, _) = synth_scene(48);
    let d = dir.path();
    let m = manifest.to_str().unwrap();
    assert_eq!(
        code(&run_in(
            d,
            &["index", m, "--index", "ndwi", "--out", "n.tif"]
        )),
        0
    );
    assert_eq!(
        code(&run_in(
            d,
            &["segment", "n.tif", "--method", "fixed", "--preset", "ndwi", "--out", "p.png"]
        )),
        0
    );
    assert_eq!(
        code(&run_in(
            d,
            &["segment", "n.tif", "--method", "fixed", "--t", "0.2", "--out", "t.png"]
        )),
        0
    );
    assert_eq!(
        std::fs::read(d.join("p.png")).unwrap(),
        std::fs::read(d.join("t.png")).unwrap()
    );
}

#[test]
fn fixed_method_rejects_mixed_flags() {
    let (dir, manifest, _) = synth_scene(48);
    let d = dir.path();
    let m = manifest.to_str().unwrap();
    assert_eq!(
        code(&run_in(
            d,
            &["index", m, "--index", "ndwi", "--out", "n.tif"]
        )),
        0
    );
    let cases: &[&[&str]] = &[
        &["segment", "n.tif", "--method", "fixed", "--out", "x.png"],
        &[
            "segment", "n.tif", "--method", "fixed", "--t", "0.1", "--bins", "64", "--out", "x.png",
        ],
        &[
            "segment", "n.tif", "--method", "otsu", "--t", "0.1", "--out", "x.png",
        ],
    ];
    for args in cases {
        assert_eq!(code(&run_in(d, args)), 1, "{args:?}");
    }
}

#[test]
fn sampling_is_seed_deterministic_and_shortfall_is_not_fatal() {
    let (dir, manifest, truth) = synth_scene(96);
    let d = dir.path();
    let m = manifest.to_str().unwrap();
    let t = truth.to_str().unwrap();
    let args = [
        "sample",
        m,
        t,
        "--count",
        "4",
        "--size",
        "32",
        "--min-water",
        "0.05",
        "--seed",
        "9",
    ];
    let first = run_in(d, &args);
    assert_eq!(code(&first), 0);
    let second = run_in(d, &args);
    assert_eq!(first.stdout, second.stdout);
    let payload = stdout_json(&first);
    assert_eq!(payload["patches"].as_array().unwrap().len(), 4);
    assert_eq!(payload["shortfall"], false);

    // a full-scene patch can never be all water, so the budget runs out
    let out = run_in(
        d,
        &[
            "sample",
            m,
            t,
            "--count",
            "2",
            "--size",
            "96",
            "--min-water",
            "1.0",
            "--seed",
            "9",
            "--max-attempts",
            "50",
        ],
    );
    assert_eq!(code(&out), 0);
    let payload = stdout_json(&out);
    assert_eq!(payload["shortfall"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn eval_reports_perfect_agreement_for_identical_masks() {
    let (dir, _, truth) = synth_scene(48);
    let t = truth.to_str().unwrap();
    let out = run_in(dir.path(), &["eval", t, t]);
    assert_eq!(code(&out), 0);
    let payload = stdout_json(&out);
    for metric in [
        "accuracy",
        "precision",
        "recall",
        "specificity",
        "iou",
        "dice",
    ] {
        assert_eq!(payload[metric].as_f64().unwrap(), 1.0, "{metric}");
    }
}

#[test]
fn loss_on_perfect_probabilities_is_tiny() {
    let (dir, _, truth) = synth_scene(48);
    let d = dir.path();
    let (data, w, h) = formats::read_gray8_png(&truth).unwrap();
    let probs: Vec<f64> = data
        .iter()
        .map(|&b| if b == 255 { 1.0 } else { 0.0 })
        .collect();
    let map = ProbabilityMap::from_parts(w, h, probs, vec![true; w * h]).unwrap();
    formats::write_probability_tiff(&d.join("p.tif"), &map).unwrap();
    let out = run_in(
        d,
        &["eval", "--loss", "--prob", "p.tif", truth.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let payload = stdout_json(&out);
    assert!(payload["total"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let (dir, manifest, truth) = synth_scene(48);
    let d = dir.path();
    let m = manifest.to_str().unwrap();
    assert_eq!(
        code(&run_in(
            d,
            &["index", m, "--index", "ndwi", "--out", "n.tif"]
        )),
        0
    );
    std::fs::write(d.join("cfg.json"), r#"{"window": 3, "pretty": true}"#).unwrap();

    let out = run_in(
        d,
        &[
            "stats",
            "n.tif",
            truth.to_str().unwrap(),
            "--sigma",
            "--out",
            "s.tif",
            "--config",
            "cfg.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    // pretty from the config: human line, not JSON
    assert!(serde_json::from_slice::<Value>(&out.stdout).is_err());
    assert!(String::from_utf8_lossy(&out.stdout).contains("window 3"));

    let out = run_in(
        d,
        &[
            "stats",
            "n.tif",
            truth.to_str().unwrap(),
            "--sigma",
            "--window",
            "7",
            "--out",
            "s7.tif",
            "--config",
            "cfg.json",
        ],
    );
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("window 7"));

    std::fs::write(d.join("bad.json"), r#"{"windw": 3}"#).unwrap();
    let out = run_in(
        d,
        &[
            "stats", "n.tif", "x.png", "--sigma", "--out", "s.tif", "--config", "bad.json",
        ],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn mismatched_palette_warns_on_stderr_but_succeeds() {
    let (dir, manifest, _) = synth_scene(48);
    let d = dir.path();
    let m = manifest.to_str().unwrap();
    assert_eq!(
        code(&run_in(
            d,
            &["index", m, "--index", "ndwi", "--out", "n.tif"]
        )),
        0
    );
    let out = run_in(
        d,
        &[
            "render",
            "n.tif",
            "--palette",
            "turbidity",
            "--out",
            "n.png",
        ],
    );
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn custom_palette_json_overrides_builtin() {
    let (dir, manifest, _) = synth_scene(32);
    let d = dir.path();
    let m = manifest.to_str().unwrap();
    assert_eq!(
        code(&run_in(
            d,
            &["index", m, "--index", "ndwi", "--out", "n.tif"]
        )),
        0
    );
    let custom = waterscope::palette::for_index(IndexKind::Ndwi).to_json();
    std::fs::write(d.join("pal.json"), custom).unwrap();
    let out = run_in(
        d,
        &["render", "n.tif", "--palette", "pal.json", "--out", "c.png"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = run_in(
        d,
        &[
            "render",
            "n.tif",
            "--palette",
            "broken.json",
            "--out",
            "x.png",
        ],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn rel_bathymetry_respects_mask_restriction() {
    let (dir, manifest, truth) = synth_scene(64);
    let d = dir.path();
    let m = manifest.to_str().unwrap();
    let t = truth.to_str().unwrap();
    assert_eq!(
        code(&run_in(
            d,
            &["index", m, "--index", "rel_bathymetry", "--out", "all.tif"]
        )),
        0
    );
    assert_eq!(
        code(&run_in(
            d,
            &[
                "index",
                m,
                "--index",
                "rel_bathymetry",
                "--mask",
                t,
                "--out",
                "wet.tif"
            ]
        )),
        0
    );
    let all = formats::read_index_map(&d.join("all.tif")).unwrap();
    let wet = formats::read_index_map(&d.join("wet.tif")).unwrap();
    // restricting B08_max to water pixels rescales the depth proxy
    assert!(wet.grid.defined_count() < all.grid.defined_count());
}
