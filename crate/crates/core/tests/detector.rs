mod common;

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use odsg::detector::{finite_diff_at, Capabilities, SubprocessAdapter, ADAPTER_PATH_ENV};
use odsg::synthetic::{generate_scene, SceneSpec};
use odsg::{detect, input_gradient, odsmoothgrad, DetectorAdapter, Error, Image, SaliencyTarget, SmoothGradConfig, SoftMomentDetector};

fn scene(seed: u64) -> Image {
    generate_scene(&SceneSpec {
        seed,
        ..Default::default()
    })
    .unwrap()
    .0
}

#[test]
fn gradients_vanish_outside_the_window() {
    let det = SoftMomentDetector::default();
    let margin = det.config().window_margin as f64 + 2.0;
    for seed in 0..4 {
        let image = scene(seed);
        for d in detect(&det, &image).unwrap() {
            for t in SaliencyTarget::ALL {
                let g = input_gradient(&det, &image, &d, t).unwrap();
                for r in 0..image.height() {
                    for c in 0..image.width() {
                        let (x, y) = (c as f64 + 0.5, r as f64 + 0.5);
                        let outside = x < d.bbox.xmin - margin
                            || x > d.bbox.xmax + margin
                            || y < d.bbox.ymin - margin
                            || y > d.bbox.ymax + margin;
                        if outside {
                            assert_eq!(g.get(r, c, 0), 0.0, "seed {seed} {t} at ({r}, {c})");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn xmax_agrees_at_two_step_sizes() {
    let det = SoftMomentDetector::default();
    let image = scene(3);
    let smoothed = det.smoothed_intensity(&image);
    let w = image.width();
    let d = &detect(&det, &image).unwrap()[0];
    let g = input_gradient(&det, &image, d, SaliencyTarget::Xmax).unwrap();
    let row = ((d.bbox.ymin + d.bbox.ymax) / 2.0) as usize;
    let entries: Vec<_> = ((d.bbox.xmin as usize)..(d.bbox.xmax.ceil() as usize))
        .filter(|&c| image.get(row, c, 0) > 0.01 && det.structurally_stable(&smoothed, w, row, c, 1e-2))
        .map(|c| (row, c, 0))
        .collect();
    assert!(entries.len() >= 5);
    for h in [1e-3, 1e-4] {
        let fd = finite_diff_at(&det, &image, d, SaliencyTarget::Xmax, h, &entries).unwrap();
        for (&(r, c, ch), v) in entries.iter().zip(fd) {
            let a = g.get(r, c, ch);
            assert!((a - v).abs() <= 1e-3 * a.abs().max(1e-6), "h {h} col {c}: {a} vs {v}");
        }
    }
}

#[test]
fn rgb_and_gray_give_the_same_boxes() {
    let det = SoftMomentDetector::default();
    let gray = scene(4);
    let rgb = Image::new(
        gray.height(),
        gray.width(),
        3,
        gray.pixels().iter().flat_map(|&v| [v, v, v]).collect(),
    )
    .unwrap();
    let a = detect(&det, &gray).unwrap();
    let b = detect(&det, &rgb).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x.bbox.xmin - y.bbox.xmin).abs() < 1e-9);
        assert!((x.score - y.score).abs() < 1e-12);
    }
}

const TOY_PLUGIN: &str = r#"#!/usr/bin/env python3
import json, sys
op = sys.argv[1]
req = json.load(sys.stdin)
img = req["image"]
h, w, c = img["height"], img["width"], img["channels"]
px = img["pixels"]
fg = [(r, k) for r in range(h) for k in range(w) if sum(px[(r * w + k) * c + j] for j in range(c)) / c > 0.5]
if op == "detect":
    if not fg:
        print(json.dumps({"detections": []}))
    else:
        rs = [r for r, _ in fg]; ks = [k for _, k in fg]
        box = {"xmin": min(ks), "ymin": min(rs), "xmax": max(ks) + 1, "ymax": max(rs) + 1}
        print(json.dumps({"detections": [{"box": box, "class_id": 2, "score": 0.95}]}))
elif op == "gradient":
    grad = [0.0] * (h * w * c)
    for r, k in fg:
        grad[(r * w + k) * c] = 1.0 if req["target"] == "xmin" else 0.5
    print(json.dumps({"gradient": grad}))
else:
    sys.stderr.write("unknown op " + op)
    sys.exit(2)
"#;

fn install_plugin(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(format!("odsg-adapter-{name}"));
    std::fs::write(&path, body).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

fn have_python() -> bool {
    std::process::Command::new("python3").arg("--version").output().is_ok_and(|o| o.status.success())
}

fn square() -> Image {
    let mut img = Image::zeros(24, 24, 1).unwrap();
    for r in 6..14 {
        for c in 8..18 {
            img.set(r, c, 0, 0.9);
        }
    }
    img
}

#[test]
fn subprocess_adapter_round_trip() {
    if !have_python() {
        eprintln!("python3 unavailable; skipping plugin test");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let exe = install_plugin(tmp.path(), "toy", TOY_PLUGIN);
    let adapter = SubprocessAdapter::new("toy", &exe);
    assert_eq!(adapter.capabilities(), Capabilities { reentrant_gradients: false });

    let img = square();
    let dets = detect(&adapter, &img).unwrap();
    assert_eq!(dets.len(), 1);
    assert_eq!((dets[0].bbox.xmin, dets[0].bbox.ymin, dets[0].bbox.xmax, dets[0].bbox.ymax), (8.0, 6.0, 18.0, 14.0));
    assert_eq!(dets[0].class_id, 2);
    let g = input_gradient(&adapter, &img, &dets[0], SaliencyTarget::Xmin).unwrap();
    assert_eq!(g.get(6, 8, 0), 1.0);
    assert_eq!(g.get(0, 0, 0), 0.0);

    let cfg = SmoothGradConfig {
        n_samples: 3,
        sigma: 0.01,
        ..Default::default()
    };
    let maps = odsmoothgrad(&adapter, &img, &cfg).unwrap();
    assert_eq!(maps[0].targets[0].matched_samples, 3);
    assert_eq!(maps[0].map(SaliencyTarget::Xmin).unwrap().get(10, 10), 1.0);
}

#[test]
fn subprocess_failures_surface_as_adapter_errors() {
    if !have_python() {
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let exe = install_plugin(tmp.path(), "broken", "#!/bin/sh\necho boom >&2\nexit 1\n");
    match detect(&SubprocessAdapter::new("broken", &exe), &square()) {
        Err(Error::Adapter { name, message }) => {
            assert_eq!(name, "broken");
            assert!(message.contains("boom"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let garbage = install_plugin(tmp.path(), "garbage", "#!/bin/sh\ncat >/dev/null\necho nope\n");
    assert!(matches!(
        detect(&SubprocessAdapter::new("garbage", &garbage), &square()),
        Err(Error::Adapter { .. })
    ));
}

#[test]
fn cli_discovers_plugins_on_the_adapter_path() {
    if !have_python() {
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let plugins = tmp.path().join("plugins");
    std::fs::create_dir(&plugins).unwrap();
    install_plugin(&plugins, "toy", TOY_PLUGIN);
    square().write_png(tmp.path().join("sq.png")).unwrap();

    let out = common::odsg()
        .args(["saliency", "sq.png", "--adapter", "toy", "--n", "2", "--out", "o"])
        .env(ADAPTER_PATH_ENV, &plugins)
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let results = common::read_json(tmp.path().join("o/results.json"));
    common::assert_schema("results", &results);
    assert_eq!(results["config"]["adapter"], "toy");
    assert_eq!(results["images"][0]["detections"][0]["class_id"], 2);

    let missing = common::odsg()
        .args(["saliency", "sq.png", "--adapter", "absent"])
        .env(ADAPTER_PATH_ENV, &plugins)
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}
