//! Black-box tests of the `ads` binary: artifact layout, exit codes,
//! determinism of written files, and field loading by extension.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ads(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ads"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn sphere_spec(dir: &Path) -> PathBuf {
    let path = dir.join("sphere.json");
    std::fs::write(&path, r#"{"type": "sphere", "center": [0, 0, 0], "radius": 0.6}"#)
        .unwrap();
    path
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn sample_writes_artifacts_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let spec = sphere_spec(dir.path());
    let spec = spec.to_str().unwrap();

    let out1 = dir.path().join("run1");
    let status = ads(&["sample", "--field", spec, "--tau", "0.08", "-o", out1.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for name in ["samples.ply", "mesh.obj", "stats.json", "iterations.csv"] {
        assert!(out1.join(name).is_file(), "missing {name}");
    }
    // No scaffold dump unless asked.
    assert!(!out1.join("scaffold.csv").exists());

    let out2 = dir.path().join("run2");
    let status = ads(&["sample", "--field", spec, "--tau", "0.08", "-o", out2.to_str().unwrap()]);
    assert!(status.status.success());
    for name in ["samples.ply", "mesh.obj", "iterations.csv"] {
        assert_eq!(read(&out1.join(name)), read(&out2.join(name)), "{name} differs across reruns");
    }
    // stats.json matches too once timings are stripped.
    let strip = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_slice(&read(p)).unwrap();
        v.as_object_mut().unwrap().remove("timings_ms");
        v
    };
    assert_eq!(strip(&out1.join("stats.json")), strip(&out2.join("stats.json")));
}

#[test]
fn sample_dump_scaffold_writes_labeled_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let spec = sphere_spec(dir.path());
    let out = dir.path().join("out");
    let status = ads(&[
        "sample",
        "--field",
        spec.to_str().unwrap(),
        "--tau",
        "0.1",
        "-o",
        out.to_str().unwrap(),
        "--dump-scaffold",
    ]);
    assert!(status.status.success());
    let csv = String::from_utf8(read(&out.join("scaffold.csv"))).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("vertex,x,y,z,label"));
    assert!(lines.clone().count() > 10_000);
    assert!(lines.all(|l| l.ends_with(",inside") || l.ends_with(",outside")));
}

#[test]
fn missing_field_exits_one_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let status = ads(&[
        "sample",
        "--field",
        dir.path().join("missing.json").to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(1));
    assert!(!out.exists(), "failed run must not leave partial outputs");
    assert!(!status.stderr.is_empty());
}

#[test]
fn iteration_cap_exits_two_but_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = sphere_spec(dir.path());
    let out = dir.path().join("capped");
    let status = ads(&[
        "sample",
        "--field",
        spec.to_str().unwrap(),
        "--tau",
        "0.05",
        "--max-iterations",
        "1",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(2));
    assert!(out.join("samples.ply").is_file());
    let stats: serde_json::Value =
        serde_json::from_slice(&read(&out.join("stats.json"))).unwrap();
    assert_eq!(stats["totals"]["capped"], serde_json::Value::Bool(true));
}

#[test]
fn compare_method_filter_limits_rows() {
    let dir = tempfile::tempdir().unwrap();
    let spec = sphere_spec(dir.path());
    let out = dir.path().join("cmp");
    let status = ads(&[
        "compare",
        "--field",
        spec.to_str().unwrap(),
        "--taus",
        "0.08",
        "--methods",
        "ads",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = String::from_utf8(read(&out.join("comparison.csv"))).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "header plus exactly one ads row:\n{csv}");
    assert!(lines[0].starts_with("method,resolution,chamfer_x1000"));
    assert!(lines[1].starts_with("ads,tau=0.08,"));
    assert!(out.join("comparison.json").is_file());
}

#[test]
fn subsample_thins_cloud_and_keeps_normals() {
    let dir = tempfile::tempdir().unwrap();
    let spec = sphere_spec(dir.path());
    let out = dir.path().join("full");
    assert!(ads(&[
        "sample",
        "--field",
        spec.to_str().unwrap(),
        "--tau",
        "0.1",
        "-o",
        out.to_str().unwrap()
    ])
    .status
    .success());

    let thin = dir.path().join("thin");
    let status = ads(&[
        "subsample",
        "--input",
        out.join("samples.ply").to_str().unwrap(),
        "--keep-fraction",
        "0.4",
        "-o",
        thin.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let (full, _) = ads::io::read_points_ply(&out.join("samples.ply")).unwrap();
    let (kept, normals) = ads::io::read_points_ply(&thin.join("subsampled.ply")).unwrap();
    assert_eq!(kept.len(), (0.4 * full.len() as f64).ceil() as usize);
    assert_eq!(normals.map(|n| n.len()), Some(kept.len()));
}

#[test]
fn mesh_opt_round_trips_through_obj() {
    let dir = tempfile::tempdir().unwrap();
    let spec = sphere_spec(dir.path());
    let out = dir.path().join("full");
    assert!(ads(&[
        "sample",
        "--field",
        spec.to_str().unwrap(),
        "--tau",
        "0.1",
        "-o",
        out.to_str().unwrap()
    ])
    .status
    .success());

    let opt = dir.path().join("opt");
    let status = ads(&[
        "mesh-opt",
        "--input",
        out.join("mesh.obj").to_str().unwrap(),
        "--min-edge-length",
        "0.05",
        "-o",
        opt.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&read(&opt.join("mesh_opt.json"))).unwrap();
    assert_eq!(report["before"]["closed_manifold"], serde_json::Value::Bool(true));
    assert_eq!(report["after"]["closed_manifold"], serde_json::Value::Bool(true));
    assert!(report["stats"]["collapsed_edges"].as_u64().unwrap() > 0);
    assert!(opt.join("optimized.obj").is_file());
}

#[test]
fn obj_field_loads_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    // A cube, quads wound outward; exercises the OBJ loader and the winding
    // number field end to end.
    let obj = dir.path().join("cube.obj");
    std::fs::write(
        &obj,
        "v -0.5 -0.5 -0.5\nv 0.5 -0.5 -0.5\nv -0.5 0.5 -0.5\nv 0.5 0.5 -0.5\n\
         v -0.5 -0.5 0.5\nv 0.5 -0.5 0.5\nv -0.5 0.5 0.5\nv 0.5 0.5 0.5\n\
         f 1 5 7 3\nf 2 4 8 6\nf 1 2 6 5\nf 3 7 8 4\nf 1 3 4 2\nf 5 6 8 7\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = ads(&[
        "sample",
        "--field",
        obj.to_str().unwrap(),
        "--tau",
        "0.1",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let (points, _) = ads::io::read_points_ply(&out.join("samples.ply")).unwrap();
    assert!(points.len() > 1_000);
    // Everything sampled must lie on the cube boundary.
    for p in points {
        let m = p.x.abs().max(p.y.abs()).max(p.z.abs());
        assert!((m - 0.5).abs() < 0.01, "{p:?} off the cube surface");
    }
}

#[test]
fn bad_thread_env_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = sphere_spec(dir.path());
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_ads"))
        .env("ADS_THREADS", "a lot")
        .args(["sample", "--field", spec.to_str().unwrap(), "-o", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&status.stderr).contains("ADS_THREADS"));

    // A valid value works and caps the pool without changing results.
    let status = Command::new(env!("CARGO_BIN_EXE_ads"))
        .env("ADS_THREADS", "1")
        .args([
            "sample",
            "--field",
            spec.to_str().unwrap(),
            "--tau",
            "0.1",
            "-o",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(status.status.success());
}
