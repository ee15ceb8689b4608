use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wand_core::{obj, shapes};

fn wand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wand"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write_cylinder(dir: &Path) -> String {
    let p = dir.join("cyl.obj");
    fs::write(
        &p,
        obj::mesh_to_obj(&shapes::cylinder::<f64>(0.5, 2.0, 24, 10, true)),
    )
    .unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn select_writes_patch_uv_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = write_cylinder(tmp.path());
    let out = tmp.path().join("sel");
    let o = wand(&[
        "select",
        "--mesh",
        &mesh,
        "--seed",
        "42",
        "--selector",
        "greedy",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let patch: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("patch.json")).unwrap()).unwrap();
    assert_eq!(patch["seed"], 42);
    assert!(patch["faces"].as_array().unwrap().iter().any(|f| f == 42));
    let uv = fs::read_to_string(out.join("out_uv.obj")).unwrap();
    assert!(uv.lines().any(|l| l.starts_with("vt ")));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["selector"]["selector"], "greedy");
    assert!(report["n_faces"].as_u64().unwrap() > 0);
    assert!(report["seg_time"].as_f64().unwrap() >= 0.0);

    let again = tmp.path().join("param_uv.obj");
    let o = wand(&[
        "param",
        "--mesh",
        &mesh,
        "--patch",
        out.join("patch.json").to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(again).unwrap().contains("vt "));
}

#[test]
fn bad_flags_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = write_cylinder(tmp.path());
    for args in [
        vec![
            "select",
            "--mesh",
            &mesh,
            "--seed",
            "1",
            "--selector",
            "magic",
        ],
        vec!["select", "--mesh", &mesh, "--seed", "one"],
        vec![
            "select",
            "--mesh",
            &mesh,
            "--seed",
            "1",
            "--config",
            "{not json",
        ],
        vec![
            "select",
            "--mesh",
            &mesh,
            "--seed",
            "1",
            "--config",
            "{\"nope\": 3}",
        ],
        vec!["eval", "--dataset", ".", "--selectors", "greedy,magic"],
        vec!["frobnicate"],
    ] {
        let o = wand(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn runtime_failures_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = write_cylinder(tmp.path());
    let missing = tmp.path().join("missing.obj");
    for args in [
        vec!["select", "--mesh", missing.to_str().unwrap(), "--seed", "1"],
        vec![
            "select",
            "--mesh",
            &mesh,
            "--seed",
            "99999",
            "--out",
            tmp.path().to_str().unwrap(),
        ],
    ] {
        let o = wand(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
}

#[test]
fn eval_writes_one_row_per_seed_and_selector() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let o = wand(&[
        "gen-dataset",
        "--out",
        data.to_str().unwrap(),
        "--count",
        "2",
        "--primitives",
        "2",
        "--max-seeds",
        "2",
        "--rng-seed",
        "17",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let seeds: usize = ["shape_00000017", "shape_00000018"]
        .iter()
        .map(|s| {
            let v: Vec<serde_json::Value> =
                serde_json::from_str(&fs::read_to_string(data.join(s).join("seeds.json")).unwrap())
                    .unwrap();
            v.len()
        })
        .sum();

    let out = tmp.path().join("bench");
    let o = wand(&[
        "eval",
        "--dataset",
        data.to_str().unwrap(),
        "--selectors",
        "greedy,logmap",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(csv.lines().count() - 1, seeds * 2);
    assert!(out.join("bench.json").exists());
    assert!(out.join("timings.csv").exists());

    let empty = tmp.path().join("empty");
    let o = wand(&[
        "eval",
        "--dataset",
        data.to_str().unwrap(),
        "--selectors",
        "",
        "--out",
        empty.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(empty.join("records.csv"))
            .unwrap()
            .lines()
            .count(),
        1
    );
}

#[test]
fn gen_dataset_honours_rng_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let d = tmp.path().join(name);
        let o = wand(&[
            "gen-dataset",
            "--out",
            d.to_str().unwrap(),
            "--count",
            "1",
            "--primitives",
            "2",
            "--rng-seed",
            seed,
        ]);
        assert!(o.status.success());
        fs::read_to_string(
            d.join(format!("shape_{:08}", seed.parse::<u64>().unwrap()))
                .join("mesh.obj"),
        )
        .unwrap()
    };
    assert_eq!(run("a", "5"), run("b", "5"));
    assert_ne!(run("c", "5"), run("d", "6"));
}
