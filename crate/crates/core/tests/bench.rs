use std::fs;
use std::path::Path;

use wand_core::bench::{run_benchmark, write_outputs, BenchOutput};
use wand_core::dataset::{generate_dataset, read_shape, DatasetSpec, GenConfig};
use wand_core::distortion::median;
use wand_core::postprocess::FinalizeConfig;
use wand_core::selectors::{GreedyConfig, Selector};

fn small_dataset(root: &Path, config: GenConfig) {
    let mut spec = DatasetSpec::new(vec![3, 11], 3);
    spec.config = config;
    spec.max_seeds = 2;
    generate_dataset(root, &spec).unwrap();
}

fn greedy() -> Selector {
    Selector::Greedy(GreedyConfig::default())
}

fn run(root: &Path, out: &Path, selectors: &[Selector]) -> BenchOutput {
    let r = run_benchmark(
        root,
        selectors,
        &[0.01, 0.05, 0.1],
        &FinalizeConfig::default(),
    )
    .unwrap();
    write_outputs(out, &r).unwrap();
    r
}

#[test]
fn rerun_reproduces_records_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_dataset(&data, GenConfig::default());
    let sels = [greedy(), Selector::from_name("logmap").unwrap()];
    let a = run(&data, &tmp.path().join("a"), &sels);
    run(&data, &tmp.path().join("b"), &sels);
    let ca = fs::read(tmp.path().join("a/records.csv")).unwrap();
    let cb = fs::read(tmp.path().join("b/records.csv")).unwrap();
    assert_eq!(ca, cb);

    let seeds: usize = a.summary.failures.len()
        + ["shape_00000003", "shape_00000011"]
            .iter()
            .map(|s| read_shape::<f64>(&data.join(s)).unwrap().seeds.len())
            .sum::<usize>()
            * sels.len();
    assert_eq!(a.records.len(), seeds);
    assert!(a.summary.failures.is_empty(), "{:?}", a.summary.failures);
    for r in &a.records {
        for m in [r.accuracy, r.map, r.f1].into_iter().flatten() {
            assert!((0.0..=1.0).contains(&m));
        }
        assert!(r.percent_di.iter().all(|p| (0.0..=100.0).contains(p)));
        assert!(r.percent_di.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn empty_selector_list_gives_empty_table() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(tmp.path(), &tmp.path().join("out"), &[]);
    assert!(r.records.is_empty());
    assert!(r.summary.medians.is_empty());
    let csv = fs::read_to_string(tmp.path().join("out/records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn medians_match_recomputation_from_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_dataset(&data, GenConfig::default());
    let r = run(&data, &tmp.path().join("out"), &[greedy()]);

    let mut rd = csv::Reader::from_path(tmp.path().join("out/records.csv")).unwrap();
    let headers = rd.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    let values = |c: usize| -> Vec<f64> { rows.iter().filter_map(|r| r[c].parse().ok()).collect() };

    let m = &r.summary.medians[0];
    assert_eq!(m.samples, rows.len());
    assert_eq!(m.accuracy, Some(median(&values(col("accuracy")))));
    assert_eq!(m.f1, Some(median(&values(col("f1")))));
    assert_eq!(m.map, Some(median(&values(col("map")))));
    assert_eq!(m.n_faces, median(&values(col("n_faces"))));
    assert_eq!(m.percent_di[1], median(&values(col("pct_di@0.05"))));
}

#[test]
fn undeformed_greedy_recovers_segment_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let config = GenConfig {
        jitter: 0.0,
        smooth: 0.0,
        ..GenConfig::undeformed()
    };
    small_dataset(&data, config);
    let r = run(&data, &tmp.path().join("out"), &[greedy()]);
    assert!(!r.records.is_empty());

    let mut fractions = Vec::new();
    for rec in &r.records {
        let shape = read_shape::<f64>(&data.join(&rec.mesh)).unwrap();
        let truth = shape.truth_for(rec.seed_face);
        fractions.push(100.0 * truth.iter().filter(|&&t| t).count() as f64 / truth.len() as f64);
    }
    let got = r.summary.medians[0].percent_di[1];
    let want = median(&fractions);
    assert!(
        (got - want).abs() <= 0.02 * want,
        "median %D_I {got} vs segment fraction {want}"
    );
}

#[test]
fn unlabeled_meshes_are_benchmarked_without_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("plain");
    fs::create_dir_all(&dir).unwrap();
    let mesh = wand_core::shapes::cylinder::<f64>(1.0, 2.0, 16, 4, false);
    fs::write(dir.join("mesh.obj"), wand_core::obj::mesh_to_obj(&mesh)).unwrap();
    let r = run(tmp.path(), &tmp.path().join("out"), &[greedy()]);
    assert_eq!(r.records.len(), 20);
    assert!(r
        .records
        .iter()
        .all(|x| x.accuracy.is_none() && x.map.is_none()));
    assert_eq!(r.summary.medians[0].accuracy, None);
}
