//! Benchmark harness: segmentation metrics against ground-truth labels,
//! `%D_I^λ` over a λ grid, patch size and timing, aggregated by median.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{read_manifest, read_shape, LabeledShape};
use crate::distortion::median;
use crate::error::{Result, WandError};
use crate::postprocess::{finalize_patch, FinalizeConfig};
use crate::selectors::Selector;

/// Column layout version of `records.csv` and `timings.csv`.
pub const CSV_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegMetrics {
    pub accuracy: f64,
    /// `None` when the truth is empty.
    pub map: Option<f64>,
    /// `None` when the truth is empty.
    pub f1: Option<f64>,
}

/// Accuracy and F1 of `pred ≥ 0.5` against `truth`, and average precision
/// of the scores: `Σ_k (R_k − R_{k−1}) P_k` over thresholds at every
/// distinct score, highest first.
pub fn segmentation_metrics(pred: &[f64], truth: &[bool]) -> Result<SegMetrics> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(WandError::InvalidArgument(
            "prediction and truth must cover the same faces".into(),
        ));
    }
    let n = pred.len();
    let positives = truth.iter().filter(|&&t| t).count();
    let (mut tp, mut fp, mut tn) = (0usize, 0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p >= 0.5, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => {}
        }
    }
    let accuracy = (tp + tn) as f64 / n as f64;
    if positives == 0 {
        return Ok(SegMetrics {
            accuracy,
            map: None,
            f1: None,
        });
    }
    let f1 = 2.0 * tp as f64 / (2 * tp + fp + (positives - tp)) as f64;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pred[b].total_cmp(&pred[a]));
    let (mut ap, mut prev_recall) = (0.0, 0.0);
    let (mut ctp, mut cfp) = (0usize, 0usize);
    let mut i = 0;
    while i < n {
        let s = pred[order[i]];
        while i < n && pred[order[i]] == s {
            if truth[order[i]] {
                ctp += 1;
            } else {
                cfp += 1;
            }
            i += 1;
        }
        let recall = ctp as f64 / positives as f64;
        let precision = ctp as f64 / (ctp + cfp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(SegMetrics {
        accuracy,
        map: Some(ap),
        f1: Some(f1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub dataset: String,
    pub mesh: String,
    pub seed_face: usize,
    pub selector: String,
    pub config_hash: String,
    pub accuracy: Option<f64>,
    pub map: Option<f64>,
    pub f1: Option<f64>,
    /// `%D_I^λ` for each λ of the grid, in grid order.
    pub percent_di: Vec<f64>,
    pub n_faces: usize,
    /// Selector time only.
    pub seg_time: f64,
    /// Time from selection to final UV map (graphcut, cut, LSCM, refine).
    pub uv_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub mesh: String,
    pub seed_face: usize,
    pub selector: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorMedians {
    pub selector: String,
    pub config_hash: String,
    pub samples: usize,
    pub accuracy: Option<f64>,
    pub map: Option<f64>,
    pub f1: Option<f64>,
    pub percent_di: Vec<f64>,
    pub n_faces: f64,
    pub seg_time: f64,
    pub uv_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorEntry {
    pub name: String,
    pub config_hash: String,
    pub config: Selector,
}

/// Run manifest written as `bench.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub csv_version: u32,
    pub dataset: String,
    pub lambdas: Vec<f64>,
    pub selectors: Vec<SelectorEntry>,
    pub finalize: FinalizeConfig,
    pub medians: Vec<SelectorMedians>,
    pub failures: Vec<SampleFailure>,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub records: Vec<BenchRecord>,
    pub summary: BenchSummary,
}

fn median_of(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.filter(|x| x.is_finite()).collect();
    median(&v)
}

fn median_opt(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().filter(|x| x.is_finite()).collect();
    (!v.is_empty()).then(|| median(&v))
}

/// Medians per selector, in the order the selectors were given.
pub fn aggregate(
    records: &[BenchRecord],
    selectors: &[SelectorEntry],
    n_lambdas: usize,
) -> Vec<SelectorMedians> {
    selectors
        .iter()
        .map(|s| {
            let rs: Vec<&BenchRecord> = records
                .iter()
                .filter(|r| r.selector == s.name && r.config_hash == s.config_hash)
                .collect();
            SelectorMedians {
                selector: s.name.clone(),
                config_hash: s.config_hash.clone(),
                samples: rs.len(),
                accuracy: median_opt(rs.iter().map(|r| r.accuracy)),
                map: median_opt(rs.iter().map(|r| r.map)),
                f1: median_opt(rs.iter().map(|r| r.f1)),
                percent_di: (0..n_lambdas)
                    .map(|k| median_of(rs.iter().map(|r| r.percent_di[k])))
                    .collect(),
                n_faces: median_of(rs.iter().map(|r| r.n_faces as f64)),
                seg_time: median_of(rs.iter().map(|r| r.seg_time)),
                uv_time: median_of(rs.iter().map(|r| r.uv_time)),
            }
        })
        .collect()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Deterministic columns only, so reruns produce identical bytes.
pub fn records_csv(records: &[BenchRecord], lambdas: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "dataset",
        "mesh",
        "seed_face",
        "selector",
        "config_hash",
        "accuracy",
        "map",
        "f1",
        "n_faces",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(lambdas.iter().map(|l| format!("pct_di@{l}")));
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![
            r.dataset.clone(),
            r.mesh.clone(),
            r.seed_face.to_string(),
            r.selector.clone(),
            r.config_hash.clone(),
            fmt_opt(r.accuracy),
            fmt_opt(r.map),
            fmt_opt(r.f1),
            r.n_faces.to_string(),
        ];
        row.extend(r.percent_di.iter().map(|p| p.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    finish_csv(w)
}

pub fn timings_csv(records: &[BenchRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "mesh",
        "seed_face",
        "selector",
        "config_hash",
        "seg_time",
        "uv_time",
    ])
    .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.mesh.clone(),
            r.seed_face.to_string(),
            r.selector.clone(),
            r.config_hash.clone(),
            r.seg_time.to_string(),
            r.uv_time.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

fn csv_err(e: csv::Error) -> WandError {
    WandError::InvalidArgument(format!("csv: {e}"))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| WandError::InvalidArgument(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| WandError::InvalidArgument(format!("csv: {e}")))
}

/// Shape directories of a dataset: the manifest's list when present,
/// otherwise every subdirectory holding a `mesh.obj`, sorted by name.
pub fn shape_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join("manifest.json").exists() {
        return Ok(read_manifest(root)?
            .shapes
            .iter()
            .map(|s| root.join(s))
            .collect());
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("mesh.obj").exists())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// (shape index, seed face, selector index).
type Job = (usize, usize, usize);

/// A shape without `labels.json` still gets benchmarked: no truth, and
/// seeds from `seeds.json` or, failing that, 20 evenly spaced faces.
fn load_for_bench(dir: &Path) -> Result<(LabeledShape<f64>, bool)> {
    if dir.join("labels.json").exists() {
        return Ok((read_shape(dir)?, true));
    }
    let mesh = crate::obj::load_mesh::<f64>(dir.join("mesh.obj"))?;
    let nf = mesh.num_faces();
    let seeds = if dir.join("seeds.json").exists() {
        serde_json::from_str(&fs::read_to_string(dir.join("seeds.json"))?)?
    } else {
        let k = nf.min(20);
        (0..k)
            .map(|i| crate::dataset::Seed {
                face: i * nf / k,
                segment: 0,
            })
            .collect()
    };
    let shape = LabeledShape {
        rng_seed: 0,
        labels: vec![0; nf],
        mesh,
        segments: Vec::new(),
        primitives: Vec::new(),
        valid_segments: Vec::new(),
        seeds,
    };
    Ok((shape, false))
}

fn run_sample(
    shape: &LabeledShape<f64>,
    has_truth: bool,
    seed: usize,
    sel: &SelectorEntry,
    lambdas: &[f64],
    fin: &FinalizeConfig,
) -> Result<BenchRecord> {
    let mesh = &shape.mesh;
    let t0 = Instant::now();
    let selection = sel.config.run(mesh, seed)?;
    let seg_time = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let out = finalize_patch(mesh, &selection.weights, seed, fin)?;
    let uv_time = t1.elapsed().as_secs_f64();
    let nf = mesh.num_faces() as f64;
    let percent_di = lambdas
        .iter()
        .map(|&l| 100.0 * out.report.per_face_di.iter().filter(|&&d| d < l).count() as f64 / nf)
        .collect();
    let metrics = if has_truth {
        Some(segmentation_metrics(
            &selection.weights,
            &shape.truth_for(seed),
        )?)
    } else {
        None
    };
    Ok(BenchRecord {
        dataset: String::new(),
        mesh: String::new(),
        seed_face: seed,
        selector: sel.name.clone(),
        config_hash: sel.config_hash.clone(),
        accuracy: metrics.map(|m| m.accuracy),
        map: metrics.and_then(|m| m.map),
        f1: metrics.and_then(|m| m.f1),
        percent_di,
        n_faces: out.patch.len(),
        seg_time,
        uv_time,
    })
}

/// Runs every selector from every seed of every shape under `dataset`.
/// Samples run in parallel; records are sorted by (mesh, seed, selector
/// position). Failing samples are logged and listed, never fatal.
pub fn run_benchmark(
    dataset: &Path,
    selectors: &[Selector],
    lambdas: &[f64],
    fin: &FinalizeConfig,
) -> Result<BenchOutput> {
    if let Some(l) = lambdas.iter().find(|&&l| !(l > 0.0)) {
        return Err(WandError::InvalidArgument(format!(
            "lambda must be positive, got {l}"
        )));
    }
    let entries: Vec<SelectorEntry> = selectors
        .iter()
        .map(|s| SelectorEntry {
            name: s.name().to_string(),
            config_hash: s.config_hash(),
            config: *s,
        })
        .collect();
    let dataset_name = dataset
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let dirs = if entries.is_empty() {
        Vec::new()
    } else {
        shape_dirs(dataset)?
    };

    let mut failures = Vec::new();
    let mut shapes = Vec::new();
    for d in &dirs {
        let name = d
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        match load_for_bench(d) {
            Ok((s, truth)) => shapes.push((name, s, truth)),
            Err(e) => {
                log::warn!("skipping {}: {e}", d.display());
                failures.push(SampleFailure {
                    mesh: name,
                    seed_face: 0,
                    selector: String::new(),
                    error: e.to_string(),
                });
            }
        }
    }
    let mut jobs: Vec<Job> = Vec::new();
    for (si, (_, s, _)) in shapes.iter().enumerate() {
        for sd in &s.seeds {
            jobs.extend((0..entries.len()).map(|k| (si, sd.face, k)));
        }
    }
    let mut results: Vec<(Job, std::result::Result<BenchRecord, String>)> = jobs
        .par_iter()
        .map(|&(si, face, k)| {
            let (name, shape, truth) = &shapes[si];
            let r = run_sample(shape, *truth, face, &entries[k], lambdas, fin).map(|mut rec| {
                rec.dataset = dataset_name.clone();
                rec.mesh = name.clone();
                rec
            });
            ((si, face, k), r.map_err(|e| e.to_string()))
        })
        .collect();
    results.sort_by(|a, b| {
        (&shapes[a.0 .0].0, a.0 .1, a.0 .2).cmp(&(&shapes[b.0 .0].0, b.0 .1, b.0 .2))
    });
    let mut records = Vec::new();
    for ((si, face, k), r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                log::warn!("{} seed {face} {}: {e}", shapes[si].0, entries[k].name);
                failures.push(SampleFailure {
                    mesh: shapes[si].0.clone(),
                    seed_face: face,
                    selector: entries[k].name.clone(),
                    error: e,
                });
            }
        }
    }
    let medians = aggregate(&records, &entries, lambdas.len());
    let summary = BenchSummary {
        csv_version: CSV_VERSION,
        dataset: dataset_name,
        lambdas: lambdas.to_vec(),
        selectors: entries,
        finalize: *fin,
        medians,
        failures,
    };
    Ok(BenchOutput { records, summary })
}

/// Writes `records.csv`, `timings.csv` and `bench.json` into `out`.
pub fn write_outputs(out: &Path, result: &BenchOutput) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(
        out.join("records.csv"),
        records_csv(&result.records, &result.summary.lambdas)?,
    )?;
    fs::write(out.join("timings.csv"), timings_csv(&result.records)?)?;
    fs::write(
        out.join("bench.json"),
        serde_json::to_string_pretty(&result.summary)?,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let truth = [true, true, false, false, true];
        let pred: Vec<f64> = truth.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
        let m = segmentation_metrics(&pred, &truth).unwrap();
        assert_eq!((m.accuracy, m.map, m.f1), (1.0, Some(1.0), Some(1.0)));
    }

    #[test]
    fn complement_prediction() {
        let truth = [
            true, true, false, false, false, false, true, false, false, false,
        ];
        let pred: Vec<f64> = truth.iter().map(|&t| if t { 0.0 } else { 1.0 }).collect();
        let m = segmentation_metrics(&pred, &truth).unwrap();
        assert_eq!(m.accuracy, 0.0);
        assert_eq!(m.f1, Some(0.0));
    }

    #[test]
    fn empty_prediction() {
        let truth = [
            true, true, false, false, false, false, true, false, false, false,
        ];
        let m = segmentation_metrics(&[0.0; 10], &truth).unwrap();
        assert!((m.accuracy - (1.0 - 3.0 / 10.0)).abs() < 1e-15);
        assert_eq!(m.f1, Some(0.0));
    }

    #[test]
    fn uniform_scores_give_base_rate_precision() {
        let truth: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let m = segmentation_metrics(&[0.5; 10], &truth).unwrap();
        // one threshold: everything positive, recall 1, precision 5/10
        assert_eq!(m.map, Some(0.5));
        assert_eq!(m.accuracy, 0.5);
        assert!((m.f1.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ranked_scores_match_hand_computed_ap() {
        // scores descending: T F T F ... recall steps 1/2 at P=1, 1/2 at P=2/3
        let pred = [0.9, 0.8, 0.7, 0.1];
        let truth = [true, false, true, false];
        let m = segmentation_metrics(&pred, &truth).unwrap();
        assert!((m.map.unwrap() - (0.5 * 1.0 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn binary_prediction_is_a_two_point_curve() {
        let truth = [true, true, true, false, false, false, false, false];
        let pred = [1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let m = segmentation_metrics(&pred, &truth).unwrap();
        let (r1, p1) = (2.0 / 3.0, 2.0 / 3.0);
        assert!((m.map.unwrap() - (r1 * p1 + (1.0 - r1) * 3.0 / 8.0)).abs() < 1e-15);
    }

    #[test]
    fn empty_truth_has_no_f1() {
        let m = segmentation_metrics(&[0.2, 0.7], &[false, false]).unwrap();
        assert_eq!(m.f1, None);
        assert_eq!(m.map, None);
        assert_eq!(m.accuracy, 0.5);
    }

    #[test]
    fn medians_skip_missing_values() {
        let rec = |sel: &str, acc: Option<f64>, n: usize| BenchRecord {
            dataset: "d".into(),
            mesh: "m".into(),
            seed_face: 0,
            selector: sel.into(),
            config_hash: "h".into(),
            accuracy: acc,
            map: acc,
            f1: acc,
            percent_di: vec![n as f64],
            n_faces: n,
            seg_time: 0.1,
            uv_time: 0.2,
        };
        let recs = vec![
            rec("a", Some(0.2), 1),
            rec("a", None, 3),
            rec("a", Some(0.4), 5),
            rec("b", None, 9),
        ];
        let sel = |n: &str| SelectorEntry {
            name: n.into(),
            config_hash: "h".into(),
            config: Selector::Logmap { lambda: 0.05 },
        };
        let m = aggregate(&recs, &[sel("a"), sel("b")], 1);
        assert!((m[0].accuracy.unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(m[0].n_faces, 3.0);
        assert_eq!(m[0].percent_di, vec![3.0]);
        assert_eq!(m[1].accuracy, None);
        assert_eq!(m[1].samples, 1);
    }
}
