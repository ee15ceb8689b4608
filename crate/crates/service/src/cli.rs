use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use wand_core::bench::{run_benchmark, write_outputs};
use wand_core::dataset::{generate_dataset, DatasetSpec, GenConfig};
use wand_core::distortion::DistortionReport;
use wand_core::param::{isometric_refine, lscm};
use wand_core::selectors::Selector;
use wand_core::topology::{cut_to_disk, PatchJson};
use wand_core::{obj, Patch};

use crate::api;
use crate::pipeline::{finalize_config, resolve_selector, run_select, SelectReport};

#[derive(Debug, Parser)]
#[command(
    name = "wand",
    version,
    about = "Distortion-aware seeded mesh selection"
)]
pub struct Cli {
    /// Seed for every random choice (dataset generation, fallback seeds).
    #[arg(long, global = true, default_value_t = 0)]
    pub rng_seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a patch around a seed face and flatten it.
    Select(SelectArgs),
    /// Flatten a given patch.
    Param(ParamArgs),
    /// Benchmark selectors on a dataset.
    Eval(EvalArgs),
    /// Generate a labeled primitive dataset.
    GenDataset(GenArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectorName {
    Optimized,
    Dcharts,
    Logmap,
    Greedy,
}

impl SelectorName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Optimized => "optimized",
            Self::Dcharts => "dcharts",
            Self::Logmap => "logmap",
            Self::Greedy => "greedy",
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub seed: usize,
    #[arg(long, value_enum, default_value = "greedy")]
    pub selector: SelectorName,
    /// JSON object overriding selector config keys, e.g. '{"lambda":0.1}'.
    #[arg(long)]
    pub config: Option<String>,
    /// Skip graphcut smoothing and isometric refinement.
    #[arg(long)]
    pub no_postprocess: bool,
    #[arg(long, default_value_t = 0.05)]
    pub lambda: f64,
    /// Directory for patch.json, out_uv.obj and report.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// patch.json as written by `select`.
    #[arg(long)]
    pub patch: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub refine_iters: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lambda: f64,
    #[arg(long, default_value = "out_uv.obj")]
    pub out: PathBuf,
    /// Also write the distortion report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SelectorList(pub Vec<Selector>);

fn parse_selector_list(s: &str) -> Result<SelectorList, String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| Selector::from_name(x).ok_or_else(|| format!("unknown selector '{x}'")))
        .collect::<Result<_, _>>()
        .map(SelectorList)
}

fn parse_lambdas(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad lambda '{x}': {e}"))
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Comma-separated selector names; may be empty.
    #[arg(long, value_parser = parse_selector_list, default_value = "greedy")]
    pub selectors: SelectorList,
    #[arg(long, value_parser = parse_lambdas, default_value = "0.01,0.02,0.05,0.1")]
    pub lambdas: std::vec::Vec<f64>,
    /// Output directory for records.csv, timings.csv and bench.json.
    #[arg(long, default_value = "bench_out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Number of shapes; their seeds are rng-seed, rng-seed + 1, ...
    #[arg(long, default_value_t = 10)]
    pub count: u64,
    #[arg(long, default_value_t = 5)]
    pub primitives: usize,
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0.05)]
    pub frac: f64,
    #[arg(long, default_value_t = 20)]
    pub max_seeds: usize,
    /// Place primitives without deformations.
    #[arg(long)]
    pub undeformed: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Bind address; defaults to $WAND_ADDR, then 127.0.0.1:8080.
    #[arg(long)]
    pub addr: Option<String>,
}

/// Usage errors discovered after parsing; reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Select(a) => select(a, cli.rng_seed),
        Command::Param(a) => param(a),
        Command::Eval(a) => eval(a),
        Command::GenDataset(a) => gen_dataset(a, cli.rng_seed),
        Command::Serve(a) => {
            let addr = api::bind_address(a.addr.as_deref());
            tokio::runtime::Runtime::new()?.block_on(api::serve(&addr))
        }
    }
}

fn select(a: SelectArgs, rng_seed: u64) -> anyhow::Result<()> {
    let overrides = match &a.config {
        Some(s) => Some(
            serde_json::from_str(s)
                .map_err(|e| UsageError(format!("--config is not JSON: {e}")))?,
        ),
        None => None,
    };
    let selector = resolve_selector(a.selector.as_str(), overrides.as_ref()).map_err(UsageError)?;
    if !(a.lambda > 0.0) {
        return Err(UsageError("--lambda must be positive".into()).into());
    }
    let mesh =
        obj::load_mesh::<f64>(&a.mesh).with_context(|| format!("loading {}", a.mesh.display()))?;
    let fin = finalize_config(!a.no_postprocess, a.lambda);
    let run = run_select(&mesh, a.seed, &selector, &fin)?;
    let f = &run.finalized;
    fs::create_dir_all(&a.out)?;
    fs::write(
        a.out.join("patch.json"),
        serde_json::to_string_pretty(&f.patch.to_json(&mesh))?,
    )?;
    fs::write(a.out.join("out_uv.obj"), obj::uv_to_obj(&mesh, &f.uv))?;
    let report = SelectReport {
        config_hash: selector.config_hash(),
        selector,
        finalize: fin,
        seed_face: a.seed,
        rng_seed,
        uv_time: run.uv_time,
        report: f.report.clone(),
    };
    fs::write(
        a.out.join("report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    println!(
        "{} faces, {:.2}% below D_I {} ({}: {:.3}s select, {:.3}s uv)",
        f.report.n_faces,
        f.report.percent_di,
        a.lambda,
        a.selector.as_str(),
        run.seg_time,
        run.uv_time
    );
    Ok(())
}

fn param(a: ParamArgs) -> anyhow::Result<()> {
    let mesh =
        obj::load_mesh::<f64>(&a.mesh).with_context(|| format!("loading {}", a.mesh.display()))?;
    let pj: PatchJson = serde_json::from_str(&fs::read_to_string(&a.patch)?)
        .with_context(|| format!("reading {}", a.patch.display()))?;
    let patch = Patch::from_json(&mesh, &pj)?;
    let patch = if patch.is_disk {
        patch
    } else {
        cut_to_disk(&mesh, &patch)?
    };
    let init = lscm(&mesh, &patch, None)?;
    let uv = isometric_refine(&mesh, &patch, &init, a.refine_iters, 1e-6)?.uv;
    fs::write(&a.out, obj::uv_to_obj(&mesh, &uv))?;
    let report = DistortionReport::build(&mesh, &patch, &uv, a.lambda, 0.0)?;
    if let Some(p) = &a.report {
        fs::write(p, report.to_json())?;
    }
    println!(
        "{} faces, {:.2}% below D_I {}",
        report.n_faces, report.percent_di, a.lambda
    );
    Ok(())
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    if a.lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(UsageError("--lambdas must all be positive".into()).into());
    }
    if !a.dataset.is_dir() {
        bail!("dataset directory {} does not exist", a.dataset.display());
    }
    let r = run_benchmark(
        &a.dataset,
        &a.selectors.0,
        &a.lambdas,
        &finalize_config(true, 0.05),
    )?;
    write_outputs(&a.out, &r)?;
    for m in &r.summary.medians {
        println!(
            "{:<10} n={:<5} acc={} mAP={} F1={} %D_I={:?} N={} t_seg={:.3}s t_uv={:.3}s",
            m.selector,
            m.samples,
            fmt(m.accuracy),
            fmt(m.map),
            fmt(m.f1),
            m.percent_di,
            m.n_faces,
            m.seg_time,
            m.uv_time
        );
    }
    if !r.summary.failures.is_empty() {
        eprintln!(
            "{} samples failed; see bench.json",
            r.summary.failures.len()
        );
    }
    Ok(())
}

fn fmt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

fn gen_dataset(a: GenArgs, rng_seed: u64) -> anyhow::Result<()> {
    let mut spec = DatasetSpec::new(
        (0..a.count).map(|i| rng_seed.wrapping_add(i)).collect(),
        a.primitives,
    );
    if a.undeformed {
        spec.config = GenConfig::undeformed();
    }
    spec.threshold = a.threshold;
    spec.frac = a.frac;
    spec.max_seeds = a.max_seeds;
    let m = generate_dataset(&a.out, &spec)?;
    println!("wrote {} shapes to {}", m.shapes.len(), a.out.display());
    Ok(())
}
