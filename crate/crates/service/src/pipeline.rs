//! The selection pipeline shared by the CLI and the HTTP API.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use wand_core::distortion::DistortionReport;
use wand_core::postprocess::{finalize_patch, FinalizeConfig, Finalized};
use wand_core::selectors::Selector;
use wand_core::{TriMesh64, WandError};

/// Default selector for `name` with the keys of `overrides` replaced.
/// Unknown names, unknown keys and ill-typed values are rejected.
pub fn resolve_selector(name: &str, overrides: Option<&Value>) -> Result<Selector, String> {
    let base = Selector::from_name(name).ok_or_else(|| {
        format!(
            "unknown selector '{name}' (expected one of {})",
            Selector::NAMES.join(", ")
        )
    })?;
    let Some(ov) = overrides else { return Ok(base) };
    let Value::Object(ov) = ov else {
        return Err("selector config must be a JSON object".into());
    };
    let mut v = serde_json::to_value(base).map_err(|e| e.to_string())?;
    let cfg = v
        .get_mut("config")
        .and_then(Value::as_object_mut)
        .ok_or_else(|| "selector has no configurable fields".to_string())?;
    for (k, x) in ov {
        if !cfg.contains_key(k) {
            return Err(format!("unknown {name} config key '{k}'"));
        }
        cfg.insert(k.clone(), x.clone());
    }
    serde_json::from_value(v).map_err(|e| format!("invalid {name} config: {e}"))
}

/// Finalization used for a request: the default pipeline, or with
/// `postprocess` off, the floodfilled selection's conformal map as is.
pub fn finalize_config(postprocess: bool, lambda: f64) -> FinalizeConfig {
    let base = FinalizeConfig {
        lambda,
        ..FinalizeConfig::default()
    };
    if postprocess {
        base
    } else {
        FinalizeConfig {
            graphcut: false,
            refine_iters: 0,
            ..base
        }
    }
}

pub struct SelectRun {
    pub weights: Vec<f64>,
    pub finalized: Finalized<f64>,
    pub seg_time: f64,
    pub uv_time: f64,
}

pub fn run_select(
    mesh: &TriMesh64,
    seed: usize,
    selector: &Selector,
    fin: &FinalizeConfig,
) -> Result<SelectRun, WandError> {
    let t0 = Instant::now();
    let selection = selector.run(mesh, seed)?;
    let seg_time = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let mut finalized = finalize_patch(mesh, &selection.weights, seed, fin)?;
    let uv_time = t1.elapsed().as_secs_f64();
    finalized.report.seg_time = seg_time;
    Ok(SelectRun {
        weights: selection.weights,
        finalized,
        seg_time,
        uv_time,
    })
}

/// Whether an error is the caller's fault (bad seed, bad config, bad
/// mesh) rather than a failure inside the solver.
pub fn is_client_error(e: &WandError) -> bool {
    !matches!(
        e,
        WandError::Solver(_)
            | WandError::Topology(_)
            | WandError::NotDisk { .. }
            | WandError::Io(_)
    )
}

/// `report.json` written by `wand select`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectReport {
    pub selector: Selector,
    pub config_hash: String,
    pub finalize: FinalizeConfig,
    pub seed_face: usize,
    pub rng_seed: u64,
    pub uv_time: f64,
    #[serde(flatten)]
    pub report: DistortionReport,
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_replace_only_named_keys() {
        let s = resolve_selector("greedy", Some(&json!({"lambda": 0.1}))).unwrap();
        let Selector::Greedy(c) = s else {
            panic!("wrong selector")
        };
        assert_eq!(c.lambda, 0.1);
        assert_eq!(
            c.reparam_every,
            wand_core::selectors::GreedyConfig::default().reparam_every
        );
    }

    #[test]
    fn logmap_lambda_is_configurable() {
        let s = resolve_selector("logmap", Some(&json!({"lambda": 0.02}))).unwrap();
        assert_eq!(s, Selector::Logmap { lambda: 0.02 });
    }

    #[test]
    fn bad_requests_are_rejected() {
        assert!(resolve_selector("magic", None).is_err());
        assert!(resolve_selector("greedy", Some(&json!({"nope": 1}))).is_err());
        assert!(resolve_selector("greedy", Some(&json!({"lambda": "big"}))).is_err());
        assert!(resolve_selector("greedy", Some(&json!([1]))).is_err());
    }

    #[test]
    fn raw_finalize_skips_graphcut_and_refinement() {
        let f = finalize_config(false, 0.03);
        assert!(!f.graphcut);
        assert_eq!(f.refine_iters, 0);
        assert_eq!(f.lambda, 0.03);
        assert_eq!(finalize_config(true, 0.05), FinalizeConfig::default());
    }
}
