//! Adjoint gradients of the total loss against central differences.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wand_core::diffparam::{grad_weights, total_loss, LossConfig};
use wand_core::{shapes, TriMesh64};

fn test_meshes() -> Vec<(&'static str, TriMesh64)> {
    let bumpy = shapes::plane_grid::<f64>(4, 4, 0.5)
        .map_vertices(|p| [p[0], p[1], 0.3 * (2.0 * p[0]).sin() * (1.5 * p[1]).cos()])
        .unwrap();
    let all = vec![
        ("tetrahedron", shapes::tetrahedron::<f64>(1.0)),
        ("cube", shapes::cube::<f64>(1.0)),
        (
            "three-sided cube",
            shapes::three_sided_cube_soup(2).to_mesh(),
        ),
        ("icosahedron", shapes::icosphere::<f64>(1.0, 0)),
        ("hemisphere", shapes::hemisphere::<f64>(1.0, 6, 2)),
        (
            "capped cylinder",
            shapes::cylinder::<f64>(1.0, 2.0, 6, 2, true),
        ),
        ("bumpy grid", bumpy),
    ];
    all.into_iter()
        .filter(|(_, m)| m.num_faces() <= 50)
        .collect()
}

fn configs() -> [LossConfig<f64>; 2] {
    [
        LossConfig {
            gamma: 0.5,
            alpha: 2.0,
            ..LossConfig::default()
        },
        LossConfig {
            gamma: 0.2,
            alpha: 5.0,
            omega: 0.3,
            ..LossConfig::default()
        },
    ]
}

/// Worst relative error over components with |g| > 1e-8, and how many
/// components were compared.
fn worst_error(m: &TriMesh64, w: &[f64], cfg: &LossConfig<f64>) -> (f64, usize) {
    let (_, g) = grad_weights(m, w, 0, cfg).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for f in 0..m.num_faces() {
        if g[f].abs() <= 1e-8 {
            continue;
        }
        let (mut wp, mut wm) = (w.to_vec(), w.to_vec());
        wp[f] += h;
        wm[f] -= h;
        let fd = (total_loss(m, &wp, 0, cfg).unwrap().total
            - total_loss(m, &wm, 0, cfg).unwrap().total)
            / (2.0 * h);
        worst = worst.max((fd - g[f]).abs() / g[f].abs());
        checked += 1;
    }
    (worst, checked)
}

#[test]
fn adjoint_matches_central_differences() {
    let start = Instant::now();
    let meshes = test_meshes();
    assert_eq!(meshes.len(), 7);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (name, m) in &meshes {
        for cfg in &configs() {
            // weights kept away from the floodfill threshold and from ties
            let w: Vec<f64> = (0..m.num_faces())
                .map(|_| 0.55 + 0.4 * rng.gen::<f64>())
                .collect();
            let (err, checked) = worst_error(m, &w, cfg);
            assert!(
                checked * 2 >= m.num_faces(),
                "{name}: only {checked} components compared"
            );
            assert!(err < 1e-4, "{name}: relative error {err:e}");
        }
    }
    assert!(start.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn partial_floodfill_gradients() {
    // faces below the floodfill threshold still get the smoothness gradient
    let m = shapes::hemisphere::<f64>(1.0, 6, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let w: Vec<f64> = (0..m.num_faces())
        .map(|f| {
            if f % 5 == 4 {
                0.05 + 0.3 * rng.gen::<f64>()
            } else {
                0.6 + 0.3 * rng.gen::<f64>()
            }
        })
        .collect();
    for cfg in &configs() {
        let (err, checked) = worst_error(&m, &w, cfg);
        assert_eq!(checked, m.num_faces());
        assert!(err < 1e-4);
    }
}
