//! Weighted LSCM with a binary weight field reproduces LSCM of the patch.

use proptest::prelude::*;
use wand_core::param::{lscm_pinned, wlscm, Pins};
use wand_core::scalar::Vec2;
use wand_core::{shapes, Patch, TriMesh64};

fn centroid_mask(m: &TriMesh64, keep: impl Fn([f64; 3]) -> bool) -> Vec<f64> {
    (0..m.num_faces())
        .map(|f| if keep(m.face_centroid(f)) { 1.0 } else { 0.0 })
        .collect()
}

fn cases() -> Vec<(&'static str, TriMesh64, Vec<f64>)> {
    let cube = shapes::three_sided_cube_soup(3);
    let cube_w = cube
        .labels
        .iter()
        .map(|&l| if l == 0 { 0.0 } else { 1.0 })
        .collect();
    let plane = shapes::plane_grid::<f64>(8, 8, 0.25);
    let plane_w = centroid_mask(&plane, |c| c[0] < 1.0);
    let hemi = shapes::hemisphere::<f64>(1.0, 16, 6);
    let hemi_w = centroid_mask(&hemi, |c| c[2] > 0.5);
    let cyl = shapes::cylinder::<f64>(0.5, 2.0, 24, 8, true);
    let cyl_w = centroid_mask(&cyl, |c| c[1] > 0.05 && c[2] > 1e-9 && c[2] < 2.0 - 1e-9);
    let sphere = shapes::icosphere::<f64>(1.0, 2);
    let sphere_w = centroid_mask(&sphere, |c| c[2] > 0.3);
    let torus = shapes::torus::<f64>(1.0, 0.3, 32, 16);
    let torus_w = centroid_mask(&torus, |c| c[0] > 0.6 && c[1] > 0.0 && c[2] > 0.0);
    vec![
        ("three-sided cube", cube.to_mesh(), cube_w),
        ("plane", plane, plane_w),
        ("hemisphere", hemi, hemi_w),
        ("cylinder", cyl, cyl_w),
        ("icosphere", sphere, sphere_w),
        ("torus", torus, torus_w),
    ]
}

fn patch_of(m: &TriMesh64, w: &[f64]) -> Patch {
    let faces: Vec<usize> = (0..w.len()).filter(|&f| w[f] == 1.0).collect();
    Patch::new(m, faces.iter().copied(), faces[0]).unwrap()
}

fn max_vertex_error(
    m: &TriMesh64,
    patch: &Patch,
    a: &[Option<Vec2<f64>>],
    b: &[Option<Vec2<f64>>],
) -> f64 {
    let mut err: f64 = 0.0;
    for &f in &patch.faces {
        for &v in &m.faces[f] {
            let (p, q) = (a[v].unwrap(), b[v].unwrap());
            err = err.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    err
}

fn binary_vs_lscm(m: &TriMesh64, w: &[f64]) -> f64 {
    let patch = patch_of(m, w);
    assert!(
        patch.is_disk,
        "patch of {} faces is not a disk",
        patch.faces.len()
    );
    let weighted = wlscm(m, w, None).unwrap();
    let plain = lscm_pinned(m, &patch, weighted.pins).unwrap();
    let nv = m.num_vertices();
    max_vertex_error(
        m,
        &patch,
        &weighted.uv_by_mesh_vertex(nv),
        &plain.uv_by_mesh_vertex(nv),
    )
}

#[test]
fn binary_weights_reproduce_patch_lscm() {
    let cases = cases();
    assert!(cases.len() >= 5);
    for (name, m, w) in &cases {
        let err = binary_vs_lscm(m, w);
        assert!(err < 1e-8, "{name}: max vertex error {err:e}");
    }
}

#[test]
fn off_patch_weight_converges_to_binary_map() {
    for (name, m, w) in cases() {
        let patch = patch_of(&m, &w);
        let nv = m.num_vertices();
        let exact = wlscm(&m, &w, None).unwrap();
        let exact_uv = exact.uv_by_mesh_vertex(nv);
        let mut last = f64::INFINITY;
        for delta in [1e-2, 1e-3, 1e-4] {
            let soft: Vec<f64> = w
                .iter()
                .map(|&x| if x == 1.0 { 1.0 } else { delta })
                .collect();
            let uv = wlscm(&m, &soft, Some(exact.pins)).unwrap();
            let d = max_vertex_error(&m, &patch, &uv.uv_by_mesh_vertex(nv), &exact_uv);
            assert!(
                d < last,
                "{name}: displacement {d:e} at delta {delta} not below {last:e}"
            );
            last = d;
        }
    }
}

#[test]
fn unit_pins_match_too() {
    let m = shapes::hemisphere::<f64>(1.0, 12, 5);
    let w = centroid_mask(&m, |c| c[2] > 0.4);
    let patch = patch_of(&m, &w);
    let [a, b] = [
        m.faces[patch.faces[0]][0],
        m.faces[*patch.faces.last().unwrap()][1],
    ];
    let pins = Pins::unit(a, b);
    let nv = m.num_vertices();
    let weighted = wlscm(&m, &w, Some(pins)).unwrap().uv_by_mesh_vertex(nv);
    let plain = lscm_pinned(&m, &patch, pins).unwrap().uv_by_mesh_vertex(nv);
    assert!(max_vertex_error(&m, &patch, &weighted, &plain) < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_grid_rectangles(x0 in 0usize..4, y0 in 0usize..4, wx in 2usize..5, wy in 2usize..5, lift in 0.0f64..0.4) {
        // a bumpy grid: the rectangle of cells [x0, x0 + wx) × [y0, y0 + wy) is the patch
        let grid = shapes::plane_grid::<f64>(9, 9, 0.2);
        let m = grid.map_vertices(|p| [p[0], p[1], lift * (3.0 * p[0]).sin() * (2.0 * p[1]).cos()]).unwrap();
        let (lo, hi) = ([x0 as f64 * 0.2, y0 as f64 * 0.2], [(x0 + wx) as f64 * 0.2, (y0 + wy) as f64 * 0.2]);
        let w = centroid_mask(&m, |c| c[0] > lo[0] && c[0] < hi[0] && c[1] > lo[1] && c[1] < hi[1]);
        prop_assert!(binary_vs_lscm(&m, &w) < 1e-8);
    }
}
