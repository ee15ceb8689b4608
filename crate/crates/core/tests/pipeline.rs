//! End-to-end selection, finalization and dataset checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wand_core::dataset::{
    developable_patch, filter_and_sample, generate_shape, mean_distortions, LabeledShape,
};
use wand_core::param::{isometric_refine, lscm_pinned, Pins};
use wand_core::postprocess::{finalize_patch, FinalizeConfig};
use wand_core::selectors::Selector;
use wand_core::shapes;
use wand_core::topology::component;

fn shape(seed: u64) -> LabeledShape<f64> {
    filter_and_sample(&generate_shape::<f64>(seed, 4).unwrap(), 0.05, 0.05, 20).unwrap()
}

#[test]
fn capped_cylinder_side_is_recovered() {
    let soup = shapes::cylinder_soup(1.0, 2.0, 40, 24, true);
    let m = soup.to_mesh::<f64>();
    let side = soup.labels.iter().filter(|&&l| l == 0).count();
    let caps = m.num_faces() - side;
    let seed = 40 * 12 * 2 + 7;
    for name in ["greedy", "dcharts"] {
        let sel = Selector::from_name(name).unwrap().run(&m, seed).unwrap();
        let fin = finalize_patch(&m, &sel.weights, seed, &FinalizeConfig::default()).unwrap();
        let on_side = fin
            .patch
            .faces
            .iter()
            .filter(|&&f| soup.labels[f] == 0)
            .count();
        let on_caps = fin.patch.len() - on_side;
        assert!(
            on_side as f64 >= 0.95 * side as f64,
            "{name}: {on_side}/{side} side faces"
        );
        assert!(
            on_caps as f64 <= 0.01 * caps as f64,
            "{name}: {on_caps}/{caps} cap faces"
        );
        let worst = fin.report.per_face_di.iter().copied().fold(0.0, f64::max);
        assert!(worst < 0.05, "{name}: worst D_I {worst}");
    }
}

#[test]
fn finalized_patches_are_disks_containing_the_seed() {
    let shapes: Vec<_> = (0..3).map(|s| shape(100 + s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..24 {
        let s = &shapes[rng.gen_range(0..shapes.len())];
        let seed = rng.gen_range(0..s.mesh.num_faces());
        let name = ["greedy", "dcharts", "logmap"][rng.gen_range(0..3)];
        let sel = Selector::from_name(name)
            .unwrap()
            .run(&s.mesh, seed)
            .unwrap();
        let fin = finalize_patch(&s.mesh, &sel.weights, seed, &FinalizeConfig::default()).unwrap();
        assert!(fin.patch.is_disk, "{name} seed {seed}");
        assert!(fin.patch.faces.contains(&seed));
        assert_eq!(fin.uv.faces.len(), fin.patch.len());
    }
}

#[test]
fn valid_segments_reverify_with_other_pins() {
    for seed in [7, 8] {
        let s = shape(seed);
        assert!(!s.valid_segments.is_empty());
        for &id in &s.valid_segments {
            let faces = s.segment_faces(id);
            let mut mask = vec![false; s.mesh.num_faces()];
            for &f in &faces {
                mask[f] = true;
            }
            let (mut todo, mut sums, mut n) = (mask.clone(), (0.0, 0.0), 0.0);
            for &f in faces.iter().rev() {
                if !todo[f] {
                    continue;
                }
                let comp = component(&s.mesh, &mask, f);
                for &g in &comp {
                    todo[g] = false;
                }
                let patch = developable_patch(&s.mesh, &comp).unwrap();
                let last = *patch.faces.last().unwrap();
                let fr = s.mesh.face_frames[last];
                let pins = Pins {
                    vertices: [s.mesh.faces[last][1], s.mesh.faces[last][2]],
                    positions: [fr[1], fr[2]],
                };
                let init = lscm_pinned(&s.mesh, &patch, pins).unwrap();
                let uv = isometric_refine(&s.mesh, &patch, &init, 200, 1e-12)
                    .unwrap()
                    .uv;
                let (a, b) = mean_distortions(&uv);
                let k = comp.len() as f64;
                sums = (sums.0 + a * k, sums.1 + b * k);
                n += k;
            }
            let (di, dc) = (sums.0 / n, sums.1 / n);
            assert!(
                di <= 0.05 && dc <= 0.05,
                "shape {seed} segment {id}: {di} {dc}"
            );
        }
    }
}
