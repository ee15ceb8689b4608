//! Per-face distortion measures of a UV map and the dataset-level summary
//! used in benchmarks.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WandError};
use crate::mesh::TriMesh;
use crate::param::UvMap;
use crate::scalar::*;
use crate::topology::Patch;

/// Singular values at or below this are treated as degenerate.
pub const SIGMA_MIN: f64 = 1e-12;

/// Which isometric distortion formula to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `D_I = max(σ1, 1/σ2)`, minimum 1.
    Dataset,
    /// `D_I = (max(σ1, 1/σ2) − 1)²`, minimum 0.
    Eval,
}

/// ARAP energy of each patch face in `patch.faces` order:
/// `Σ_i cot θ_i ‖(x_i − x_{i+1}) − L (v_i − v_{i+1})‖²`.
pub fn arap_energy<T: Real>(mesh: &TriMesh<T>, patch: &Patch, uv: &UvMap<T>) -> Result<Vec<T>> {
    let lookup = uv.face_lookup();
    let per = crate::param::arap_face_energies(mesh, uv);
    patch
        .faces
        .iter()
        .map(|f| {
            lookup.get(f).map(|&i| per[i]).ok_or_else(|| {
                WandError::InvalidArgument(format!("uv map does not cover face {f}"))
            })
        })
        .collect()
}

/// ARAP energy per unit area, `2 ‖A − L‖²`, for every face of the map.
pub fn arap_density<T: Real>(uv: &UvMap<T>) -> Vec<T> {
    uv.jacobians.iter().map(arap_density_of).collect()
}

pub fn arap_density_of<T: Real>(a: &Mat2<T>) -> T {
    let r = closest_rotation2(a);
    let mut s = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            let d = a[i][j] - r[i][j];
            s += d * d;
        }
    }
    s + s
}

#[derive(Debug, Clone)]
pub struct SingularDistortions<T> {
    pub di: Vec<T>,
    pub dc: Vec<T>,
    /// Faces (map-local indices) whose smaller singular value is degenerate.
    pub degenerate: Vec<usize>,
    /// Faces (map-local indices) with negative Jacobian determinant.
    pub flipped: Vec<usize>,
}

pub fn isometric_of<T: Real>(a: &Mat2<T>, variant: Variant) -> T {
    let (s1, s2) = singular_values2(a);
    if s2 <= T::lit(SIGMA_MIN) {
        return T::infinity();
    }
    let m = s1.max(s2.recip());
    match variant {
        Variant::Dataset => m,
        Variant::Eval => (m - T::one()) * (m - T::one()),
    }
}

pub fn conformal_of<T: Real>(a: &Mat2<T>) -> T {
    let (s1, s2) = singular_values2(a);
    if s2 <= T::lit(SIGMA_MIN) {
        return T::infinity();
    }
    (s1 - s2) * (s1 - s2)
}

/// `D_I` and `D_C = (σ1 − σ2)²` per face of the map.
pub fn singular_distortions<T: Real>(uv: &UvMap<T>, variant: Variant) -> SingularDistortions<T> {
    let mut out = SingularDistortions {
        di: Vec::with_capacity(uv.jacobians.len()),
        dc: Vec::with_capacity(uv.jacobians.len()),
        degenerate: Vec::new(),
        flipped: Vec::new(),
    };
    for (i, a) in uv.jacobians.iter().enumerate() {
        let (_, s2) = singular_values2(a);
        if s2 <= T::lit(SIGMA_MIN) {
            out.degenerate.push(i);
        }
        if mat2_det(a) < T::zero() {
            out.flipped.push(i);
        }
        out.di.push(isometric_of(a, variant));
        out.dc.push(conformal_of(a));
    }
    out
}

/// Percentage of all mesh faces that lie in the patch and have eval
/// `D_I < lambda`. `di_by_face` is indexed by mesh face.
pub fn percent_below<T: Real>(
    mesh: &TriMesh<T>,
    patch: &Patch,
    di_by_face: &[T],
    lambda: T,
) -> Result<T> {
    if !(lambda > T::zero()) {
        return Err(WandError::InvalidArgument("lambda must be positive".into()));
    }
    if di_by_face.len() != mesh.num_faces() {
        return Err(WandError::InvalidArgument(
            "distortion count differs from face count".into(),
        ));
    }
    let count = patch
        .faces
        .iter()
        .filter(|&&f| di_by_face[f] < lambda)
        .count();
    Ok(T::lit(100.0) * T::from_usize_lossy(count) / T::from_usize_lossy(mesh.num_faces()))
}

/// Spreads per-map-face values onto mesh faces; unmapped faces get `fill`.
pub fn scatter<T: Real>(uv: &UvMap<T>, values: &[T], num_faces: usize, fill: T) -> Vec<T> {
    let mut out = vec![fill; num_faces];
    for (&f, &v) in uv.faces.iter().zip(values) {
        out[f] = v;
    }
    out
}

/// Evaluation summary of one selection. Per-face arrays follow `faces`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionReport {
    pub faces: Vec<usize>,
    pub per_face_arap: Vec<f64>,
    pub per_face_di: Vec<f64>,
    pub per_face_dc: Vec<f64>,
    pub lambda: f64,
    pub percent_di: f64,
    pub n_faces: usize,
    pub seg_time: f64,
}

impl DistortionReport {
    /// Eval-variant report of `uv` restricted to `patch`.
    pub fn build<T: Real>(
        mesh: &TriMesh<T>,
        patch: &Patch,
        uv: &UvMap<T>,
        lambda: T,
        seg_time: f64,
    ) -> Result<Self> {
        let lookup = uv.face_lookup();
        let sd = singular_distortions(uv, Variant::Eval);
        let dens = arap_density(uv);
        let mut di_mesh = vec![T::infinity(); mesh.num_faces()];
        let mut r = Self {
            faces: patch.faces.clone(),
            per_face_arap: Vec::with_capacity(patch.len()),
            per_face_di: Vec::with_capacity(patch.len()),
            per_face_dc: Vec::with_capacity(patch.len()),
            lambda: lambda.to_f64_lossy(),
            percent_di: 0.0,
            n_faces: patch.len(),
            seg_time,
        };
        for &f in &patch.faces {
            let i = *lookup.get(&f).ok_or_else(|| {
                WandError::InvalidArgument(format!("uv map does not cover face {f}"))
            })?;
            di_mesh[f] = sd.di[i];
            r.per_face_arap.push(dens[i].to_f64_lossy());
            r.per_face_di.push(sd.di[i].to_f64_lossy());
            r.per_face_dc.push(sd.dc[i].to_f64_lossy());
        }
        r.percent_di = percent_below(mesh, patch, &di_mesh, lambda)?.to_f64_lossy();
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `face,arap,di,dc` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("face,arap,di,dc\n");
        for i in 0..self.faces.len() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.faces[i], self.per_face_arap[i], self.per_face_di[i], self.per_face_dc[i]
            ));
        }
        s
    }

    /// Median eval `D_I` over the patch (NaN when empty).
    pub fn median_di(&self) -> f64 {
        median(&self.per_face_di)
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::{lscm, Pins};
    use crate::shapes;

    fn jac_map(a: Mat2<f64>) -> UvMap<f64> {
        UvMap {
            faces: vec![0],
            tris: vec![[0, 1, 2]],
            source_vertex: vec![0, 1, 2],
            uv: vec![[0.0, 0.0]; 3],
            jacobians: vec![a],
            pins: Pins::unit(0, 1),
            pin_uv_vertices: [0, 1],
            flipped_faces: 0,
        }
    }

    #[test]
    fn identity_and_rotation() {
        let id = jac_map([[1.0, 0.0], [0.0, 1.0]]);
        let e = singular_distortions(&id, Variant::Eval);
        let d = singular_distortions(&id, Variant::Dataset);
        assert_eq!(e.di[0], 0.0);
        assert_eq!(d.di[0], 1.0);
        assert_eq!(e.dc[0], 0.0);
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let rot = jac_map([[c, -s], [s, c]]);
        let e = singular_distortions(&rot, Variant::Eval);
        assert!(e.di[0] < 1e-24 && e.dc[0] < 1e-24);
    }

    #[test]
    fn stretch_two_one() {
        let m = jac_map([[2.0, 0.0], [0.0, 1.0]]);
        let e = singular_distortions(&m, Variant::Eval);
        let d = singular_distortions(&m, Variant::Dataset);
        assert!((e.di[0] - 1.0).abs() < 1e-12);
        assert!((d.di[0] - 2.0).abs() < 1e-12);
        assert!((e.dc[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_is_infinite_and_flagged() {
        let m = jac_map([[1.0, 0.0], [0.0, 0.0]]);
        let e = singular_distortions(&m, Variant::Eval);
        assert!(e.di[0].is_infinite() && e.dc[0].is_infinite());
        assert_eq!(e.degenerate, vec![0]);
    }

    #[test]
    fn reflection_is_flagged() {
        let m = jac_map([[1.0, 0.0], [0.0, -1.0]]);
        let e = singular_distortions(&m, Variant::Eval);
        assert_eq!(e.flipped, vec![0]);
        assert_eq!(e.di[0], 0.0);
    }

    #[test]
    fn percent_below_counts_against_full_mesh() {
        let m = shapes::cube::<f64>(1.0);
        let p = Patch::new(&m, 0..6, 0).unwrap();
        let di = vec![0.0; 12];
        assert_eq!(percent_below(&m, &p, &di, 0.05).unwrap(), 50.0);
        let all = Patch::new(&m, 0..12, 0).unwrap();
        assert_eq!(percent_below(&m, &all, &di, 0.05).unwrap(), 100.0);
        assert!(percent_below(&m, &p, &di, 0.0).is_err());
    }

    #[test]
    fn planar_rigid_map_has_zero_arap() {
        let m = shapes::plane_grid::<f64>(3, 3, 0.5);
        let p = Patch::new(&m, 0..18, 0).unwrap();
        let d = dist3(m.vertices[0], m.vertices[1]);
        let pins = Pins {
            vertices: [0, 1],
            positions: [[0.0, 0.0], [d, 0.0]],
        };
        let uv = crate::param::lscm_pinned(&m, &p, pins).unwrap();
        assert!(arap_energy(&m, &p, &uv).unwrap().iter().all(|&e| e < 1e-20));
        let mut big = uv.clone();
        for q in big.uv.iter_mut() {
            q[0] *= 2.0;
            q[1] *= 2.0;
        }
        big.recompute_jacobians(&m);
        assert!(arap_energy(&m, &p, &big).unwrap().iter().all(|&e| e > 1e-3));
    }

    #[test]
    fn report_roundtrip() {
        let m = shapes::hemisphere::<f64>(1.0, 8, 3);
        let p = Patch::new(&m, 0..m.num_faces(), 0).unwrap();
        let uv = lscm(&m, &p, None).unwrap();
        let r = DistortionReport::build(&m, &p, &uv, 0.05, 0.0).unwrap();
        assert_eq!(r.n_faces, m.num_faces());
        assert!((0.0..=100.0).contains(&r.percent_di));
        let back: DistortionReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.faces, r.faces);
        assert_eq!(r.to_csv().lines().count(), r.faces.len() + 1);
    }
}
