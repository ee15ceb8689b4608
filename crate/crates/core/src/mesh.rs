//! Indexed triangle mesh with the derived quantities every other module
//! consumes: edge table with dihedral angles, face adjacency, areas, and
//! per-face local frames.

use std::collections::HashMap;

use crate::error::{Result, WandError};
use crate::scalar::*;

/// Sentinel used in `MeshEdge::faces[1]` for boundary edges.
pub const NO_FACE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct MeshEdge<T> {
    /// Endpoints, sorted ascending.
    pub v: [usize; 2],
    /// Incident faces; `faces[1] == NO_FACE` on the boundary.
    pub faces: [usize; 2],
    /// Interior dihedral angle in (0, π]; coplanar neighbours give π.
    /// Boundary edges carry π.
    pub dihedral: T,
    pub length: T,
}

impl<T> MeshEdge<T> {
    pub fn is_boundary(&self) -> bool {
        self.faces[1] == NO_FACE
    }

    /// The face across this edge from `f`.
    pub fn other(&self, f: usize) -> Option<usize> {
        if self.faces[0] == f {
            (self.faces[1] != NO_FACE).then_some(self.faces[1])
        } else if self.faces[1] == f {
            Some(self.faces[0])
        } else {
            None
        }
    }
}

/// Immutable triangle mesh. All derived fields are populated at construction.
#[derive(Debug, Clone)]
pub struct TriMesh<T: Real> {
    pub vertices: Vec<Vec3<T>>,
    pub faces: Vec<[usize; 3]>,
    pub edges: Vec<MeshEdge<T>>,
    /// Edge index of the edge `(faces[f][i], faces[f][(i + 1) % 3])`.
    pub face_edges: Vec<[usize; 3]>,
    /// Edge-sharing neighbours of every face.
    pub face_adjacency: Vec<Vec<usize>>,
    pub face_areas: Vec<T>,
    pub face_normals: Vec<Vec3<T>>,
    /// Corner positions in an orthonormal basis of the face plane, corner 0
    /// at the origin and corner 1 on the positive x axis.
    pub face_frames: Vec<[Vec2<T>; 3]>,
    /// Gradients of the barycentric hat functions in the local frame.
    pub face_grads: Vec<[Vec2<T>; 3]>,
    pub vertex_faces: Vec<Vec<usize>>,
    pub vertex_normals: Vec<Vec3<T>>,
    edge_lookup: HashMap<(usize, usize), usize>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl<T: Real> TriMesh<T> {
    /// Builds a mesh and validates it: distinct in-range indices, positive
    /// area, manifold and consistently oriented edges.
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(WandError::EmptyMesh);
        }
        let nv = vertices.len();
        let nf = faces.len();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= nv) || f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(WandError::BadFaceIndices { face: fi });
            }
        }

        let mut face_areas = Vec::with_capacity(nf);
        let mut face_normals = Vec::with_capacity(nf);
        let mut face_frames = Vec::with_capacity(nf);
        let mut face_grads = Vec::with_capacity(nf);
        for (fi, f) in faces.iter().enumerate() {
            let p = [vertices[f[0]], vertices[f[1]], vertices[f[2]]];
            let e1 = sub3(p[1], p[0]);
            let e2 = sub3(p[2], p[0]);
            let c = cross3(e1, e2);
            let twice_area = norm3(c);
            let l1 = norm3(e1);
            let scale = l1.max(norm3(e2)).max(dist3(p[1], p[2]));
            // Relative test: a collinear triple has |e1 × e2| ≈ 0 against |e|².
            if !(twice_area > T::lit(1e-12) * scale * scale) || !twice_area.is_finite() {
                return Err(WandError::DegenerateFace { face: fi });
            }
            let n = scale3(c, T::one() / twice_area);
            let xh = scale3(e1, T::one() / l1);
            let yh = cross3(n, xh);
            let frame = [
                [T::zero(), T::zero()],
                [l1, T::zero()],
                [dot3(e2, xh), dot3(e2, yh)],
            ];
            face_areas.push(twice_area * T::lit(0.5));
            face_normals.push(n);
            face_grads.push(hat_gradients(&frame, twice_area));
            face_frames.push(frame);
        }

        let mut edge_lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(nf * 2);
        // (face, directed first vertex) per edge, to check orientation
        let mut edge_dirs: Vec<[(usize, usize); 2]> = Vec::with_capacity(nf * 2);
        let mut edges: Vec<MeshEdge<T>> = Vec::with_capacity(nf * 2);
        let mut face_edges = vec![[0usize; 3]; nf];
        for (fi, f) in faces.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (f[i], f[(i + 1) % 3]);
                let k = key(a, b);
                match edge_lookup.get(&k) {
                    Some(&ei) => {
                        let e = &mut edges[ei];
                        if e.faces[1] != NO_FACE {
                            return Err(WandError::NonManifoldEdge(k.0, k.1));
                        }
                        if edge_dirs[ei][0].1 == a {
                            return Err(WandError::InconsistentOrientation(k.0, k.1));
                        }
                        e.faces[1] = fi;
                        edge_dirs[ei][1] = (fi, a);
                        face_edges[fi][i] = ei;
                    }
                    None => {
                        let ei = edges.len();
                        edge_lookup.insert(k, ei);
                        edges.push(MeshEdge {
                            v: [k.0, k.1],
                            faces: [fi, NO_FACE],
                            dihedral: T::PI(),
                            length: dist3(vertices[a], vertices[b]),
                        });
                        edge_dirs.push([(fi, a), (NO_FACE, NO_FACE)]);
                        face_edges[fi][i] = ei;
                    }
                }
            }
        }
        let min_dihedral = T::lit(1e-9);
        for e in edges.iter_mut() {
            if e.faces[1] != NO_FACE {
                let (n1, n2) = (face_normals[e.faces[0]], face_normals[e.faces[1]]);
                let between = norm3(cross3(n1, n2)).atan2(dot3(n1, n2));
                e.dihedral = (T::PI() - between).max(min_dihedral).min(T::PI());
            }
        }

        let face_adjacency = (0..nf)
            .map(|fi| {
                face_edges[fi]
                    .iter()
                    .filter_map(|&ei| edges[ei].other(fi))
                    .collect()
            })
            .collect();

        let mut vertex_faces = vec![Vec::new(); nv];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }
        let vertex_normals = vertex_faces
            .iter()
            .map(|fs| {
                let mut n = [T::zero(); 3];
                for &f in fs {
                    n = add3(n, scale3(face_normals[f], face_areas[f]));
                }
                normalize3(n)
            })
            .collect();

        Ok(Self {
            vertices,
            faces,
            edges,
            face_edges,
            face_adjacency,
            face_areas,
            face_normals,
            face_frames,
            face_grads,
            vertex_faces,
            vertex_normals,
            edge_lookup,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&key(a, b)).copied()
    }

    /// Interior edges, i.e. face pairs.
    pub fn interior_edges(&self) -> impl Iterator<Item = &MeshEdge<T>> {
        self.edges.iter().filter(|e| !e.is_boundary())
    }

    pub fn face_centroid(&self, f: usize) -> Vec3<T> {
        let [a, b, c] = self.faces[f];
        let s = add3(add3(self.vertices[a], self.vertices[b]), self.vertices[c]);
        scale3(s, T::one() / T::lit(3.0))
    }

    pub fn total_area(&self) -> T {
        self.face_areas.iter().copied().sum()
    }

    pub fn bbox_diagonal(&self) -> T {
        let mut lo = [T::infinity(); 3];
        let mut hi = [T::neg_infinity(); 3];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        dist3(lo, hi)
    }

    /// Interior angle at corner `i` of face `f`.
    pub fn corner_angle(&self, f: usize, i: usize) -> T {
        let fr = &self.face_frames[f];
        let a = sub2(fr[(i + 1) % 3], fr[i]);
        let b = sub2(fr[(i + 2) % 3], fr[i]);
        let cr = a[0] * b[1] - a[1] * b[0];
        let dt = a[0] * b[0] + a[1] * b[1];
        cr.abs().atan2(dt)
    }

    /// Applies `f` to every vertex position and rebuilds derived data.
    pub fn map_vertices(&self, f: impl Fn(Vec3<T>) -> Vec3<T>) -> Result<Self> {
        Self::new(
            self.vertices.iter().map(|&p| f(p)).collect(),
            self.faces.clone(),
        )
    }

    /// Converts scalar precision.
    pub fn cast<U: Real>(&self) -> Result<TriMesh<U>> {
        let vs = self
            .vertices
            .iter()
            .map(|p| p.map(|x| U::lit(x.to_f64_lossy())))
            .collect();
        TriMesh::new(vs, self.faces.clone())
    }

    /// Content hash of positions and connectivity (hex SHA-256).
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for p in &self.vertices {
            for x in p {
                h.update(x.to_f64_lossy().to_le_bytes());
            }
        }
        for f in &self.faces {
            for &v in f {
                h.update((v as u64).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// ∇φ_i = (p_k − p_j)^⊥ / 2A with (i, j, k) cyclic and ⊥ a +90° rotation.
fn hat_gradients<T: Real>(p: &[Vec2<T>; 3], twice_area: T) -> [Vec2<T>; 3] {
    let mut g = [[T::zero(); 2]; 3];
    for i in 0..3 {
        let d = sub2(p[(i + 2) % 3], p[(i + 1) % 3]);
        g[i] = [-d[1] / twice_area, d[0] / twice_area];
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn cube_combinatorics_and_dihedrals() {
        let m = shapes::cube::<f64>(1.0);
        assert_eq!(
            (m.num_vertices(), m.num_faces(), m.num_edges()),
            (8, 12, 18)
        );
        let mut right = 0;
        let mut flat = 0;
        for e in &m.edges {
            if (e.dihedral - std::f64::consts::FRAC_PI_2).abs() < 1e-12 {
                right += 1;
            } else if (e.dihedral - std::f64::consts::PI).abs() < 1e-12 {
                flat += 1;
            }
        }
        assert_eq!((right, flat), (12, 6));
    }

    #[test]
    fn hat_gradients_reproduce_linear_functions() {
        let m = shapes::icosphere::<f64>(1.0, 1);
        for f in 0..m.num_faces() {
            let fr = m.face_frames[f];
            let g = m.face_grads[f];
            // the coordinate functions x and y are linear: Σ x_i ∇φ_i = (1, 0)
            let gx: [f64; 2] = [0, 1].map(|k| (0..3).map(|i| fr[i][0] * g[i][k]).sum());
            let gy: [f64; 2] = [0, 1].map(|k| (0..3).map(|i| fr[i][1] * g[i][k]).sum());
            assert!((gx[0] - 1.0).abs() < 1e-12 && gx[1].abs() < 1e-12);
            assert!(gy[0].abs() < 1e-12 && (gy[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert!(matches!(
            TriMesh::<f64>::new(v.clone(), vec![[0, 1, 2]]),
            Err(WandError::DegenerateFace { face: 0 })
        ));
        assert!(matches!(
            TriMesh::<f64>::new(v, vec![[0, 1, 1]]),
            Err(WandError::BadFaceIndices { .. })
        ));
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let r = TriMesh::<f64>::new(v, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]);
        assert!(matches!(r, Err(WandError::NonManifoldEdge(0, 1))));
    }

    #[test]
    fn dihedral_is_symmetric_under_face_order() {
        let m = shapes::cylinder::<f64>(1.0, 2.0, 12, 3, true);
        let rev: Vec<[usize; 3]> = m.faces.iter().rev().copied().collect();
        let m2 = TriMesh::new(m.vertices.clone(), rev).unwrap();
        for e in &m.edges {
            let e2 = &m2.edges[m2.edge_between(e.v[0], e.v[1]).unwrap()];
            assert!((e.dihedral - e2.dihedral).abs() < 1e-14);
        }
    }
}
