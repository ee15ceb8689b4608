//! Analytic test and dataset primitives. Each builder also reports a
//! per-face segment label following the primitive's developable pieces.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use crate::mesh::TriMesh;
use crate::scalar::Real;

/// Triangle soup with consistent outward orientation and per-face labels.
#[derive(Debug, Clone)]
pub struct LabeledSoup {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub labels: Vec<usize>,
    /// `developable[label]`: whether that piece flattens without distortion.
    pub developable: Vec<bool>,
}

impl LabeledSoup {
    pub fn to_mesh<T: Real>(&self) -> TriMesh<T> {
        let vs = self.vertices.iter().map(|p| p.map(T::lit)).collect();
        TriMesh::new(vs, self.faces.clone()).expect("primitive builders emit valid meshes")
    }

    pub fn num_labels(&self) -> usize {
        self.developable.len()
    }

    /// Midpoint subdivision: every triangle becomes four, labels inherited.
    pub fn subdivide(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vs: &mut Vec<[f64; 3]>| -> usize {
            let k = (a.min(b), a.max(b));
            *mid.entry(k).or_insert_with(|| {
                let (p, q) = (vs[a], vs[b]);
                vs.push([
                    (p[0] + q[0]) * 0.5,
                    (p[1] + q[1]) * 0.5,
                    (p[2] + q[2]) * 0.5,
                ]);
                vs.len() - 1
            })
        };
        let mut faces = Vec::with_capacity(self.faces.len() * 4);
        let mut labels = Vec::with_capacity(self.faces.len() * 4);
        for (f, &l) in self.faces.iter().zip(&self.labels) {
            let ab = midpoint(f[0], f[1], &mut vertices);
            let bc = midpoint(f[1], f[2], &mut vertices);
            let ca = midpoint(f[2], f[0], &mut vertices);
            for t in [[f[0], ab, ca], [ab, f[1], bc], [ca, bc, f[2]], [ab, bc, ca]] {
                faces.push(t);
                labels.push(l);
            }
        }
        Self {
            vertices,
            faces,
            labels,
            developable: self.developable.clone(),
        }
    }
}

fn quad(faces: &mut Vec<[usize; 3]>, labels: &mut Vec<usize>, q: [usize; 4], l: usize) {
    faces.push([q[0], q[1], q[2]]);
    faces.push([q[0], q[2], q[3]]);
    labels.push(l);
    labels.push(l);
}

/// Axis-aligned cube of edge `size` centred at the origin, 12 triangles.
pub fn cube_soup(size: f64) -> LabeledSoup {
    let h = size * 0.5;
    let vertices = vec![
        [-h, -h, -h],
        [h, -h, -h],
        [h, h, -h],
        [-h, h, -h],
        [-h, -h, h],
        [h, -h, h],
        [h, h, h],
        [-h, h, h],
    ];
    let mut faces = Vec::new();
    let mut labels = Vec::new();
    let quads = [
        [0, 3, 2, 1],
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [1, 2, 6, 5],
        [2, 3, 7, 6],
        [3, 0, 4, 7],
    ];
    for (l, q) in quads.into_iter().enumerate() {
        quad(&mut faces, &mut labels, q, l);
    }
    LabeledSoup {
        vertices,
        faces,
        labels,
        developable: vec![true; 6],
    }
}

pub fn cube<T: Real>(size: f64) -> TriMesh<T> {
    cube_soup(size).to_mesh()
}

pub fn tetrahedron_soup(size: f64) -> LabeledSoup {
    let s = size / (8.0f64).sqrt();
    let vertices = vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    let mut faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    orient_outward(&vertices, &mut faces, [0.0; 3]);
    LabeledSoup {
        vertices,
        faces,
        labels: vec![0, 1, 2, 3],
        developable: vec![true; 4],
    }
}

pub fn tetrahedron<T: Real>(size: f64) -> TriMesh<T> {
    tetrahedron_soup(size).to_mesh()
}

fn orient_outward(vs: &[[f64; 3]], faces: &mut [[usize; 3]], center: [f64; 3]) {
    for f in faces.iter_mut() {
        let (a, b, c) = (vs[f[0]], vs[f[1]], vs[f[2]]);
        let e1 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let e2 = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let n = [
            e1[1] * e2[2] - e1[2] * e2[1],
            e1[2] * e2[0] - e1[0] * e2[2],
            e1[0] * e2[1] - e1[1] * e2[0],
        ];
        let d = [a[0] - center[0], a[1] - center[1], a[2] - center[2]];
        if n[0] * d[0] + n[1] * d[1] + n[2] * d[2] < 0.0 {
            f.swap(1, 2);
        }
    }
}

/// Flat `nx` × `ny` grid of unit-spaced squares (scaled by `spacing`) in
/// the z = 0 plane.
pub fn plane_grid<T: Real>(nx: usize, ny: usize, spacing: f64) -> TriMesh<T> {
    let mut vertices = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([i as f64 * spacing, j as f64 * spacing, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::new();
    let mut labels = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            quad(
                &mut faces,
                &mut labels,
                [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)],
                0,
            );
        }
    }
    LabeledSoup {
        vertices,
        faces,
        labels,
        developable: vec![true],
    }
    .to_mesh()
}

/// Cylinder of `radius` and `height` along +z starting at z = 0, with
/// `segments` around and `rings` quad rows. Labels: side 0, bottom cap 1,
/// top cap 2 (caps are centre fans).
pub fn cylinder_soup(
    radius: f64,
    height: f64,
    segments: usize,
    rings: usize,
    caps: bool,
) -> LabeledSoup {
    let n = segments;
    let mut vertices = Vec::new();
    for j in 0..=rings {
        let z = height * j as f64 / rings as f64;
        for i in 0..n {
            let a = TAU * i as f64 / n as f64;
            vertices.push([radius * a.cos(), radius * a.sin(), z]);
        }
    }
    let id = |i: usize, j: usize| j * n + (i % n);
    let mut faces = Vec::new();
    let mut labels = Vec::new();
    for j in 0..rings {
        for i in 0..n {
            quad(
                &mut faces,
                &mut labels,
                [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)],
                0,
            );
        }
    }
    let mut developable = vec![true];
    if caps {
        let bottom = vertices.len();
        vertices.push([0.0, 0.0, 0.0]);
        let top = vertices.len();
        vertices.push([0.0, 0.0, height]);
        for i in 0..n {
            faces.push([bottom, id(i + 1, 0), id(i, 0)]);
            labels.push(1);
        }
        for i in 0..n {
            faces.push([top, id(i, rings), id(i + 1, rings)]);
            labels.push(2);
        }
        developable.extend([true, true]);
    }
    LabeledSoup {
        vertices,
        faces,
        labels,
        developable,
    }
}

pub fn cylinder<T: Real>(
    radius: f64,
    height: f64,
    segments: usize,
    rings: usize,
    caps: bool,
) -> TriMesh<T> {
    cylinder_soup(radius, height, segments, rings, caps).to_mesh()
}

/// Cone with base on z = 0 and apex at `height`. Labels: side 0, base 1.
pub fn cone_soup(radius: f64, height: f64, segments: usize, rings: usize) -> LabeledSoup {
    let n = segments;
    let mut vertices = Vec::new();
    for j in 0..rings {
        let t = j as f64 / rings as f64;
        for i in 0..n {
            let a = TAU * i as f64 / n as f64;
            let r = radius * (1.0 - t);
            vertices.push([r * a.cos(), r * a.sin(), height * t]);
        }
    }
    let id = |i: usize, j: usize| j * n + (i % n);
    let apex = vertices.len();
    vertices.push([0.0, 0.0, height]);
    let base = vertices.len();
    vertices.push([0.0, 0.0, 0.0]);
    let mut faces = Vec::new();
    let mut labels = Vec::new();
    for j in 0..rings.saturating_sub(1) {
        for i in 0..n {
            quad(
                &mut faces,
                &mut labels,
                [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)],
                0,
            );
        }
    }
    for i in 0..n {
        faces.push([id(i, rings - 1), id(i + 1, rings - 1), apex]);
        labels.push(0);
    }
    for i in 0..n {
        faces.push([base, id(i + 1, 0), id(i, 0)]);
        labels.push(1);
    }
    LabeledSoup {
        vertices,
        faces,
        labels,
        developable: vec![true, true],
    }
}

pub fn icosphere_soup(radius: f64, subdivisions: usize) -> LabeledSoup {
    let t = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let project = |vs: &mut Vec<[f64; 3]>| {
        for p in vs.iter_mut() {
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            *p = p.map(|x| x * radius / n);
        }
    };
    project(&mut vertices);
    let nf = faces.len();
    let mut soup = LabeledSoup {
        vertices,
        faces,
        labels: vec![0; nf],
        developable: vec![false],
    };
    for _ in 0..subdivisions {
        soup = soup.subdivide();
        project(&mut soup.vertices);
    }
    orient_outward(&soup.vertices, &mut soup.faces, [0.0; 3]);
    soup
}

pub fn icosphere<T: Real>(radius: f64, subdivisions: usize) -> TriMesh<T> {
    icosphere_soup(radius, subdivisions).to_mesh()
}

/// Upper hemisphere (z ≥ 0) as a latitude/longitude mesh with a pole fan.
pub fn hemisphere<T: Real>(radius: f64, segments: usize, rings: usize) -> TriMesh<T> {
    let n = segments;
    let mut vertices = vec![[0.0, 0.0, radius]];
    for k in 1..=rings {
        let phi = 0.5 * PI * k as f64 / rings as f64;
        for i in 0..n {
            let a = TAU * i as f64 / n as f64;
            vertices.push([
                radius * phi.sin() * a.cos(),
                radius * phi.sin() * a.sin(),
                radius * phi.cos(),
            ]);
        }
    }
    let id = |i: usize, k: usize| 1 + (k - 1) * n + (i % n);
    let mut faces = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        faces.push([0, id(i, 1), id(i + 1, 1)]);
        labels.push(0);
    }
    for k in 1..rings {
        for i in 0..n {
            quad(
                &mut faces,
                &mut labels,
                [id(i, k), id(i, k + 1), id(i + 1, k + 1), id(i + 1, k)],
                0,
            );
        }
    }
    LabeledSoup {
        vertices,
        faces,
        labels,
        developable: vec![false],
    }
    .to_mesh()
}

/// Torus around the z axis: major radius `big_r`, tube radius `small_r`.
pub fn torus<T: Real>(big_r: f64, small_r: f64, n_major: usize, n_minor: usize) -> TriMesh<T> {
    let mut vertices = Vec::new();
    for i in 0..n_major {
        let u = TAU * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let v = TAU * j as f64 / n_minor as f64;
            let r = big_r + small_r * v.cos();
            vertices.push([r * u.cos(), r * u.sin(), small_r * v.sin()]);
        }
    }
    let id = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut faces = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n_major {
        for j in 0..n_minor {
            quad(
                &mut faces,
                &mut labels,
                [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)],
                0,
            );
        }
    }
    LabeledSoup {
        vertices,
        faces,
        labels,
        developable: vec![false],
    }
    .to_mesh()
}

/// Three mutually adjacent sides of a cube (x = 0, y = 0, z = 0 faces of
/// the unit cube), each an `n` × `n` grid. Labels 0, 1, 2 per side.
pub fn three_sided_cube_soup(n: usize) -> LabeledSoup {
    let mut vmap: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vid = |c: [usize; 3], vs: &mut Vec<[f64; 3]>| -> usize {
        *vmap.entry(c).or_insert_with(|| {
            vs.push(c.map(|x| x as f64 / n as f64));
            vs.len() - 1
        })
    };
    let mut faces = Vec::new();
    let mut labels = Vec::new();
    // sides seen from outside the positive octant corner at the origin
    for (label, (ax_u, ax_v)) in [(1usize, 2usize), (2, 0), (0, 1)].into_iter().enumerate() {
        for j in 0..n {
            for i in 0..n {
                let corner = |di: usize, dj: usize| {
                    let mut c = [0usize; 3];
                    c[ax_u] = i + di;
                    c[ax_v] = j + dj;
                    c
                };
                let q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)]
                    .map(|c| vid(c, &mut vertices));
                quad(&mut faces, &mut labels, q, label);
            }
        }
    }
    LabeledSoup {
        vertices,
        faces,
        labels,
        developable: vec![true; 3],
    }
}
