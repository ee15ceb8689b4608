//! Wavefront OBJ ingest and export.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, WandError};
use crate::mesh::TriMesh;
use crate::param::UvMap;
use crate::scalar::Real;
use crate::topology::Patch;

/// Parses ASCII OBJ text. Only `v` and `f` records are used; `vt`, `vn`,
/// groups and materials are ignored. Exactly coincident vertices are merged.
pub fn parse_obj<T: Real>(text: &str) -> Result<TriMesh<T>> {
    let mut raw: Vec<[f64; 3]> = Vec::new();
    let mut faces_raw: Vec<(usize, Vec<i64>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut p = [0.0f64; 3];
                for c in p.iter_mut() {
                    let tok = it.next().ok_or_else(|| WandError::ObjParse {
                        line: lineno + 1,
                        msg: "vertex needs 3 coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| WandError::ObjParse {
                        line: lineno + 1,
                        msg: format!("bad coordinate {tok:?}"),
                    })?;
                }
                raw.push(p);
            }
            Some("f") => {
                let mut idx = Vec::with_capacity(3);
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first.parse().map_err(|_| WandError::ObjParse {
                        line: lineno + 1,
                        msg: format!("bad face index {tok:?}"),
                    })?;
                    idx.push(i);
                }
                faces_raw.push((lineno + 1, idx));
            }
            _ => {}
        }
    }

    // merge bitwise-identical positions
    let mut remap = Vec::with_capacity(raw.len());
    let mut seen: HashMap<[u64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    for p in &raw {
        let k = p.map(|x| if x == 0.0 { 0 } else { x.to_bits() });
        let id = *seen.entry(k).or_insert_with(|| {
            vertices.push(p.map(T::lit));
            vertices.len() - 1
        });
        remap.push(id);
    }

    let mut faces = Vec::with_capacity(faces_raw.len());
    for (fi, (line, idx)) in faces_raw.iter().enumerate() {
        if idx.len() != 3 {
            return Err(WandError::NonTriangular {
                face: fi,
                arity: idx.len(),
            });
        }
        let mut f = [0usize; 3];
        for (k, &i) in idx.iter().enumerate() {
            let n = raw.len() as i64;
            let zero_based = if i > 0 { i - 1 } else { n + i };
            if i == 0 || zero_based < 0 || zero_based >= n {
                return Err(WandError::ObjParse {
                    line: *line,
                    msg: format!("vertex index {i} out of range"),
                });
            }
            f[k] = remap[zero_based as usize];
        }
        faces.push(f);
    }
    TriMesh::new(vertices, faces)
}

pub fn load_mesh<T: Real>(path: impl AsRef<Path>) -> Result<TriMesh<T>> {
    parse_obj(&std::fs::read_to_string(path)?)
}

pub fn mesh_to_obj<T: Real>(mesh: &TriMesh<T>) -> String {
    let mut s = String::new();
    for p in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", p[0], p[1], p[2]);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

/// OBJ of the parameterized faces with one `vt` per UV vertex.
pub fn uv_to_obj<T: Real>(mesh: &TriMesh<T>, uv: &UvMap<T>) -> String {
    let mut s = String::new();
    for &v in &uv.source_vertex {
        let p = mesh.vertices[v];
        let _ = writeln!(s, "v {} {} {}", p[0], p[1], p[2]);
    }
    for q in &uv.uv {
        let _ = writeln!(s, "vt {} {}", q[0], q[1]);
    }
    for t in &uv.tris {
        let _ = writeln!(
            s,
            "f {a}/{a} {b}/{b} {c}/{c}",
            a = t[0] + 1,
            b = t[1] + 1,
            c = t[2] + 1
        );
    }
    s
}

/// Whole mesh with faces tagged into `selected` and `rest` groups.
pub fn patch_to_obj<T: Real>(mesh: &TriMesh<T>, patch: &Patch) -> String {
    let mut s = String::new();
    for p in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", p[0], p[1], p[2]);
    }
    let inside = patch.mask(mesh.num_faces());
    for (name, flag) in [("selected", true), ("rest", false)] {
        let _ = writeln!(s, "g {name}");
        for (fi, f) in mesh.faces.iter().enumerate() {
            if inside[fi] == flag {
                let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
            }
        }
    }
    s
}
