//! Conformal and isometric parameterization.
//!
//! The conformal energy of a face with Jacobian `A = [[a, b], [c, d]]` is
//! `area · ‖A − S(A)‖² = area · ((a − d)² + (b + c)²) / 2`, where `S(A)` is
//! the closest similarity. [`lscm`] minimizes its sum over a disk patch,
//! [`wlscm`] the per-face weighted sum over the whole mesh, and
//! [`isometric_refine`] runs local/global ARAP iterations from a given map.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Result, WandError};
use crate::mesh::TriMesh;
use crate::scalar::*;
use crate::sparse::{Cholesky, SymTriplets};
use crate::topology::{Patch, PatchDomain};

/// Weights at or below zero are excluded; positive weights are floored here.
pub const WEIGHT_FLOOR: f64 = 1e-7;

/// Two pinned vertices (mesh vertex ids) and their fixed UV positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pins<T> {
    pub vertices: [usize; 2],
    pub positions: [Vec2<T>; 2],
}

impl<T: Real> Pins<T> {
    /// Pins `a` at the origin and `b` at `(1, 0)`.
    pub fn unit(a: usize, b: usize) -> Self {
        Self {
            vertices: [a, b],
            positions: [[T::zero(), T::zero()], [T::one(), T::zero()]],
        }
    }
}

/// Per-vertex UV coordinates over a set of faces.
#[derive(Debug, Clone)]
pub struct UvMap<T> {
    /// Mesh face of each parameterized triangle.
    pub faces: Vec<usize>,
    /// UV vertex indices of each triangle, in mesh corner order.
    pub tris: Vec<[usize; 3]>,
    /// Mesh vertex behind each UV vertex (duplicated along seams).
    pub source_vertex: Vec<usize>,
    pub uv: Vec<Vec2<T>>,
    /// Per-face Jacobian from the face's local frame to UV.
    pub jacobians: Vec<Mat2<T>>,
    pub pins: Pins<T>,
    /// UV vertex indices of the pinned vertices.
    pub pin_uv_vertices: [usize; 2],
    /// Faces whose Jacobian had negative determinant on input to refinement.
    pub flipped_faces: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct UvJson {
    pub uv: Vec<[f64; 2]>,
    pub pins: [usize; 2],
}

impl<T: Real> UvMap<T> {
    pub fn recompute_jacobians(&mut self, mesh: &TriMesh<T>) {
        self.jacobians = self
            .faces
            .iter()
            .zip(&self.tris)
            .map(|(&f, t)| face_jacobian(mesh, f, [self.uv[t[0]], self.uv[t[1]], self.uv[t[2]]]))
            .collect();
    }

    /// UV of each mesh vertex (first copy when duplicated), `None` when the
    /// vertex is not parameterized.
    pub fn uv_by_mesh_vertex(&self, num_vertices: usize) -> Vec<Option<Vec2<T>>> {
        let mut out = vec![None; num_vertices];
        for (i, &v) in self.source_vertex.iter().enumerate() {
            if out[v].is_none() {
                out[v] = Some(self.uv[i]);
            }
        }
        out
    }

    pub fn to_json(&self) -> UvJson {
        UvJson {
            uv: self
                .uv
                .iter()
                .map(|p| [p[0].to_f64_lossy(), p[1].to_f64_lossy()])
                .collect(),
            pins: self.pins.vertices,
        }
    }

    /// Per-face index into `faces`, keyed by mesh face.
    pub fn face_lookup(&self) -> HashMap<usize, usize> {
        self.faces
            .iter()
            .enumerate()
            .map(|(i, &f)| (f, i))
            .collect()
    }
}

pub fn face_jacobian<T: Real>(mesh: &TriMesh<T>, f: usize, q: [Vec2<T>; 3]) -> Mat2<T> {
    let g = mesh.face_grads[f];
    let mut a = [[T::zero(); 2]; 2];
    for k in 0..3 {
        for r in 0..2 {
            a[r][0] += q[k][r] * g[k][0];
            a[r][1] += q[k][r] * g[k][1];
        }
    }
    a
}

/// Coefficients of the two conformal residuals `a − d` and `b + c` with
/// respect to `(u0, v0, u1, v1, u2, v2)`.
pub(crate) fn conformal_rows<T: Real>(mesh: &TriMesh<T>, f: usize) -> ([T; 6], [T; 6]) {
    let g = mesh.face_grads[f];
    let mut c1 = [T::zero(); 6];
    let mut c2 = [T::zero(); 6];
    for k in 0..3 {
        c1[2 * k] = g[k][0];
        c1[2 * k + 1] = -g[k][1];
        c2[2 * k] = g[k][1];
        c2[2 * k + 1] = g[k][0];
    }
    (c1, c2)
}

/// Unweighted conformal energy of each parameterized face.
pub fn conformal_energies<T: Real>(mesh: &TriMesh<T>, uv: &UvMap<T>) -> Vec<T> {
    uv.faces
        .iter()
        .zip(&uv.jacobians)
        .map(|(&f, a)| {
            let r1 = a[0][0] - a[1][1];
            let r2 = a[0][1] + a[1][0];
            mesh.face_areas[f] * T::lit(0.5) * (r1 * r1 + r2 * r2)
        })
        .collect()
}

/// Internal state of a weighted conformal solve, kept for the adjoint pass.
pub(crate) struct WeightedSolve<T> {
    pub uv: UvMap<T>,
    /// Faces (domain-local) of the pinned positive-weight component.
    pub core_faces: Vec<bool>,
    /// Free-unknown index of `2 * v + c` inside the core system, or `usize::MAX`.
    pub core_free: Vec<usize>,
    pub core_factor: Cholesky<T>,
}

fn local_face_adjacency(dom: &PatchDomain) -> Vec<Vec<usize>> {
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (i, t) in dom.tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            by_edge.entry((a.min(b), a.max(b))).or_default().push(i);
        }
    }
    let mut adj = vec![Vec::new(); dom.tris.len()];
    for fs in by_edge.values() {
        if fs.len() == 2 {
            adj[fs[0]].push(fs[1]);
            adj[fs[1]].push(fs[0]);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
    }
    adj
}

fn local_vertex_of(dom: &PatchDomain, mesh_vertex: usize) -> Result<usize> {
    dom.source_vertex
        .iter()
        .position(|&v| v == mesh_vertex)
        .ok_or(WandError::InvalidVertex(mesh_vertex))
}

/// Assembles and solves `min Σ w_t E_t` over `faces` with `fixed` unknowns
/// held at `x`. Returns the factorization and free-index map.
fn solve_block<T: Real>(
    mesh: &TriMesh<T>,
    dom: &PatchDomain,
    faces: &[usize],
    weights: &[T],
    fixed: &[bool],
    x: &mut [T],
) -> Result<(Cholesky<T>, Vec<usize>)> {
    let n2 = 2 * dom.num_vertices();
    let mut free = vec![usize::MAX; n2];
    let mut nfree = 0;
    for &i in faces {
        for &v in &dom.tris[i] {
            for c in 0..2 {
                let u = 2 * v + c;
                if !fixed[v] && free[u] == usize::MAX {
                    free[u] = nfree;
                    nfree += 1;
                }
            }
        }
    }
    let mut trip = SymTriplets::with_capacity(nfree, faces.len() * 42);
    let mut rhs = vec![T::zero(); nfree];
    for &i in faces {
        let f = dom.faces[i];
        let s = weights[i] * mesh.face_areas[f];
        let (c1, c2) = conformal_rows(mesh, f);
        let t = dom.tris[i];
        let gid = |k: usize| 2 * t[k / 2] + (k % 2);
        for p in 0..6 {
            let gp = gid(p);
            let fp = free[gp];
            if fp == usize::MAX {
                continue;
            }
            for q in 0..6 {
                let h = s * (c1[p] * c1[q] + c2[p] * c2[q]);
                let gq = gid(q);
                let fq = free[gq];
                if fq == usize::MAX {
                    rhs[fp] -= h * x[gq];
                } else if fq <= fp {
                    trip.add(fp, fq, h);
                }
            }
        }
    }
    let chol = trip.build().factor()?;
    let sol = chol.solve(&rhs);
    for u in 0..n2 {
        if free[u] != usize::MAX {
            x[u] = sol[free[u]];
        }
    }
    Ok((chol, free))
}

/// Weighted conformal solve over an arbitrary domain.
///
/// The edge-connected component of positive-weight faces holding the pins
/// is solved exactly; every other vertex is then placed by minimizing the
/// floored-weight energy of the remaining faces with that component fixed.
pub(crate) fn solve_weighted<T: Real>(
    mesh: &TriMesh<T>,
    dom: &PatchDomain,
    weights: &[T],
    pins: Option<Pins<T>>,
) -> Result<WeightedSolve<T>> {
    let nf = dom.tris.len();
    if weights.len() != nf {
        return Err(WandError::InvalidArgument(
            "weight count differs from domain face count".into(),
        ));
    }
    let floor = T::lit(WEIGHT_FLOOR);
    let eff: Vec<T> = weights
        .iter()
        .map(|&w| {
            if w > T::zero() {
                w.max(floor)
            } else {
                T::zero()
            }
        })
        .collect();
    let Some(best) = (0..nf)
        .filter(|&i| eff[i] > T::zero())
        .max_by(|&a, &b| eff[a].partial_cmp(&eff[b]).unwrap().then(b.cmp(&a)))
    else {
        return Err(WandError::EmptySoftSegmentation);
    };

    let (pins, pin_local) = match pins {
        Some(p) => {
            let a = local_vertex_of(dom, p.vertices[0])?;
            let b = local_vertex_of(dom, p.vertices[1])?;
            if a == b {
                return Err(WandError::InvalidArgument("pins must be distinct".into()));
            }
            (p, [a, b])
        }
        None => {
            let f = dom.faces[best];
            let t = dom.tris[best];
            let fr = mesh.face_frames[f];
            let p = Pins {
                vertices: [dom.source_vertex[t[0]], dom.source_vertex[t[1]]],
                positions: [fr[0], fr[1]],
            };
            (p, [t[0], t[1]])
        }
    };

    let adj = local_face_adjacency(dom);
    let start = (0..nf)
        .filter(|&i| eff[i] > T::zero() && dom.tris[i].contains(&pin_local[0]))
        .max_by(|&a, &b| eff[a].partial_cmp(&eff[b]).unwrap().then(b.cmp(&a)))
        .ok_or_else(|| {
            WandError::InvalidArgument("pinned vertex lies on no positive-weight face".into())
        })?;
    let mut core = vec![false; nf];
    core[start] = true;
    let mut q = VecDeque::from([start]);
    while let Some(i) = q.pop_front() {
        for &j in &adj[i] {
            if !core[j] && eff[j] > T::zero() {
                core[j] = true;
                q.push_back(j);
            }
        }
    }
    let nv = dom.num_vertices();
    let mut in_core_v = vec![false; nv];
    for i in (0..nf).filter(|&i| core[i]) {
        for &v in &dom.tris[i] {
            in_core_v[v] = true;
        }
    }
    if !in_core_v[pin_local[1]] {
        return Err(WandError::InvalidArgument(
            "pins are not connected through positive-weight faces".into(),
        ));
    }

    let mut x = vec![T::zero(); 2 * nv];
    let mut fixed = vec![false; nv];
    for k in 0..2 {
        fixed[pin_local[k]] = true;
        x[2 * pin_local[k]] = pins.positions[k][0];
        x[2 * pin_local[k] + 1] = pins.positions[k][1];
    }
    let core_list: Vec<usize> = (0..nf).filter(|&i| core[i]).collect();
    let (core_factor, core_free) = solve_block(mesh, dom, &core_list, &eff, &fixed, &mut x)?;

    // extension over everything outside the core
    if in_core_v.iter().any(|&b| !b) {
        let rest: Vec<usize> = (0..nf).filter(|&i| !core[i]).collect();
        let rest_w: Vec<T> = weights.iter().map(|&w| w.max(floor)).collect();
        let mut fixed2 = in_core_v.clone();
        // components not touching the core get their own pins
        let mut comp_seen = vec![false; nf];
        let mut vfaces: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for &i in &rest {
            for &v in &dom.tris[i] {
                vfaces[v].push(i);
            }
        }
        for &s in &rest {
            if comp_seen[s] {
                continue;
            }
            let mut comp = vec![s];
            comp_seen[s] = true;
            let mut touches = false;
            let mut k = 0;
            while k < comp.len() {
                let i = comp[k];
                k += 1;
                for &v in &dom.tris[i] {
                    if in_core_v[v] {
                        touches = true;
                        continue;
                    }
                    for &j in &vfaces[v] {
                        if !comp_seen[j] {
                            comp_seen[j] = true;
                            comp.push(j);
                        }
                    }
                }
            }
            if !touches {
                let t = dom.tris[s];
                let fr = mesh.face_frames[dom.faces[s]];
                for c in 0..2 {
                    fixed2[t[c]] = true;
                    x[2 * t[c]] = fr[c][0];
                    x[2 * t[c] + 1] = fr[c][1];
                }
            }
        }
        solve_block(mesh, dom, &rest, &rest_w, &fixed2, &mut x)?;
    }

    let uv: Vec<Vec2<T>> = (0..nv).map(|v| [x[2 * v], x[2 * v + 1]]).collect();
    let mut map = UvMap {
        faces: dom.faces.clone(),
        tris: dom.tris.clone(),
        source_vertex: dom.source_vertex.clone(),
        uv,
        jacobians: Vec::new(),
        pins,
        pin_uv_vertices: pin_local,
        flipped_faces: 0,
    };
    map.recompute_jacobians(mesh);
    Ok(WeightedSolve {
        uv: map,
        core_faces: core,
        core_free,
        core_factor,
    })
}

/// Pair of domain vertices at maximal Euclidean distance (lowest indices
/// on ties).
fn farthest_pair<T: Real>(mesh: &TriMesh<T>, dom: &PatchDomain) -> [usize; 2] {
    let n = dom.num_vertices();
    let mut best = (T::neg_infinity(), 0, 1.min(n.saturating_sub(1)));
    for i in 0..n {
        let p = mesh.vertices[dom.source_vertex[i]];
        for j in i + 1..n {
            let q = mesh.vertices[dom.source_vertex[j]];
            let d = dot3(sub3(p, q), sub3(p, q));
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    [best.1, best.2]
}

/// Least squares conformal map of a disk-topology patch.
///
/// Default pins: the two patch vertices farthest apart, fixed at (0, 0)
/// and (1, 0).
pub fn lscm<T: Real>(
    mesh: &TriMesh<T>,
    patch: &Patch,
    pins: Option<[usize; 2]>,
) -> Result<UvMap<T>> {
    let dom = patch.domain(mesh);
    if !dom.is_disk() {
        return Err(WandError::NotDisk {
            loops: dom.loops.len(),
            euler: dom.euler(),
        });
    }
    lscm_on_domain(mesh, &dom, pins.map(|[a, b]| Pins::unit(a, b)))
}

/// Same as [`lscm`] with explicit pin positions.
pub fn lscm_pinned<T: Real>(mesh: &TriMesh<T>, patch: &Patch, pins: Pins<T>) -> Result<UvMap<T>> {
    let dom = patch.domain(mesh);
    if !dom.is_disk() {
        return Err(WandError::NotDisk {
            loops: dom.loops.len(),
            euler: dom.euler(),
        });
    }
    lscm_on_domain(mesh, &dom, Some(pins))
}

pub(crate) fn lscm_on_domain<T: Real>(
    mesh: &TriMesh<T>,
    dom: &PatchDomain,
    pins: Option<Pins<T>>,
) -> Result<UvMap<T>> {
    let pins = match pins {
        Some(p) => p,
        None => {
            if dom.num_vertices() < 3 {
                return Err(WandError::InvalidArgument("empty patch".into()));
            }
            let [a, b] = farthest_pair(mesh, dom);
            Pins::unit(dom.source_vertex[a], dom.source_vertex[b])
        }
    };
    let w = vec![T::one(); dom.tris.len()];
    Ok(solve_weighted(mesh, dom, &w, Some(pins))?.uv)
}

/// Domain covering the whole mesh with no cuts.
pub fn whole_mesh_domain<T: Real>(mesh: &TriMesh<T>) -> PatchDomain {
    let faces: Vec<usize> = (0..mesh.num_faces()).collect();
    PatchDomain::build(mesh, &faces, &Default::default())
}

/// Weighted LSCM over the whole mesh. Default pins: the first two corners
/// of the highest-weight face, placed at their true in-plane positions.
pub fn wlscm<T: Real>(mesh: &TriMesh<T>, weights: &[T], pins: Option<Pins<T>>) -> Result<UvMap<T>> {
    validate_weights(mesh, weights)?;
    let dom = whole_mesh_domain(mesh);
    Ok(solve_weighted(mesh, &dom, weights, pins)?.uv)
}

pub(crate) fn validate_weights<T: Real>(mesh: &TriMesh<T>, weights: &[T]) -> Result<()> {
    if weights.len() != mesh.num_faces() {
        return Err(WandError::InvalidArgument(
            "weight count differs from face count".into(),
        ));
    }
    if let Some(i) = weights
        .iter()
        .position(|&w| !(w >= T::zero() && w <= T::one()))
    {
        return Err(WandError::InvalidArgument(format!(
            "weight {i} outside [0, 1]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RefineOutcome<T> {
    pub uv: UvMap<T>,
    /// Total ARAP energy before the first and after every iteration.
    pub energies: Vec<T>,
    pub iterations: usize,
}

/// Local/global ARAP energy of a map, per face: `2 · area · ‖A − R(A)‖²`,
/// equal to the cotangent-weighted edge form.
pub fn arap_face_energies<T: Real>(mesh: &TriMesh<T>, uv: &UvMap<T>) -> Vec<T> {
    uv.faces
        .iter()
        .zip(&uv.jacobians)
        .map(|(&f, a)| {
            let r = closest_rotation2(a);
            let mut s = T::zero();
            for i in 0..2 {
                for j in 0..2 {
                    let d = a[i][j] - r[i][j];
                    s += d * d;
                }
            }
            T::lit(2.0) * mesh.face_areas[f] * s
        })
        .collect()
}

/// Isometric refinement by local/global ARAP iterations starting from
/// `init`. The first pin stays fixed; rotations are always proper, so
/// reflected input faces are pulled back to orientation-preserving maps.
/// Stops after `max_iters` or when the relative energy decrease drops
/// below `tol`; an energy increase also stops the loop and keeps the
/// previous iterate.
pub fn isometric_refine<T: Real>(
    mesh: &TriMesh<T>,
    patch: &Patch,
    init: &UvMap<T>,
    max_iters: usize,
    tol: T,
) -> Result<RefineOutcome<T>> {
    if !patch.is_disk {
        let dom = patch.domain(mesh);
        return Err(WandError::NotDisk {
            loops: dom.loops.len(),
            euler: dom.euler(),
        });
    }
    let mut cur = init.clone();
    cur.recompute_jacobians(mesh);
    cur.flipped_faces = cur
        .jacobians
        .iter()
        .filter(|a| mat2_det(a) < T::zero())
        .count();
    let nv = cur.uv.len();
    let anchor = cur.pin_uv_vertices[0];

    let mut free = vec![usize::MAX; nv];
    let mut nfree = 0;
    for (v, slot) in free.iter_mut().enumerate() {
        if v != anchor {
            *slot = nfree;
            nfree += 1;
        }
    }
    let mut trip = SymTriplets::with_capacity(nfree, cur.tris.len() * 9);
    for (i, &f) in cur.faces.iter().enumerate() {
        let g = mesh.face_grads[f];
        let s = mesh.face_areas[f];
        let t = cur.tris[i];
        for p in 0..3 {
            let fp = free[t[p]];
            if fp == usize::MAX {
                continue;
            }
            for q in 0..3 {
                let fq = free[t[q]];
                if fq != usize::MAX && fq <= fp {
                    trip.add(fp, fq, s * (g[p][0] * g[q][0] + g[p][1] * g[q][1]));
                }
            }
        }
    }
    let chol = if nfree > 0 {
        Some(trip.build().factor()?)
    } else {
        None
    };

    let total = |m: &UvMap<T>| arap_face_energies(mesh, m).into_iter().sum::<T>();
    let mut energies = vec![total(&cur)];
    let mut iterations = 0;
    let area: T = cur.faces.iter().map(|&f| mesh.face_areas[f]).sum();
    let tiny = T::epsilon() * T::epsilon() * area;
    while iterations < max_iters {
        let e_prev = *energies.last().unwrap();
        if e_prev <= tiny || chol.is_none() {
            break;
        }
        let rots: Vec<Mat2<T>> = cur.jacobians.iter().map(closest_rotation2).collect();
        let mut next = cur.clone();
        for c in 0..2 {
            let mut rhs = vec![T::zero(); nfree];
            for (i, &f) in cur.faces.iter().enumerate() {
                let g = mesh.face_grads[f];
                let s = mesh.face_areas[f];
                let t = cur.tris[i];
                let target = rots[i][c];
                for p in 0..3 {
                    let fp = free[t[p]];
                    if fp == usize::MAX {
                        continue;
                    }
                    rhs[fp] += s * (g[p][0] * target[0] + g[p][1] * target[1]);
                    for q in 0..3 {
                        if free[t[q]] == usize::MAX {
                            rhs[fp] -=
                                s * (g[p][0] * g[q][0] + g[p][1] * g[q][1]) * cur.uv[t[q]][c];
                        }
                    }
                }
            }
            let sol = chol.as_ref().unwrap().solve(&rhs);
            for v in 0..nv {
                if free[v] != usize::MAX {
                    next.uv[v][c] = sol[free[v]];
                }
            }
        }
        next.recompute_jacobians(mesh);
        let e = total(&next);
        iterations += 1;
        if e > e_prev {
            break;
        }
        cur = next;
        energies.push(e);
        if (e_prev - e) <= tol * e_prev {
            break;
        }
    }
    Ok(RefineOutcome {
        uv: cur,
        energies,
        iterations,
    })
}
