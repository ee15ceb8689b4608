//! Seeded patch selectors. Every selector returns a contiguous patch that
//! contains the seed together with a per-face weight field.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::diffparam::{optimize_weights, LossConfig, OptimizeConfig};
use crate::distortion::{isometric_of, Variant};
use crate::error::{Result, WandError};
use crate::mesh::TriMesh;
use crate::param::{face_jacobian, isometric_refine, lscm};
use crate::scalar::*;
use crate::topology::{component, cut_to_disk, floodfill_patch, Patch};

#[derive(Debug, Clone)]
pub struct Selection<T> {
    pub patch: Patch,
    pub weights: Vec<T>,
}

fn check_seed<T: Real>(mesh: &TriMesh<T>, seed: usize) -> Result<()> {
    if seed >= mesh.num_faces() {
        return Err(WandError::InvalidFace(seed));
    }
    Ok(())
}

fn indicator<T: Real>(n: usize, faces: &[usize]) -> Vec<T> {
    let mut w = vec![T::zero(); n];
    for &f in faces {
        w[f] = T::one();
    }
    w
}

/// Min-heap entry keyed by a cost with face-index tiebreak.
#[derive(Clone, Copy)]
struct Cand<T> {
    key: T,
    face: usize,
}

impl<T: Real> PartialEq for Cand<T> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<T: Real> Eq for Cand<T> {}
impl<T: Real> Ord for Cand<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        o.key
            .partial_cmp(&self.key)
            .unwrap_or(Ordering::Equal)
            .then(o.face.cmp(&self.face))
    }
}
impl<T: Real> PartialOrd for Cand<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

// ---------------------------------------------------------------- DCharts

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DChartsConfig {
    /// Fitting exponent.
    pub alpha: f64,
    /// Compactness exponent.
    pub beta: f64,
    /// Straight-boundary exponent.
    pub gamma_s: f64,
    /// Largest fitting error a face may have.
    pub f_max: f64,
    pub max_outer_iters: usize,
    /// Start from a proxy fitted to the seed's neighbourhood instead of the
    /// seed normal with a zero cone angle.
    pub proxy_biased: bool,
}

impl Default for DChartsConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.7,
            gamma_s: 0.5,
            f_max: 0.2,
            max_outer_iters: 50,
            proxy_biased: true,
        }
    }
}

/// Developability proxy: faces fit when `N · n_t = cos θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proxy<T> {
    pub axis: Vec3<T>,
    pub cos_theta: T,
}

impl<T: Real> Proxy<T> {
    pub fn fitting(&self, n: Vec3<T>) -> T {
        let d = dot3(self.axis, n) - self.cos_theta;
        d * d
    }
}

/// Eigen-decomposition of a symmetric 3×3 matrix by cyclic Jacobi
/// rotations. Eigenvalues ascending, eigenvectors as columns.
pub fn sym3_eigen<T: Real>(m: [[T; 3]; 3]) -> ([T; 3], [Vec3<T>; 3]) {
    let mut a = m;
    let mut v = [[T::zero(); 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    for _ in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = (t * t + T::one()).sqrt().recip();
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut idx = [0, 1, 2];
    idx.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap_or(Ordering::Equal));
    let vals = idx.map(|i| a[i][i]);
    let vecs = idx.map(|i| [v[0][i], v[1][i], v[2][i]]);
    (vals, vecs)
}

/// Least-squares proxy over a set of face normals: the axis minimizing the
/// variance of `N · n_t`, with `cos θ` their mean.
pub fn fit_proxy<T: Real>(mesh: &TriMesh<T>, faces: &[usize]) -> Proxy<T> {
    let k = T::from_usize_lossy(faces.len().max(1));
    let mut mean = [T::zero(); 3];
    for &f in faces {
        mean = add3(mean, mesh.face_normals[f]);
    }
    mean = scale3(mean, k.recip());
    let mut cov = [[T::zero(); 3]; 3];
    for &f in faces {
        let d = sub3(mesh.face_normals[f], mean);
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j] / k;
            }
        }
    }
    let (vals, vecs) = sym3_eigen(cov);
    let spread = vals[2];
    let mut axis =
        if spread <= T::lit(1e-14) || norm3(mean) <= T::lit(1e-12) && spread <= T::lit(1e-14) {
            normalize3(mean)
        } else {
            vecs[0]
        };
    let mut c = dot3(axis, mean);
    if c < T::zero()
        || (c == T::zero()
            && axis
                .iter()
                .find(|x| **x != T::zero())
                .is_some_and(|x| *x < T::zero()))
    {
        axis = scale3(axis, -T::one());
        c = -c;
    }
    Proxy {
        axis,
        cos_theta: c.min(T::one()),
    }
}

fn face_perimeter_delta<T: Real>(mesh: &TriMesh<T>, in_patch: &[bool], t: usize) -> T {
    let mut d = T::zero();
    for &e in &mesh.face_edges[t] {
        let ed = &mesh.edges[e];
        match ed.other(t) {
            Some(g) if in_patch[g] => d -= ed.length,
            _ => d += ed.length,
        }
    }
    d
}

/// Greedy DCharts-style growth from the seed under a developability proxy
/// that is refitted whenever the queue runs dry.
pub fn select_dcharts<T: Real>(
    mesh: &TriMesh<T>,
    seed: usize,
    cfg: &DChartsConfig,
) -> Result<Selection<T>> {
    check_seed(mesh, seed)?;
    if !(cfg.f_max > 0.0) || cfg.alpha < 0.0 || cfg.beta < 0.0 || cfg.gamma_s < 0.0 {
        return Err(WandError::InvalidArgument(
            "invalid DCharts configuration".into(),
        ));
    }
    let f_max = T::lit(cfg.f_max);
    let nf = mesh.num_faces();
    let mut proxy = if cfg.proxy_biased {
        let mut ring: Vec<usize> = vec![seed];
        let mut seen = vec![false; nf];
        seen[seed] = true;
        // two rings across nearly flat edges
        let smooth = T::lit(5.0 / 6.0) * T::PI();
        let mut frontier = vec![seed];
        for _ in 0..2 {
            let mut next = Vec::new();
            for &f in &frontier {
                for &e in &mesh.face_edges[f] {
                    let ed = &mesh.edges[e];
                    if let Some(g) = ed.other(f) {
                        if !seen[g] && ed.dihedral >= smooth {
                            seen[g] = true;
                            next.push(g);
                        }
                    }
                }
            }
            ring.extend(next.iter().copied());
            frontier = next;
        }
        let p = fit_proxy(mesh, &ring);
        if p.fitting(mesh.face_normals[seed]) <= f_max {
            p
        } else {
            Proxy {
                axis: mesh.face_normals[seed],
                cos_theta: T::one(),
            }
        }
    } else {
        Proxy {
            axis: mesh.face_normals[seed],
            cos_theta: T::one(),
        }
    };

    let c0 = mesh.face_centroid(seed);
    let mut in_patch = vec![false; nf];
    in_patch[seed] = true;
    let mut faces = vec![seed];
    let mut area = mesh.face_areas[seed];
    let mut perimeter: T = mesh.face_edges[seed]
        .iter()
        .map(|&e| mesh.edges[e].length)
        .sum();
    let (ea, eb, eg) = (T::lit(cfg.alpha), T::lit(cfg.beta), T::lit(cfg.gamma_s));

    for _ in 0..cfg.max_outer_iters.max(1) {
        let before = faces.len();
        let key = |t: usize, proxy: &Proxy<T>, in_patch: &[bool], area: T, perimeter: T| {
            let fit = proxy.fitting(mesh.face_normals[t]);
            let d = dist3(c0, mesh.face_centroid(t));
            let compact = T::PI() * d * d / (area + mesh.face_areas[t]);
            let straight = (perimeter + face_perimeter_delta(mesh, in_patch, t)) / perimeter;
            fit.powf(ea) * compact.powf(eb) * straight.max(T::zero()).powf(eg)
        };
        let mut heap = BinaryHeap::new();
        for &f in &faces {
            for &g in &mesh.face_adjacency[f] {
                if !in_patch[g] {
                    heap.push(Cand {
                        key: key(g, &proxy, &in_patch, area, perimeter),
                        face: g,
                    });
                }
            }
        }
        while let Some(Cand { face: t, .. }) = heap.pop() {
            if in_patch[t] || proxy.fitting(mesh.face_normals[t]) > f_max {
                continue;
            }
            perimeter += face_perimeter_delta(mesh, &in_patch, t);
            area += mesh.face_areas[t];
            in_patch[t] = true;
            faces.push(t);
            for &g in &mesh.face_adjacency[t] {
                if !in_patch[g] {
                    heap.push(Cand {
                        key: key(g, &proxy, &in_patch, area, perimeter),
                        face: g,
                    });
                }
            }
        }
        let refit = fit_proxy(mesh, &faces);
        let keeps_all = faces
            .iter()
            .all(|&f| refit.fitting(mesh.face_normals[f]) <= f_max);
        if faces.len() == before && (!keeps_all || refit == proxy) {
            break;
        }
        if keeps_all {
            proxy = refit;
        } else if faces.len() == before {
            break;
        }
    }
    faces.sort_unstable();
    let weights = indicator(nf, &faces);
    Ok(Selection {
        patch: Patch::new(mesh, faces, seed)?,
        weights,
    })
}

// ---------------------------------------------------------------- logmap

/// Discrete exponential map around the seed centroid: vertices are
/// finalized in order of their radial coordinate; each new vertex averages
/// the edge vectors from all finalized neighbours, expressed in tangent
/// frames transported outward from the seed. Unreached vertices get `None`.
pub fn discrete_exp_map<T: Real>(mesh: &TriMesh<T>, seed: usize) -> Vec<Option<Vec2<T>>> {
    let nv = mesh.num_vertices();
    let p0 = mesh.face_centroid(seed);
    let n0 = mesh.face_normals[seed];
    let sf = mesh.faces[seed];
    let e1 = normalize3(sub3(mesh.vertices[sf[1]], mesh.vertices[sf[0]]));
    let e2 = cross3(n0, e1);
    let mut uv: Vec<Option<Vec2<T>>> = vec![None; nv];
    let mut frame = vec![(e1, e2); nv];
    let mut key = vec![T::infinity(); nv];
    let mut done = vec![false; nv];
    let transport = |e: Vec3<T>, n: Vec3<T>| -> (Vec3<T>, Vec3<T>) {
        let t = sub3(e, scale3(n, dot3(e, n)));
        let t = if norm3(t) > T::lit(1e-12) {
            normalize3(t)
        } else {
            e
        };
        (t, cross3(n, t))
    };
    let mut nbrs: Vec<Vec<(usize, T)>> = vec![Vec::new(); nv];
    for e in &mesh.edges {
        nbrs[e.v[0]].push((e.v[1], e.length));
        nbrs[e.v[1]].push((e.v[0], e.length));
    }
    let mut heap = BinaryHeap::new();
    for &v in &sf {
        let d = sub3(mesh.vertices[v], p0);
        uv[v] = Some([dot3(d, e1), dot3(d, e2)]);
        key[v] = norm3(d);
        frame[v] = transport(e1, mesh.vertex_normals[v]);
        heap.push(Cand {
            key: key[v],
            face: v,
        });
    }
    let mut seeded = [false; 3];
    while let Some(Cand { key: k, face: i }) = heap.pop() {
        if done[i] || k > key[i] {
            continue;
        }
        done[i] = true;
        if let Some(s) = sf.iter().position(|&v| v == i) {
            seeded[s] = true;
        }
        for &(j, _) in &nbrs[i] {
            if done[j] || sf.contains(&j) && !seeded.iter().all(|&b| b) {
                continue;
            }
            // upwind average over every finalized neighbour of j
            let (mut acc, mut wsum) = ([T::zero(); 2], T::zero());
            let mut best = (T::infinity(), i);
            for &(m, len) in &nbrs[j] {
                if !done[m] {
                    continue;
                }
                let um = uv[m].unwrap();
                let (f1, f2) = frame[m];
                let d = sub3(mesh.vertices[j], mesh.vertices[m]);
                let mut step = [dot3(d, f1), dot3(d, f2)];
                let l = norm2(step);
                if l > T::lit(1e-300) {
                    step = [step[0] * len / l, step[1] * len / l];
                }
                let w = len.recip();
                acc = [
                    acc[0] + w * (um[0] + step[0]),
                    acc[1] + w * (um[1] + step[1]),
                ];
                wsum += w;
                let r = norm2(um);
                if r < best.0 {
                    best = (r, m);
                }
            }
            let u = [acc[0] / wsum, acc[1] / wsum];
            let r = norm2(u);
            uv[j] = Some(u);
            key[j] = r;
            frame[j] = transport(frame[best.1].0, mesh.vertex_normals[j]);
            heap.push(Cand { key: r, face: j });
        }
    }
    uv
}

/// Faces whose exponential-map Jacobian has eval `D_I < lambda`, restricted
/// to the component containing the seed.
pub fn select_logmap<T: Real>(mesh: &TriMesh<T>, seed: usize, lambda: T) -> Result<Selection<T>> {
    check_seed(mesh, seed)?;
    if !(lambda > T::zero()) {
        return Err(WandError::InvalidArgument("lambda must be positive".into()));
    }
    let uv = discrete_exp_map(mesh, seed);
    let valid: Vec<bool> = (0..mesh.num_faces())
        .map(|f| {
            let t = mesh.faces[f];
            match (uv[t[0]], uv[t[1]], uv[t[2]]) {
                (Some(a), Some(b), Some(c)) => {
                    let j = face_jacobian(mesh, f, [a, b, c]);
                    mat2_det(&j) > T::zero() && isometric_of(&j, Variant::Eval) < lambda
                }
                _ => false,
            }
        })
        .collect();
    let faces = if valid[seed] {
        component(mesh, &valid, seed)
    } else {
        vec![seed]
    };
    let weights = indicator(mesh.num_faces(), &faces);
    Ok(Selection {
        patch: Patch::new(mesh, faces, seed)?,
        weights,
    })
}

// ---------------------------------------------------------------- greedy

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    /// Eval-variant isometric distortion every kept face must stay under.
    pub lambda: f64,
    /// Minimum number of faces added between re-parameterizations; after a
    /// successful check the next batch grows to the current patch size.
    pub reparam_every: usize,
    pub refine_iters: usize,
    /// Growth never crosses an edge whose interior dihedral angle is below
    /// this value (radians). Zero disables the guard.
    pub crease_angle: f64,
    /// Growth stops once a verified batch adds fewer faces than this
    /// fraction of the patch.
    pub min_gain: f64,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            lambda: 0.05,
            reparam_every: 64,
            refine_iters: 20,
            crease_angle: 0.75 * std::f64::consts::PI,
            min_gain: 0.01,
        }
    }
}

struct GreedyState<'m, T: Real> {
    mesh: &'m TriMesh<T>,
    lambda: T,
    crease: T,
    in_patch: Vec<bool>,
    faces: Vec<usize>,
    face_uv: Vec<[Vec2<T>; 3]>,
    banned: Vec<bool>,
}

impl<T: Real> GreedyState<'_, T> {
    /// Predicted corner UVs of a candidate from the UVs of its patch
    /// neighbours, and its predicted eval `D_I`.
    fn estimate(&self, t: usize) -> Option<(T, [Vec2<T>; 3])> {
        let mesh = self.mesh;
        let tv = mesh.faces[t];
        let mut known: [Option<Vec2<T>>; 3] = [None; 3];
        for k in 0..3 {
            let e = &mesh.edges[mesh.face_edges[t][k]];
            let Some(g) = e.other(t) else { continue };
            if !self.in_patch[g] || e.dihedral < self.crease {
                continue;
            }
            let gv = mesh.faces[g];
            for kk in [k, (k + 1) % 3] {
                if known[kk].is_none() {
                    let pos = gv.iter().position(|&v| v == tv[kk])?;
                    known[kk] = Some(self.face_uv[g][pos]);
                }
            }
        }
        let fr = mesh.face_frames[t];
        let n_known = known.iter().filter(|k| k.is_some()).count();
        if n_known == 3 {
            let q = known.map(Option::unwrap);
            let j = face_jacobian(mesh, t, q);
            if mat2_det(&j) <= T::zero() {
                return Some((T::infinity(), q));
            }
            return Some((isometric_of(&j, Variant::Eval), q));
        }
        if n_known != 2 {
            return None;
        }
        let k = (0..3).find(|&k| known[k].is_some() && known[(k + 1) % 3].is_some())?;
        let (a, b) = (known[k].unwrap(), known[(k + 1) % 3].unwrap());
        let (fa, fb, fc) = (fr[k], fr[(k + 1) % 3], fr[(k + 2) % 3]);
        // similarity taking the frame edge onto the UV edge
        let de = sub2(fb, fa);
        let du = sub2(b, a);
        let l2 = de[0] * de[0] + de[1] * de[1];
        let re = (du[0] * de[0] + du[1] * de[1]) / l2;
        let im = (du[1] * de[0] - du[0] * de[1]) / l2;
        let w = sub2(fc, fa);
        let c = [a[0] + re * w[0] - im * w[1], a[1] + im * w[0] + re * w[1]];
        let s = (re * re + im * im).sqrt();
        let m = s.max(s.recip());
        let mut q = [[T::zero(); 2]; 3];
        q[k] = a;
        q[(k + 1) % 3] = b;
        q[(k + 2) % 3] = c;
        Some(((m - T::one()) * (m - T::one()), q))
    }

    fn push_neighbours(&self, f: usize, heap: &mut BinaryHeap<Cand<T>>) {
        let mesh = self.mesh;
        for &ei in &mesh.face_edges[f] {
            let e = &mesh.edges[ei];
            let Some(g) = e.other(f) else { continue };
            if self.in_patch[g] || self.banned[g] || e.dihedral < self.crease {
                continue;
            }
            if let Some((e, _)) = self.estimate(g) {
                if e < self.lambda {
                    heap.push(Cand { key: e, face: g });
                }
            }
        }
    }

    fn rebuild_heap(&self) -> BinaryHeap<Cand<T>> {
        let mut heap = BinaryHeap::new();
        for &f in &self.faces {
            self.push_neighbours(f, &mut heap);
        }
        heap
    }

    /// Flattens the current patch. Returns the faces at or above `lambda`
    /// (or flipped); when there are none the stored corner UVs are replaced
    /// by the new map.
    fn reparameterize(&mut self, seed: usize, iters: usize) -> Result<Vec<usize>> {
        let patch = cut_to_disk(
            self.mesh,
            &Patch::new(self.mesh, self.faces.iter().copied(), seed)?,
        )?;
        let init = lscm(self.mesh, &patch, None)?;
        let out = isometric_refine(self.mesh, &patch, &init, iters, T::lit(1e-9))?;
        let uv = out.uv;
        let bad: Vec<usize> = uv
            .faces
            .iter()
            .zip(&uv.jacobians)
            .filter(|(_, j)| {
                !(mat2_det(j) > T::zero() && isometric_of(j, Variant::Eval) < self.lambda)
            })
            .map(|(&f, _)| f)
            .collect();
        if bad.is_empty() {
            for (i, &f) in uv.faces.iter().enumerate() {
                let t = uv.tris[i];
                self.face_uv[f] = [uv.uv[t[0]], uv.uv[t[1]], uv.uv[t[2]]];
            }
        }
        Ok(bad)
    }
}

/// Grows the patch one face at a time, cheapest predicted distortion
/// first, re-flattening after each batch. Batches start at
/// `reparam_every` faces and double with the patch. Edges sharper
/// than `crease_angle` are never crossed. A batch that leaves any face at
/// or above `lambda` is undone; the new faces that failed are excluded for
/// good, and a batch whose failure only shows up on older faces is retried
/// in halves.
pub fn select_greedy<T: Real>(
    mesh: &TriMesh<T>,
    seed: usize,
    cfg: &GreedyConfig,
) -> Result<Selection<T>> {
    check_seed(mesh, seed)?;
    if !(cfg.lambda > 0.0) {
        return Err(WandError::InvalidArgument("lambda must be positive".into()));
    }
    let nf = mesh.num_faces();
    let every = cfg.reparam_every.max(1);
    let mut st = GreedyState {
        mesh,
        lambda: T::lit(cfg.lambda),
        crease: T::lit(cfg.crease_angle),
        in_patch: vec![false; nf],
        faces: vec![seed],
        face_uv: vec![[[T::zero(); 2]; 3]; nf],
        banned: vec![false; nf],
    };
    st.in_patch[seed] = true;
    st.face_uv[seed] = mesh.face_frames[seed];
    let mut good_len = 1;
    let mut good_uv = st.face_uv.clone();
    let mut batch = every;
    let mut heap = st.rebuild_heap();
    loop {
        let mut added = 0;
        while added < batch {
            let Some(Cand { key, face: t }) = heap.pop() else {
                break;
            };
            if st.in_patch[t] || st.banned[t] {
                continue;
            }
            let Some((e, q)) = st.estimate(t) else {
                continue;
            };
            if e >= st.lambda {
                continue;
            }
            if e > key {
                heap.push(Cand { key: e, face: t });
                continue;
            }
            st.in_patch[t] = true;
            st.faces.push(t);
            st.face_uv[t] = q;
            st.push_neighbours(t, &mut heap);
            added += 1;
        }
        if added == 0 {
            break;
        }
        let bad = st.reparameterize(seed, cfg.refine_iters)?;
        if bad.is_empty() {
            good_len = st.faces.len();
            good_uv.clone_from(&st.face_uv);
            if (added as f64) < cfg.min_gain * good_len as f64 {
                break;
            }
            batch = every.max(good_len);
        } else {
            let added_faces = st.faces.split_off(good_len);
            for &f in &added_faces {
                st.in_patch[f] = false;
            }
            st.face_uv.clone_from(&good_uv);
            let new_bad: Vec<usize> = bad
                .into_iter()
                .filter(|f| added_faces.contains(f))
                .collect();
            if !new_bad.is_empty() {
                for f in new_bad {
                    st.banned[f] = true;
                }
            } else if added == 1 {
                st.banned[added_faces[0]] = true;
            } else {
                batch = (added / 2).max(1);
            }
        }
        heap = st.rebuild_heap();
    }
    let mut faces = st.faces;
    faces.truncate(good_len);
    faces.sort_unstable();
    let weights = indicator(nf, &faces);
    Ok(Selection {
        patch: Patch::new(mesh, faces, seed)?,
        weights,
    })
}

// ---------------------------------------------------------------- optimized

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizedConfig {
    pub loss: LossConfig<f64>,
    pub init: OptimizeConfig<f64>,
    pub steps: usize,
    pub lr: f64,
}

impl Default for OptimizedConfig {
    fn default() -> Self {
        Self {
            loss: LossConfig::default(),
            init: OptimizeConfig::default(),
            steps: 30,
            lr: 1.0,
        }
    }
}

/// Direct minimization of the total loss over the weight field, followed
/// by floodfill of the optimized weights.
pub fn select_optimized<T: Real>(
    mesh: &TriMesh<T>,
    seed: usize,
    cfg: &OptimizedConfig,
) -> Result<Selection<T>> {
    check_seed(mesh, seed)?;
    let loss = LossConfig {
        gamma: T::lit(cfg.loss.gamma),
        alpha: T::lit(cfg.loss.alpha),
        omega: T::lit(cfg.loss.omega),
        floodfill_threshold: T::lit(cfg.loss.floodfill_threshold),
    };
    let init = OptimizeConfig {
        init_radius: T::lit(cfg.init.init_radius),
        margin: T::lit(cfg.init.margin),
        max_halvings: cfg.init.max_halvings,
    };
    let out = optimize_weights(mesh, seed, &loss, &init, cfg.steps, T::lit(cfg.lr))?;
    let patch = floodfill_patch(mesh, &out.weights, seed, loss.floodfill_threshold)?;
    Ok(Selection {
        patch,
        weights: out.weights,
    })
}

// ---------------------------------------------------------------- dispatch

/// A selector together with its configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "selector", content = "config", rename_all = "lowercase")]
pub enum Selector {
    Optimized(OptimizedConfig),
    Dcharts(DChartsConfig),
    Logmap { lambda: f64 },
    Greedy(GreedyConfig),
}

impl Selector {
    pub const NAMES: [&'static str; 4] = ["optimized", "dcharts", "logmap", "greedy"];

    pub fn name(&self) -> &'static str {
        match self {
            Selector::Optimized(_) => "optimized",
            Selector::Dcharts(_) => "dcharts",
            Selector::Logmap { .. } => "logmap",
            Selector::Greedy(_) => "greedy",
        }
    }

    /// Default configuration for a selector name.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "optimized" => Selector::Optimized(OptimizedConfig::default()),
            "dcharts" => Selector::Dcharts(DChartsConfig::default()),
            "logmap" => Selector::Logmap { lambda: 0.05 },
            "greedy" => Selector::Greedy(GreedyConfig::default()),
            _ => return None,
        })
    }

    pub fn run<T: Real>(&self, mesh: &TriMesh<T>, seed: usize) -> Result<Selection<T>> {
        match self {
            Selector::Optimized(c) => select_optimized(mesh, seed, c),
            Selector::Dcharts(c) => select_dcharts(mesh, seed, c),
            Selector::Logmap { lambda } => select_logmap(mesh, seed, T::lit(*lambda)),
            Selector::Greedy(c) => select_greedy(mesh, seed, c),
        }
    }

    /// Short stable hash of the serialized configuration.
    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let s = serde_json::to_string(self).expect("selector serializes");
        hex::encode(&Sha256::digest(s.as_bytes())[..8])
    }
}

/// Faces of the mesh edge-connected to `seed` (breadth-first order).
pub fn connected_faces<T: Real>(mesh: &TriMesh<T>, seed: usize) -> Vec<usize> {
    let mut seen = vec![false; mesh.num_faces()];
    let mut q = VecDeque::from([seed]);
    seen[seed] = true;
    let mut out = Vec::new();
    while let Some(f) = q.pop_front() {
        out.push(f);
        for &g in &mesh.face_adjacency[f] {
            if !seen[g] {
                seen[g] = true;
                q.push_back(g);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn is_connected(mesh: &TriMesh<f64>, p: &Patch) -> bool {
        let mask = p.mask(mesh.num_faces());
        component(mesh, &mask, p.seed).len() == p.len()
    }

    #[test]
    fn jacobi_eigen() {
        let m: [[f64; 3]; 3] = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        let (vals, vecs) = sym3_eigen(m);
        assert!(
            (vals[0] - 1.0).abs() < 1e-12
                && (vals[1] - 3.0).abs() < 1e-12
                && (vals[2] - 5.0).abs() < 1e-12
        );
        let v = vecs[0];
        assert!((v[0] + v[1]).abs() < 1e-12 && v[2].abs() < 1e-12);
    }

    #[test]
    fn cylinder_proxy_is_the_axis() {
        let m = shapes::cylinder::<f64>(1.0, 2.0, 24, 4, true);
        let side: Vec<usize> = (0..24 * 4 * 2).collect();
        let p = fit_proxy(&m, &side);
        assert!(p.axis[2].abs() > 1.0 - 1e-9);
        assert!(p.cos_theta.abs() < 1e-9);
        for &f in &side {
            assert!(p.fitting(m.face_normals[f]) < 1e-12);
        }
        let cap = side.len();
        assert!((p.fitting(m.face_normals[cap]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn planar_proxy() {
        let m = shapes::plane_grid::<f64>(3, 3, 1.0);
        let p = fit_proxy(&m, &[0, 1, 2]);
        assert!((p.cos_theta - 1.0).abs() < 1e-12);
        assert!(p.fitting(m.face_normals[5]) < 1e-12);
    }

    #[test]
    fn dcharts_plane_and_cylinder() {
        let m = shapes::plane_grid::<f64>(5, 5, 1.0);
        let s = select_dcharts(&m, 7, &DChartsConfig::default()).unwrap();
        assert_eq!(s.patch.len(), m.num_faces());
        let c = shapes::cylinder::<f64>(1.0, 2.0, 24, 6, true);
        for biased in [true, false] {
            let cfg = DChartsConfig {
                proxy_biased: biased,
                ..Default::default()
            };
            let s = select_dcharts(&c, 30, &cfg).unwrap();
            assert_eq!(
                s.patch.faces,
                (0..24 * 6 * 2).collect::<Vec<_>>(),
                "biased {biased}"
            );
        }
    }

    #[test]
    fn logmap_plane_is_exact() {
        let m = shapes::plane_grid::<f64>(6, 4, 0.5);
        let s = select_logmap(&m, 9, 0.05).unwrap();
        assert_eq!(s.patch.len(), m.num_faces());
        let uv = discrete_exp_map(&m, 9);
        for f in 0..m.num_faces() {
            let t = m.faces[f];
            let j = face_jacobian(
                &m,
                f,
                [uv[t[0]].unwrap(), uv[t[1]].unwrap(), uv[t[2]].unwrap()],
            );
            assert!(isometric_of(&j, Variant::Eval) < 1e-20);
        }
    }

    #[test]
    fn logmap_sphere_cap_is_partial() {
        let m = shapes::icosphere::<f64>(1.0, 3);
        let s = select_logmap(&m, 0, 0.05).unwrap();
        let a: f64 = s.patch.faces.iter().map(|&f| m.face_areas[f]).sum();
        assert!(s.patch.len() > 1);
        assert!(a < 0.5 * m.total_area());
    }

    #[test]
    fn greedy_on_open_cylinder_takes_the_side() {
        let m = shapes::cylinder::<f64>(1.0, 2.0, 16, 4, false);
        let s = select_greedy(
            &m,
            5,
            &GreedyConfig {
                reparam_every: 16,
                min_gain: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(s.patch.len(), m.num_faces());
        assert!(is_connected(&m, &s.patch));
    }

    #[test]
    fn greedy_on_sphere_is_proper_subset() {
        let m = shapes::icosphere::<f64>(1.0, 2);
        let s = select_greedy(&m, 0, &GreedyConfig::default()).unwrap();
        assert!(s.patch.len() < m.num_faces());
        assert!(s.patch.contains(0));
        assert!(is_connected(&m, &s.patch));
    }

    #[test]
    fn selector_names_roundtrip() {
        for n in Selector::NAMES {
            let s = Selector::from_name(n).unwrap();
            assert_eq!(s.name(), n);
            let j = serde_json::to_string(&s).unwrap();
            let back: Selector = serde_json::from_str(&j).unwrap();
            assert_eq!(back, s);
        }
        assert!(Selector::from_name("nope").is_none());
    }
}
