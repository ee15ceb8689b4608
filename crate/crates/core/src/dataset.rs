//! Synthetic near-developable shapes with ground-truth segment labels.
//!
//! A shape is a handful of primitives (cube, cone, cylinder, icosphere,
//! tetrahedron), each deformed by a few analytic vertex maps, rotated and
//! placed apart from the others. Every face keeps the label of the
//! primitive piece it came from; [`filter_and_sample`] then decides which
//! pieces still flatten well and samples seed faces on them.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distortion::{conformal_of, isometric_of, Variant};
use crate::error::{Result, WandError};
use crate::mesh::TriMesh;
use crate::obj::{load_mesh, mesh_to_obj};
use crate::param::{isometric_refine, lscm, UvMap};
use crate::scalar::Real;
use crate::shapes::{self, LabeledSoup};
use crate::topology::{component, cut_to_disk, dijkstra, Patch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    Cube,
    Cone,
    Cylinder,
    Icosphere,
    Tetrahedron,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 5] = [
        PrimitiveKind::Cube,
        PrimitiveKind::Cone,
        PrimitiveKind::Cylinder,
        PrimitiveKind::Icosphere,
        PrimitiveKind::Tetrahedron,
    ];

    fn soup(self) -> LabeledSoup {
        match self {
            PrimitiveKind::Cube => shapes::cube_soup(1.0).subdivide().subdivide().subdivide(),
            PrimitiveKind::Cone => shapes::cone_soup(0.5, 1.0, 24, 8),
            PrimitiveKind::Cylinder => shapes::cylinder_soup(0.4, 1.0, 24, 8, true),
            PrimitiveKind::Icosphere => shapes::icosphere_soup(0.5, 2),
            PrimitiveKind::Tetrahedron => shapes::tetrahedron_soup(1.0)
                .subdivide()
                .subdivide()
                .subdivide(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeformKind {
    Twist,
    Bend,
    Taper,
    Stretch,
}

/// One analytic deform about `axis` through the primitive's centroid.
/// `amount` is an angle in radians for twist and bend, a factor for taper
/// and stretch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deform {
    pub kind: DeformKind,
    pub axis: [f64; 3],
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Primitive kinds to draw from, uniformly.
    pub kinds: Vec<PrimitiveKind>,
    pub min_deforms: usize,
    pub max_deforms: usize,
    /// Twist/bend angles are drawn from `Unif(−max_angle, max_angle)`.
    pub max_angle: f64,
    /// Taper/stretch factors are drawn from `Unif(−max_factor, max_factor)`.
    pub max_factor: f64,
    /// Bounding-sphere radius range of a placed primitive.
    pub radius: [f64; 2],
    /// Translations are drawn from `Unif(−spread, spread)³`.
    pub spread: f64,
    pub max_attempts: usize,
    /// Largest normal offset of a jittered vertex, relative to its mean
    /// incident edge length.
    pub jitter: f64,
    /// Step of the single uniform Laplacian pass (0 disables it).
    pub smooth: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            kinds: PrimitiveKind::ALL.to_vec(),
            min_deforms: 3,
            max_deforms: 10,
            max_angle: 0.5,
            max_factor: 0.8,
            radius: [0.08, 0.16],
            spread: 0.3,
            max_attempts: 100,
            jitter: 0.05,
            smooth: 0.5,
        }
    }
}

impl GenConfig {
    /// No deforms; everything else as in the default.
    pub fn undeformed() -> Self {
        Self {
            min_deforms: 0,
            max_deforms: 0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: usize,
    /// Index of the placed primitive this segment belongs to.
    pub primitive: usize,
    pub kind: PrimitiveKind,
    /// Piece label inside the primitive (e.g. cube side, cylinder cap).
    pub piece: usize,
    pub num_faces: usize,
    /// Mean eval-variant isometric distortion after flattening.
    pub iso_mean: Option<f64>,
    /// Mean conformal distortion `(σ1 − σ2)²` after flattening.
    pub conf_mean: Option<f64>,
    pub valid: Option<bool>,
}

impl Segment {
    pub fn is_sphere(&self) -> bool {
        self.kind == PrimitiveKind::Icosphere
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    pub face: usize,
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveRecord {
    pub kind: PrimitiveKind,
    pub deforms: Vec<Deform>,
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct LabeledShape<T: Real> {
    pub rng_seed: u64,
    pub mesh: TriMesh<T>,
    /// Segment id of every face.
    pub labels: Vec<usize>,
    pub segments: Vec<Segment>,
    pub primitives: Vec<PrimitiveRecord>,
    pub valid_segments: Vec<usize>,
    pub seeds: Vec<Seed>,
}

impl<T: Real> LabeledShape<T> {
    pub fn segment_faces(&self, id: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&f| self.labels[f] == id)
            .collect()
    }

    /// Ground-truth indicator of the segment holding `face`.
    pub fn truth_for(&self, face: usize) -> Vec<bool> {
        let l = self.labels[face];
        self.labels.iter().map(|&x| x == l).collect()
    }
}

// ---------------------------------------------------------------- geometry

type P3 = [f64; 3];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: P3, b: P3) -> P3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: P3, s: f64) -> P3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: P3, b: P3) -> P3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

fn centroid(vs: &[P3]) -> P3 {
    let s = vs.iter().fold([0.0; 3], |acc, &p| add(acc, p));
    scale(s, 1.0 / vs.len().max(1) as f64)
}

/// Orthonormal `(u, v)` completing `a` to a right-handed frame.
fn frame(a: P3) -> (P3, P3) {
    let helper = if a[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = cross(a, helper);
    let u = scale(u, 1.0 / norm(u));
    (u, cross(a, u))
}

fn random_unit(rng: &mut ChaCha8Rng) -> P3 {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..TAU);
    let r = (1.0 - z * z).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Uniform random rotation matrix from a unit quaternion (Shoemake).
fn random_rotation(rng: &mut ChaCha8Rng) -> [P3; 3] {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
        b * (TAU * u3).cos(),
    );
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Applies `d` to points given relative to the deform centre.
///
/// With `t` the coordinate along the axis, `s = (t − t_min)/(t_max − t_min)`
/// and `(x, y)` the coordinates in the plane orthogonal to it:
/// - twist rotates `(x, y)` by `amount · s`;
/// - bend maps the `(x, t)` plane onto arcs of curvature
///   `k = amount / (t_max − t_min)` around the line `x = 1/k`;
/// - taper scales `(x, y)` by `1 + amount · s`;
/// - stretch scales `t` by `1 + amount` and `(x, y)` by `1/√(1 + amount)`.
pub fn apply_deform(points: &mut [P3], d: &Deform) {
    if points.is_empty() {
        return;
    }
    let a = scale(d.axis, 1.0 / norm(d.axis));
    let (u, v) = frame(a);
    let ts: Vec<f64> = points.iter().map(|&p| dot(p, a)).collect();
    let tmin = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let tmax = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let len = (tmax - tmin).max(1e-12);
    let tmid = 0.5 * (tmin + tmax);
    for (p, &t) in points.iter_mut().zip(&ts) {
        let (x, y) = (dot(*p, u), dot(*p, v));
        let s = (t - tmin) / len;
        let (nx, ny, nt) = match d.kind {
            DeformKind::Twist => {
                let (sn, cs) = (d.amount * s).sin_cos();
                (cs * x - sn * y, sn * x + cs * y, t)
            }
            DeformKind::Bend => {
                let k = d.amount / len;
                if k.abs() < 1e-12 {
                    (x, y, t)
                } else {
                    let r = 1.0 / k;
                    let th = k * (t - tmid);
                    (r - (r - x) * th.cos(), y, tmid + (r - x) * th.sin())
                }
            }
            DeformKind::Taper => {
                let f = 1.0 + d.amount * s;
                (x * f, y * f, t)
            }
            DeformKind::Stretch => {
                let f = 1.0 + d.amount;
                let g = 1.0 / f.sqrt();
                (x * g, y * g, t * f)
            }
        };
        *p = add(add(scale(u, nx), scale(v, ny)), scale(a, nt));
    }
}

fn vertex_normals_and_lengths(vs: &[P3], faces: &[[usize; 3]]) -> (Vec<P3>, Vec<f64>) {
    let mut normals = vec![[0.0; 3]; vs.len()];
    let mut len_sum = vec![0.0; vs.len()];
    let mut len_cnt = vec![0usize; vs.len()];
    for f in faces {
        let n = cross(sub(vs[f[1]], vs[f[0]]), sub(vs[f[2]], vs[f[0]]));
        for k in 0..3 {
            normals[f[k]] = add(normals[f[k]], n);
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let l = norm(sub(vs[a], vs[b]));
            for x in [a, b] {
                len_sum[x] += l;
                len_cnt[x] += 1;
            }
        }
    }
    let normals = normals
        .into_iter()
        .map(|n| {
            let l = norm(n);
            if l > 0.0 {
                scale(n, 1.0 / l)
            } else {
                n
            }
        })
        .collect();
    let lens = len_sum
        .iter()
        .zip(&len_cnt)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    (normals, lens)
}

fn laplacian_pass(vs: &mut [P3], faces: &[[usize; 3]], step: f64) {
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); vs.len()];
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            nbrs[a].push(b);
            nbrs[b].push(a);
        }
    }
    let old = vs.to_vec();
    for (i, p) in vs.iter_mut().enumerate() {
        let n = &mut nbrs[i];
        n.sort_unstable();
        n.dedup();
        if n.is_empty() {
            continue;
        }
        let avg = scale(
            n.iter().fold([0.0; 3], |acc, &j| add(acc, old[j])),
            1.0 / n.len() as f64,
        );
        *p = add(*p, scale(sub(avg, *p), step));
    }
}

// ---------------------------------------------------------------- generation

/// Builds a labeled shape from `n_primitives` ∈ [1, 5] random primitives.
pub fn generate_shape<T: Real>(rng_seed: u64, n_primitives: usize) -> Result<LabeledShape<T>> {
    generate_shape_with(rng_seed, n_primitives, &GenConfig::default())
}

pub fn generate_shape_with<T: Real>(
    rng_seed: u64,
    n_primitives: usize,
    cfg: &GenConfig,
) -> Result<LabeledShape<T>> {
    if !(1..=5).contains(&n_primitives) {
        return Err(WandError::InvalidArgument(format!(
            "n_primitives must be in 1..=5, got {n_primitives}"
        )));
    }
    if cfg.kinds.is_empty()
        || cfg.min_deforms > cfg.max_deforms
        || !(cfg.radius[0] > 0.0 && cfg.radius[0] <= cfg.radius[1])
    {
        return Err(WandError::InvalidArgument(
            "invalid generator configuration".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut vertices: Vec<P3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut face_piece: Vec<(usize, usize)> = Vec::new();
    let mut primitives: Vec<PrimitiveRecord> = Vec::new();
    let mut segments: Vec<Segment> = Vec::new();
    let mut target = n_primitives;
    while primitives.len() < target {
        let kind = *cfg.kinds.choose(&mut rng).expect("non-empty kinds");
        let soup = kind.soup();
        let c = centroid(&soup.vertices);
        let mut pts: Vec<P3> = soup.vertices.iter().map(|&p| sub(p, c)).collect();
        let n_def = rng.gen_range(cfg.min_deforms..=cfg.max_deforms);
        let mut deforms = Vec::with_capacity(n_def);
        for _ in 0..n_def {
            let dk = [
                DeformKind::Twist,
                DeformKind::Bend,
                DeformKind::Taper,
                DeformKind::Stretch,
            ][rng.gen_range(0..4)];
            let amount = match dk {
                DeformKind::Twist | DeformKind::Bend => {
                    rng.gen_range(-cfg.max_angle..=cfg.max_angle)
                }
                DeformKind::Taper | DeformKind::Stretch => {
                    rng.gen_range(-cfg.max_factor..=cfg.max_factor)
                }
            };
            let d = Deform {
                kind: dk,
                axis: random_unit(&mut rng),
                amount,
            };
            apply_deform(&mut pts, &d);
            deforms.push(d);
        }
        let rot = random_rotation(&mut rng);
        let c = centroid(&pts);
        let extent = pts
            .iter()
            .map(|&p| norm(sub(p, c)))
            .fold(0.0, f64::max)
            .max(1e-12);
        let radius = rng.gen_range(cfg.radius[0]..=cfg.radius[1]);
        let s = radius / extent;
        for p in pts.iter_mut() {
            let q = scale(sub(*p, c), s);
            *p = [dot(rot[0], q), dot(rot[1], q), dot(rot[2], q)];
        }
        let mut center = None;
        for _ in 0..cfg.max_attempts {
            let t = [
                rng.gen_range(-cfg.spread..=cfg.spread),
                rng.gen_range(-cfg.spread..=cfg.spread),
                rng.gen_range(-cfg.spread..=cfg.spread),
            ];
            if primitives
                .iter()
                .all(|p| norm(sub(p.center, t)) > p.radius + radius)
            {
                center = Some(t);
                break;
            }
        }
        let Some(center) = center else {
            log::debug!(
                "placement rejected {} times; dropping to {} primitives",
                cfg.max_attempts,
                target - 1
            );
            target -= 1;
            continue;
        };
        let base = vertices.len();
        vertices.extend(pts.iter().map(|&p| add(p, center)));
        faces.extend(soup.faces.iter().map(|f| f.map(|v| v + base)));
        let pid = primitives.len();
        let first_segment = segments.len();
        for piece in 0..soup.num_labels() {
            segments.push(Segment {
                id: first_segment + piece,
                primitive: pid,
                kind,
                piece,
                num_faces: soup.labels.iter().filter(|&&l| l == piece).count(),
                iso_mean: None,
                conf_mean: None,
                valid: None,
            });
        }
        face_piece.extend(soup.labels.iter().map(|&l| (pid, first_segment + l)));
        primitives.push(PrimitiveRecord {
            kind,
            deforms,
            center,
            radius,
        });
    }
    if primitives.is_empty() {
        return Err(WandError::InvalidArgument(
            "no primitive could be placed".into(),
        ));
    }

    if cfg.jitter > 0.0 {
        let (normals, lens) = vertex_normals_and_lengths(&vertices, &faces);
        let count = vertices.len() / 3;
        let picked = (0..vertices.len()).choose_multiple(&mut rng, count);
        for v in picked {
            let off = rng.gen_range(0.0..=cfg.jitter) * lens[v];
            vertices[v] = add(vertices[v], scale(normals[v], off));
        }
    }
    if cfg.smooth > 0.0 {
        laplacian_pass(&mut vertices, &faces, cfg.smooth);
    }

    let labels: Vec<usize> = face_piece.iter().map(|&(_, s)| s).collect();
    let mesh = TriMesh::new(vertices.iter().map(|p| p.map(T::lit)).collect(), faces)?;
    Ok(LabeledShape {
        rng_seed,
        mesh,
        labels,
        segments,
        primitives,
        valid_segments: Vec::new(),
        seeds: Vec::new(),
    })
}

// ---------------------------------------------------------------- filtering

/// Means of `(max(σ1, 1/σ2) − 1)²` and `(σ1 − σ2)²` over the map's faces.
pub fn mean_distortions<T: Real>(uv: &UvMap<T>) -> (f64, f64) {
    let n = uv.jacobians.len().max(1) as f64;
    let (mut di, mut dc) = (0.0, 0.0);
    for a in &uv.jacobians {
        di += isometric_of(a, Variant::Eval)
            .to_f64()
            .unwrap_or(f64::INFINITY);
        dc += conformal_of(a).to_f64().unwrap_or(f64::INFINITY);
    }
    (di / n, dc / n)
}

/// Interior vertices whose angle defect exceeds this (radians) are cone
/// points: a segment is only developable once they are cut open.
pub const CONE_DEFECT: f64 = 0.5;

/// Disk-topology patch of the connected face set `faces`, with every cone
/// point joined to the boundary by its shortest path through the patch.
pub fn developable_patch<T: Real>(mesh: &TriMesh<T>, faces: &[usize]) -> Result<Patch> {
    let seed = *faces
        .first()
        .ok_or_else(|| WandError::InvalidArgument("empty segment".into()))?;
    let patch = cut_to_disk(mesh, &Patch::new(mesh, faces.iter().copied(), seed)?)?;
    let dom = patch.domain(mesh);
    let nv = dom.num_vertices();
    let mut angle = vec![0.0; nv];
    for (i, t) in dom.tris.iter().enumerate() {
        for k in 0..3 {
            angle[t[k]] += mesh.corner_angle(dom.faces[i], k).to_f64().unwrap_or(0.0);
        }
    }
    let mut on_boundary = vec![false; nv];
    for &v in dom.loops.iter().flatten() {
        on_boundary[v] = true;
    }
    let cones: Vec<usize> = (0..nv)
        .filter(|&v| !on_boundary[v] && (TAU - angle[v]).abs() > CONE_DEFECT)
        .collect();
    if cones.is_empty() {
        return Ok(patch);
    }
    let mut adj: Vec<Vec<(usize, usize, T)>> = vec![Vec::new(); nv];
    for &(a, b, e) in &dom.interior_edges {
        let l = mesh.edges[e].length;
        adj[a].push((b, e, l));
        adj[b].push((a, e, l));
    }
    let roots: Vec<usize> = (0..nv).filter(|&v| on_boundary[v]).collect();
    let (_, pred) = dijkstra(&adj, &roots);
    let mut cuts = patch.cuts.clone();
    for c in cones {
        let mut v = c;
        while let Some((u, e)) = pred[v] {
            cuts.insert(e);
            v = u;
        }
    }
    cut_to_disk(
        mesh,
        &Patch::with_cuts(mesh, patch.faces.iter().copied(), seed, cuts)?,
    )
}

/// Flattens each connected component of `faces` (cut to a disk with cone
/// points opened, LSCM, isometric refinement) and returns the face-weighted means of both
/// distortions over all of them.
pub fn segment_distortion<T: Real>(
    mesh: &TriMesh<T>,
    faces: &[usize],
    refine_iters: usize,
) -> Result<(f64, f64)> {
    let mut mask = vec![false; mesh.num_faces()];
    for &f in faces {
        mask[f] = true;
    }
    let mut todo = mask.clone();
    let (mut di, mut dc, mut n) = (0.0, 0.0, 0usize);
    for &f in faces {
        if !todo[f] {
            continue;
        }
        let comp = component(mesh, &mask, f);
        for &g in &comp {
            todo[g] = false;
        }
        let patch = developable_patch(mesh, &comp)?;
        let init = lscm(mesh, &patch, None)?;
        let uv = isometric_refine(mesh, &patch, &init, refine_iters, T::lit(1e-10))?.uv;
        let (a, b) = mean_distortions(&uv);
        let k = uv.jacobians.len();
        di += a * k as f64;
        dc += b * k as f64;
        n += k;
    }
    let n = n.max(1) as f64;
    Ok((di / n, dc / n))
}

/// Refinement iterations used when scoring segments.
pub const FILTER_REFINE_ITERS: usize = 100;

/// Scores every segment, marks it valid when both mean distortions are at
/// most `threshold`, and samples `ceil(frac · n)` seed faces (at most
/// `max_seeds`) on each valid non-sphere segment.
pub fn filter_and_sample<T: Real>(
    shape: &LabeledShape<T>,
    threshold: f64,
    frac: f64,
    max_seeds: usize,
) -> Result<LabeledShape<T>> {
    if !(threshold > 0.0) {
        return Err(WandError::InvalidArgument(
            "threshold must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&frac) {
        return Err(WandError::InvalidArgument("frac must lie in [0, 1]".into()));
    }
    let mut out = shape.clone();
    let members: Vec<Vec<usize>> = (0..shape.segments.len())
        .map(|s| shape.segment_faces(s))
        .collect();
    let scores: Vec<Result<(f64, f64)>> = members
        .par_iter()
        .map(|faces| segment_distortion(&shape.mesh, faces, FILTER_REFINE_ITERS))
        .collect();
    out.valid_segments.clear();
    out.seeds.clear();
    let mut rng = ChaCha8Rng::seed_from_u64(shape.rng_seed ^ 0x9e37_79b9_7f4a_7c15);
    for (seg, score) in out.segments.iter_mut().zip(scores) {
        let (di, dc) = match score {
            Ok(s) => s,
            Err(e) => {
                log::warn!("segment {} could not be flattened: {e}", seg.id);
                (f64::INFINITY, f64::INFINITY)
            }
        };
        seg.iso_mean = Some(di);
        seg.conf_mean = Some(dc);
        let valid = di <= threshold && dc <= threshold;
        seg.valid = Some(valid);
        if !valid {
            continue;
        }
        out.valid_segments.push(seg.id);
        if seg.is_sphere() {
            continue;
        }
        let faces = &members[seg.id];
        let count = ((frac * faces.len() as f64).ceil() as usize)
            .min(max_seeds)
            .min(faces.len());
        let mut picked: Vec<usize> = faces.choose_multiple(&mut rng, count).copied().collect();
        picked.sort_unstable();
        out.seeds.extend(picked.into_iter().map(|face| Seed {
            face,
            segment: seg.id,
        }));
    }
    Ok(out)
}

// ---------------------------------------------------------------- disk layout

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub rng_seeds: Vec<u64>,
    pub n_primitives: usize,
    pub config: GenConfig,
    pub threshold: f64,
    pub frac: f64,
    pub max_seeds: usize,
}

impl DatasetSpec {
    pub fn new(rng_seeds: Vec<u64>, n_primitives: usize) -> Self {
        Self {
            rng_seeds,
            n_primitives,
            config: GenConfig::default(),
            threshold: 0.05,
            frac: 0.05,
            max_seeds: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub spec: DatasetSpec,
    /// Shape directory names, in `spec.rng_seeds` order.
    pub shapes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct LabelsFile {
    rng_seed: u64,
    labels: Vec<usize>,
    segments: Vec<Segment>,
    primitives: Vec<PrimitiveRecord>,
    valid_segments: Vec<usize>,
}

pub fn shape_dir_name(rng_seed: u64) -> String {
    format!("shape_{rng_seed:08}")
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn read_json<V: for<'de> Deserialize<'de>>(path: &Path) -> Result<V> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Writes `mesh.obj`, `labels.json` and `seeds.json` into `dir`.
pub fn write_shape<T: Real>(dir: &Path, shape: &LabeledShape<T>) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("mesh.obj"), mesh_to_obj(&shape.mesh))?;
    write_json(
        &dir.join("labels.json"),
        &LabelsFile {
            rng_seed: shape.rng_seed,
            labels: shape.labels.clone(),
            segments: shape.segments.clone(),
            primitives: shape.primitives.clone(),
            valid_segments: shape.valid_segments.clone(),
        },
    )?;
    write_json(&dir.join("seeds.json"), &shape.seeds)
}

pub fn read_shape<T: Real>(dir: &Path) -> Result<LabeledShape<T>> {
    let mesh = load_mesh(dir.join("mesh.obj"))?;
    let l: LabelsFile = read_json(&dir.join("labels.json"))?;
    let seeds: Vec<Seed> = read_json(&dir.join("seeds.json"))?;
    if l.labels.len() != mesh.num_faces() {
        return Err(WandError::InvalidArgument(format!(
            "{}: label count differs from face count",
            dir.display()
        )));
    }
    Ok(LabeledShape {
        rng_seed: l.rng_seed,
        mesh,
        labels: l.labels,
        segments: l.segments,
        primitives: l.primitives,
        valid_segments: l.valid_segments,
        seeds,
    })
}

/// Generates, filters and writes every shape of `spec` under `root`, plus
/// `manifest.json`. Shapes are built in parallel.
pub fn generate_dataset(root: &Path, spec: &DatasetSpec) -> Result<Manifest> {
    fs::create_dir_all(root)?;
    let names: Vec<String> = spec
        .rng_seeds
        .par_iter()
        .map(|&s| {
            let shape = generate_shape_with::<f64>(s, spec.n_primitives, &spec.config)?;
            let shape = filter_and_sample(&shape, spec.threshold, spec.frac, spec.max_seeds)?;
            let name = shape_dir_name(s);
            write_shape(&root.join(&name), &shape)?;
            Ok(name)
        })
        .collect::<Result<_>>()?;
    let manifest = Manifest {
        version: 1,
        spec: spec.clone(),
        shapes: names,
    };
    write_json(&root.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn read_manifest(root: &Path) -> Result<Manifest> {
    read_json(&root.join("manifest.json"))
}
