//! Face-set patches on a mesh and the topology operations the pipeline
//! needs: floodfill, boundary loops, and cutting to a topological disk.
//!
//! A patch may carry a set of cut edges. Cut edges are treated as boundary
//! on both sides, which duplicates the vertices along them when the patch
//! is turned into a [`PatchDomain`].

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WandError};
use crate::mesh::TriMesh;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    /// Face indices, sorted ascending.
    pub faces: Vec<usize>,
    pub seed: usize,
    /// Mesh edge indices cut open inside the patch.
    pub cuts: BTreeSet<usize>,
    /// Boundary loops as sequences of mesh vertices.
    pub boundary_loops: Vec<Vec<usize>>,
    pub is_disk: bool,
    /// Identifier of the owning mesh (content hash) when known.
    pub mesh_ref: Option<String>,
}

/// JSON exchange form: `{"faces": [...], "seed": n}` plus cut edges as
/// vertex pairs when any exist.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchJson {
    pub faces: Vec<usize>,
    pub seed: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cuts: Vec<[usize; 2]>,
}

impl Patch {
    /// Builds a patch from an arbitrary face list (deduplicated and sorted).
    pub fn new<T: Real>(
        mesh: &TriMesh<T>,
        faces: impl IntoIterator<Item = usize>,
        seed: usize,
    ) -> Result<Self> {
        Self::with_cuts(mesh, faces, seed, BTreeSet::new())
    }

    pub fn with_cuts<T: Real>(
        mesh: &TriMesh<T>,
        faces: impl IntoIterator<Item = usize>,
        seed: usize,
        cuts: BTreeSet<usize>,
    ) -> Result<Self> {
        let set: BTreeSet<usize> = faces.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&f| f >= mesh.num_faces()) {
            return Err(WandError::InvalidFace(bad));
        }
        if !set.contains(&seed) {
            return Err(WandError::InvalidArgument(format!(
                "seed face {seed} not in patch"
            )));
        }
        let faces: Vec<usize> = set.into_iter().collect();
        let dom = PatchDomain::build(mesh, &faces, &cuts);
        let boundary_loops = dom
            .loops
            .iter()
            .map(|l| l.iter().map(|&lv| dom.source_vertex[lv]).collect())
            .collect();
        Ok(Self {
            is_disk: dom.is_disk(),
            faces,
            seed,
            cuts,
            boundary_loops,
            mesh_ref: None,
        })
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn contains(&self, f: usize) -> bool {
        self.faces.binary_search(&f).is_ok()
    }

    pub fn mask(&self, num_faces: usize) -> Vec<bool> {
        let mut m = vec![false; num_faces];
        for &f in &self.faces {
            m[f] = true;
        }
        m
    }

    /// Indicator weights (1 inside, 0 outside).
    pub fn indicator<T: Real>(&self, num_faces: usize) -> Vec<T> {
        self.mask(num_faces)
            .into_iter()
            .map(|b| if b { T::one() } else { T::zero() })
            .collect()
    }

    pub fn domain<T: Real>(&self, mesh: &TriMesh<T>) -> PatchDomain {
        PatchDomain::build(mesh, &self.faces, &self.cuts)
    }

    pub fn to_json<T: Real>(&self, mesh: &TriMesh<T>) -> PatchJson {
        PatchJson {
            faces: self.faces.clone(),
            seed: self.seed,
            cuts: self.cuts.iter().map(|&e| mesh.edges[e].v).collect(),
        }
    }

    pub fn from_json<T: Real>(mesh: &TriMesh<T>, j: &PatchJson) -> Result<Self> {
        let mut cuts = BTreeSet::new();
        for &[a, b] in &j.cuts {
            cuts.insert(
                mesh.edge_between(a, b)
                    .ok_or(WandError::InvalidVertex(a.max(b)))?,
            );
        }
        Self::with_cuts(mesh, j.faces.iter().copied(), j.seed, cuts)
    }
}

/// The patch as its own surface: vertices split along cuts and at
/// non-manifold pinch points, local triangles, and boundary loops.
#[derive(Debug, Clone)]
pub struct PatchDomain {
    /// Mesh face index of each local triangle.
    pub faces: Vec<usize>,
    /// Local vertex indices of each triangle, in mesh corner order.
    pub tris: Vec<[usize; 3]>,
    /// Mesh vertex behind each local vertex.
    pub source_vertex: Vec<usize>,
    /// Boundary loops as local vertex sequences.
    pub loops: Vec<Vec<usize>>,
    pub num_edges: usize,
    /// Glued (interior, uncut) local edges with their mesh edge index.
    pub interior_edges: Vec<(usize, usize, usize)>,
}

impl PatchDomain {
    pub fn build<T: Real>(mesh: &TriMesh<T>, faces: &[usize], cuts: &BTreeSet<usize>) -> Self {
        let nf = faces.len();
        let mut local_of = std::collections::HashMap::with_capacity(nf);
        for (i, &f) in faces.iter().enumerate() {
            local_of.insert(f, i);
        }
        let corner = |i: usize, k: usize| 3 * i + k;
        let mut uf = UnionFind::new(3 * nf);
        let mut glued = 0usize;
        let mut glued_edges = Vec::new();
        for (i, &f) in faces.iter().enumerate() {
            let fv = mesh.faces[f];
            for k in 0..3 {
                let ei = mesh.face_edges[f][k];
                if cuts.contains(&ei) {
                    continue;
                }
                let Some(g) = mesh.edges[ei].other(f) else {
                    continue;
                };
                let Some(&j) = local_of.get(&g) else { continue };
                if j < i {
                    continue;
                }
                let gv = mesh.faces[g];
                let (a, b) = (fv[k], fv[(k + 1) % 3]);
                let ka = gv.iter().position(|&v| v == a).unwrap();
                let kb = gv.iter().position(|&v| v == b).unwrap();
                uf.union(corner(i, k), corner(j, ka));
                uf.union(corner(i, (k + 1) % 3), corner(j, kb));
                glued += 1;
                glued_edges.push((corner(i, k), corner(i, (k + 1) % 3), ei));
            }
        }
        let mut id_of_root = vec![usize::MAX; 3 * nf];
        let mut source_vertex = Vec::new();
        let mut tris = Vec::with_capacity(nf);
        for (i, &f) in faces.iter().enumerate() {
            let mut t = [0usize; 3];
            for k in 0..3 {
                let r = uf.find(corner(i, k));
                if id_of_root[r] == usize::MAX {
                    id_of_root[r] = source_vertex.len();
                    source_vertex.push(mesh.faces[f][k]);
                }
                t[k] = id_of_root[r];
            }
            tris.push(t);
        }
        let interior_edges = glued_edges
            .into_iter()
            .map(|(ca, cb, ei)| (id_of_root[uf.find(ca)], id_of_root[uf.find(cb)], ei))
            .collect();

        // boundary half-edges: triangle sides without a glued partner
        let nl = source_vertex.len();
        let mut next = vec![usize::MAX; nl];
        for (i, &f) in faces.iter().enumerate() {
            for k in 0..3 {
                let ei = mesh.face_edges[f][k];
                let glued_here = !cuts.contains(&ei)
                    && mesh.edges[ei]
                        .other(f)
                        .is_some_and(|g| local_of.contains_key(&g));
                if !glued_here {
                    next[tris[i][k]] = tris[i][(k + 1) % 3];
                }
            }
        }
        let mut loops = Vec::new();
        let mut seen = vec![false; nl];
        for start in 0..nl {
            if next[start] == usize::MAX || seen[start] {
                continue;
            }
            let mut lp = Vec::new();
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                lp.push(v);
                v = next[v];
                if v == usize::MAX {
                    break;
                }
            }
            loops.push(lp);
        }
        Self {
            faces: faces.to_vec(),
            tris,
            source_vertex,
            loops,
            num_edges: 3 * nf - glued,
            interior_edges,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.source_vertex.len()
    }

    pub fn euler(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges as i64 + self.faces.len() as i64
    }

    pub fn is_disk(&self) -> bool {
        self.loops.len() == 1 && self.euler() == 1
    }

    fn loop_length<T: Real>(&self, mesh: &TriMesh<T>, lp: &[usize]) -> T {
        let mut s = T::zero();
        for i in 0..lp.len() {
            let a = self.source_vertex[lp[i]];
            let b = self.source_vertex[lp[(i + 1) % lp.len()]];
            s += crate::scalar::dist3(mesh.vertices[a], mesh.vertices[b]);
        }
        s
    }

    /// Adjacency over glued edges: (neighbour, mesh edge, length).
    fn adjacency<T: Real>(&self, mesh: &TriMesh<T>) -> Vec<Vec<(usize, usize, T)>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        for &(a, b, e) in &self.interior_edges {
            let l = mesh.edges[e].length;
            adj[a].push((b, e, l));
            adj[b].push((a, e, l));
        }
        for a in adj.iter_mut() {
            a.sort_by_key(|x| x.0);
        }
        adj
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so numbering stays deterministic
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Edge-connected component of `mask` containing `seed`, sorted.
pub fn component<T: Real>(mesh: &TriMesh<T>, mask: &[bool], seed: usize) -> Vec<usize> {
    if !mask[seed] {
        return vec![];
    }
    let mut seen = vec![false; mesh.num_faces()];
    let mut out = Vec::new();
    let mut q = VecDeque::from([seed]);
    seen[seed] = true;
    while let Some(f) = q.pop_front() {
        out.push(f);
        for &g in &mesh.face_adjacency[f] {
            if mask[g] && !seen[g] {
                seen[g] = true;
                q.push_back(g);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Connected component of `{t : w_t ≥ threshold}` containing `seed`, or
/// `{seed}` alone when the seed itself is below threshold.
pub fn floodfill_patch<T: Real>(
    mesh: &TriMesh<T>,
    weights: &[T],
    seed: usize,
    threshold: T,
) -> Result<Patch> {
    if seed >= mesh.num_faces() {
        return Err(WandError::InvalidFace(seed));
    }
    if weights.len() != mesh.num_faces() {
        return Err(WandError::InvalidArgument(
            "weight count differs from face count".into(),
        ));
    }
    if !(threshold > T::zero() && threshold < T::one()) {
        return Err(WandError::InvalidArgument(
            "threshold must lie in (0, 1)".into(),
        ));
    }
    let mask: Vec<bool> = weights.iter().map(|&w| w >= threshold).collect();
    let faces = if mask[seed] {
        component(mesh, &mask, seed)
    } else {
        vec![seed]
    };
    Patch::new(mesh, faces, seed)
}

/// Boundary loops of the (cut) patch as mesh-vertex sequences.
pub fn boundary_loops<T: Real>(mesh: &TriMesh<T>, patch: &Patch) -> Vec<Vec<usize>> {
    let dom = patch.domain(mesh);
    dom.loops
        .iter()
        .map(|l| l.iter().map(|&v| dom.source_vertex[v]).collect())
        .collect()
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem<T> {
    dist: T,
    node: usize,
}

impl<T: Real> Eq for HeapItem<T> {}

impl<T: Real> Ord for HeapItem<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, node)
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl<T: Real> PartialOrd for HeapItem<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra over `adj`. Returns distances and predecessor
/// (node, mesh edge) links.
pub(crate) fn dijkstra<T: Real>(
    adj: &[Vec<(usize, usize, T)>],
    sources: &[usize],
) -> (Vec<T>, Vec<Option<(usize, usize)>>) {
    let n = adj.len();
    let mut dist = vec![T::infinity(); n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = T::zero();
        heap.push(HeapItem {
            dist: T::zero(),
            node: s,
        });
    }
    while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, e, l) in &adj[u] {
            let nd = d + l;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some((u, e));
                heap.push(HeapItem { dist: nd, node: v });
            }
        }
    }
    (dist, pred)
}

/// Cuts the patch open until it is a topological disk: closed patches get
/// a one-edge slit, multiple boundary loops are joined by shortest paths
/// to the longest loop, nearest first, and remaining handles are
/// opened along the shortest non-separating cycle.
pub fn cut_to_disk<T: Real>(mesh: &TriMesh<T>, patch: &Patch) -> Result<Patch> {
    if patch.is_disk {
        return Ok(patch.clone());
    }
    let mut cuts = patch.cuts.clone();
    let max_iters = 4 * patch.faces.len() + 8;
    for _ in 0..max_iters {
        let dom = PatchDomain::build(mesh, &patch.faces, &cuts);
        if dom.is_disk() {
            let mut out = Patch::with_cuts(mesh, patch.faces.iter().copied(), patch.seed, cuts)?;
            out.mesh_ref = patch.mesh_ref.clone();
            return Ok(out);
        }
        let before = cuts.len();
        if dom.loops.is_empty() {
            slit(mesh, &dom, patch.seed, &mut cuts)?;
        } else if dom.loops.len() > 1 {
            join_loops(mesh, &dom, &mut cuts)?;
        } else if dom.euler() < 1 {
            open_handle(mesh, &dom, &mut cuts)?;
        } else {
            return Err(WandError::Topology(format!(
                "patch is not connected (euler characteristic {})",
                dom.euler()
            )));
        }
        if cuts.len() == before {
            return Err(WandError::Topology("cutting made no progress".into()));
        }
    }
    Err(WandError::Topology("cut_to_disk did not converge".into()))
}

fn slit<T: Real>(
    mesh: &TriMesh<T>,
    dom: &PatchDomain,
    seed: usize,
    cuts: &mut BTreeSet<usize>,
) -> Result<()> {
    let glued: std::collections::HashSet<usize> = dom.interior_edges.iter().map(|x| x.2).collect();
    let e = mesh.face_edges[seed]
        .iter()
        .copied()
        .filter(|e| glued.contains(e))
        .min()
        .or_else(|| dom.interior_edges.iter().map(|x| x.2).min())
        .ok_or_else(|| WandError::Topology("closed patch without interior edges".into()))?;
    cuts.insert(e);
    Ok(())
}

/// Joins every boundary loop to the longest one. Loops are attached in
/// order of distance to the growing cut tree, each along its shortest
/// path, so the result matches joining the longest loop to its nearest
/// neighbour one pair at a time.
fn join_loops<T: Real>(
    mesh: &TriMesh<T>,
    dom: &PatchDomain,
    cuts: &mut BTreeSet<usize>,
) -> Result<()> {
    let lengths: Vec<T> = dom.loops.iter().map(|l| dom.loop_length(mesh, l)).collect();
    let mut longest = 0;
    for i in 1..lengths.len() {
        if lengths[i] > lengths[longest] {
            longest = i;
        }
    }
    let nv = dom.num_vertices();
    let mut loop_of = vec![usize::MAX; nv];
    for (i, l) in dom.loops.iter().enumerate() {
        for &v in l {
            loop_of[v] = i;
        }
    }
    let adj = dom.adjacency(mesh);
    let mut dist = vec![T::infinity(); nv];
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; nv];
    let mut joined = vec![false; dom.loops.len()];
    let mut sources: Vec<usize> = dom.loops[longest].clone();
    joined[longest] = true;
    let mut joined_any = false;
    loop {
        let mut heap = BinaryHeap::new();
        for &s in &sources {
            dist[s] = T::zero();
            pred[s] = None;
            heap.push(HeapItem {
                dist: T::zero(),
                node: s,
            });
        }
        while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, e, l) in &adj[u] {
                let nd = d + l;
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = Some((u, e));
                    heap.push(HeapItem { dist: nd, node: v });
                }
            }
        }
        let target = (0..nv)
            .filter(|&v| loop_of[v] != usize::MAX && !joined[loop_of[v]] && dist[v].is_finite())
            .min_by(|&a, &b| {
                dist[a]
                    .partial_cmp(&dist[b])
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
        let Some(target) = target else { break };
        joined[loop_of[target]] = true;
        joined_any = true;
        sources = dom.loops[loop_of[target]].clone();
        let mut v = target;
        while let Some((u, e)) = pred[v] {
            cuts.insert(e);
            sources.push(v);
            v = u;
        }
    }
    if !joined_any {
        return Err(WandError::Topology(
            "boundary loops are not connected through the patch".into(),
        ));
    }
    Ok(())
}

/// Tree-cotree with the boundary contracted: primal shortest-path tree
/// over glued edges rooted at every boundary vertex, dual tree over faces
/// through the remaining glued edges. Each edge in neither tree
/// closes a handle generator (a cycle, or an arc between boundary points);
/// the shortest one is cut.
fn open_handle<T: Real>(
    mesh: &TriMesh<T>,
    dom: &PatchDomain,
    cuts: &mut BTreeSet<usize>,
) -> Result<()> {
    let nv = dom.num_vertices();
    let nf = dom.faces.len();
    // local edges keyed by sorted local vertex pair, each with its faces
    #[derive(Clone)]
    struct LEdge {
        a: usize,
        b: usize,
        faces: Vec<usize>,
        mesh_edge: usize,
    }
    let mut edge_ix: std::collections::HashMap<(usize, usize, usize), usize> = Default::default();
    let mut edges: Vec<LEdge> = Vec::new();
    let glued_set: std::collections::HashSet<usize> =
        dom.interior_edges.iter().map(|x| x.2).collect();
    for (i, t) in dom.tris.iter().enumerate() {
        let f = dom.faces[i];
        for k in 0..3 {
            let (a, b) = (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]));
            let me = mesh.face_edges[f][k];
            let glued = glued_set.contains(&me);
            // unglued sides stay distinct even when the local pair repeats
            let k3 = if glued {
                (a, b, me)
            } else {
                (a, b, usize::MAX - 3 * i - k)
            };
            let id = *edge_ix.entry(k3).or_insert_with(|| {
                edges.push(LEdge {
                    a,
                    b,
                    faces: Vec::new(),
                    mesh_edge: me,
                });
                edges.len() - 1
            });
            edges[id].faces.push(i);
        }
    }
    // primal tree over glued edges, grown from the whole boundary at once
    // so the boundary behaves as a single contracted vertex
    let mut adj: Vec<Vec<(usize, usize, T)>> = vec![Vec::new(); nv];
    for (id, e) in edges.iter().enumerate() {
        if e.faces.len() != 2 {
            continue;
        }
        let l = mesh.edges[e.mesh_edge].length;
        adj[e.a].push((e.b, id, l));
        adj[e.b].push((e.a, id, l));
    }
    let roots: Vec<usize> = if dom.loops.is_empty() {
        vec![0]
    } else {
        dom.loops.concat()
    };
    let (dist, pred) = dijkstra(&adj, &roots);
    let mut in_tree = vec![false; edges.len()];
    for p in pred.iter().flatten() {
        in_tree[p.1] = true;
    }
    // dual tree over faces through glued edges; boundary edges vanish
    // with the contraction
    let mut dual_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nf];
    for (id, e) in edges.iter().enumerate() {
        if let (false, [f, g]) = (in_tree[id], e.faces.as_slice()) {
            dual_adj[*f].push((*g, id));
            dual_adj[*g].push((*f, id));
        }
    }
    let mut in_cotree = vec![false; edges.len()];
    let mut seen = vec![false; nf];
    for start in 0..nf {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(u) = q.pop_front() {
            for &(v, id) in &dual_adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    in_cotree[id] = true;
                    q.push_back(v);
                }
            }
        }
    }
    let path_to_root = |mut v: usize| {
        let mut p = vec![v];
        while let Some((u, _)) = pred[v] {
            p.push(u);
            v = u;
        }
        p
    };
    let mut best: Option<(T, usize, Vec<usize>)> = None;
    for (id, e) in edges.iter().enumerate() {
        if in_tree[id] || in_cotree[id] || e.faces.len() != 2 {
            continue;
        }
        let (pa, pb) = (path_to_root(e.a), path_to_root(e.b));
        // drop the shared suffix above the lowest common ancestor
        let (mut i, mut j) = (pa.len(), pb.len());
        let mut shared = T::zero();
        if pa[i - 1] == pb[j - 1] {
            while i > 1 && j > 1 && pa[i - 2] == pb[j - 2] {
                i -= 1;
                j -= 1;
            }
            shared = dist[pa[i - 1]] + dist[pa[i - 1]];
        }
        if !(dist[e.a].is_finite() && dist[e.b].is_finite()) {
            continue;
        }
        let len = dist[e.a] + dist[e.b] + mesh.edges[e.mesh_edge].length - shared;
        let mut cycle_edges = vec![id];
        for path in [&pa[..i], &pb[..j]] {
            for w in path.windows(2) {
                cycle_edges.push(pred[w[0]].unwrap().1);
            }
        }
        let better = match &best {
            None => true,
            Some((bl, bid, _)) => len < *bl || (len == *bl && id < *bid),
        };
        if better {
            best = Some((len, id, cycle_edges));
        }
    }
    let (_, _, cyc) =
        best.ok_or_else(|| WandError::Topology("no handle generator found".into()))?;
    for id in cyc {
        if edges[id].faces.len() == 2 {
            cuts.insert(edges[id].mesh_edge);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn torus_with_scattered_holes_cuts_to_disk() {
        let m = shapes::torus::<f64>(1.0, 0.3, 40, 20);
        for step in [7, 13, 31, 97] {
            let p = Patch::new(&m, (0..m.num_faces()).filter(|f| f % step != 3), 0).unwrap();
            let c = cut_to_disk(&m, &p).unwrap();
            assert!(c.is_disk, "step {step}");
            assert_eq!(c.faces, p.faces);
        }
    }

    #[test]
    fn floodfill_islands_and_fallback() {
        let m = shapes::plane_grid::<f64>(6, 1, 1.0);
        // faces 0..4 and 8..12 form two islands separated by 4..8
        let w: Vec<f64> = (0..12)
            .map(|f| if (4..8).contains(&f) { 0.1 } else { 0.9 })
            .collect();
        let p = floodfill_patch(&m, &w, 1, 0.5).unwrap();
        assert_eq!(p.faces, vec![0, 1, 2, 3]);
        let p = floodfill_patch(&m, &[1.0; 12], 5, 0.5).unwrap();
        assert_eq!(p.len(), 12);
        let p = floodfill_patch(&m, &w, 5, 0.5).unwrap();
        assert_eq!(p.faces, vec![5]);
    }

    #[test]
    fn floodfill_is_idempotent() {
        let m = shapes::icosphere::<f64>(1.0, 2);
        let w: Vec<f64> = (0..m.num_faces())
            .map(|f| ((f * 37) % 11) as f64 / 10.0)
            .collect();
        let seed = (0..m.num_faces()).find(|&f| w[f] >= 0.5).unwrap();
        let p = floodfill_patch(&m, &w, seed, 0.5).unwrap();
        let again = floodfill_patch(&m, &p.indicator::<f64>(m.num_faces()), seed, 0.5).unwrap();
        assert_eq!(p.faces, again.faces);
    }

    #[test]
    fn loops_of_cube_and_cylinder() {
        let cube = shapes::cube::<f64>(1.0);
        let all = Patch::new(&cube, 0..12, 0).unwrap();
        assert!(all.boundary_loops.is_empty());
        let open = Patch::new(&cube, 2..12, 2).unwrap();
        assert_eq!(open.boundary_loops.len(), 1);
        assert_eq!(open.boundary_loops[0].len(), 4);
        let cyl = shapes::cylinder::<f64>(1.0, 2.0, 16, 3, true);
        let side = Patch::new(&cyl, 0..16 * 3 * 2, 0).unwrap();
        assert_eq!(boundary_loops(&cyl, &side).len(), 2);
        assert!(!side.is_disk);
    }

    #[test]
    fn every_boundary_edge_in_exactly_one_loop() {
        let m = shapes::plane_grid::<f64>(5, 5, 1.0);
        let faces: Vec<usize> = (0..50).filter(|f| f % 7 != 3).collect();
        let p = Patch::new(&m, faces.clone(), faces[0]).unwrap();
        let mut count = std::collections::HashMap::new();
        for l in &p.boundary_loops {
            for i in 0..l.len() {
                let e = m.edge_between(l[i], l[(i + 1) % l.len()]).unwrap();
                *count.entry(e).or_insert(0) += 1;
            }
        }
        let inside = p.mask(m.num_faces());
        for (ei, e) in m.edges.iter().enumerate() {
            let n_in = e
                .faces
                .iter()
                .filter(|&&f| f != crate::mesh::NO_FACE && inside[f])
                .count();
            assert_eq!(count.get(&ei).copied().unwrap_or(0), usize::from(n_in == 1));
        }
    }

    #[test]
    fn planar_disk_unchanged() {
        let m = shapes::plane_grid::<f64>(4, 4, 1.0);
        let p = Patch::new(&m, 0..32, 0).unwrap();
        assert!(p.is_disk);
        assert_eq!(cut_to_disk(&m, &p).unwrap(), p);
    }

    #[test]
    fn annulus_gets_one_cut() {
        let m = shapes::cylinder::<f64>(1.0, 2.0, 16, 4, false);
        let p = Patch::new(&m, 0..m.num_faces(), 0).unwrap();
        let d = cut_to_disk(&m, &p).unwrap();
        assert!(d.is_disk);
        assert_eq!(d.boundary_loops.len(), 1);
        assert_eq!(d.faces, p.faces);
        // a straight seam: one edge per ring
        assert_eq!(d.cuts.len(), 4);
    }

    #[test]
    fn closed_surfaces_become_disks() {
        for m in [
            shapes::torus::<f64>(2.0, 0.7, 18, 9),
            shapes::icosphere::<f64>(1.0, 1),
            shapes::cube::<f64>(1.0),
        ] {
            let p = Patch::new(&m, 0..m.num_faces(), 0).unwrap();
            let d = cut_to_disk(&m, &p).unwrap();
            let dom = d.domain(&m);
            assert_eq!(dom.euler(), 1);
            assert_eq!(dom.loops.len(), 1);
            assert_eq!(d.faces.len(), m.num_faces());
        }
    }

    #[test]
    fn torus_with_hole() {
        let m = shapes::torus::<f64>(2.0, 0.7, 16, 8);
        let p = Patch::new(&m, 2..m.num_faces(), 5).unwrap();
        assert_eq!(p.boundary_loops.len(), 1);
        let d = cut_to_disk(&m, &p).unwrap();
        assert!(d.is_disk);
    }
}
