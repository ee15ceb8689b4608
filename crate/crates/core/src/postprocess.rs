//! Binary graphcut smoothing of soft weights and the inference pipeline
//! that turns weights into a flattened, disk-topology patch.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::distortion::DistortionReport;
use crate::error::Result;
use crate::mesh::TriMesh;
use crate::param::{isometric_refine, lscm, validate_weights, UvMap};
use crate::scalar::Real;
use crate::topology::{cut_to_disk, floodfill_patch, Patch};

/// Dinic max-flow on a directed graph with real capacities.
pub struct MaxFlow<T> {
    head: Vec<usize>,
    to: Vec<usize>,
    next: Vec<usize>,
    cap: Vec<T>,
}

const NIL: usize = usize::MAX;

impl<T: Real> MaxFlow<T> {
    pub fn new(n: usize) -> Self {
        Self {
            head: vec![NIL; n],
            to: Vec::new(),
            next: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn push_arc(&mut self, u: usize, v: usize, c: T) {
        self.to.push(v);
        self.cap.push(c);
        self.next.push(self.head[u]);
        self.head[u] = self.to.len() - 1;
    }

    /// Adds `u → v` with capacity `c` and `v → u` with capacity `rev`.
    pub fn add_edge(&mut self, u: usize, v: usize, c: T, rev: T) {
        self.push_arc(u, v, c);
        self.push_arc(v, u, rev);
    }

    fn levels(&self, s: usize, eps: T) -> Vec<usize> {
        let mut level = vec![NIL; self.head.len()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            let mut a = self.head[u];
            while a != NIL {
                let v = self.to[a];
                if level[v] == NIL && self.cap[a] > eps {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
                a = self.next[a];
            }
        }
        level
    }

    fn augment(
        &mut self,
        u: usize,
        t: usize,
        f: T,
        level: &[usize],
        it: &mut [usize],
        eps: T,
    ) -> T {
        if u == t {
            return f;
        }
        while it[u] != NIL {
            let a = it[u];
            let v = self.to[a];
            if self.cap[a] > eps && level[v] == level[u] + 1 {
                let d = self.augment(v, t, f.min(self.cap[a]), level, it, eps);
                if d > T::zero() {
                    self.cap[a] -= d;
                    self.cap[a ^ 1] += d;
                    return d;
                }
            }
            it[u] = self.next[a];
        }
        T::zero()
    }

    /// Runs max-flow and returns its value together with the set of nodes
    /// reachable from `s` in the residual graph.
    pub fn solve(&mut self, s: usize, t: usize) -> (T, Vec<bool>) {
        let eps = T::epsilon() * T::lit(16.0);
        let mut flow = T::zero();
        loop {
            let level = self.levels(s, eps);
            if level[t] == NIL {
                let reach = level.iter().map(|&l| l != NIL).collect();
                return (flow, reach);
            }
            let mut it = self.head.clone();
            loop {
                let f = self.augment(s, t, T::infinity(), &level, &mut it, eps);
                if f <= T::zero() {
                    break;
                }
                flow += f;
            }
        }
    }
}

/// Smallest dihedral angle used in pairwise costs, one degree.
pub fn min_dihedral<T: Real>() -> T {
    T::PI() / T::lit(180.0)
}

/// Pairwise cut cost of an interior edge, `−log(θ/π)` with θ clamped.
pub fn edge_cost<T: Real>(theta: T) -> T {
    let th = theta.max(min_dihedral()).min(T::PI());
    -(th / T::PI()).ln()
}

/// Energy of a binary labeling: linear unaries plus dihedral-weighted
/// disagreement over interior edges.
pub fn graphcut_energy<T: Real>(mesh: &TriMesh<T>, weights: &[T], labels: &[bool]) -> T {
    let mut e = T::zero();
    for (&w, &l) in weights.iter().zip(labels) {
        e += if l { T::one() - w } else { w };
    }
    for ed in mesh.interior_edges() {
        if labels[ed.faces[0]] != labels[ed.faces[1]] {
            e += edge_cost(ed.dihedral);
        }
    }
    e
}

/// Globally optimal binary labeling by min-cut. Ties resolve toward label 0.
pub fn graphcut_smooth<T: Real>(mesh: &TriMesh<T>, weights: &[T]) -> Result<Vec<bool>> {
    validate_weights(mesh, weights)?;
    let nf = mesh.num_faces();
    let (s, t) = (nf, nf + 1);
    let mut g = MaxFlow::new(nf + 2);
    for (f, &w) in weights.iter().enumerate() {
        // source side is label 1: cutting s→f pays U(0), f→t pays U(1)
        if w > T::zero() {
            g.add_edge(s, f, w, T::zero());
        }
        if w < T::one() {
            g.add_edge(f, t, T::one() - w, T::zero());
        }
    }
    for ed in mesh.interior_edges() {
        let c = edge_cost(ed.dihedral);
        if c > T::zero() {
            g.add_edge(ed.faces[0], ed.faces[1], c, c);
        }
    }
    let (_, reach) = g.solve(s, t);
    Ok(reach[..nf].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalizeConfig {
    /// Eval-variant isometric distortion threshold for the report.
    pub lambda: f64,
    pub refine_iters: usize,
    pub refine_tol: f64,
    pub graphcut: bool,
}

impl Default for FinalizeConfig {
    fn default() -> Self {
        Self {
            lambda: 0.05,
            refine_iters: 50,
            refine_tol: 1e-6,
            graphcut: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Finalized<T> {
    pub patch: Patch,
    pub uv: UvMap<T>,
    pub report: DistortionReport,
}

/// Graphcut → floodfill → cut to disk → conformal map → isometric
/// refinement → eval-variant distortion report.
pub fn finalize_patch<T: Real>(
    mesh: &TriMesh<T>,
    weights: &[T],
    seed: usize,
    cfg: &FinalizeConfig,
) -> Result<Finalized<T>> {
    validate_weights(mesh, weights)?;
    let binary: Vec<T> = if cfg.graphcut {
        graphcut_smooth(mesh, weights)?
            .into_iter()
            .map(|b| if b { T::one() } else { T::zero() })
            .collect()
    } else {
        weights.to_vec()
    };
    let flood = floodfill_patch(mesh, &binary, seed, T::lit(0.5))?;
    let patch = cut_to_disk(mesh, &flood)?;
    let init = lscm(mesh, &patch, None)?;
    let refined = isometric_refine(
        mesh,
        &patch,
        &init,
        cfg.refine_iters,
        T::lit(cfg.refine_tol),
    )?;
    let report = DistortionReport::build(mesh, &patch, &refined.uv, T::lit(cfg.lambda), 0.0)?;
    Ok(Finalized {
        patch,
        uv: refined.uv,
        report,
    })
}
