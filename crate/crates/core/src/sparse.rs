//! Sparse symmetric positive-definite systems: triplet assembly and a
//! Cholesky factorization with minimum-degree fill-reducing ordering.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use crate::error::{Result, WandError};
use crate::scalar::Real;

/// Symmetric matrix under assembly. Only entries with `row >= col` are
/// kept; `add` mirrors upper-triangle input onto the lower triangle.
#[derive(Debug, Clone)]
pub struct SymTriplets<T> {
    n: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Real> SymTriplets<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds `v` at (i, j). Off-diagonal entries must be added once per
    /// unordered pair; the mirror is implied.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.entries.push((r, c, v));
    }

    pub fn build(mut self) -> SparseSym<T> {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; self.n + 1];
        let mut rows = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                vals.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..self.n {
            col_ptr[c + 1] += col_ptr[c];
        }
        SparseSym {
            n: self.n,
            col_ptr,
            rows,
            vals,
        }
    }
}

/// Lower triangle of a symmetric matrix in compressed-column form.
#[derive(Debug, Clone)]
pub struct SparseSym<T> {
    n: usize,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> SparseSym<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_lower(&self) -> usize {
        self.rows.len()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let (r, v) = (self.rows[k], self.vals[k]);
                y[r] += v * x[c];
                if r != c {
                    y[c] += v * x[r];
                }
            }
        }
        y
    }

    pub fn factor(&self) -> Result<Cholesky<T>> {
        Cholesky::factor(self)
    }
}

/// `P A Pᵀ = L Lᵀ` with `P` from a minimum-degree ordering.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    /// `perm[k]` = original index eliminated at step k.
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn factor(a: &SparseSym<T>) -> Result<Self> {
        let n = a.n;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for c in 0..n {
            for k in a.col_ptr[c]..a.col_ptr[c + 1] {
                let r = a.rows[k];
                if r != c {
                    adj[r].push(c);
                    adj[c].push(r);
                }
            }
        }
        let perm = minimum_degree(&mut adj);
        let mut iperm = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }

        let (col_ptr, rows) = symbolic(a, &iperm);
        let mut row_lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for k in 0..n {
            for &r in &rows[col_ptr[k] + 1..col_ptr[k + 1]] {
                row_lists[r].push(k);
            }
        }

        // permuted lower triangle of A, by column
        let mut acols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for c in 0..n {
            for k in a.col_ptr[c]..a.col_ptr[c + 1] {
                let (r, v) = (iperm[a.rows[k]], iperm[c]);
                let (rr, cc) = if r >= v { (r, v) } else { (v, r) };
                acols[cc].push((rr, a.vals[k]));
            }
        }

        let mut vals = vec![T::zero(); rows.len()];
        let mut next = col_ptr.clone();
        let mut x = vec![T::zero(); n];
        for j in 0..n {
            for &(r, v) in &acols[j] {
                x[r] += v;
            }
            for &k in &row_lists[j] {
                next[k] += 1; // skip to the entry for row j (diagonal was first)
                let pos = next[k];
                debug_assert_eq!(rows[pos], j);
                let ljk = vals[pos];
                for q in pos..col_ptr[k + 1] {
                    x[rows[q]] -= vals[q] * ljk;
                }
            }
            let d = x[j];
            if !(d > T::zero()) || !d.is_finite() {
                return Err(WandError::Solver(format!(
                    "matrix not positive definite (pivot {} at step {j})",
                    d
                )));
            }
            let ljj = d.sqrt();
            vals[col_ptr[j]] = ljj;
            x[j] = T::zero();
            for q in col_ptr[j] + 1..col_ptr[j + 1] {
                vals[q] = x[rows[q]] / ljj;
                x[rows[q]] = T::zero();
            }
        }
        Ok(Self {
            n,
            perm,
            col_ptr,
            rows,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let s = self.col_ptr[j];
            y[j] /= self.vals[s];
            let yj = y[j];
            for q in s + 1..self.col_ptr[j + 1] {
                y[self.rows[q]] -= self.vals[q] * yj;
            }
        }
        for j in (0..n).rev() {
            let s = self.col_ptr[j];
            let mut acc = y[j];
            for q in s + 1..self.col_ptr[j + 1] {
                acc -= self.vals[q] * y[self.rows[q]];
            }
            y[j] = acc / self.vals[s];
        }
        let mut x = vec![T::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}

/// Column patterns of `L` for the permuted matrix via the elimination
/// tree, diagonal first, rows sorted.
fn symbolic<T>(a: &SparseSym<T>, iperm: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n = a.n;
    // upper pattern of each permuted row: columns c < r with A[r, c] != 0
    let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for c in 0..a.n {
        for k in a.col_ptr[c]..a.col_ptr[c + 1] {
            let (r, v) = (iperm[a.rows[k]], iperm[c]);
            if r != v {
                let (hi, lo) = if r > v { (r, v) } else { (v, r) };
                row_cols[hi].push(lo);
            }
        }
    }
    let mut parent = vec![usize::MAX; n];
    let mut mark = vec![usize::MAX; n];
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, rc) in row_cols.iter().enumerate() {
        mark[i] = i;
        for &c0 in rc {
            let mut c = c0;
            while mark[c] != i {
                mark[c] = i;
                cols[c].push(i);
                if parent[c] == usize::MAX {
                    parent[c] = i;
                }
                c = parent[c];
            }
        }
    }
    let mut col_ptr = vec![0usize; n + 1];
    let mut rows = Vec::new();
    for (k, c) in cols.iter().enumerate() {
        rows.push(k);
        rows.extend_from_slice(c);
        col_ptr[k + 1] = rows.len();
    }
    (col_ptr, rows)
}

/// Minimum-degree elimination order of the graph `adj` (consumed).
/// Variables with identical closed neighbourhoods are merged first and
/// eliminated together; degrees count variables, not groups.
fn minimum_degree(adj: &mut [Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut group_of = vec![0usize; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    for i in 0..n {
        let mut key = std::mem::take(&mut adj[i]);
        key.push(i);
        key.sort_unstable();
        key.dedup();
        let g = *seen.entry(key).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        group_of[i] = g;
        members[g].push(i);
    }
    let ng = members.len();
    let size: Vec<usize> = members.iter().map(Vec::len).collect();
    let mut gadj: Vec<HashSet<usize>> = vec![HashSet::new(); ng];
    for (key, &g) in &seen {
        for &u in key {
            let h = group_of[u];
            if h != g {
                gadj[g].insert(h);
            }
        }
    }
    let degree =
        |gadj: &[HashSet<usize>], g: usize| gadj[g].iter().map(|&h| size[h]).sum::<usize>();
    let mut heap: BinaryHeap<(Reverse<usize>, Reverse<usize>)> = (0..ng)
        .map(|g| (Reverse(degree(&gadj, g)), Reverse(g)))
        .collect();
    let mut current: Vec<usize> = (0..ng).map(|g| degree(&gadj, g)).collect();
    let mut eliminated = vec![false; ng];
    let mut perm = Vec::with_capacity(n);
    while let Some((Reverse(d), Reverse(p))) = heap.pop() {
        if eliminated[p] || d != current[p] {
            continue;
        }
        eliminated[p] = true;
        perm.extend_from_slice(&members[p]);
        let nbrs: Vec<usize> = gadj[p].drain().collect();
        for &u in &nbrs {
            gadj[u].remove(&p);
        }
        for (i, &u) in nbrs.iter().enumerate() {
            for &v in &nbrs[i + 1..] {
                if gadj[u].insert(v) {
                    gadj[v].insert(u);
                }
            }
        }
        for &u in &nbrs {
            current[u] = degree(&gadj, u);
            heap.push((Reverse(current[u]), Reverse(u)));
        }
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_grid(nx: usize, ny: usize, shift: f64) -> SparseSym<f64> {
        let id = |i: usize, j: usize| j * nx + i;
        let mut t = SymTriplets::new(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                t.add(id(i, j), id(i, j), shift);
                let mut link = |a: usize, b: usize| {
                    t.add(a, a, 1.0);
                    t.add(b, b, 1.0);
                    t.add(a, b, -1.0);
                };
                if i + 1 < nx {
                    link(id(i, j), id(i + 1, j));
                }
                if j + 1 < ny {
                    link(id(i, j), id(i, j + 1));
                }
            }
        }
        t.build()
    }

    #[test]
    fn grid_laplacian_solve_residual() {
        let a = laplacian_grid(30, 20, 1e-3);
        let b: Vec<f64> = (0..a.dim())
            .map(|i| ((i * 7919) % 13) as f64 - 6.0)
            .collect();
        let x = a.factor().unwrap().solve(&b);
        let r = a.mul_vec(&x);
        let err = r
            .iter()
            .zip(&b)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn rejects_indefinite() {
        let mut t = SymTriplets::new(2);
        t.add(0, 0, 1.0);
        t.add(1, 1, 1.0);
        t.add(0, 1, 2.0);
        assert!(t.build().factor().is_err());
    }

    proptest! {
        #[test]
        fn random_spd_solves(seed in 0u64..1000, n in 2usize..40) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut t = SymTriplets::new(n);
            let mut diag = vec![0.1; n];
            for _ in 0..3 * n {
                let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
                if i == j { continue; }
                let v: f64 = rng.gen_range(-1.0..1.0);
                t.add(i, j, v);
                diag[i] += v.abs();
                diag[j] += v.abs();
            }
            for (i, d) in diag.iter().enumerate() { t.add(i, i, *d); }
            let a = t.build();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = a.factor().unwrap().solve(&b);
            let r = a.mul_vec(&x);
            for (p, q) in r.iter().zip(&b) { prop_assert!((p - q).abs() < 1e-10); }
        }
    }
}
