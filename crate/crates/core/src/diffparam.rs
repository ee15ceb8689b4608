//! Losses on weighted conformal maps and their gradients with respect to
//! the per-face weights.
//!
//! The forward pass floodfills the weights from the seed, cuts the result
//! to a disk, solves the weighted conformal map with the masked weights and
//! measures per-face ARAP density. The backward pass reuses the forward
//! factorization for one adjoint solve.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::distortion::arap_density_of;
use crate::error::{Result, WandError};
use crate::mesh::TriMesh;
use crate::param::{conformal_rows, solve_weighted, validate_weights, UvMap, WeightedSolve};
use crate::scalar::*;
use crate::topology::{cut_to_disk, dijkstra, floodfill_patch, Patch, PatchDomain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig<T> {
    /// Soft distortion threshold.
    pub gamma: T,
    /// Threshold sharpness.
    pub alpha: T,
    /// Smoothness scale.
    pub omega: T,
    pub floodfill_threshold: T,
}

impl<T: Real> Default for LossConfig<T> {
    fn default() -> Self {
        Self {
            gamma: T::lit(0.01),
            alpha: T::lit(5.0),
            omega: T::lit(0.1),
            floodfill_threshold: T::lit(0.5),
        }
    }
}

impl<T: Real> LossConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > T::zero()) {
            return Err(WandError::InvalidArgument("gamma must be positive".into()));
        }
        if !(self.alpha >= T::one()) {
            return Err(WandError::InvalidArgument(
                "alpha must be at least 1".into(),
            ));
        }
        if !(self.omega >= T::zero()) {
            return Err(WandError::InvalidArgument(
                "omega must be non-negative".into(),
            ));
        }
        if !(self.floodfill_threshold > T::zero() && self.floodfill_threshold < T::one()) {
            return Err(WandError::InvalidArgument(
                "floodfill threshold must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

fn soft_count<T: Real>(d: T, cfg: &LossConfig<T>) -> (T, T) {
    // value 1 − exp(−(d/γ)^α) and its derivative in d
    if d.is_infinite() {
        return (T::one(), T::zero());
    }
    let r = d / cfg.gamma;
    let s = r.powf(cfg.alpha);
    let e = (-s).exp();
    let ds = cfg.alpha / cfg.gamma * r.powf(cfg.alpha - T::one());
    (T::one() - e, e * ds)
}

/// Area-weighted soft count of distorted faces over `active`; `per_face_d`
/// follows `active.faces`.
pub fn threshold_loss<T: Real>(
    mesh: &TriMesh<T>,
    per_face_d: &[T],
    active: &Patch,
    cfg: &LossConfig<T>,
) -> Result<T> {
    if per_face_d.len() != active.len() {
        return Err(WandError::InvalidArgument(
            "distortion count differs from patch size".into(),
        ));
    }
    Ok(threshold_terms(mesh, per_face_d, &active.faces, cfg).0)
}

fn threshold_terms<T: Real>(
    mesh: &TriMesh<T>,
    d: &[T],
    faces: &[usize],
    cfg: &LossConfig<T>,
) -> (T, Vec<T>) {
    let total: T = faces.iter().map(|&f| mesh.face_areas[f]).sum();
    if total <= T::zero() {
        return (T::zero(), vec![T::zero(); faces.len()]);
    }
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(faces.len());
    for (&f, &di) in faces.iter().zip(d) {
        let a = mesh.face_areas[f] / total;
        let (v, dv) = soft_count(di, cfg);
        loss += a * v;
        grad.push(a * dv);
    }
    (loss, grad)
}

fn clamped_dihedral_log<T: Real>(theta: T) -> T {
    (theta.min(T::PI()) / T::PI()).ln()
}

/// Mean over interior edges of `−ω · log(θ/π) · |Δw|`.
pub fn smooth_loss<T: Real>(mesh: &TriMesh<T>, weights: &[T], cfg: &LossConfig<T>) -> Result<T> {
    validate_weights(mesh, weights)?;
    Ok(smooth_terms(mesh, weights, cfg, false).0)
}

fn smooth_terms<T: Real>(
    mesh: &TriMesh<T>,
    w: &[T],
    cfg: &LossConfig<T>,
    want_grad: bool,
) -> (T, Vec<T>) {
    let mut grad = if want_grad {
        vec![T::zero(); w.len()]
    } else {
        Vec::new()
    };
    let n = mesh.interior_edges().count();
    if n == 0 {
        return (T::zero(), grad);
    }
    let inv = T::from_usize_lossy(n).recip();
    let mut loss = T::zero();
    for e in mesh.interior_edges() {
        let c = -cfg.omega * clamped_dihedral_log(e.dihedral) * inv;
        let [f, g] = e.faces;
        let d = w[f] - w[g];
        loss += c * d.abs();
        if want_grad && d != T::zero() {
            let s = d.signum() * c;
            grad[f] += s;
            grad[g] -= s;
        }
    }
    (loss, grad)
}

/// Forward evaluation of the total loss with diagnostics.
#[derive(Debug, Clone)]
pub struct LossEval<T> {
    pub total: T,
    pub threshold: T,
    pub smooth: T,
    /// Floodfilled patch, cut to a disk.
    pub patch: Patch,
    /// ARAP density per patch face, in `uv.faces` order.
    pub per_face_distortion: Vec<T>,
    pub uv: UvMap<T>,
}

struct Forward<T> {
    eval: LossEval<T>,
    dom: PatchDomain,
    solve: WeightedSolve<T>,
}

fn forward<T: Real>(
    mesh: &TriMesh<T>,
    weights: &[T],
    seed: usize,
    cfg: &LossConfig<T>,
) -> Result<Forward<T>> {
    cfg.validate()?;
    validate_weights(mesh, weights)?;
    let flood = floodfill_patch(mesh, weights, seed, cfg.floodfill_threshold)?;
    let patch = cut_to_disk(mesh, &flood)?;
    let dom = patch.domain(mesh);
    // a seed below threshold still parameterizes its own face
    let local_w: Vec<T> = dom
        .faces
        .iter()
        .map(|&f| weights[f].max(T::lit(crate::param::WEIGHT_FLOOR)))
        .collect();
    let solve = solve_weighted(mesh, &dom, &local_w, None)?;
    let d: Vec<T> = solve.uv.jacobians.iter().map(arap_density_of).collect();
    let (thr, _) = threshold_terms(mesh, &d, &dom.faces, cfg);
    let (smooth, _) = smooth_terms(mesh, weights, cfg, false);
    let eval = LossEval {
        total: thr + smooth,
        threshold: thr,
        smooth,
        patch,
        per_face_distortion: d,
        uv: solve.uv.clone(),
    };
    Ok(Forward { eval, dom, solve })
}

/// `L = L_threshold(w*) + L_smooth(w)` where `w*` is `w` masked to its
/// floodfill component around `seed`.
pub fn total_loss<T: Real>(
    mesh: &TriMesh<T>,
    weights: &[T],
    seed: usize,
    cfg: &LossConfig<T>,
) -> Result<LossEval<T>> {
    Ok(forward(mesh, weights, seed, cfg)?.eval)
}

/// Total loss and its gradient with respect to every face weight. The
/// floodfill mask is held constant; faces outside it receive only the
/// smoothness gradient.
pub fn grad_weights<T: Real>(
    mesh: &TriMesh<T>,
    weights: &[T],
    seed: usize,
    cfg: &LossConfig<T>,
) -> Result<(LossEval<T>, Vec<T>)> {
    let fw = forward(mesh, weights, seed, cfg)?;
    let (_, mut grad) = smooth_terms(mesh, weights, cfg, true);
    let dom = &fw.dom;
    let sol = &fw.solve;
    let uv = &sol.uv;
    let (_, dl_dd) = threshold_terms(mesh, &fw.eval.per_face_distortion, &dom.faces, cfg);

    // dL/dx over all unknowns, then restricted to the free core unknowns
    let n2 = 2 * dom.num_vertices();
    let mut dl_dx = vec![T::zero(); n2];
    for (i, &f) in dom.faces.iter().enumerate() {
        if dl_dd[i] == T::zero() {
            continue;
        }
        let a = uv.jacobians[i];
        let r = closest_rotation2(&a);
        let g = mesh.face_grads[f];
        let s = dl_dd[i] * T::lit(4.0);
        for k in 0..3 {
            let v = dom.tris[i][k];
            for row in 0..2 {
                let ga = (a[row][0] - r[row][0]) * g[k][0] + (a[row][1] - r[row][1]) * g[k][1];
                dl_dx[2 * v + row] += s * ga;
            }
        }
    }
    let nfree = sol.core_factor.dim();
    let mut rhs = vec![T::zero(); nfree];
    for u in 0..n2 {
        let fi = sol.core_free[u];
        if fi != usize::MAX {
            rhs[fi] = dl_dx[u];
        }
    }
    let lam_free = sol.core_factor.solve(&rhs);
    let mut lam = vec![T::zero(); n2];
    for u in 0..n2 {
        let fi = sol.core_free[u];
        if fi != usize::MAX {
            lam[u] = lam_free[fi];
        }
    }
    let mut x = vec![T::zero(); n2];
    for (v, p) in uv.uv.iter().enumerate() {
        x[2 * v] = p[0];
        x[2 * v + 1] = p[1];
    }
    let floor = T::lit(crate::param::WEIGHT_FLOOR);
    for (i, &f) in dom.faces.iter().enumerate() {
        if !sol.core_faces[i] || weights[f] < floor {
            continue;
        }
        let (c1, c2) = conformal_rows(mesh, f);
        let t = dom.tris[i];
        let (mut l1, mut l2, mut x1, mut x2) = (T::zero(), T::zero(), T::zero(), T::zero());
        for p in 0..6 {
            let gid = 2 * t[p / 2] + p % 2;
            l1 += c1[p] * lam[gid];
            l2 += c2[p] * lam[gid];
            x1 += c1[p] * x[gid];
            x2 += c2[p] * x[gid];
        }
        grad[f] -= mesh.face_areas[f] * (l1 * x1 + l2 * x2);
    }
    Ok((fw.eval, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig<T> {
    /// Geodesic radius of the initial selection, as a fraction of the
    /// bounding-box diagonal.
    pub init_radius: T,
    /// Initial weights outside the ball are `0.5 − margin`.
    pub margin: T,
    pub max_halvings: usize,
}

impl<T: Real> Default for OptimizeConfig<T> {
    fn default() -> Self {
        Self {
            init_radius: T::lit(0.1),
            margin: T::lit(0.05),
            max_halvings: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Optimized<T> {
    pub weights: Vec<T>,
    /// Loss before the first step and after each accepted step.
    pub losses: Vec<T>,
    pub learning_rates: Vec<T>,
    /// Set when backtracking gave up before `steps` were taken.
    pub stalled: bool,
}

impl<T: Real> Optimized<T> {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("step,loss,lr\n");
        for (i, l) in self.losses.iter().enumerate() {
            let lr = if i == 0 {
                String::new()
            } else {
                self.learning_rates[i - 1].to_string()
            };
            s.push_str(&format!("{i},{l},{lr}\n"));
        }
        s
    }
}

/// Faces whose centroid lies within geodesic distance `radius` of the
/// seed, measured along the face adjacency graph between centroids.
pub fn geodesic_ball<T: Real>(mesh: &TriMesh<T>, seed: usize, radius: T) -> Vec<bool> {
    let nf = mesh.num_faces();
    let mut adj: Vec<Vec<(usize, usize, T)>> = vec![Vec::new(); nf];
    for (f, nbrs) in mesh.face_adjacency.iter().enumerate() {
        let c = mesh.face_centroid(f);
        for &g in nbrs {
            adj[f].push((g, 0, dist3(c, mesh.face_centroid(g))));
        }
    }
    let (d, _) = dijkstra(&adj, &[seed]);
    d.into_iter().map(|x| x <= radius).collect()
}

pub fn initial_weights<T: Real>(mesh: &TriMesh<T>, seed: usize, opt: &OptimizeConfig<T>) -> Vec<T> {
    let ball = geodesic_ball(mesh, seed, opt.init_radius * mesh.bbox_diagonal());
    let out = T::lit(0.5) - opt.margin;
    ball.into_iter()
        .map(|b| if b { T::one() } else { out })
        .collect()
}

/// Gradient descent on the total loss from a geodesic-ball start, with
/// per-step clamping to [0, 1] and step halving on loss increase.
pub fn optimize_weights<T: Real>(
    mesh: &TriMesh<T>,
    seed: usize,
    cfg: &LossConfig<T>,
    opt: &OptimizeConfig<T>,
    steps: usize,
    lr: T,
) -> Result<Optimized<T>> {
    if seed >= mesh.num_faces() {
        return Err(WandError::InvalidFace(seed));
    }
    if !(lr > T::zero()) {
        return Err(WandError::InvalidArgument(
            "learning rate must be positive".into(),
        ));
    }
    let mut w = initial_weights(mesh, seed, opt);
    let mut out = Optimized {
        weights: w.clone(),
        losses: Vec::new(),
        learning_rates: Vec::new(),
        stalled: false,
    };
    if steps == 0 {
        out.losses.push(total_loss(mesh, &w, seed, cfg)?.total);
        return Ok(out);
    }
    let (ev, mut g) = grad_weights(mesh, &w, seed, cfg)?;
    let mut loss = ev.total;
    out.losses.push(loss);
    let mut step = lr;
    for _ in 0..steps {
        let mut accepted = None;
        for _ in 0..=opt.max_halvings {
            let cand: Vec<T> = w
                .iter()
                .zip(&g)
                .map(|(&wi, &gi)| (wi - step * gi).max(T::zero()).min(T::one()))
                .collect();
            let (ev, gc) = grad_weights(mesh, &cand, seed, cfg)?;
            if ev.total <= loss {
                accepted = Some((cand, ev.total, gc));
                break;
            }
            step *= T::lit(0.5);
        }
        match accepted {
            Some((cand, l, gc)) => {
                w = cand;
                loss = l;
                g = gc;
                out.losses.push(l);
                out.learning_rates.push(step);
            }
            None => {
                warn!(
                    "weight optimization stalled after {} steps",
                    out.learning_rates.len()
                );
                out.stalled = true;
                break;
            }
        }
    }
    out.weights = w;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use approx::assert_relative_eq;

    fn cfg() -> LossConfig<f64> {
        LossConfig::default()
    }

    #[test]
    fn threshold_loss_values() {
        let m = shapes::cube::<f64>(1.0);
        let p = Patch::new(&m, 0..12, 0).unwrap();
        assert_eq!(threshold_loss(&m, &[0.0; 12], &p, &cfg()).unwrap(), 0.0);
        let at_gamma = threshold_loss(&m, &[0.01; 12], &p, &cfg()).unwrap();
        assert_relative_eq!(at_gamma, 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(
            threshold_loss(&m, &[f64::INFINITY; 12], &p, &cfg()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn smooth_loss_values() {
        let m = shapes::cube::<f64>(1.0);
        assert_eq!(smooth_loss(&m, &[0.3; 12], &cfg()).unwrap(), 0.0);
        // two triangles folded at a right angle
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let m2 = TriMesh::<f64>::new(v, vec![[0, 1, 2], [0, 3, 1]]).unwrap();
        let l = smooth_loss(&m2, &[1.0, 0.0], &cfg()).unwrap();
        assert_relative_eq!(l, -0.1 * 0.5f64.ln(), epsilon = 1e-12);
        let flat = shapes::plane_grid::<f64>(2, 1, 1.0);
        assert_eq!(
            smooth_loss(&flat, &[1.0, 0.0, 1.0, 0.0], &cfg()).unwrap(),
            0.0
        );
    }

    #[test]
    fn smooth_gradient_on_two_faces() {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let m = TriMesh::<f64>::new(v, vec![[0, 1, 2], [0, 3, 1]]).unwrap();
        let (_, g) = smooth_terms(&m, &[0.8, 0.3], &cfg(), true);
        let mag = -0.1 * 0.5f64.ln();
        assert_relative_eq!(g[0], mag, epsilon = 1e-12);
        assert_relative_eq!(g[1], -mag, epsilon = 1e-12);
    }

    #[test]
    fn single_face_patch_has_no_threshold_loss() {
        let m = shapes::icosphere::<f64>(1.0, 1);
        let mut w = vec![0.0; m.num_faces()];
        w[3] = 1.0;
        let ev = total_loss(&m, &w, 3, &cfg()).unwrap();
        assert_eq!(ev.patch.faces, vec![3]);
        assert!(ev.threshold < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = shapes::hemisphere::<f64>(1.0, 6, 2);
        assert!(m.num_faces() <= 24);
        let mut rng = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        let w: Vec<f64> = (0..m.num_faces()).map(|_| 0.55 + 0.4 * next()).collect();
        let c = LossConfig {
            gamma: 0.5,
            alpha: 2.0,
            ..cfg()
        };
        let (_, g) = grad_weights(&m, &w, 0, &c).unwrap();
        let h = 1e-5;
        for f in 0..m.num_faces() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[f] += h;
            wm[f] -= h;
            let fd = (total_loss(&m, &wp, 0, &c).unwrap().total
                - total_loss(&m, &wm, 0, &c).unwrap().total)
                / (2.0 * h);
            if g[f].abs() > 1e-8 {
                assert!(
                    (fd - g[f]).abs() / g[f].abs() < 1e-4,
                    "face {f}: fd {fd} vs {}",
                    g[f]
                );
            }
        }
    }

    #[test]
    fn zero_steps_returns_initialization() {
        let m = shapes::cylinder::<f64>(1.0, 2.0, 12, 4, true);
        let opt = OptimizeConfig::default();
        let r = optimize_weights(&m, 0, &cfg(), &opt, 0, 1.0).unwrap();
        assert_eq!(r.weights, initial_weights(&m, 0, &opt));
        assert!(r.weights[0] == 1.0);
    }

    #[test]
    fn loss_trace_is_non_increasing() {
        let m = shapes::cylinder::<f64>(1.0, 2.0, 12, 4, true);
        let r = optimize_weights(&m, 0, &cfg(), &OptimizeConfig::default(), 5, 10.0).unwrap();
        for w in r.losses.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
}
