//! Primal-dual interior-point method with Nesterov–Todd scaling.
//!
//! The problem is lifted to `(x, t₁..t_p)` with cone constraints
//! `G x ≤ h` (orthant) and `(t_j, A_j x) ∈ SOC` and solved as
//!
//! ```text
//!     minimize ½ xᵀPx + cᵀx + Σ w_j t_j   s.t.   G̃ v + s = h̃,  s ⪰ 0
//! ```
//!
//! with Mehrotra predictor-corrector steps. The Newton matrix exploits the
//! rank-one-plus-diagonal form of the SOC scaling so each iteration costs
//! `O(n²)` per cone plus one dense Cholesky.

use super::linalg::{axpy, cholesky, cholesky_solve, dot, gram_t, mat_t_vec, mat_vec, norm};
use super::{CqpProblem, NormTerm, Quadratic, RawSolution, SolveStatus, MAX_ITER};
use crate::error::Result;

const ABS_TOL: f64 = 1e-10;
/// Best-iterate score good enough to hand to KKT certification.
const ACCEPT_TOL: f64 = 1e-7;
const STEP_FRACTION: f64 = 0.99;
const IPM_ITER: usize = 200;
const REFINE_STEPS: usize = 1;

struct Layout<'a> {
    p: &'a CqpProblem,
    n: usize,
    /// lifted variable dimension n + number of norm terms
    nv: usize,
    m: usize,
    /// (offset, length) of each SOC block in the cone vector
    socs: Vec<(usize, usize)>,
    cone_len: usize,
    ata: Vec<Vec<f64>>,
    /// norm terms whose matrix is the identity, applied without the product
    identity: Vec<bool>,
}

impl<'a> Layout<'a> {
    fn new(p: &'a CqpProblem) -> Self {
        let n = p.dim;
        let m = p.constraints();
        let mut socs = Vec::with_capacity(p.norms.len());
        let mut off = m;
        for t in &p.norms {
            socs.push((off, t.rows + 1));
            off += t.rows + 1;
        }
        Layout {
            p,
            n,
            nv: n + p.norms.len(),
            m,
            socs,
            cone_len: off,
            ata: p.norms.iter().map(|t| gram_t(&t.matrix, n)).collect(),
            identity: p.norms.iter().map(|t| is_identity(t, n)).collect(),
        }
    }

    /// `G̃ v`.
    fn g_mul(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let x = &v[..n];
        let mut out = Vec::with_capacity(self.cone_len);
        out.extend(mat_vec(&self.p.g, n, x));
        for (j, t) in self.p.norms.iter().enumerate() {
            out.push(-v[n + j]);
            if self.identity[j] {
                out.extend(x.iter().map(|a| -a));
            } else {
                out.extend(mat_vec(&t.matrix, n, x).into_iter().map(|a| -a));
            }
        }
        out
    }

    /// `G̃ᵀ y`.
    fn g_t_mul(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; self.nv];
        let gx = mat_t_vec(&self.p.g, n, &y[..self.m]);
        out[..n].copy_from_slice(&gx);
        for (j, (t, &(off, len))) in self.p.norms.iter().zip(&self.socs).enumerate() {
            out[n + j] = -y[off];
            let yj = &y[off + 1..off + len];
            if self.identity[j] {
                axpy(-1.0, yj, &mut out[..n]);
            } else {
                axpy(-1.0, &mat_t_vec(&t.matrix, n, yj), &mut out[..n]);
            }
        }
        out
    }

    fn h_full(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.cone_len];
        h[..self.m].copy_from_slice(&self.p.h);
        h
    }

    fn c_full(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.nv];
        if let Some(lin) = &self.p.linear {
            c[..self.n].copy_from_slice(lin);
        }
        for (j, t) in self.p.norms.iter().enumerate() {
            c[self.n + j] = t.weight;
        }
        c
    }

    fn p_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nv];
        out[..self.n].copy_from_slice(&self.p.apply_quadratic(&v[..self.n]));
        out
    }

    /// Add the quadratic term to a dense `nv × nv` matrix.
    fn add_p(&self, k: &mut [f64]) {
        let nv = self.nv;
        match &self.p.quadratic {
            Quadratic::None => {}
            Quadratic::Identity => {
                for i in 0..self.n {
                    k[i * nv + i] += 1.0;
                }
            }
            Quadratic::Dense(pm) => {
                for i in 0..self.n {
                    for jj in 0..self.n {
                        k[i * nv + jj] += pm[i * self.n + jj];
                    }
                }
            }
        }
    }
}

fn is_identity(t: &NormTerm, n: usize) -> bool {
    t.rows == n
        && t.matrix
            .iter()
            .enumerate()
            .all(|(i, &v)| v == if i / n == i % n { 1.0 } else { 0.0 })
}

/// Nesterov–Todd scaling for one SOC block.
#[derive(Debug, Clone)]
struct SocScaling {
    eta: f64,
    w0: f64,
    w1: Vec<f64>,
}

impl SocScaling {
    fn new(s: &[f64], z: &[f64]) -> Self {
        let sn = soc_jnorm(s);
        let zn = soc_jnorm(z);
        let sb: Vec<f64> = s.iter().map(|v| v / sn).collect();
        let zb: Vec<f64> = z.iter().map(|v| v / zn).collect();
        let gamma = ((1.0 + dot(&sb, &zb)) / 2.0).sqrt();
        let w0 = (sb[0] + zb[0]) / (2.0 * gamma);
        let w1: Vec<f64> = sb[1..].iter().zip(&zb[1..]).map(|(a, b)| (a - b) / (2.0 * gamma)).collect();
        SocScaling {
            eta: (sn / zn).sqrt(),
            w0,
            w1,
        }
    }

    /// `W v`.
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let w1v = dot(&self.w1, &v[1..]);
        out[0] = self.eta * (self.w0 * v[0] + w1v);
        let coef = v[0] + w1v / (1.0 + self.w0);
        for ((o, &vi), &wi) in out[1..].iter_mut().zip(&v[1..]).zip(&self.w1) {
            *o = self.eta * (vi + coef * wi);
        }
    }

    /// `W⁻¹ v`.
    fn apply_inv(&self, v: &[f64], out: &mut [f64]) {
        let w1v = dot(&self.w1, &v[1..]);
        out[0] = (self.w0 * v[0] - w1v) / self.eta;
        let coef = -v[0] + w1v / (1.0 + self.w0);
        for ((o, &vi), &wi) in out[1..].iter_mut().zip(&v[1..]).zip(&self.w1) {
            *o = (vi + coef * wi) / self.eta;
        }
    }
}

/// `sqrt(u₀² − ‖u₁‖²)`, computed as a product for accuracy near the boundary.
fn soc_jnorm(u: &[f64]) -> f64 {
    let r = norm(&u[1..]);
    ((u[0] - r) * (u[0] + r)).max(f64::MIN_POSITIVE).sqrt()
}

/// Largest `α ≥ 0` keeping `u + α d` in the SOC (∞ when unbounded).
fn soc_max_step(u: &[f64], d: &[f64]) -> f64 {
    let a = d[0] * d[0] - dot(&d[1..], &d[1..]);
    let b = u[0] * d[0] - dot(&u[1..], &d[1..]);
    let c = soc_jnorm(u).powi(2);
    // q(α) = aα² + 2bα + c, c > 0; smallest positive root.
    let scale = a.abs().max(b.abs()).max(c);
    if a.abs() <= 1e-15 * scale {
        return if b < 0.0 { -c / (2.0 * b) } else { f64::INFINITY };
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    // roots of aα² + 2bα + c
    let qq = -(b + b.signum() * sq);
    let (r1, r2) = if qq != 0.0 { (qq / a, c / qq) } else { ((-b + sq) / a, (-b - sq) / a) };
    let mut best = f64::INFINITY;
    for r in [r1, r2] {
        if r > 0.0 && r < best {
            best = r;
        }
    }
    // a line staying in the cone with d0 growing never leaves
    if best.is_finite() && a > 0.0 && d[0] >= 0.0 && b >= 0.0 {
        return f64::INFINITY;
    }
    best
}

struct Scaling {
    /// orthant: W = diag(d), d = sqrt(s/z)
    d: Vec<f64>,
    soc: Vec<SocScaling>,
    lambda: Vec<f64>,
}

impl Scaling {
    fn new(lay: &Layout, s: &[f64], z: &[f64]) -> Self {
        let d: Vec<f64> = s[..lay.m].iter().zip(&z[..lay.m]).map(|(a, b)| (a / b).sqrt()).collect();
        let soc: Vec<SocScaling> = lay
            .socs
            .iter()
            .map(|&(off, len)| SocScaling::new(&s[off..off + len], &z[off..off + len]))
            .collect();
        let mut sc = Scaling {
            d,
            soc,
            lambda: Vec::new(),
        };
        sc.lambda = sc.w(lay, z);
        sc
    }

    fn w(&self, lay: &Layout, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; lay.cone_len];
        for i in 0..lay.m {
            out[i] = self.d[i] * v[i];
        }
        for (sc, &(off, len)) in self.soc.iter().zip(&lay.socs) {
            sc.apply(&v[off..off + len], &mut out[off..off + len]);
        }
        out
    }

    fn w_inv(&self, lay: &Layout, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; lay.cone_len];
        for i in 0..lay.m {
            out[i] = v[i] / self.d[i];
        }
        for (sc, &(off, len)) in self.soc.iter().zip(&lay.socs) {
            sc.apply_inv(&v[off..off + len], &mut out[off..off + len]);
        }
        out
    }

    /// Dense Newton matrix `P̃ + G̃ᵀ W⁻² G̃`.
    fn newton_matrix(&self, lay: &Layout) -> Vec<f64> {
        let n = lay.n;
        let nv = lay.nv;
        let mut k = vec![0.0; nv * nv];
        lay.add_p(&mut k);
        for (i, g) in lay.p.g.chunks_exact(n.max(1)).take(lay.m).enumerate() {
            let wgt = 1.0 / (self.d[i] * self.d[i]);
            for a in 0..n {
                let ga = wgt * g[a];
                if ga == 0.0 {
                    continue;
                }
                axpy(ga, g, &mut k[a * nv..a * nv + n]);
            }
        }
        for (j, (sc, t)) in self.soc.iter().zip(&lay.p.norms).enumerate() {
            let e2 = 1.0 / (sc.eta * sc.eta);
            // v = -w0 e_t + Aᵀ w1
            let mut v = vec![0.0; nv];
            let atw = mat_t_vec(&t.matrix, n, &sc.w1);
            v[..n].copy_from_slice(&atw);
            v[n + j] = -sc.w0;
            for a in 0..nv {
                if v[a] == 0.0 {
                    continue;
                }
                let va = 2.0 * e2 * v[a];
                axpy(va, &v, &mut k[a * nv..(a + 1) * nv]);
            }
            k[(n + j) * nv + n + j] -= e2;
            let ata = &lay.ata[j];
            for a in 0..n {
                axpy(e2, &ata[a * n..(a + 1) * n], &mut k[a * nv..a * nv + n]);
            }
        }
        k
    }
}

fn jordan_prod(lay: &Layout, u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; lay.cone_len];
    for i in 0..lay.m {
        out[i] = u[i] * v[i];
    }
    for &(off, len) in &lay.socs {
        let (u0, u1) = (u[off], &u[off + 1..off + len]);
        let (v0, v1) = (v[off], &v[off + 1..off + len]);
        out[off] = u0 * v0 + dot(u1, v1);
        for i in 1..len {
            out[off + i] = u0 * v[off + i] + v0 * u[off + i];
        }
        let _ = v1;
    }
    out
}

/// Solve `λ ∘ x = r` for `x`.
fn jordan_div(lay: &Layout, lambda: &[f64], r: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; lay.cone_len];
    for i in 0..lay.m {
        out[i] = r[i] / lambda[i];
    }
    for &(off, len) in &lay.socs {
        let l0 = lambda[off];
        let l1 = &lambda[off + 1..off + len];
        let r0 = r[off];
        let r1 = &r[off + 1..off + len];
        let det = soc_jnorm(&lambda[off..off + len]).powi(2);
        let x0 = (l0 * r0 - dot(l1, r1)) / det;
        out[off] = x0;
        for i in 1..len {
            out[off + i] = (r[off + i] - x0 * lambda[off + i]) / l0;
        }
    }
    out
}

fn identity_e(lay: &Layout) -> Vec<f64> {
    let mut e = vec![0.0; lay.cone_len];
    for v in &mut e[..lay.m] {
        *v = 1.0;
    }
    for &(off, _) in &lay.socs {
        e[off] = 1.0;
    }
    e
}

/// `inf { α : u + α e ⪰ 0 }`.
fn cone_shift(lay: &Layout, u: &[f64]) -> f64 {
    let mut a = f64::NEG_INFINITY;
    for &v in &u[..lay.m] {
        a = a.max(-v);
    }
    for &(off, len) in &lay.socs {
        a = a.max(norm(&u[off + 1..off + len]) - u[off]);
    }
    a
}

fn max_step(lay: &Layout, u: &[f64], d: &[f64]) -> f64 {
    let mut a = f64::INFINITY;
    for i in 0..lay.m {
        if d[i] < 0.0 {
            a = a.min(-u[i] / d[i]);
        }
    }
    for &(off, len) in &lay.socs {
        a = a.min(soc_max_step(&u[off..off + len], &d[off..off + len]));
    }
    a
}

struct Direction {
    dx: Vec<f64>,
    dz: Vec<f64>,
    ds: Vec<f64>,
}

fn newton_once(
    lay: &Layout,
    chol: &[f64],
    sc: &Scaling,
    rx: &[f64],
    rz: &[f64],
    rc: &[f64],
) -> Direction {
    let nv = lay.nv;
    let tmp = sc.w(lay, &jordan_div(lay, &sc.lambda, rc));
    let v: Vec<f64> = rz.iter().zip(&tmp).map(|(a, b)| a + b).collect();
    let v2 = sc.w_inv(lay, &sc.w_inv(lay, &v));
    let gv2 = lay.g_t_mul(&v2);
    let mut dx: Vec<f64> = rx.iter().zip(&gv2).map(|(a, b)| -a - b).collect();
    cholesky_solve(chol, nv, &mut dx);
    let gdx = lay.g_mul(&dx);
    let inner: Vec<f64> = gdx.iter().zip(&v).map(|(a, b)| a + b).collect();
    let dz = sc.w_inv(lay, &sc.w_inv(lay, &inner));
    let ds: Vec<f64> = rz.iter().zip(&gdx).map(|(a, b)| -a - b).collect();
    Direction { dx, dz, ds }
}

/// Newton step with iterative refinement against the unreduced system
///
/// ```text
///     P̃ Δx + G̃ᵀ Δz = −r_x,   G̃ Δx + Δs = −r_z,   λ ∘ (W⁻¹Δs + WΔz) = r_c
/// ```
///
/// Recovering `Δz` from the reduced solve cancels badly near the optimum,
/// so the residuals of all three blocks are fed back through the same factor.
fn newton_direction(
    lay: &Layout,
    chol: &[f64],
    sc: &Scaling,
    rx: &[f64],
    rz: &[f64],
    rc: &[f64],
) -> Direction {
    let mut dir = newton_once(lay, chol, sc, rx, rz, rc);
    for _ in 0..REFINE_STEPS {
        let mut e1 = lay.p_mul(&dir.dx);
        axpy(1.0, &lay.g_t_mul(&dir.dz), &mut e1);
        axpy(1.0, rx, &mut e1);
        let mut e2 = lay.g_mul(&dir.dx);
        axpy(1.0, &dir.ds, &mut e2);
        axpy(1.0, rz, &mut e2);
        let mut inner = sc.w_inv(lay, &dir.ds);
        axpy(1.0, &sc.w(lay, &dir.dz), &mut inner);
        let lhs3 = jordan_prod(lay, &sc.lambda, &inner);
        let e3: Vec<f64> = rc.iter().zip(&lhs3).map(|(a, b)| a - b).collect();
        let corr = newton_once(lay, chol, sc, &e1, &e2, &e3);
        axpy(1.0, &corr.dx, &mut dir.dx);
        axpy(1.0, &corr.dz, &mut dir.dz);
        axpy(1.0, &corr.ds, &mut dir.ds);
    }
    dir
}

fn factor(k: Vec<f64>, nv: usize) -> Option<Vec<f64>> {
    let mut l = k.clone();
    if cholesky(&mut l, nv) {
        return Some(l);
    }
    let scale = (0..nv).map(|i| k[i * nv + i].abs()).fold(1.0, f64::max);
    let mut k = k;
    for i in 0..nv {
        k[i * nv + i] += 1e-12 * scale;
    }
    cholesky(&mut k, nv).then_some(k)
}

pub(super) fn solve(p: &CqpProblem) -> Result<RawSolution> {
    let lay = Layout::new(p);
    let nv = lay.nv;
    let h = lay.h_full();
    let c = lay.c_full();
    let e = identity_e(&lay);
    let degree = (lay.m + lay.socs.len()) as f64;

    // Initial point: least-squares fit with unit scaling.
    let ones = Scaling {
        d: vec![1.0; lay.m],
        soc: lay
            .socs
            .iter()
            .map(|&(_, len)| SocScaling {
                eta: 1.0,
                w0: 1.0,
                w1: vec![0.0; len - 1],
            })
            .collect(),
        lambda: Vec::new(),
    };
    let Some(chol0) = factor(ones.newton_matrix(&lay), nv) else {
        return Ok(stalled(&lay, vec![0.0; nv], vec![0.0; lay.cone_len], 0));
    };
    let gth = lay.g_t_mul(&h);
    let mut x: Vec<f64> = gth.iter().zip(&c).map(|(a, b)| a - b).collect();
    cholesky_solve(&chol0, nv, &mut x);
    let gx = lay.g_mul(&x);
    let mut z: Vec<f64> = gx.iter().zip(&h).map(|(a, b)| a - b).collect();
    let mut s: Vec<f64> = z.iter().map(|v| -v).collect();
    let a_s = cone_shift(&lay, &s);
    if a_s >= -1e-8 * norm(&s).max(1.0) {
        axpy(1.0 + a_s, &e, &mut s);
    }
    let a_z = cone_shift(&lay, &z);
    if a_z >= -1e-8 * norm(&z).max(1.0) {
        axpy(1.0 + a_z, &e, &mut z);
    }

    let hnorm = norm(&h).max(1.0);
    let cnorm = norm(&c).max(1.0);
    let max_iter = IPM_ITER.min(MAX_ITER);
    let mut iterations = 0;
    // Rounding eventually swamps the dual residual once the iterates hug the
    // cone boundary, so the best iterate seen is kept as a fallback.
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;

    for it in 0..max_iter {
        iterations = it + 1;
        let px = lay.p_mul(&x);
        let gtz = lay.g_t_mul(&z);
        let rx: Vec<f64> = px.iter().zip(&c).zip(&gtz).map(|((a, b), d)| a + b + d).collect();
        let gx = lay.g_mul(&x);
        let rz: Vec<f64> = gx.iter().zip(&s).zip(&h).map(|((a, b), d)| a + b - d).collect();
        let gap = dot(&s, &z);
        let pres = norm(&rz) / hnorm;
        let dres = norm(&rx) / cnorm;
        let pobj = 0.5 * dot(&x, &px) + dot(&c, &x);
        let score = pres.max(dres).max(gap / (1.0 + pobj.abs()));
        if !score.is_finite() {
            break;
        }
        if pres < ABS_TOL && dres < ABS_TOL && gap < ABS_TOL {
            return Ok(converged(&lay, x, z, iterations));
        }
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, x.clone(), z.clone()));
        } else if best.as_ref().is_some_and(|b| score > 1e3 * b.0 && b.0 < ACCEPT_TOL) {
            break;
        }
        let mu = gap / degree;

        let sc = Scaling::new(&lay, &s, &z);
        let Some(chol) = factor(sc.newton_matrix(&lay), nv) else {
            break;
        };

        // predictor
        let ll = jordan_prod(&lay, &sc.lambda, &sc.lambda);
        let rc_aff: Vec<f64> = ll.iter().map(|v| -v).collect();
        let aff = newton_once(&lay, &chol, &sc, &rx, &rz, &rc_aff);
        let alpha_aff = max_step(&lay, &s, &aff.ds).min(max_step(&lay, &z, &aff.dz)).min(1.0);
        let sigma = (1.0 - alpha_aff).clamp(0.0, 1.0).powi(3);

        // corrector
        let ws = sc.w_inv(&lay, &aff.ds);
        let wz = sc.w(&lay, &aff.dz);
        let cross = jordan_prod(&lay, &ws, &wz);
        let rc: Vec<f64> = ll
            .iter()
            .zip(&cross)
            .zip(&e)
            .map(|((l, cr), ei)| -l - cr + sigma * mu * ei)
            .collect();
        let dir = newton_direction(&lay, &chol, &sc, &rx, &rz, &rc);
        let alpha_max = max_step(&lay, &s, &dir.ds).min(max_step(&lay, &z, &dir.dz));
        let alpha = (STEP_FRACTION * alpha_max).min(1.0);
        if !(alpha > 1e-14) {
            break;
        }
        axpy(alpha, &dir.dx, &mut x);
        axpy(alpha, &dir.ds, &mut s);
        axpy(alpha, &dir.dz, &mut z);
    }
    match best {
        Some((score, bx, bz)) if score < ACCEPT_TOL => Ok(converged(&lay, bx, bz, iterations)),
        _ => Ok(stalled(&lay, x, z, iterations)),
    }
}

fn extract(lay: &Layout, x: &[f64], z: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let xs = x[..lay.n].to_vec();
    let lambda = z[..lay.m].iter().map(|v| v.max(0.0)).collect();
    let duals = lay
        .p
        .norms
        .iter()
        .zip(&lay.socs)
        .map(|(t, &(off, len))| z[off + 1..off + len].iter().map(|v| -v / t.weight).collect())
        .collect();
    (xs, lambda, duals)
}

fn converged(lay: &Layout, x: Vec<f64>, z: Vec<f64>, iterations: usize) -> RawSolution {
    let (x, multipliers, norm_duals) = extract(lay, &x, &z);
    RawSolution {
        x,
        multipliers,
        norm_duals,
        status: SolveStatus::Optimal,
        iterations,
    }
}

/// No convergence: a primal residual that refuses to shrink is read as
/// infeasibility, anything else as running out of iterations.
fn stalled(lay: &Layout, x: Vec<f64>, z: Vec<f64>, iterations: usize) -> RawSolution {
    let gx = mat_vec(&lay.p.g, lay.n, &x[..lay.n]);
    let viol = gx.iter().zip(&lay.p.h).fold(0.0f64, |m, (a, b)| m.max(a - b));
    let (xs, multipliers, norm_duals) = extract(lay, &x, &z);
    RawSolution {
        x: xs,
        multipliers,
        norm_duals,
        status: if viol > super::KKT_TOL {
            SolveStatus::Infeasible
        } else {
            SolveStatus::MaxIter
        },
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    fn random_interior(rng: &mut SeededRng, len: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..len).map(|_| rng.standard_normal()).collect();
        v[0] = norm(&v[1..]) + 0.1 + rng.uniform();
        v
    }

    #[test]
    fn nt_scaling_maps_s_and_z_to_same_point() {
        let mut rng = SeededRng::new(1, 1);
        for _ in 0..50 {
            let len = 2 + rng.below(6);
            let s = random_interior(&mut rng, len);
            let z = random_interior(&mut rng, len);
            let sc = SocScaling::new(&s, &z);
            let mut wz = vec![0.0; len];
            let mut wis = vec![0.0; len];
            sc.apply(&z, &mut wz);
            sc.apply_inv(&s, &mut wis);
            for (a, b) in wz.iter().zip(&wis) {
                assert!((a - b).abs() < 1e-10, "{wz:?} vs {wis:?}");
            }
            // W W⁻¹ = I
            let mut back = vec![0.0; len];
            sc.apply(&wis, &mut back);
            for (a, b) in back.iter().zip(&s) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn soc_step_hits_boundary() {
        let u = [2.0, 0.0];
        let d = [-1.0, 1.0];
        // 2 - α = α → α = 1
        assert!((soc_max_step(&u, &d) - 1.0).abs() < 1e-12);
        assert!(soc_max_step(&u, &[1.0, 0.5]).is_infinite());
        let u = [1.0, 0.5, 0.0];
        let a = soc_max_step(&u, &[0.0, 1.0, 0.0]);
        assert!((a - 0.5).abs() < 1e-12);
    }
}
