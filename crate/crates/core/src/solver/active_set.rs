//! Goldfarb–Idnani dual active-set method for strictly convex QPs.
//!
//! Works on constraints `nᵢᵀx ≥ bᵢ` with `nᵢ = −gᵢ`, `bᵢ = −hᵢ`. The factor
//! `J = L⁻ᵀQ` and the upper-triangular `R` satisfy `Qᵀ L⁻¹ N_A = [R; 0]` for
//! the active normals `N_A`; both are updated with Givens rotations as
//! constraints enter and leave.

use super::linalg::{cholesky, cholesky_solve, dot, givens, norm};
use super::{CqpProblem, Quadratic, RawSolution, SolveStatus, MAX_ITER};
use crate::error::{Error, Result};

/// Scaled violation below which a constraint counts as satisfied.
const FEAS_TOL: f64 = 1e-11;
/// Relative size of the null-space component below which a new normal is
/// treated as linearly dependent on the active ones.
const DEP_TOL: f64 = 1e-14;

struct Factor {
    n: usize,
    /// row-major n×n
    j: Vec<f64>,
    /// row-major n×n, upper triangle of the leading q×q block used
    r: Vec<f64>,
    q: usize,
}

impl Factor {
    fn jt_times(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![0.0; n];
        for (row, &vr) in self.j.chunks_exact(n).zip(v) {
            if vr != 0.0 {
                for (dc, jc) in d.iter_mut().zip(row) {
                    *dc += jc * vr;
                }
            }
        }
        d
    }

    /// `z = J₂ d₂` (columns `q..n`).
    fn primal_direction(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        self.j
            .chunks_exact(n)
            .map(|row| dot(&row[self.q..], &d[self.q..]))
            .collect()
    }

    /// `R⁻¹ d₁`.
    fn dual_direction(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        let q = self.q;
        let mut r = d[..q].to_vec();
        for i in (0..q).rev() {
            let mut s = r[i];
            for k in i + 1..q {
                s -= self.r[i * n + k] * r[k];
            }
            r[i] = s / self.r[i * n + i];
        }
        r
    }

    fn rotate_j_columns(&mut self, a: usize, b: usize, c: f64, s: f64) {
        let n = self.n;
        for row in self.j.chunks_exact_mut(n) {
            let (x, y) = (row[a], row[b]);
            row[a] = c * x + s * y;
            row[b] = -s * x + c * y;
        }
    }

    fn add(&mut self, mut d: Vec<f64>) {
        let n = self.n;
        let q = self.q;
        for i in (q + 1..n).rev() {
            if d[i] == 0.0 {
                continue;
            }
            let (c, s, r) = givens(d[i - 1], d[i]);
            d[i - 1] = r;
            d[i] = 0.0;
            self.rotate_j_columns(i - 1, i, c, s);
        }
        for row in 0..=q {
            self.r[row * n + q] = d[row];
        }
        self.q += 1;
    }

    fn drop(&mut self, l: usize) {
        let n = self.n;
        let q = self.q;
        for col in l..q - 1 {
            for row in 0..q {
                self.r[row * n + col] = self.r[row * n + col + 1];
            }
        }
        for i in l..q - 1 {
            let (a, b) = (self.r[i * n + i], self.r[(i + 1) * n + i]);
            if b == 0.0 {
                continue;
            }
            let (c, s, rr) = givens(a, b);
            self.r[i * n + i] = rr;
            self.r[(i + 1) * n + i] = 0.0;
            for col in i + 1..q - 1 {
                let (x, y) = (self.r[i * n + col], self.r[(i + 1) * n + col]);
                self.r[i * n + col] = c * x + s * y;
                self.r[(i + 1) * n + col] = -s * x + c * y;
            }
            self.rotate_j_columns(i, i + 1, c, s);
        }
        for row in 0..n {
            self.r[row * n + q - 1] = 0.0;
        }
        for col in 0..n {
            self.r[(q - 1) * n + col] = 0.0;
        }
        self.q -= 1;
    }
}

pub(super) fn solve(p: &CqpProblem) -> Result<RawSolution> {
    let n = p.dim;
    let m = p.constraints();
    let minus_c: Vec<f64> = p
        .linear
        .as_ref()
        .map_or_else(|| vec![0.0; n], |c| c.iter().map(|v| -v).collect());

    let (j, x) = match &p.quadratic {
        Quadratic::Identity => {
            let mut j = vec![0.0; n * n];
            for i in 0..n {
                j[i * n + i] = 1.0;
            }
            (j, minus_c)
        }
        Quadratic::Dense(pm) => {
            let mut l = pm.clone();
            if !cholesky(&mut l, n) {
                return Err(Error::Domain("quadratic term is not positive definite".into()));
            }
            let mut x = minus_c;
            cholesky_solve(&l, n, &mut x);
            // J = L^{-T}: column i of L^{-1} is the solution of L y = e_i; J[r][c] = Linv[c][r].
            let mut j = vec![0.0; n * n];
            for col in 0..n {
                let mut y = vec![0.0; n];
                y[col] = 1.0;
                for i in col..n {
                    let mut s = y[i];
                    for k in col..i {
                        s -= l[i * n + k] * y[k];
                    }
                    y[i] = s / l[i * n + i];
                }
                // y = L^{-1} e_col is column `col` of L^{-1}; row `col` of J.
                j[col * n..(col + 1) * n].copy_from_slice(&y);
            }
            (j, x)
        }
        Quadratic::None => {
            return Err(Error::Domain("active-set method needs a quadratic term".into()));
        }
    };

    let mut x = x;
    let mut f = Factor {
        n,
        j,
        r: vec![0.0; n * n],
        q: 0,
    };
    let row_norms: Vec<f64> = p
        .g
        .chunks_exact(n.max(1))
        .take(m)
        .map(|g| norm(g).max(f64::MIN_POSITIVE))
        .collect();
    let slack = |x: &[f64], i: usize| p.h[i] - dot(&p.g[i * n..(i + 1) * n], x);

    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut is_active = vec![false; m];
    let mut iterations = 0usize;

    let status = 'outer: loop {
        let mut chosen = None;
        let mut worst = -FEAS_TOL;
        for i in 0..m {
            if is_active[i] {
                continue;
            }
            let s = slack(&x, i) / row_norms[i];
            if s < worst {
                worst = s;
                chosen = Some(i);
            }
        }
        let Some(pc) = chosen else {
            break SolveStatus::Optimal;
        };
        let normal: Vec<f64> = p.g[pc * n..(pc + 1) * n].iter().map(|v| -v).collect();
        let mut u_new = 0.0;

        loop {
            iterations += 1;
            if iterations > MAX_ITER {
                break 'outer SolveStatus::MaxIter;
            }
            let d = f.jt_times(&normal);
            let z = f.primal_direction(&d);
            let r = f.dual_direction(&d);

            let mut t1 = f64::INFINITY;
            let mut leave = None;
            for (k, (&rk, &uk)) in r.iter().zip(&u).enumerate() {
                if rk > 0.0 {
                    let t = uk / rk;
                    if t < t1 {
                        t1 = t;
                        leave = Some(k);
                    }
                }
            }
            let d2: f64 = d[f.q..].iter().map(|v| v * v).sum();
            let dd: f64 = d.iter().map(|v| v * v).sum();
            let full = d2 > DEP_TOL * dd && d2 > 0.0;
            let t2 = if full {
                let zn = dot(&z, &normal);
                (-slack(&x, pc) / zn).max(0.0)
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                break 'outer SolveStatus::Infeasible;
            }

            for (uk, rk) in u.iter_mut().zip(&r) {
                *uk -= t * rk;
            }
            u_new += t;
            if full {
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += t * zi;
                }
            }
            if full && t2 <= t1 {
                f.add(d);
                active.push(pc);
                is_active[pc] = true;
                u.push(u_new);
                continue 'outer;
            }
            let l = leave.expect("finite partial step has a leaving constraint");
            f.drop(l);
            is_active[active[l]] = false;
            active.remove(l);
            u.remove(l);
        }
    };

    let mut multipliers = vec![0.0; m];
    for (&i, &ui) in active.iter().zip(&u) {
        multipliers[i] = ui.max(0.0);
    }
    Ok(RawSolution {
        x,
        multipliers,
        norm_duals: Vec::new(),
        status,
        iterations,
    })
}
