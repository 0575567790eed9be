//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use eavesim::fec::{conv_encode, ConvCode};
use eavesim::numerics::SeededRng;
use eavesim::solver::{kkt_residuals, solve_cqp_with, CqpProblem, Method, Quadratic, SolveStatus};

pub struct Instance {
    pub dim: usize,
    pub p: Vec<f64>,
    pub c: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl Instance {
    fn problem(&self) -> CqpProblem {
        CqpProblem {
            dim: self.dim,
            quadratic: Quadratic::Dense(self.p.clone()),
            linear: Some(self.c.clone()),
            norms: Vec::new(),
            g: self.g.clone(),
            h: self.h.clone(),
        }
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let mut f = 0.0;
        for i in 0..n {
            f += self.c[i] * x[i];
            for j in 0..n {
                f += 0.5 * x[i] * self.p[i * n + j] * x[j];
            }
        }
        f
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn gauss_solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-12 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        for r in (col + 1)..n {
            let f = a[r * n + col] / a[col * n + col];
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in (r + 1)..n {
            s -= a[r * n + k] * x[k];
        }
        x[r] = s / a[r * n + r];
    }
    Some(x)
}

/// Try every subset of constraints as the active set, solve the equality
/// KKT system and keep the primal-dual feasible one.
pub fn enumerate(inst: &Instance) -> Option<(Vec<f64>, f64)> {
    let n = inst.dim;
    let m = inst.h.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1 << m) {
        let act: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let s = n + act.len();
        let mut a = vec![0.0; s * s];
        let mut b = vec![0.0; s];
        for i in 0..n {
            for j in 0..n {
                a[i * s + j] = inst.p[i * n + j];
            }
            b[i] = -inst.c[i];
        }
        for (k, &row) in act.iter().enumerate() {
            for j in 0..n {
                a[j * s + n + k] = inst.g[row * n + j];
                a[(n + k) * s + j] = inst.g[row * n + j];
            }
            b[n + k] = inst.h[row];
        }
        let Some(sol) = gauss_solve(a, b) else { continue };
        let x = &sol[..n];
        let dual_ok = sol[n..].iter().all(|&l| l >= -1e-10);
        let primal_ok = (0..m).all(|i| {
            let gx: f64 = (0..n).map(|j| inst.g[i * n + j] * x[j]).sum();
            gx <= inst.h[i] + 1e-10
        });
        if dual_ok && primal_ok {
            let f = inst.objective(x);
            if best.as_ref().map_or(true, |b| f < b.1) {
                best = Some((x.to_vec(), f));
            }
        }
    }
    best
}

/// Strictly convex instance with a known feasible point; some rows are
/// pulled tight so the optimum sits on a face.
pub fn random_instance(rng: &mut SeededRng) -> Instance {
    let dim = 1 + rng.below(6);
    let m = rng.below(5);
    let mut a = vec![0.0; dim * dim];
    for v in a.iter_mut() {
        *v = rng.standard_normal();
    }
    let mut p = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            p[i * dim + j] = (0..dim).map(|k| a[k * dim + i] * a[k * dim + j]).sum::<f64>();
        }
        p[i * dim + i] += 0.2;
    }
    let c: Vec<f64> = (0..dim).map(|_| 2.0 * rng.standard_normal()).collect();
    let x0: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
    let mut g = vec![0.0; m * dim];
    let mut h = vec![0.0; m];
    for i in 0..m {
        for j in 0..dim {
            g[i * dim + j] = rng.standard_normal();
        }
        let gx: f64 = (0..dim).map(|j| g[i * dim + j] * x0[j]).sum();
        h[i] = gx + 0.5 * rng.uniform();
    }
    Instance { dim, p, c, g, h }
}

pub const INSTANCES: usize = 200;
pub const OBJ_TOL: f64 = 1e-6;
pub const X_TOL: f64 = 1e-5;
pub const KKT_TOL: f64 = 1e-6;

/// Worst objective gap, solution gap and KKT residual over the suite.
pub fn oracle_gaps(method: Method, seed: u64) -> (f64, f64, f64) {
    let mut rng = SeededRng::new(seed, 0);
    let (mut obj, mut xs, mut kkt) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..INSTANCES {
        let inst = random_instance(&mut rng);
        let (x_ref, f_ref) = enumerate(&inst).expect("instances are feasible by construction");
        let sol = solve_cqp_with(&inst.problem(), method).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        obj = obj.max((sol.objective - f_ref).abs());
        xs = xs.max(sol.x.iter().zip(&x_ref).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let r = kkt_residuals(&inst.problem(), &sol.x, &sol.multipliers, &sol.norm_duals);
        kkt = kkt.max(r.max());
    }
    (obj, xs, kkt)
}

/// Nearest codeword in Hamming distance over every payload; returns the
/// payload, its distance and whether the minimum is unique.
pub fn brute_force_decode(code: &ConvCode, received: &[u8]) -> (Vec<u8>, usize, bool) {
    let k = code.payload_bits();
    assert!(k <= 16);
    let mut best = (Vec::new(), usize::MAX, true);
    for word in 0u32..(1 << k) {
        let info: Vec<u8> = (0..k).map(|i| ((word >> i) & 1) as u8).collect();
        let cw = conv_encode(code, &info).unwrap();
        let d = cw.iter().zip(received).filter(|(a, b)| a != b).count();
        if d < best.1 {
            best = (info, d, true);
        } else if d == best.1 {
            best.2 = false;
        }
    }
    best
}

pub fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub const NOISY_FRAMES: usize = 500;

/// Hard Viterbi against brute force on noisy frames with a short payload.
/// Returns how many frames disagree: a different payload when the nearest
/// codeword is unique, or a worse distance when it is not.
pub fn hard_decoder_mismatches(code: &ConvCode, frames: usize, flip_p: f64, seed: u64) -> usize {
    let mut rng = SeededRng::new(seed, 0);
    let mut bad = 0;
    for _ in 0..frames {
        let info = rng.bits(code.payload_bits());
        let mut rx = conv_encode(code, &info).unwrap();
        for b in rx.iter_mut() {
            if rng.uniform() < flip_p {
                *b ^= 1;
            }
        }
        let got = eavesim::fec::viterbi_hard(code, &rx).unwrap();
        let (want, dist, unique) = brute_force_decode(code, &rx);
        let got_dist = hamming(&conv_encode(code, &got).unwrap(), &rx);
        if got_dist != dist || (unique && got != want) {
            bad += 1;
        }
    }
    bad
}

/// Frames among all single coded-bit flips of random payloads that fail
/// to decode back to their payload.
pub fn single_flip_failures(code: &ConvCode, payloads: usize, seed: u64) -> usize {
    let mut rng = SeededRng::new(seed, 0);
    let mut bad = 0;
    for _ in 0..payloads {
        let info = rng.bits(code.payload_bits());
        let cw = conv_encode(code, &info).unwrap();
        for i in 0..cw.len() {
            let mut rx = cw.clone();
            rx[i] ^= 1;
            if eavesim::fec::viterbi_hard(code, &rx).unwrap() != info {
                bad += 1;
            }
        }
    }
    bad
}
