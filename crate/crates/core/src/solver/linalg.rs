//! Dense real kernels for the solvers. Matrices are row-major `Vec<f64>`.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `y = A x` for an `m × n` matrix.
pub fn mat_vec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    if n == 0 {
        return vec![0.0; a.len()];
    }
    a.chunks_exact(n).map(|row| dot(row, x)).collect()
}

/// `y = A^T x` for an `m × n` matrix.
pub fn mat_t_vec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    if n == 0 {
        return y;
    }
    for (row, &xi) in a.chunks_exact(n).zip(x) {
        if xi != 0.0 {
            axpy(xi, row, &mut y);
        }
    }
    y
}

/// `A^T A` for an `m × n` matrix.
pub fn gram_t(a: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    if n == 0 {
        return out;
    }
    for row in a.chunks_exact(n) {
        for i in 0..n {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            let dst = &mut out[i * n..(i + 1) * n];
            axpy(ri, row, dst);
        }
    }
    out
}

/// In-place lower Cholesky factor (`A = L L^T`) of an `n × n` SPD matrix;
/// the strict upper triangle is left untouched. Returns `false` when a
/// non-positive pivot shows up.
pub fn cholesky(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let (before, rest) = a.split_at_mut((j + 1) * n);
        let row_j = &mut before[j * n..];
        let d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        row_j[j] = d;
        let row_j = &row_j[..j];
        for row_i in rest.chunks_exact_mut(n) {
            row_i[j] = (row_i[j] - dot(&row_i[..j], row_j)) / d;
        }
    }
    true
}

/// Solve `L L^T x = b` in place given the factor from [`cholesky`].
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        b[i] = (b[i] - dot(row, &b[..i])) / l[i * n + i];
    }
    for i in (0..n).rev() {
        b[i] /= l[i * n + i];
        let xi = b[i];
        axpy(-xi, &l[i * n..i * n + i], &mut b[..i]);
    }
}

/// Givens rotation `(c, s, r)` with `[c s; -s c] [a; b] = [r; 0]`.
pub fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    if b == 0.0 {
        (1.0, 0.0, a)
    } else {
        let r = a.hypot(b);
        (a / r, b / r, r)
    }
}
