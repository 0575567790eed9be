//! Small dense complex linear algebra, real embeddings and seeded randomness.
//!
//! Everything here is sized for simulation scale (tens of antennas), so the
//! routines are plain dense loops in double precision.

use std::ops::{Deref, DerefMut, Index, IndexMut};

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Error, Result};

pub type C64 = Complex64;

/// Condition estimate above which a Gram matrix is treated as singular.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// A complex column vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CVector(pub Vec<C64>);

impl CVector {
    pub fn zeros(len: usize) -> Self {
        CVector(vec![C64::new(0.0, 0.0); len])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }
}

impl Deref for CVector {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl DerefMut for CVector {
    fn deref_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }
}

impl From<Vec<C64>> for CVector {
    fn from(v: Vec<C64>) -> Self {
        CVector(v)
    }
}

impl FromIterator<C64> for CVector {
    fn from_iter<I: IntoIterator<Item = C64>>(iter: I) -> Self {
        CVector(iter.into_iter().collect())
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input("matrix entries must be finite".into()));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[C64]) -> Result<CVector> {
        check_len(self.cols, x.len())?;
        Ok(self.data.chunks_exact(self.cols).map(|row| dot(row, x)).collect())
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        check_len(self.cols, other.rows)?;
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn conj_transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    /// `A A^H`.
    pub fn gram(&self) -> CMatrix {
        let n = self.rows;
        let mut g = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: C64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| a * b.conj())
                    .sum();
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Unconjugated dot product `Σ a_i b_i`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower Cholesky factor of a Hermitian positive definite matrix, with a
/// cheap condition estimate `(max L_ii / min L_ii)^2`.
fn hermitian_cholesky(a: &CMatrix) -> Result<(CMatrix, f64)> {
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::SingularChannel(f64::INFINITY));
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    let diag = (0..n).map(|i| l[(i, i)].re);
    let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    let cond = if n == 0 { 1.0 } else { (hi / lo).powi(2) };
    Ok((l, cond))
}

/// Right pseudo-inverse `H^H (H H^H)^{-1}` of a full-row-rank matrix.
pub fn pseudo_inverse(h: &CMatrix) -> Result<CMatrix> {
    if h.rows() > h.cols() {
        return Err(Error::SingularChannel(f64::INFINITY));
    }
    let (l, cond) = hermitian_cholesky(&h.gram())?;
    if cond > GRAM_CONDITION_LIMIT {
        return Err(Error::SingularChannel(cond));
    }
    let k = h.rows();
    let n = h.cols();
    // Y = G^{-1} H column by column, then H† = Y^H.
    let mut y = h.clone();
    for c in 0..n {
        // forward: L u = h[:, c]
        for i in 0..k {
            let mut s = y[(i, c)];
            for p in 0..i {
                s -= l[(i, p)] * y[(p, c)];
            }
            y[(i, c)] = s / l[(i, i)];
        }
        // backward: L^H v = u
        for i in (0..k).rev() {
            let mut s = y[(i, c)];
            for p in i + 1..k {
                s -= l[(p, i)].conj() * y[(p, c)];
            }
            y[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(y.conj_transpose())
}

/// `[Re v1, Im v1, Re v2, Im v2, ...]`.
pub fn real_embed(v: &[C64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Inverse of [`real_embed`].
pub fn real_unembed(v: &[f64]) -> Result<CVector> {
    if v.len() % 2 != 0 {
        return Err(Error::Dimension {
            expected: v.len() + 1,
            got: v.len(),
        });
    }
    Ok(v.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect())
}

/// Coefficients `(re_row, im_row)` such that `Re(h·x) = re_row·embed(x)` and
/// `Im(h·x) = im_row·embed(x)`.
pub fn embed_row(h: &[C64]) -> (Vec<f64>, Vec<f64>) {
    let mut re = Vec::with_capacity(2 * h.len());
    let mut im = Vec::with_capacity(2 * h.len());
    for z in h {
        re.extend([z.re, -z.im]);
        im.extend([z.im, z.re]);
    }
    (re, im)
}

/// Real `2r × 2c` matrix acting on embedded vectors like `m` acts on complex ones.
pub fn embed_matrix(m: &CMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(4 * m.rows() * m.cols());
    for r in 0..m.rows() {
        let (re, im) = embed_row(m.row(r));
        out.extend(re);
        out.extend(im);
    }
    out
}

/// SplitMix64 finalizer, used to derive stream identifiers.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic random stream keyed by `(seed, stream)`.
///
/// Backed by ChaCha8 with the stream id mapped to the cipher's stream
/// counter, so every `(seed, stream)` pair is an independent sequence that
/// does not depend on which thread draws from it.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SeededRng { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh independent stream derived from this one's identity and `tag`.
    /// Does not consume draws from `self`.
    pub fn substream(&self, tag: u64) -> SeededRng {
        SeededRng::new(self.seed, mix64(self.stream ^ mix64(tag.wrapping_add(1))))
    }

    pub fn bit(&mut self) -> u8 {
        (self.rng.next_u32() >> 31) as u8
    }

    pub fn bits(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| self.bit()).collect()
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// `n` i.i.d. circularly-symmetric complex Gaussian draws of total variance
/// `variance` (each real part carries `variance / 2`).
pub fn sample_cn(rng: &mut SeededRng, n: usize, variance: f64) -> Result<CVector> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::Domain(format!("variance must be >= 0, got {variance}")));
    }
    let s = (variance / 2.0).sqrt();
    Ok((0..n)
        .map(|_| {
            let re = rng.standard_normal();
            let im = rng.standard_normal();
            C64::new(s * re, s * im)
        })
        .collect())
}
