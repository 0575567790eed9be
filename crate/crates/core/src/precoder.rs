//! Per-slot transmit-vector design.
//!
//! Every scheme works on the real embedding `[Re x₁, Im x₁, …]` of the
//! transmit vector. A CI constraint on user `k` becomes two half-planes,
//! one per component of `h_k x`, and the random-boundary scheme adds a
//! two-sided strip per eavesdropper antenna.

use crate::channel::ChannelRealization;
use crate::error::{check_len, Error, Result};
use crate::numerics::{embed_matrix, embed_row, pseudo_inverse, real_unembed, CMatrix, CVector, SeededRng, C64};
use crate::solver::linalg::{dot, gram_t, mat_vec, norm};
use crate::solver::{solve_cqp, CqpProblem, CqpSolution, NormTerm, Quadratic, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecoderKind {
    Zf,
    Cispm,
    PlsRandom,
    PlsEveMin,
}

impl PrecoderKind {
    pub const ALL: [PrecoderKind; 4] = [
        PrecoderKind::Zf,
        PrecoderKind::Cispm,
        PrecoderKind::PlsRandom,
        PrecoderKind::PlsEveMin,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PrecoderKind::Zf => "ZF",
            PrecoderKind::Cispm => "CISPM",
            PrecoderKind::PlsRandom => "PLS_random",
            PrecoderKind::PlsEveMin => "PLS_evemin",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', ' '], "_");
        match key.as_str() {
            "zf" => Ok(PrecoderKind::Zf),
            "cispm" => Ok(PrecoderKind::Cispm),
            "pls_random" | "plsrandom" | "random" => Ok(PrecoderKind::PlsRandom),
            "pls_evemin" | "plsevemin" | "evemin" | "eve_min" | "pls_eve_min" => Ok(PrecoderKind::PlsEveMin),
            _ => Err(Error::Config(format!("unknown precoder '{s}'"))),
        }
    }
}

/// How ZF picks its scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZfNormalization {
    /// `‖x‖² = η` in every slot.
    #[default]
    PerSlot,
    /// Mean of `‖x‖²` over the block equals `η`.
    PerBlock,
}

/// Objective used by the Eve-min scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EveMinObjective {
    /// `‖x‖ + ‖H_e x‖`.
    #[default]
    SumOfNorms,
    /// `‖x‖² + ‖H_e x‖²`, a smooth stand-in for cross-checks only.
    SquaredSurrogate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSpec {
    pub kind: PrecoderKind,
    /// ZF transmit power.
    pub eta: f64,
    /// Per-user target SINR, linear.
    pub gamma: Vec<f64>,
    /// Strip half-width for the random-boundary scheme.
    pub delta: f64,
    pub zf_normalization: ZfNormalization,
    pub evemin_objective: EveMinObjective,
}

impl PrecoderSpec {
    pub fn new(kind: PrecoderKind, eta: f64, gamma: Vec<f64>, delta: f64) -> Self {
        PrecoderSpec {
            kind,
            eta,
            gamma,
            delta,
            zf_normalization: ZfNormalization::default(),
            evemin_objective: EveMinObjective::default(),
        }
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        check_len(users, self.gamma.len())?;
        if self.gamma.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::Config("target SINRs must be positive".into()));
        }
        if self.kind == PrecoderKind::Zf && !(self.eta > 0.0) {
            return Err(Error::Config(format!("ZF power must be positive, got {}", self.eta)));
        }
        if self.kind == PrecoderKind::PlsRandom && !(self.delta > 0.0) {
            return Err(Error::Config(format!("strip width must be positive, got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: CVector,
    pub objective: f64,
    /// `‖x‖²`.
    pub power: f64,
    pub status: SolveStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// The random-boundary problem was infeasible and CISPM was used instead.
    pub fallback: bool,
}

impl SolveResult {
    fn closed_form(x: CVector) -> Self {
        let power = x.norm_sqr();
        SolveResult {
            x,
            objective: power,
            power,
            status: SolveStatus::Optimal,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
            fallback: false,
        }
    }

    fn from_solution(sol: CqpSolution, objective: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let objective = objective(&sol.x);
        let x = real_unembed(&sol.x)?;
        Ok(SolveResult {
            power: x.norm_sqr(),
            objective,
            primal_residual: sol.primal_residual(),
            dual_residual: sol.dual_residual(),
            status: sol.status,
            iterations: sol.iterations,
            fallback: false,
            x,
        })
    }
}

/// Strip orientation per Eve antenna: 1 pins the real part, 0 the imaginary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundarySelector {
    pub b: Vec<u8>,
}

impl BoundarySelector {
    pub fn vertical(m: usize) -> Self {
        BoundarySelector { b: vec![1; m] }
    }
}

pub fn sample_boundary(rng: &mut SeededRng, m: usize) -> BoundarySelector {
    BoundarySelector { b: rng.bits(m) }
}

/// Channel-dependent data shared by every slot of a coherence block.
#[derive(Debug, Clone)]
pub struct Precoder {
    spec: PrecoderSpec,
    n_t: usize,
    /// `(re_row, im_row)` for each user
    user_rows: Vec<(Vec<f64>, Vec<f64>)>,
    eve_rows: Vec<(Vec<f64>, Vec<f64>)>,
    eve_embed: Vec<f64>,
    tau: Vec<f64>,
    pinv: Option<CMatrix>,
    surrogate_quadratic: Option<Vec<f64>>,
}

impl Precoder {
    pub fn new(spec: &PrecoderSpec, ch: &ChannelRealization) -> Result<Self> {
        spec.validate(ch.users())?;
        let n_t = ch.antennas();
        let pinv = match spec.kind {
            PrecoderKind::Zf => Some(pseudo_inverse(&ch.h)?),
            _ => None,
        };
        let eve_embed = embed_matrix(&ch.h_e);
        let surrogate_quadratic = (spec.kind == PrecoderKind::PlsEveMin
            && spec.evemin_objective == EveMinObjective::SquaredSurrogate)
            .then(|| {
                let n = 2 * n_t;
                let mut q = gram_t(&eve_embed, n);
                for i in 0..n {
                    q[i * n + i] += 1.0;
                }
                q
            });
        Ok(Precoder {
            spec: spec.clone(),
            n_t,
            user_rows: (0..ch.users()).map(|k| embed_row(ch.h.row(k))).collect(),
            eve_rows: (0..ch.eve_antennas()).map(|i| embed_row(ch.h_e.row(i))).collect(),
            eve_embed,
            tau: spec.gamma.iter().map(|g| ch.sigma_z() * g.sqrt()).collect(),
            pinv,
            surrogate_quadratic,
        })
    }

    pub fn spec(&self) -> &PrecoderSpec {
        &self.spec
    }

    pub fn eve_antennas(&self) -> usize {
        self.eve_rows.len()
    }

    /// Precode one slot. The boundary selector for the random scheme is drawn
    /// from `rng`; other schemes leave it untouched.
    pub fn precode(&self, d: &[C64], rng: &mut SeededRng) -> Result<SolveResult> {
        match self.spec.kind {
            PrecoderKind::Zf => self.zf(d, self.spec.eta),
            PrecoderKind::Cispm => self.cispm(d),
            PrecoderKind::PlsRandom => {
                let b = sample_boundary(rng, self.eve_antennas());
                self.pls_random(d, &b)
            }
            PrecoderKind::PlsEveMin => self.pls_evemin(d),
        }
    }

    /// Precode consecutive slots; only differs from slot-by-slot calls for ZF
    /// with per-block normalization.
    pub fn precode_block(&self, slots: &[CVector], rng: &mut SeededRng) -> Result<Vec<SolveResult>> {
        if self.spec.kind == PrecoderKind::Zf && self.spec.zf_normalization == ZfNormalization::PerBlock {
            let pinv = self.pinv.as_ref().expect("ZF precoder holds H†");
            let raw: Vec<CVector> = slots.iter().map(|d| pinv.mul_vec(d)).collect::<Result<_>>()?;
            let total: f64 = raw.iter().map(|x| x.norm_sqr()).sum();
            if !(total > 0.0) {
                return Err(Error::Domain("zero data block".into()));
            }
            let beta = (self.spec.eta * raw.len() as f64 / total).sqrt();
            return Ok(raw
                .into_iter()
                .map(|x| SolveResult::closed_form(x.iter().map(|v| v * beta).collect()))
                .collect());
        }
        slots.iter().map(|d| self.precode(d, rng)).collect()
    }

    pub fn zf(&self, d: &[C64], eta: f64) -> Result<SolveResult> {
        let pinv = match &self.pinv {
            Some(p) => p,
            None => return Err(Error::Config("precoder was not built for ZF".into())),
        };
        let x = pinv.mul_vec(d)?;
        let p = x.norm_sqr();
        if !(p > 0.0) {
            return Err(Error::Domain("zero data vector".into()));
        }
        let beta = (eta / p).sqrt();
        Ok(SolveResult::closed_form(x.iter().map(|v| v * beta).collect()))
    }

    /// CI half-planes `−sign(d)·row·x ≤ −τ|d|` for every user component.
    fn ci_rows(&self, d: &[C64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len(self.user_rows.len(), d.len())?;
        let n = 2 * self.n_t;
        let mut g = Vec::with_capacity(2 * d.len() * n);
        let mut h = Vec::with_capacity(2 * d.len());
        for ((re, im), (dk, &tau)) in self.user_rows.iter().zip(d.iter().zip(&self.tau)) {
            for (row, comp) in [(re, dk.re), (im, dk.im)] {
                let sgn = if comp < 0.0 { -1.0 } else { 1.0 };
                g.extend(row.iter().map(|v| -sgn * v));
                h.push(-tau * comp.abs());
            }
        }
        Ok((g, h))
    }

    fn power_problem(&self, g: Vec<f64>, h: Vec<f64>) -> CqpProblem {
        CqpProblem::min_norm(2 * self.n_t, g, h)
    }

    pub fn cispm(&self, d: &[C64]) -> Result<SolveResult> {
        let (g, h) = self.ci_rows(d)?;
        let sol = solve_cqp(&self.power_problem(g, h))?;
        SolveResult::from_solution(sol, |x| dot(x, x))
    }

    /// Random-boundary scheme; falls back to CISPM when the strips cannot be
    /// met together with the CI constraints.
    pub fn pls_random(&self, d: &[C64], b: &BoundarySelector) -> Result<SolveResult> {
        check_len(self.eve_rows.len(), b.b.len())?;
        let (mut g, mut h) = self.ci_rows(d)?;
        for ((re, im), &bit) in self.eve_rows.iter().zip(&b.b) {
            let row = if bit == 1 { re } else { im };
            g.extend_from_slice(row);
            g.extend(row.iter().map(|v| -v));
            h.push(self.spec.delta);
            h.push(self.spec.delta);
        }
        let sol = solve_cqp(&self.power_problem(g, h))?;
        if sol.status == SolveStatus::Infeasible {
            let mut r = self.cispm(d)?;
            r.fallback = true;
            return Ok(r);
        }
        SolveResult::from_solution(sol, |x| dot(x, x))
    }

    pub fn pls_evemin(&self, d: &[C64]) -> Result<SolveResult> {
        let (g, h) = self.ci_rows(d)?;
        let n = 2 * self.n_t;
        let eve_rows = 2 * self.eve_rows.len();
        let eve_norm = |x: &[f64]| {
            norm(&mat_vec(&self.eve_embed, n, x))
        };
        let mut p = self.power_problem(g, h);
        if let Some(q) = &self.surrogate_quadratic {
            p.quadratic = Quadratic::Dense(q.clone());
            let sol = solve_cqp(&p)?;
            return SolveResult::from_solution(sol, |x| dot(x, x) + eve_norm(x).powi(2));
        }
        p.quadratic = Quadratic::None;
        p.norms = vec![
            NormTerm::identity(n, 1.0),
            NormTerm {
                weight: 1.0,
                rows: eve_rows,
                matrix: self.eve_embed.clone(),
            },
        ];
        let sol = solve_cqp(&p)?;
        SolveResult::from_solution(sol, |x| norm(x) + eve_norm(x))
    }
}

pub fn zf_precode(ch: &ChannelRealization, d: &[C64], eta: f64) -> Result<SolveResult> {
    let spec = PrecoderSpec::new(PrecoderKind::Zf, eta, vec![1.0; ch.users()], 0.0);
    Precoder::new(&spec, ch)?.zf(d, eta)
}

pub fn cispm_precode(ch: &ChannelRealization, d: &[C64], gamma: &[f64]) -> Result<SolveResult> {
    let spec = PrecoderSpec::new(PrecoderKind::Cispm, 1.0, gamma.to_vec(), 0.0);
    Precoder::new(&spec, ch)?.cispm(d)
}

pub fn pls_random_precode(
    ch: &ChannelRealization,
    d: &[C64],
    gamma: &[f64],
    delta: f64,
    b: &BoundarySelector,
) -> Result<SolveResult> {
    let spec = PrecoderSpec::new(PrecoderKind::PlsRandom, 1.0, gamma.to_vec(), delta);
    Precoder::new(&spec, ch)?.pls_random(d, b)
}

pub fn pls_evemin_precode(ch: &ChannelRealization, d: &[C64], gamma: &[f64]) -> Result<SolveResult> {
    let spec = PrecoderSpec::new(PrecoderKind::PlsEveMin, 1.0, gamma.to_vec(), 0.0);
    Precoder::new(&spec, ch)?.pls_evemin(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{receive_eve, receive_users, sample_channel};
    use crate::modem::{ci_margins, SymbolAlphabet};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_symbols(rng: &mut SeededRng, k: usize) -> CVector {
        let a = SymbolAlphabet::qpsk();
        (0..k).map(|_| a.point(rng.below(4))).collect()
    }

    fn db(v: f64) -> f64 {
        10f64.powf(v / 10.0)
    }

    fn check_ci(ch: &ChannelRealization, d: &[C64], x: &[C64], gamma: &[f64]) {
        let y = receive_users(ch, x, None).unwrap();
        for k in 0..d.len() {
            let (r, i) = ci_margins(d[k], y[k], ch.sigma_z() * gamma[k].sqrt()).unwrap();
            assert!(r >= -1e-6 && i >= -1e-6, "user {k}: {r} {i}");
        }
    }

    fn toy_channel(h: Vec<C64>, k: usize, n_t: usize, he: Vec<C64>, m: usize) -> ChannelRealization {
        ChannelRealization::new(
            CMatrix::new(k, n_t, h).unwrap(),
            CMatrix::new(m, n_t, he).unwrap(),
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zf_identity_channel() {
        let ch = toy_channel(
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            2,
            2,
            vec![c(1.0, 0.0), c(0.0, 1.0)],
            1,
        );
        let d = vec![c(FRAC_1_SQRT_2, FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2, FRAC_1_SQRT_2)];
        let r = zf_precode(&ch, &d, 2.0).unwrap();
        assert!((r.power - 2.0).abs() < 1e-12);
        for (x, di) in r.x.iter().zip(&d) {
            assert!((x - di).norm() < 1e-12);
        }
    }

    #[test]
    fn zf_cancels_interference_with_exact_power() {
        let mut rng = SeededRng::new(5, 0);
        let eta = 10f64.powf(0.5);
        for _ in 0..20 {
            let ch = sample_channel(&mut rng, 6, 15, 3, 1.0, 1.0).unwrap();
            let d = random_symbols(&mut rng, 6);
            let r = zf_precode(&ch, &d, eta).unwrap();
            assert!((r.power - eta).abs() < 1e-12);
            let y = receive_users(&ch, &r.x, None).unwrap();
            let beta = (y[0] / d[0]).re;
            assert!(beta > 0.0);
            for j in 0..6 {
                assert!((y[j] - d[j] * beta).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn zf_per_block_normalizes_the_mean() {
        let mut rng = SeededRng::new(6, 0);
        let ch = sample_channel(&mut rng, 2, 4, 1, 1.0, 1.0).unwrap();
        let mut spec = PrecoderSpec::new(PrecoderKind::Zf, 3.0, vec![1.0; 2], 0.0);
        spec.zf_normalization = ZfNormalization::PerBlock;
        let pre = Precoder::new(&spec, &ch).unwrap();
        let slots: Vec<CVector> = (0..8).map(|_| random_symbols(&mut rng, 2)).collect();
        let out = pre.precode_block(&slots, &mut rng).unwrap();
        let mean: f64 = out.iter().map(|r| r.power).sum::<f64>() / 8.0;
        assert!((mean - 3.0).abs() < 1e-12);
        assert!(out.iter().any(|r| (r.power - 3.0).abs() > 1e-6));
    }

    #[test]
    fn cispm_single_user_example() {
        let ch = toy_channel(vec![c(1.0, 0.0), c(0.0, 0.0)], 1, 2, vec![c(0.3, 0.1), c(0.2, -0.5)], 1);
        let d = vec![c(FRAC_1_SQRT_2, FRAC_1_SQRT_2)];
        let r = cispm_precode(&ch, &d, &[1.0]).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x[0] - d[0]).norm() < 1e-9);
        assert!(r.x[1].norm() < 1e-9);
        assert!((r.power - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cispm_is_feasible_and_not_beaten_by_scaling() {
        let mut rng = SeededRng::new(7, 0);
        let gamma = vec![db(6.0); 6];
        for _ in 0..20 {
            let ch = sample_channel(&mut rng, 6, 15, 2, 1.0, 1.0).unwrap();
            let d = random_symbols(&mut rng, 6);
            let r = cispm_precode(&ch, &d, &gamma).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal);
            check_ci(&ch, &d, &r.x, &gamma);
            assert!(r.objective <= r.power * 1.01 * 1.01);
            assert!((r.power - r.x.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn cispm_uses_less_power_than_zf() {
        let mut rng = SeededRng::new(8, 0);
        let g = db(6.0);
        let (mut zf, mut ci) = (0.0, 0.0);
        for _ in 0..200 {
            let ch = sample_channel(&mut rng, 6, 15, 1, 1.0, 1.0).unwrap();
            let d = random_symbols(&mut rng, 6);
            zf += zf_precode(&ch, &d, g).unwrap().power;
            ci += cispm_precode(&ch, &d, &vec![g; 6]).unwrap().power;
        }
        assert!(ci < zf, "{ci} vs {zf}");
    }

    #[test]
    fn boundary_bits_are_fair_and_fresh() {
        let mut rng = SeededRng::new(9, 0);
        let a = sample_boundary(&mut rng.clone(), 3);
        assert_eq!(a, sample_boundary(&mut rng.clone(), 3));
        let n = 10_000;
        let mut ones = 0usize;
        let mut prev = sample_boundary(&mut rng, 1).b[0] as f64;
        let (mut sxy, mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let b = sample_boundary(&mut rng, 1).b[0] as f64;
            ones += b as usize;
            sxy += prev * b;
            sx += prev;
            sy += b;
            sxx += prev * prev;
            syy += b * b;
            prev = b;
        }
        let nf = n as f64;
        assert!((ones as f64 / nf - 0.5).abs() < 0.02);
        let corr = (sxy / nf - sx * sy / nf / nf) / ((sxx / nf - (sx / nf).powi(2)) * (syy / nf - (sy / nf).powi(2))).sqrt();
        assert!(corr.abs() < 0.05, "{corr}");
    }

    #[test]
    fn pls_random_meets_strips_and_ci() {
        let mut rng = SeededRng::new(10, 0);
        let gamma = vec![db(6.0); 6];
        let mut solved = 0;
        for _ in 0..30 {
            let ch = sample_channel(&mut rng, 6, 15, 5, 1.0, 1.0).unwrap();
            let d = random_symbols(&mut rng, 6);
            let b = sample_boundary(&mut rng, 5);
            let r = pls_random_precode(&ch, &d, &gamma, 0.1, &b).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal);
            check_ci(&ch, &d, &r.x, &gamma);
            if r.fallback {
                continue;
            }
            solved += 1;
            let ye = receive_eve(&ch, &r.x, None).unwrap();
            for (y, &bit) in ye.iter().zip(&b.b) {
                let v = if bit == 1 { y.re } else { y.im };
                assert!(v.abs() <= 0.1 + 1e-6);
            }
        }
        assert!(solved > 20);
    }

    #[test]
    fn pls_random_without_eve_is_cispm() {
        let mut rng = SeededRng::new(11, 0);
        let ch = sample_channel(&mut rng, 4, 8, 1, 1.0, 1.0).unwrap();
        let ch0 = ChannelRealization::new(ch.h.clone(), CMatrix::zeros(0, 8), 1.0, 1.0).unwrap();
        let d = random_symbols(&mut rng, 4);
        let g = vec![2.0; 4];
        let a = pls_random_precode(&ch0, &d, &g, 0.1, &BoundarySelector { b: vec![] }).unwrap();
        let b = cispm_precode(&ch0, &d, &g).unwrap();
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn all_vertical_matches_direct_problem() {
        let mut rng = SeededRng::new(12, 0);
        let ch = sample_channel(&mut rng, 3, 8, 2, 1.0, 1.0).unwrap();
        let d = random_symbols(&mut rng, 3);
        let g = vec![2.0; 3];
        let r = pls_random_precode(&ch, &d, &g, 0.1, &BoundarySelector::vertical(2)).unwrap();
        // Direct construction: CI rows plus |Re(h_e^i x)| ≤ δ, written out by hand.
        let n = 16;
        let mut gm = Vec::new();
        let mut h = Vec::new();
        for k in 0..3 {
            let (re, im) = embed_row(ch.h.row(k));
            let tau = g[k].sqrt();
            gm.extend(re.iter().map(|v| -d[k].re.signum() * v));
            h.push(-tau * d[k].re.abs());
            gm.extend(im.iter().map(|v| -d[k].im.signum() * v));
            h.push(-tau * d[k].im.abs());
        }
        for i in 0..2 {
            let (re, _) = embed_row(ch.h_e.row(i));
            gm.extend(re.iter().copied());
            h.push(0.1);
            gm.extend(re.iter().map(|v| -v));
            h.push(0.1);
        }
        let s = solve_cqp(&CqpProblem::min_norm(n, gm, h)).unwrap();
        let x = real_unembed(&s.x).unwrap();
        for (a, b) in x.iter().zip(r.x.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn strip_pins_eve_within_noise() {
        // Noise of unit variance flips the sign of a component pinned to |v| ≤ 0.1 about half the time.
        let mut rng = SeededRng::new(13, 0);
        let gamma = vec![db(6.0); 6];
        let (mut flips, mut total) = (0usize, 0usize);
        for _ in 0..40 {
            let ch = sample_channel(&mut rng, 6, 15, 1, 1.0, 1.0).unwrap();
            let d = random_symbols(&mut rng, 6);
            let b = sample_boundary(&mut rng, 1);
            let r = pls_random_precode(&ch, &d, &gamma, 0.1, &b).unwrap();
            let clean = receive_eve(&ch, &r.x, None).unwrap()[0];
            let v0 = if b.b[0] == 1 { clean.re } else { clean.im };
            for _ in 0..50 {
                let noisy = receive_eve(&ch, &r.x, Some(&mut rng)).unwrap()[0];
                let v = if b.b[0] == 1 { noisy.re } else { noisy.im };
                flips += (v.signum() != v0.signum()) as usize;
                total += 1;
            }
        }
        let p = flips as f64 / total as f64;
        // |v0| ≤ 0.1 and per-component std 1/√2: flip probability in [0.44, 0.5]
        assert!((0.40..=0.53).contains(&p), "{p}");
    }

    #[test]
    fn evemin_with_blind_eve_matches_cispm() {
        let mut rng = SeededRng::new(14, 0);
        for _ in 0..10 {
            let ch = sample_channel(&mut rng, 4, 8, 2, 1.0, 1.0).unwrap();
            let ch0 = ChannelRealization::new(ch.h.clone(), CMatrix::zeros(2, 8), 1.0, 1.0).unwrap();
            let d = random_symbols(&mut rng, 4);
            let g = vec![2.0; 4];
            let a = pls_evemin_precode(&ch0, &d, &g).unwrap();
            let b = cispm_precode(&ch0, &d, &g).unwrap();
            assert_eq!(a.status, SolveStatus::Optimal);
            for (u, v) in a.x.iter().zip(b.x.iter()) {
                assert!((u - v).norm() < 1e-5, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn evemin_reduces_eve_power() {
        let mut rng = SeededRng::new(15, 0);
        let g = vec![db(6.0); 6];
        let (mut e_min, mut e_ci) = (0.0, 0.0);
        for _ in 0..30 {
            let ch = sample_channel(&mut rng, 6, 15, 4, 1.0, 1.0).unwrap();
            let d = random_symbols(&mut rng, 6);
            let a = pls_evemin_precode(&ch, &d, &g).unwrap();
            assert_eq!(a.status, SolveStatus::Optimal);
            check_ci(&ch, &d, &a.x, &g);
            let b = cispm_precode(&ch, &d, &g).unwrap();
            e_min += receive_eve(&ch, &a.x, None).unwrap().norm_sqr();
            e_ci += receive_eve(&ch, &b.x, None).unwrap().norm_sqr();
        }
        assert!(e_min < e_ci);
    }

    #[test]
    fn surrogate_flag_solves_smooth_problem() {
        let mut rng = SeededRng::new(16, 0);
        let ch = sample_channel(&mut rng, 3, 6, 2, 1.0, 1.0).unwrap();
        let d = random_symbols(&mut rng, 3);
        let mut spec = PrecoderSpec::new(PrecoderKind::PlsEveMin, 1.0, vec![2.0; 3], 0.0);
        spec.evemin_objective = EveMinObjective::SquaredSurrogate;
        let r = Precoder::new(&spec, &ch).unwrap().precode(&d, &mut rng).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        check_ci(&ch, &d, &r.x, &spec.gamma);
        let ye = receive_eve(&ch, &r.x, None).unwrap();
        assert!((r.objective - r.power - ye.norm_sqr()).abs() < 1e-9);
    }

    #[test]
    fn feasible_perturbations_never_improve() {
        let mut rng = SeededRng::new(17, 0);
        let gamma = vec![db(3.0); 4];
        for kind in [PrecoderKind::Cispm, PrecoderKind::PlsEveMin] {
            let ch = sample_channel(&mut rng, 4, 8, 3, 1.0, 1.0).unwrap();
            let d = random_symbols(&mut rng, 4);
            let spec = PrecoderSpec::new(kind, 1.0, gamma.clone(), 0.1);
            let pre = Precoder::new(&spec, &ch).unwrap();
            let r = pre.precode(&d, &mut rng).unwrap();
            let f = |x: &[C64]| match kind {
                PrecoderKind::Cispm => x.iter().map(|v| v.norm_sqr()).sum::<f64>(),
                _ => {
                    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
                        + receive_eve(&ch, x, None).unwrap().norm_sqr().sqrt()
                }
            };
            let f0 = f(&r.x);
            // Feasible anchors: a generously scaled ZF point plus a random kick, kept when CI holds.
            let zf = Precoder::new(&PrecoderSpec::new(PrecoderKind::Zf, 1.0, gamma.clone(), 0.0), &ch)
                .unwrap()
                .zf(&d, 60.0)
                .unwrap();
            let mut tried = 0;
            while tried < 100 {
                let kick: Vec<C64> = (0..8).map(|_| c(rng.standard_normal(), rng.standard_normal()) * 0.3).collect();
                let y: Vec<C64> = zf.x.iter().zip(&kick).map(|(a, b)| a + b).collect();
                let yu = receive_users(&ch, &y, None).unwrap();
                let ok = (0..4).all(|k| {
                    let (a, b) = ci_margins(d[k], yu[k], gamma[k].sqrt()).unwrap();
                    a >= 0.0 && b >= 0.0
                });
                if !ok {
                    continue;
                }
                tried += 1;
                let t = 1e-3 * rng.uniform();
                let z: Vec<C64> = r.x.iter().zip(&y).map(|(a, b)| a * (1.0 - t) + b * t).collect();
                assert!(f(&z) >= f0 - 1e-6);
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let mut rng = SeededRng::new(18, 0);
        let ch = sample_channel(&mut rng, 2, 4, 1, 1.0, 1.0).unwrap();
        assert!(Precoder::new(&PrecoderSpec::new(PrecoderKind::Zf, 0.0, vec![1.0; 2], 0.0), &ch).is_err());
        assert!(Precoder::new(&PrecoderSpec::new(PrecoderKind::PlsRandom, 1.0, vec![1.0; 2], 0.0), &ch).is_err());
        assert!(Precoder::new(&PrecoderSpec::new(PrecoderKind::Cispm, 1.0, vec![1.0; 3], 0.0), &ch).is_err());
        assert!(Precoder::new(&PrecoderSpec::new(PrecoderKind::Cispm, 1.0, vec![-1.0; 2], 0.0), &ch).is_err());
        assert_eq!(PrecoderKind::parse("pls-random").unwrap(), PrecoderKind::PlsRandom);
    }
}
