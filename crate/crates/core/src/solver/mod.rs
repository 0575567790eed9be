//! Convex solver for the per-slot precoding problems.
//!
//! Problems have the form
//!
//! ```text
//!     minimize    ½ xᵀ P x + cᵀ x + Σ_j w_j ‖A_j x‖
//!     subject to  G x ≤ h
//! ```
//!
//! over a real vector `x`. Pure quadratic programs go to a dual active-set
//! method; anything with norm terms goes to a primal-dual interior-point
//! method where each norm gets an epigraph variable and a second-order cone.
//! Either way the returned point is re-checked against the KKT conditions
//! and only reported [`SolveStatus::Optimal`] when every residual is below
//! [`KKT_TOL`].

mod active_set;
mod conic;
pub mod linalg;

use crate::error::{check_len, Error, Result};
use linalg::{dot, mat_t_vec, mat_vec, norm};

/// Feasibility / optimality tolerance.
pub const KKT_TOL: f64 = 1e-6;
/// Iteration cap per solve.
pub const MAX_ITER: usize = 10_000;

/// Quadratic part `½ xᵀ P x` of the objective.
#[derive(Debug, Clone, PartialEq)]
pub enum Quadratic {
    None,
    Identity,
    /// Dense symmetric positive definite `P`, row-major.
    Dense(Vec<f64>),
}

/// `weight · ‖A x‖` with `A` row-major, `rows × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormTerm {
    pub weight: f64,
    pub rows: usize,
    pub matrix: Vec<f64>,
}

impl NormTerm {
    pub fn identity(dim: usize, weight: f64) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        NormTerm {
            weight,
            rows: dim,
            matrix,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CqpProblem {
    pub dim: usize,
    pub quadratic: Quadratic,
    pub linear: Option<Vec<f64>>,
    pub norms: Vec<NormTerm>,
    /// Inequality rows, `m × dim`.
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl CqpProblem {
    /// `min ½‖x‖²  s.t.  G x ≤ h`.
    pub fn min_norm(dim: usize, g: Vec<f64>, h: Vec<f64>) -> Self {
        CqpProblem {
            dim,
            quadratic: Quadratic::Identity,
            linear: None,
            norms: Vec::new(),
            g,
            h,
        }
    }

    pub fn constraints(&self) -> usize {
        self.h.len()
    }

    fn validate(&self) -> Result<()> {
        check_len(self.constraints() * self.dim, self.g.len())?;
        if let Quadratic::Dense(p) = &self.quadratic {
            check_len(self.dim * self.dim, p.len())?;
        }
        if let Some(c) = &self.linear {
            check_len(self.dim, c.len())?;
        }
        for t in &self.norms {
            check_len(t.rows * self.dim, t.matrix.len())?;
            if !(t.weight > 0.0) {
                return Err(Error::Domain("norm weights must be positive".into()));
            }
        }
        if matches!(self.quadratic, Quadratic::None) && self.norms.is_empty() {
            return Err(Error::Domain("objective has neither quadratic nor norm terms".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.g) || !finite(&self.h) {
            return Err(Error::Input("constraint data must be finite".into()));
        }
        Ok(())
    }

    pub fn apply_quadratic(&self, x: &[f64]) -> Vec<f64> {
        match &self.quadratic {
            Quadratic::None => vec![0.0; self.dim],
            Quadratic::Identity => x.to_vec(),
            Quadratic::Dense(p) => mat_vec(p, self.dim, x),
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut f = 0.5 * dot(x, &self.apply_quadratic(x));
        if let Some(c) = &self.linear {
            f += dot(c, x);
        }
        for t in &self.norms {
            f += t.weight * norm(&mat_vec(&t.matrix, self.dim, x));
        }
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::MaxIter => "max-iter",
        }
    }
}

/// KKT residuals of a candidate primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    /// `‖∇f(x) + Gᵀλ‖_∞` with the norm subgradients from the duals.
    pub stationarity: f64,
    /// `max(0, max_i (Gx − h)_i)`.
    pub primal: f64,
    /// Largest complementarity violation, including `λ ≥ 0` and `‖u_j‖ ≤ 1`.
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CqpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    /// One multiplier per inequality row.
    pub multipliers: Vec<f64>,
    /// Unit-ball dual `u_j` for each norm term.
    pub norm_duals: Vec<Vec<f64>>,
    pub kkt: KktResiduals,
    pub iterations: usize,
}

impl CqpSolution {
    pub fn primal_residual(&self) -> f64 {
        self.kkt.primal
    }

    /// Stationarity and complementarity, the dual side of the KKT system.
    pub fn dual_residual(&self) -> f64 {
        self.kkt.stationarity.max(self.kkt.complementarity)
    }
}

/// Evaluate the KKT conditions for `(x, λ, u)`.
pub fn kkt_residuals(p: &CqpProblem, x: &[f64], lambda: &[f64], norm_duals: &[Vec<f64>]) -> KktResiduals {
    let n = p.dim;
    let mut grad = p.apply_quadratic(x);
    if let Some(c) = &p.linear {
        linalg::axpy(1.0, c, &mut grad);
    }
    let gl = mat_t_vec(&p.g, n, lambda);
    linalg::axpy(1.0, &gl, &mut grad);

    let mut comp: f64 = 0.0;
    for (t, u) in p.norms.iter().zip(norm_duals) {
        let au = mat_t_vec(&t.matrix, n, u);
        linalg::axpy(t.weight, &au, &mut grad);
        let ax = mat_vec(&t.matrix, n, x);
        comp = comp
            .max(t.weight * (norm(&ax) - dot(u, &ax)).abs())
            .max(norm(u) - 1.0);
    }
    let gx = mat_vec(&p.g, n, x);
    let mut primal: f64 = 0.0;
    for ((gi, hi), li) in gx.iter().zip(&p.h).zip(lambda) {
        let slack = hi - gi;
        primal = primal.max(-slack);
        comp = comp.max(-li).max((li * slack).abs());
    }
    KktResiduals {
        stationarity: linalg::norm_inf(&grad),
        primal: primal.max(0.0),
        complementarity: comp.max(0.0),
    }
}

/// Which algorithm handles a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Active set for pure QPs, interior point otherwise.
    #[default]
    Auto,
    InteriorPoint,
}

pub fn solve_cqp(problem: &CqpProblem) -> Result<CqpSolution> {
    solve_cqp_with(problem, Method::Auto)
}

pub fn solve_cqp_with(problem: &CqpProblem, method: Method) -> Result<CqpSolution> {
    problem.validate()?;
    let raw = if problem.norms.is_empty()
        && !matches!(problem.quadratic, Quadratic::None)
        && method == Method::Auto
    {
        active_set::solve(problem)?
    } else {
        conic::solve(problem)?
    };
    Ok(finish(problem, raw))
}

/// Output of an inner algorithm before certification.
struct RawSolution {
    x: Vec<f64>,
    multipliers: Vec<f64>,
    norm_duals: Vec<Vec<f64>>,
    status: SolveStatus,
    iterations: usize,
}

fn finish(problem: &CqpProblem, raw: RawSolution) -> CqpSolution {
    let kkt = kkt_residuals(problem, &raw.x, &raw.multipliers, &raw.norm_duals);
    let status = match raw.status {
        SolveStatus::Optimal if kkt.max() < KKT_TOL => SolveStatus::Optimal,
        SolveStatus::Optimal => SolveStatus::MaxIter,
        s => s,
    };
    CqpSolution {
        objective: problem.objective(&raw.x),
        x: raw.x,
        status,
        multipliers: raw.multipliers,
        norm_duals: raw.norm_duals,
        kkt,
        iterations: raw.iterations,
    }
}
