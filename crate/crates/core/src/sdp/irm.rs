//! Iterative rank minimization on top of the relaxation.

use faer::{c64, Mat, Side};

use super::{
    inner, principal_component, project_complement, scaled, solve_sdr, solve_sdr_warm, IrmBlock, PsdSolution, SolveStatus,
    SolverSettings, StructuredSdp,
};
use crate::error::{invalid, Error, Result};

/// Rank-one test: `λ_max / trace ≥ 1 − RANK_ONE_TOL`.
pub const RANK_ONE_TOL: f64 = 1e-4;

/// How the spectrum outside the current principal direction is penalized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankPenalty {
    /// `ε·trace(PCP)`: linear in C, solved by the interior-point method.
    #[default]
    Trace,
    /// `ε·λ_max(PCP)` through an epigraph block, solved by ADMM.
    Spectral,
}

#[derive(Clone, Copy, Debug)]
pub struct IrmParams {
    pub epsilon_0: f64,
    pub growth: f64,
    pub max_iters: usize,
    /// Stop once the penalized block falls below this; `None` means `1e-6·N·diag_value`.
    pub r_tol: Option<f64>,
    pub penalty: RankPenalty,
}

impl Default for IrmParams {
    fn default() -> Self {
        Self { epsilon_0: 4.0, growth: 1.5, max_iters: 20, r_tol: None, penalty: RankPenalty::Trace }
    }
}

impl IrmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_0 > 0.0) || !(self.growth > 1.0) || self.max_iters == 0 {
            return Err(invalid("rank minimization needs epsilon_0 > 0, growth > 1, max_iters >= 1"));
        }
        Ok(())
    }

    fn r_tol_for(&self, problem: &StructuredSdp) -> f64 {
        self.r_tol.unwrap_or(1e-6 * problem.n() as f64 * problem.diag_value)
    }
}

/// Penalty weights for successive rounds; saturates at `f64::MAX` instead of overflowing.
pub fn epsilon_schedule(params: &IrmParams, rounds: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rounds);
    let mut eps = params.epsilon_0;
    for _ in 0..rounds {
        out.push(eps);
        eps = eps.powf(params.growth).min(f64::MAX);
    }
    out
}

/// Ratio `λ_max / trace` of a PSD matrix.
pub fn rank_one_ratio(c: &Mat<c64>) -> Result<f64> {
    let ev = c.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigen)?;
    let trace: f64 = (0..c.nrows()).map(|i| c[(i, i)].re).sum();
    Ok(ev.last().copied().unwrap_or(0.0) / trace)
}

pub fn is_rank_one(c: &Mat<c64>) -> bool {
    rank_one_ratio(c).map(|r| r >= 1.0 - RANK_ONE_TOL).unwrap_or(false)
}

/// Re-solves with a growing penalty on everything outside the current principal
/// direction until the solution is rank one or the round budget runs out.
pub fn irm_refine(
    problem: &StructuredSdp,
    initial: &PsdSolution,
    params: &IrmParams,
    settings: &SolverSettings,
) -> Result<PsdSolution> {
    params.validate()?;
    if initial.status == SolveStatus::Infeasible || is_rank_one(&initial.c_matrix) {
        return Ok(initial.clone());
    }
    let r_tol = params.r_tol_for(problem);
    let mut current = initial.clone();
    let mut history = Vec::new();
    let mut iterations = initial.iterations;
    for (round, eps) in epsilon_schedule(params, params.max_iters).into_iter().enumerate() {
        let (_, u) = principal_component(&current.c_matrix)?;
        let next = match params.penalty {
            RankPenalty::Spectral => {
                let mut p = problem.clone();
                p.irm_block = Some(IrmBlock { principal: u, epsilon: eps });
                solve_sdr_warm(&p, settings, current.warm.as_ref())?
            }
            RankPenalty::Trace => trace_round(problem, &u, eps, settings)?,
        };
        iterations += next.iterations;
        if next.status == SolveStatus::Infeasible {
            return Ok(next);
        }
        history.push(next.r_value);
        current = next;
        current.irm_rounds = round + 1;
        if current.r_value <= r_tol {
            break;
        }
    }
    current.iterations = iterations;
    current.r_history = history;
    if !is_rank_one(&current.c_matrix) {
        current.status = SolveStatus::MaxIters;
    }
    Ok(current)
}

/// One round with the linear penalty `ε·trace(PCP)` folded into the objective.
fn trace_round(problem: &StructuredSdp, u: &[c64], eps: f64, settings: &SolverSettings) -> Result<PsdSolution> {
    let n = problem.n();
    let projector = project_complement(&Mat::<c64>::identity(n, n), u);
    let mut p = problem.clone();
    p.irm_block = None;
    p.objective = &problem.objective - scaled(&projector, eps);
    let mut sol = solve_sdr(&p, settings)?;
    sol.r_value = inner(&projector, &sol.c_matrix).max(0.0);
    sol.objective_value = inner(&problem.objective, &sol.c_matrix) - eps * sol.r_value;
    Ok(sol)
}

/// Relaxation followed by rank minimization.
pub fn solve_rank_one(problem: &StructuredSdp, params: &IrmParams, settings: &SolverSettings) -> Result<PsdSolution> {
    let mut p = problem.clone();
    p.irm_block = None;
    let initial = solve_sdr(&p, settings)?;
    irm_refine(&p, &initial, params, settings)
}
