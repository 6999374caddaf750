//! Lifted phase-design problem: a Hermitian SDP with a fixed diagonal,
//! trace caps, and an optional rank penalty, solved by ADMM.

mod admm;
mod ipm;
mod irm;
mod project;

use faer::{c64, Mat, Side};

use crate::error::{invalid, Error, Result};

pub use admm::{solve_sdr, solve_sdr_warm, SolverSettings, WarmStart};
pub use irm::{
    epsilon_schedule, irm_refine, is_rank_one, rank_one_ratio, solve_rank_one, IrmParams, RankPenalty,
    RANK_ONE_TOL,
};

/// `trace(C·matrix) ≤ tau`.
#[derive(Clone, Debug)]
pub struct TraceCap {
    pub matrix: Mat<c64>,
    pub tau: f64,
}

impl TraceCap {
    /// Cap on `|aᴴ c|²`-type terms, i.e. on `trace(C·a·aᴴ)`.
    pub fn rank_one(a: &[c64], tau: f64) -> Self {
        Self { matrix: outer(a), tau }
    }
}

/// Penalty on the spectrum of C outside `principal`.
///
/// The penalized block is `VᴴCV` where the columns of V span the orthogonal
/// complement of `principal`; only the projector `VVᴴ` enters the problem, so the
/// excluded direction is stored instead of V itself.
#[derive(Clone, Debug)]
pub struct IrmBlock {
    pub principal: Vec<c64>,
    pub epsilon: f64,
}

/// maximize trace(C·objective) − ε·r
/// s.t. diag(C) = diag_value, trace(C·A_k) ≤ τ_k, C ⪰ 0, r·I ⪰ VᴴCV.
#[derive(Clone, Debug)]
pub struct StructuredSdp {
    pub objective: Mat<c64>,
    pub diag_value: f64,
    pub trace_caps: Vec<TraceCap>,
    pub irm_block: Option<IrmBlock>,
}

impl StructuredSdp {
    pub fn new(objective: Mat<c64>, diag_value: f64) -> Self {
        Self { objective, diag_value, trace_caps: Vec::new(), irm_block: None }
    }

    pub fn with_cap(mut self, cap: TraceCap) -> Self {
        self.trace_caps.push(cap);
        self
    }

    pub fn n(&self) -> usize {
        self.objective.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || self.objective.ncols() != n {
            return Err(Error::Dimension("objective must be a nonempty square matrix".into()));
        }
        if !(self.diag_value > 0.0) {
            return Err(invalid("diag_value must be positive"));
        }
        check_hermitian(&self.objective, "objective")?;
        for (k, cap) in self.trace_caps.iter().enumerate() {
            if cap.matrix.nrows() != n || cap.matrix.ncols() != n {
                return Err(Error::Dimension(format!("cap {k} is not {n}x{n}")));
            }
            if !(cap.tau >= 0.0) {
                return Err(invalid(format!("cap {k} threshold must be non-negative")));
            }
            check_hermitian(&cap.matrix, "cap matrix")?;
        }
        if let Some(b) = &self.irm_block {
            if b.principal.len() != n {
                return Err(Error::Dimension("rank block direction has wrong length".into()));
            }
            if !(b.epsilon > 0.0) {
                return Err(invalid("rank penalty weight must be positive"));
            }
        }
        Ok(())
    }

    /// Objective of a candidate matrix, penalty included when a block is present.
    pub fn objective_of(&self, c: &Mat<c64>) -> f64 {
        let base = inner(&self.objective, c);
        match &self.irm_block {
            Some(b) => base - b.epsilon * complement_lambda_max(c, &b.principal),
            None => base,
        }
    }
}

fn check_hermitian(m: &Mat<c64>, what: &str) -> Result<()> {
    let scale = frob(m).max(1e-300);
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if worst > 1e-9 * scale {
        return Err(invalid(format!("{what} is not Hermitian")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
}

#[derive(Clone, Debug)]
pub struct PsdSolution {
    pub c_matrix: Mat<c64>,
    pub objective_value: f64,
    /// Largest eigenvalue of the penalized block; zero when no block is present.
    pub r_value: f64,
    pub residuals: Residuals,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Rank-minimization rounds run on top of the relaxation.
    pub irm_rounds: usize,
    /// Penalized-block values after each rank-minimization round.
    pub r_history: Vec<f64>,
    pub(crate) warm: Option<WarmStart>,
}

/// Largest eigenpair of a Hermitian matrix; ties resolve to the lowest index.
pub fn principal_component(c: &Mat<c64>) -> Result<(f64, Vec<c64>)> {
    let eig = c.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
    let s = eig.S().column_vector();
    let n = s.nrows();
    if n == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let top = s[n - 1].re;
    let scale = top.abs().max(1.0);
    // eigenvalues come back ascending; among a tied top cluster prefer the
    // vector concentrated on the lowest coordinate
    let mut best = n - 1;
    let u = eig.U();
    let lead = |k: usize| (0..n).find(|&i| u[(i, k)].norm() > 1e-8).unwrap_or(n);
    let mut k = n - 1;
    while k > 0 && (top - s[k - 1].re).abs() <= 1e-12 * scale {
        k -= 1;
        if lead(k) < lead(best) {
            best = k;
        }
    }
    let v: Vec<c64> = (0..n).map(|i| u[(i, best)]).collect();
    Ok((top, v))
}

pub fn outer(a: &[c64]) -> Mat<c64> {
    Mat::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj())
}

/// Real inner product `Re tr(Aᴴ B)`; equals `trace(A·B)` for Hermitian arguments.
pub(crate) fn inner(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        let (ca, cb) = (a.col(j), b.col(j));
        for i in 0..a.nrows() {
            let (x, y) = (ca[i], cb[i]);
            acc += x.re * y.re + x.im * y.im;
        }
    }
    acc
}

pub(crate) fn scaled(m: &Mat<c64>, s: f64) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

pub(crate) fn frob(a: &Mat<c64>) -> f64 {
    inner(a, a).sqrt()
}

/// Largest eigenvalue of `P C P` with `P = I − u uᴴ/‖u‖²`, floored at zero.
pub(crate) fn complement_lambda_max(c: &Mat<c64>, u: &[c64]) -> f64 {
    let pcp = project_complement(c, u);
    match pcp.self_adjoint_eigenvalues(Side::Lower) {
        Ok(ev) => ev.last().copied().unwrap_or(0.0).max(0.0),
        Err(_) => f64::NAN,
    }
}

/// `P M P` for the projector onto the complement of `u`.
pub(crate) fn project_complement(m: &Mat<c64>, u: &[c64]) -> Mat<c64> {
    let n = u.len();
    let nrm2: f64 = u.iter().map(|x| x.norm_sqr()).sum();
    let u: Vec<c64> = u.iter().map(|x| x / nrm2.sqrt()).collect();
    // M u and uᴴ M
    let mu: Vec<c64> = (0..n).map(|i| (0..n).map(|j| m[(i, j)] * u[j]).sum()).collect();
    let um: Vec<c64> = (0..n).map(|j| (0..n).map(|i| u[i].conj() * m[(i, j)]).sum()).collect();
    let umu: c64 = (0..n).map(|i| u[i].conj() * mu[i]).sum();
    Mat::from_fn(n, n, |i, j| {
        m[(i, j)] - mu[i] * u[j].conj() - u[i] * um[j] + u[i] * umu * u[j].conj()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_iteration(c: &Mat<c64>) -> f64 {
        // shift to make the spectrum positive, then iterate
        let n = c.nrows();
        let shift = frob(c);
        let mut v: Vec<c64> = (0..n).map(|i| c64::new(1.0 + i as f64 * 0.1, 0.3)).collect();
        let mut lam = 0.0;
        for _ in 0..20000 {
            let w: Vec<c64> = (0..n)
                .map(|i| (0..n).map(|j| c[(i, j)] * v[j]).sum::<c64>() + v[i] * shift)
                .collect();
            let nrm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            v = w.iter().map(|x| x / nrm).collect();
            lam = nrm - shift;
        }
        lam
    }

    #[test]
    fn principal_of_identity_takes_first_axis() {
        let id = Mat::<c64>::identity(4, 4);
        let (l, v) = principal_component(&id).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        assert!((v[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn principal_of_outer_product() {
        let a: Vec<c64> = (0..6).map(|k| c64::from_polar(1.0, 0.7 * k as f64)).collect();
        let (l, v) = principal_component(&outer(&a)).unwrap();
        assert!((l - 6.0).abs() < 1e-10);
        let overlap: c64 = a.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
        assert!((overlap.norm() - 6f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn principal_matches_power_iteration() {
        let mut s = 7u64;
        let mut rnd = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = Mat::from_fn(8, 8, |_, _| c64::new(rnd(), rnd()));
        let h = Mat::from_fn(8, 8, |i, j| a[(i, j)] + a[(j, i)].conj());
        let (l, _) = principal_component(&h).unwrap();
        assert!((l - power_iteration(&h)).abs() < 1e-8);
    }

    #[test]
    fn complement_projection_kills_direction() {
        let u: Vec<c64> = (0..5).map(|k| c64::from_polar(1.0, k as f64)).collect();
        let m = outer(&u);
        assert!(frob(&project_complement(&m, &u)) < 1e-12);
        assert!(complement_lambda_max(&m, &u) < 1e-12);
    }
}
