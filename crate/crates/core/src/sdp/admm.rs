//! ADMM for the structured SDP.
//!
//! Without a rank block the split is the usual two-block one: an affine/cap
//! projection and a PSD projection. With a rank block the variable is copied
//! three ways (affine set, PSD cone, penalized complement block) and the
//! copies are reconciled through a closed-form least-squares step.

use faer::{c64, Mat};

use super::project::{axpy, hermitian_part, project_psd, prox_top_clip, AffineSet};
use super::{frob, project_complement, scaled, PsdSolution, Residuals, SolveStatus, StructuredSdp};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct SolverSettings {
    /// Relative primal/dual residual target of the ADMM rounds.
    pub tol: f64,
    pub max_iters: usize,
    /// Initial ADMM penalty, in units of 1/N on the normalized problem.
    pub rho0: f64,
    /// Relative infeasibility and gap target of the interior-point relaxation.
    pub ipm_tol: f64,
    pub ipm_max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-7, max_iters: 20_000, rho0: 1.0, ipm_tol: 1e-9, ipm_max_iters: 100 }
    }
}

/// Iterates carried between solves of the same problem data.
#[derive(Clone, Debug)]
pub struct WarmStart {
    pub(crate) x: Mat<c64>,
    pub(crate) z: Mat<c64>,
    pub(crate) u_aff: Mat<c64>,
    pub(crate) u_psd: Mat<c64>,
    pub(crate) rho: f64,
    pub(crate) three_block: bool,
}

/// Solves the problem; the relaxation without a rank block goes through the
/// interior-point method, falling back to ADMM if it stalls.
pub fn solve_sdr(problem: &StructuredSdp, settings: &SolverSettings) -> Result<PsdSolution> {
    if problem.irm_block.is_none() {
        problem.validate()?;
        if let Some(sol) = super::ipm::solve_structured(problem, settings)? {
            return Ok(sol);
        }
    }
    solve_sdr_warm(problem, settings, None)
}

pub fn solve_sdr_warm(
    problem: &StructuredSdp,
    settings: &SolverSettings,
    warm: Option<&WarmStart>,
) -> Result<PsdSolution> {
    problem.validate()?;
    let mut solver = Solver::new(problem, settings);
    if let Err(Error::Infeasible) = solver.affine.project(&mut Mat::zeros(solver.n, solver.n)) {
        return Ok(infeasible(problem));
    }
    if let Some(w) = warm {
        if w.x.nrows() == solver.n {
            solver.load(w);
        }
    }
    solver.run(problem)
}

pub(crate) fn infeasible(problem: &StructuredSdp) -> PsdSolution {
    let n = problem.n();
    PsdSolution {
        c_matrix: Mat::zeros(n, n),
        objective_value: f64::NAN,
        r_value: 0.0,
        residuals: Residuals { primal: f64::INFINITY, dual: f64::INFINITY },
        status: SolveStatus::Infeasible,
        iterations: 0,
        irm_rounds: 0,
        r_history: Vec::new(),
        warm: None,
    }
}

struct Solver {
    n: usize,
    scale: f64,
    obj: Mat<c64>,
    affine: AffineSet,
    block: Option<(Vec<c64>, f64)>,
    settings: SolverSettings,
    rho: f64,
    x: Mat<c64>,
    z_aff: Mat<c64>,
    z_psd: Mat<c64>,
    y: Mat<c64>,
    u_aff: Mat<c64>,
    u_psd: Mat<c64>,
    u_blk: Mat<c64>,
}

impl Solver {
    fn new(p: &StructuredSdp, settings: &SolverSettings) -> Self {
        let n = p.n();
        let scale = p.diag_value;
        let obj_norm = frob(&p.objective);
        let obj_scale = if obj_norm > 0.0 { obj_norm } else { 1.0 };
        let obj = scaled(&p.objective, 1.0 / obj_scale);
        let caps: Vec<(Mat<c64>, f64)> = p
            .trace_caps
            .iter()
            .map(|c| {
                let s = frob(&c.matrix).max(1e-300);
                (scaled(&c.matrix, 1.0 / s), c.tau / (scale * s))
            })
            .collect();
        let affine = AffineSet::new(n, 1.0, &caps);
        let block = p.irm_block.as_ref().map(|b| {
            let nrm = b.principal.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let u: Vec<c64> = b.principal.iter().map(|x| x / nrm).collect();
            (u, b.epsilon / obj_scale)
        });
        let id = Mat::<c64>::identity(n, n);
        let zero = Mat::<c64>::zeros(n, n);
        Self {
            n,
            scale,
            obj,
            affine,
            block,
            settings: *settings,
            rho: settings.rho0 / n as f64,
            x: id.clone(),
            z_aff: id.clone(),
            z_psd: id,
            y: zero.clone(),
            u_aff: zero.clone(),
            u_psd: zero.clone(),
            u_blk: zero,
        }
    }

    fn load(&mut self, w: &WarmStart) {
        self.x = w.x.clone();
        self.z_aff = w.x.clone();
        self.z_psd = w.z.clone();
        self.u_psd = w.u_psd.clone();
        self.rho = w.rho;
        self.u_aff = if w.three_block || self.block.is_none() {
            w.u_aff.clone()
        } else {
            // the objective gradient is shared by all copies at a fixed point
            let mut u = scaled(&self.obj, 1.0 / self.rho);
            u -= &w.u_psd;
            u
        };
        if let Some((u, _)) = &self.block {
            self.y = project_complement(&self.x, u);
        }
    }

    fn step_two_block(&mut self) -> Result<(f64, f64)> {
        // X in the affine set, Z in the PSD cone, X = Z
        let mut x = &self.z_psd - &self.u_psd;
        axpy(&mut x, 1.0 / self.rho, &self.obj);
        self.affine.project(&mut x)?;
        let mut v = &x + &self.u_psd;
        hermitian_part(&mut v);
        let z = project_psd(&v)?;
        let r = &x - &z;
        let dual = self.rho * frob(&(&z - &self.z_psd));
        self.u_psd += &r;
        self.x = x;
        self.z_psd = z;
        Ok((frob(&r), dual))
    }

    fn step_three_block(&mut self) -> Result<(f64, f64)> {
        let (u, weight) = self.block.clone().expect("rank block");
        let mut rhs = &self.z_aff - &self.u_aff;
        rhs += &self.z_psd - &self.u_psd;
        rhs += &self.y - &self.u_blk;
        axpy(&mut rhs, 1.0 / self.rho, &self.obj);
        // minimizer of the copy-consensus least squares: 2X + PXP = R
        let prp = project_complement(&rhs, &u);
        let mut x = scaled(&rhs, 0.5);
        axpy(&mut x, -1.0 / 6.0, &prp);
        hermitian_part(&mut x);

        let mut za = &x + &self.u_aff;
        self.affine.project(&mut za)?;
        let mut zp = &x + &self.u_psd;
        hermitian_part(&mut zp);
        let zp = project_psd(&zp)?;
        let pxp = project_complement(&x, &u);
        let mut w = &pxp + &self.u_blk;
        hermitian_part(&mut w);
        let y = prox_top_clip(&w, weight / self.rho)?;

        let ra = &x - &za;
        let rp = &x - &zp;
        let rb = &pxp - &y;
        let mut dz = &za - &self.z_aff;
        dz += &zp - &self.z_psd;
        dz += &y - &self.y;
        let dual = self.rho * frob(&dz);
        let primal = (frob(&ra).powi(2) + frob(&rp).powi(2) + frob(&rb).powi(2)).sqrt();
        self.u_aff += &ra;
        self.u_psd += &rp;
        self.u_blk += &rb;
        self.x = x;
        self.z_aff = za;
        self.z_psd = zp;
        self.y = y;
        Ok((primal, dual))
    }

    fn dual_scale(&self) -> f64 {
        let mut u = self.u_psd.clone();
        if self.block.is_some() {
            u += &self.u_aff;
            u += &self.u_blk;
        }
        (self.rho * frob(&u)).max(frob(&self.obj))
    }

    fn rescale_duals(&mut self, factor: f64) {
        self.u_aff = scaled(&self.u_aff, factor);
        self.u_psd = scaled(&self.u_psd, factor);
        self.u_blk = scaled(&self.u_blk, factor);
    }

    fn run(&mut self, p: &StructuredSdp) -> Result<PsdSolution> {
        let tol = self.settings.tol;
        let mut status = SolveStatus::MaxIters;
        let mut res = Residuals { primal: f64::INFINITY, dual: f64::INFINITY };
        let mut iters = 0;
        let mut best_primal = f64::INFINITY;
        let mut best_at = 0;
        while iters < self.settings.max_iters {
            iters += 1;
            let step = if self.block.is_some() { self.step_three_block() } else { self.step_two_block() };
            let (rp, rd) = match step {
                Ok(v) => v,
                Err(Error::Infeasible) => return Ok(infeasible(p)),
                Err(e) => return Err(e),
            };
            let pscale = frob(&self.x).max(frob(&self.z_psd)).max(1.0);
            let dscale = self.dual_scale();
            res = Residuals { primal: rp / pscale, dual: rd / dscale };
            if res.primal <= tol && res.dual <= tol {
                status = SolveStatus::Optimal;
                break;
            }
            if iters % 10 == 0 {
                let ratio = res.primal / res.dual.max(1e-300);
                if ratio > 10.0 {
                    self.rho *= 2.0;
                    self.rescale_duals(0.5);
                } else if ratio < 0.1 {
                    self.rho *= 0.5;
                    self.rescale_duals(2.0);
                }
            }
            if res.primal < 0.5 * best_primal {
                best_primal = res.primal;
                best_at = iters;
            } else if iters - best_at >= 2000 && res.primal > 1e-4 {
                if self.separated()? {
                    return Ok(infeasible(p));
                }
                best_at = iters;
            }
        }
        if status == SolveStatus::MaxIters && res.primal > 1e-4 && self.separated()? {
            return Ok(infeasible(p));
        }
        Ok(self.finish(p, status, res, iters))
    }

    /// Alternating projections between the affine set and the PSD cone; a
    /// persistent gap certifies that the two sets do not meet.
    fn separated(&mut self) -> Result<bool> {
        let mut z = self.z_psd.clone();
        let mut prev = f64::INFINITY;
        for _ in 0..3000 {
            let mut x = z.clone();
            if self.affine.project(&mut x).is_err() {
                return Ok(true);
            }
            z = project_psd(&x)?;
            let gap = frob(&(&x - &z));
            if gap < 1e-6 * (self.n as f64).sqrt() {
                return Ok(false);
            }
            if (prev - gap).abs() <= 1e-10 * gap {
                return Ok(gap > 1e-4 * (self.n as f64).sqrt());
            }
            prev = gap;
        }
        Ok(false)
    }

    fn finish(&self, p: &StructuredSdp, status: SolveStatus, res: Residuals, iters: usize) -> PsdSolution {
        let c = scaled(&self.z_psd, self.scale);
        let r_value = match &p.irm_block {
            Some(b) => super::complement_lambda_max(&c, &b.principal),
            None => 0.0,
        };
        let objective_value = p.objective_of(&c);
        PsdSolution {
            c_matrix: c,
            objective_value,
            r_value,
            residuals: res,
            status,
            iterations: iters,
            irm_rounds: 0,
            r_history: Vec::new(),
            warm: Some(WarmStart {
                x: self.x.clone(),
                z: self.z_psd.clone(),
                u_aff: self.u_aff.clone(),
                u_psd: self.u_psd.clone(),
                rho: self.rho,
                three_block: self.block.is_some(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{outer, TraceCap};

    fn ones(n: usize) -> Vec<c64> {
        vec![c64::new(1.0, 0.0); n]
    }

    #[test]
    fn alignment_optimum_without_caps() {
        let a: Vec<c64> = (0..8).map(|k| c64::from_polar(1.0, 0.37 * (k * k) as f64)).collect();
        let p = StructuredSdp::new(outer(&a), 4.0);
        let s = solve_sdr(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective_value - 4.0 * 64.0).abs() < 1e-4 * 256.0);
    }

    #[test]
    fn inactive_cap_keeps_alignment() {
        let a = ones(2);
        let b = [c64::new(1.0, 0.0), c64::new(-1.0, 0.0)];
        let p = StructuredSdp::new(outer(&a), 1.0).with_cap(TraceCap::rank_one(&b, 0.0));
        let s = solve_sdr(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective_value - 4.0).abs() < 1e-5);
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.c_matrix[(i, j)] - c64::new(1.0, 0.0)).norm() < 1e-5);
            }
        }
    }

    #[test]
    fn diagonal_objective() {
        let mut a = Mat::<c64>::zeros(2, 2);
        a[(0, 0)] = c64::new(1.0, 0.0);
        let s = solve_sdr(&StructuredSdp::new(a, 1.0), &SolverSettings::default()).unwrap();
        assert!((s.objective_value - 1.0).abs() < 1e-6);
        assert!((s.c_matrix[(1, 1)].re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn psd_infeasible_caps_are_reported() {
        // caps force |c_12| ≥ √2 while unit diagonal and PSD force |c_12| ≤ 1
        let p = StructuredSdp::new(outer(&ones(2)), 1.0)
            .with_cap(TraceCap::rank_one(&ones(2), 0.0))
            .with_cap(TraceCap::rank_one(&[c64::new(1.0, 0.0), c64::new(0.0, 1.0)], 0.0));
        let s = solve_sdr(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn contradictory_caps_are_reported() {
        let p = StructuredSdp::new(outer(&ones(2)), 1.0)
            .with_cap(TraceCap::rank_one(&ones(2), 0.0))
            .with_cap(TraceCap::rank_one(&[c64::new(1.0, 0.0), c64::new(-1.0, 0.0)], 0.0));
        let s = solve_sdr(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }
}
