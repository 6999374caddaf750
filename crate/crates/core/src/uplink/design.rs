//! Interference-capped phase designs from the lifted relaxation.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Side};

use super::{hap_combiner, AngleEstimate, PhaseConfig, UplinkScenario};
use crate::array::{spatial_frequencies, steer_upa, steer_upa_angles, AngleTriple};
use crate::error::{invalid, Error, Result};
use crate::sdp::{
    outer, principal_component, solve_rank_one, SolverSettings, IrmParams, SolveStatus, StructuredSdp, TraceCap,
};

/// Outcome of a capped design.
#[derive(Clone, Debug)]
pub struct EliDesign {
    pub config: PhaseConfig,
    pub status: SolveStatus,
    pub objective_value: f64,
    pub r_value: f64,
    pub irm_rounds: usize,
    pub iterations: usize,
    /// Largest relative deviation of the principal eigenvector's entry
    /// magnitudes from uniform before unit-modulus projection.
    pub rank_defect: f64,
    /// Gain `|vᵀGᵀΘh|²` towards each capped direction, on the designer's channels.
    pub cap_gains: Vec<f64>,
}

/// Elevations `ê − δ, …, ê + δ` on an `l`-point uniform grid.
pub fn robust_grid(center: &AngleTriple, delta: f64, l: usize) -> Vec<AngleTriple> {
    if l <= 1 {
        return vec![*center];
    }
    (0..l)
        .map(|i| {
            let e = center.elevation - delta + 2.0 * delta * i as f64 / (l - 1) as f64;
            AngleTriple { elevation: e.clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2), ..*center }
        })
        .collect()
}

/// Relaxation plus rank minimization with every interferer capped at its point estimate.
pub fn build_eli(
    scenario: &UplinkScenario,
    estimate: &AngleEstimate,
    irm: &IrmParams,
    settings: &SolverSettings,
) -> Result<EliDesign> {
    let capped: Vec<(Vec<AngleTriple>, f64)> = estimate
        .interferers
        .iter()
        .zip(&scenario.suppression_caps)
        .map(|(a, &tau)| (vec![*a], tau))
        .collect();
    design(scenario, &estimate.target, &capped, irm, settings)
}

/// Widened nulls: each interferer contributes `grid_l` caps spread over `±delta` in elevation.
pub fn build_robust(
    scenario: &UplinkScenario,
    estimate: &AngleEstimate,
    delta: f64,
    grid_l: usize,
    irm: &IrmParams,
    settings: &SolverSettings,
) -> Result<EliDesign> {
    if !(delta >= 0.0) || grid_l == 0 {
        return Err(invalid("robust design needs delta >= 0 and at least one grid point"));
    }
    let capped: Vec<(Vec<AngleTriple>, f64)> = estimate
        .interferers
        .iter()
        .zip(&scenario.suppression_caps)
        .map(|(a, &tau)| (robust_grid(a, delta, grid_l), tau))
        .collect();
    design(scenario, &estimate.target, &capped, irm, settings)
}

fn design(
    scenario: &UplinkScenario,
    target: &AngleTriple,
    capped: &[(Vec<AngleTriple>, f64)],
    irm: &IrmParams,
    settings: &SolverSettings,
) -> Result<EliDesign> {
    scenario.validate()?;
    if capped.is_empty() {
        return Err(invalid("capped design needs at least one interferer"));
    }
    let geom = &scenario.geometry;
    let n = geom.n() as f64;
    let mp = scenario.hap_antennas as f64 * scenario.receive_power;
    let ad = steer_upa_angles(geom, target);
    let mut problem = StructuredSdp::new(outer(&ad), mp);
    let mut cap_vecs = Vec::new();
    let mut cap_taus = Vec::new();
    for (dirs, tau) in capped {
        for a in dirs {
            let ak = steer_upa_angles(geom, a);
            let overlap: c64 = ad.iter().zip(&ak).map(|(x, y)| x.conj() * y).sum();
            if overlap.norm_sqr() >= n * n * (1.0 - 1e-12) && *tau < mp * n * n {
                // the capped direction is indistinguishable from the target
                return Err(Error::Infeasible);
            }
            problem.trace_caps.push(TraceCap::rank_one(&ak, *tau));
            cap_vecs.push(ak);
            cap_taus.push(*tau);
        }
    }
    let sol = solve_rank_one(&problem, irm, settings)?;
    if sol.status == SolveStatus::Infeasible {
        return Err(Error::Infeasible);
    }
    let (_, u) = principal_component(&sol.c_matrix)?;
    let scale = n.sqrt();
    let rank_defect = u.iter().map(|x| (x.norm() * scale - 1.0).abs()).fold(0.0, f64::max);
    let mut theta_h: Vec<c64> = u
        .iter()
        .map(|x| if x.norm() > 0.0 { x.conj() / x.norm() } else { c64::new(1.0, 0.0) })
        .collect();
    let limits: Vec<f64> = cap_taus.iter().map(|t| t / mp).collect();
    polish_caps(&mut theta_h, &cap_vecs, &limits)?;

    let fg = spatial_frequencies(&scenario.angles_g);
    let ag = steer_upa(geom, fg.vartheta, fg.phi);
    let theta: Vec<c64> = ag.iter().zip(&theta_h).map(|(g, t)| g.conj() * t).collect();
    let cap_gains = cap_vecs
        .iter()
        .map(|a| mp * a.iter().zip(&theta_h).map(|(x, t)| x * t).sum::<c64>().norm_sqr())
        .collect();
    Ok(EliDesign {
        config: PhaseConfig { theta, v: hap_combiner(scenario.hap_antennas, &scenario.angles_g, scenario.receive_power) },
        status: sol.status,
        objective_value: sol.objective_value,
        r_value: sol.r_value,
        irm_rounds: sol.irm_rounds,
        iterations: sol.iterations,
        rank_defect,
        cap_gains,
    })
}

/// Small phase correction (Gauss–Newton, damped) that brings every
/// `|a_kᵀθ|²` under `limit_k`, keeping `|θ_n| = 1`.
///
/// The relaxation only meets its caps to solver tolerance, and rounding to
/// unit modulus perturbs them further; at deep nulls that slack is large
/// relative to the cap itself. Returns the number of corrective steps taken.
pub fn polish_caps(theta: &mut [c64], caps: &[Vec<c64>], limits: &[f64]) -> Result<usize> {
    const SHRINK: f64 = 1.0 - 1e-4;
    const MAX_PHASE_STEP: f64 = 0.1;
    let n = theta.len();
    if caps.len() != limits.len() {
        return Err(Error::Dimension("one limit per cap is required".into()));
    }
    let value = |th: &[c64], a: &[c64]| a.iter().zip(th).map(|(x, t)| x * t).sum::<c64>();
    let excess = |th: &[c64]| -> f64 {
        caps.iter().zip(limits).map(|(a, &l)| (value(th, a).norm_sqr() - l).max(0.0) / l.max(1e-300)).sum()
    };
    for step in 0..100 {
        let w: Vec<c64> = caps.iter().map(|a| value(theta, a)).collect();
        let current = excess(theta);
        if current == 0.0 {
            return Ok(step);
        }
        // constrain every cap that is near its limit; move violators onto the limit
        let mut rows: Vec<(usize, c64)> = Vec::new();
        for (k, (wk, &l)) in w.iter().zip(limits).enumerate() {
            let p = wk.norm_sqr();
            if p > l {
                let target = wk * ((l * SHRINK).sqrt() / p.sqrt());
                rows.push((k, target - wk));
            } else if p > 0.25 * l {
                rows.push((k, c64::new(0.0, 0.0)));
            }
        }
        // real Jacobian of (Re w_k, Im w_k) w.r.t. the phase angles
        let m = 2 * rows.len();
        let mut jac = Mat::<f64>::zeros(m, n);
        let mut rhs = Mat::<f64>::zeros(m, 1);
        for (r, (k, dw)) in rows.iter().enumerate() {
            for j in 0..n {
                let d = c64::new(0.0, 1.0) * caps[*k][j] * theta[j];
                jac[(2 * r, j)] = d.re;
                jac[(2 * r + 1, j)] = d.im;
            }
            rhs[(2 * r, 0)] = dw.re;
            rhs[(2 * r + 1, 0)] = dw.im;
        }
        let mut gram = &jac * jac.transpose();
        // nearby caps give nearly parallel rows; damping keeps the step bounded
        let reg = 1e-8 * (0..m).map(|i| gram[(i, i)]).fold(0.0, f64::max).max(1e-300);
        for i in 0..m {
            gram[(i, i)] += reg;
        }
        let llt = gram.llt(Side::Lower).map_err(|_| Error::Eigen)?;
        let y = llt.solve(&rhs);
        let dpsi = jac.transpose() * &y;
        let largest = (0..n).map(|j| dpsi[(j, 0)].abs()).fold(0.0, f64::max);
        let mut alpha = if largest > MAX_PHASE_STEP { MAX_PHASE_STEP / largest } else { 1.0 };
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<c64> = (0..n).map(|j| theta[j] * c64::from_polar(1.0, alpha * dpsi[(j, 0)])).collect();
            if excess(&trial) < current {
                theta.copy_from_slice(&trial);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Ok(step);
        }
    }
    Ok(100)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn robust_grid_spacing() {
        let c = AngleTriple::in_plane(0.3);
        let g = robust_grid(&c, 0.01, 11);
        assert_eq!(g.len(), 11);
        assert!((g[0].elevation - 0.29).abs() < 1e-12);
        assert!((g[10].elevation - 0.31).abs() < 1e-12);
        assert!((g[5].elevation - 0.3).abs() < 1e-12);
        assert_eq!(robust_grid(&c, 0.01, 1), vec![c]);
    }

    #[test]
    fn polish_reaches_limits() {
        let n = 16;
        let mut theta: Vec<c64> = (0..n).map(|k| c64::from_polar(1.0, 0.1 * k as f64)).collect();
        let caps: Vec<Vec<c64>> = (0..3)
            .map(|c| (0..n).map(|k| c64::from_polar(1.0, -(0.1 + 0.3 * c as f64) * k as f64)).collect())
            .collect();
        let limits = vec![1e-3; 3];
        polish_caps(&mut theta, &caps, &limits).unwrap();
        for (a, l) in caps.iter().zip(&limits) {
            let w: c64 = a.iter().zip(&theta).map(|(x, t)| x * t).sum();
            assert!(w.norm_sqr() <= *l);
        }
        assert!(theta.iter().all(|t| (t.norm() - 1.0).abs() < 1e-12));
    }
}
