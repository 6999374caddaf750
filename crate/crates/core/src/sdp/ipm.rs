//! Primal–dual interior-point method for the relaxation without a rank block.
//!
//! Standard form: minimize <−A_d, X> s.t. diag(X) = 1, <A_k, X> + w_k = b_k,
//! X ⪰ 0, w ≥ 0. Newton directions use the HKM scaling with a Mehrotra
//! predictor–corrector. The diagonal constraints make the Schur complement a
//! Hadamard product `X ∘ conj(Z⁻¹)` bordered by the cap rows, so one
//! iteration costs a few dense N×N products plus one (N+K)-sized Cholesky.

use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{c64, Mat, Par, Side};

use super::admm::{infeasible, SolverSettings, WarmStart};
use super::{frob, inner, scaled, PsdSolution, Residuals, SolveStatus, StructuredSdp};
use crate::error::{Error, Result};

/// Relaxation (no rank block) by the interior-point method. Returns `None`
/// when the method stalls far from optimality so the caller can fall back.
pub(crate) fn solve_structured(p: &StructuredSdp, settings: &SolverSettings) -> Result<Option<PsdSolution>> {
    let n = p.n();
    let diag = p.diag_value;
    let obj_norm = frob(&p.objective);
    let obj_scale = if obj_norm > 0.0 { obj_norm } else { 1.0 };
    let mut caps: Vec<(Mat<c64>, f64)> = Vec::new();
    for c in &p.trace_caps {
        let s = frob(&c.matrix);
        if s == 0.0 {
            if c.tau < 0.0 {
                return Ok(Some(infeasible(p)));
            }
            continue;
        }
        let a = scaled(&c.matrix, 1.0 / s);
        let t = c.tau / (diag * s);
        match caps.iter_mut().find(|(b, _)| frob(&(b - &a)) <= 1e-12) {
            Some(dup) => dup.1 = dup.1.min(t),
            None => caps.push((a, t)),
        }
    }
    let problem = IpmProblem { n, cost: scaled(&p.objective, -1.0 / obj_scale), caps };
    let out = solve(&problem, settings.ipm_tol, settings.ipm_max_iters)?;
    match out.status {
        SolveStatus::Infeasible => return Ok(Some(infeasible(p))),
        SolveStatus::MaxIters if out.residuals.primal > ACCEPT || out.residuals.dual > ACCEPT => return Ok(None),
        _ => {}
    }
    let c = scaled(&out.x, diag);
    let rho = settings.rho0 / n as f64;
    let warm = WarmStart {
        x: out.x.clone(),
        z: out.x,
        u_aff: Mat::zeros(n, n),
        u_psd: scaled(&out.z, -1.0 / rho),
        rho,
        three_block: false,
    };
    Ok(Some(PsdSolution {
        objective_value: p.objective_of(&c),
        c_matrix: c,
        r_value: 0.0,
        residuals: out.residuals,
        status: out.status,
        iterations: out.iterations,
        irm_rounds: 0,
        r_history: Vec::new(),
        warm: Some(warm),
    }))
}

pub(crate) struct IpmProblem {
    pub n: usize,
    /// Cost matrix of the minimization.
    pub cost: Mat<c64>,
    pub caps: Vec<(Mat<c64>, f64)>,
}

pub(crate) struct IpmOutcome {
    pub x: Mat<c64>,
    /// Dual slack matrix.
    pub z: Mat<c64>,
    pub status: SolveStatus,
    pub residuals: Residuals,
    pub iterations: usize,
}

const STEP_FRACTION_BASE: f64 = 0.9;
/// Accuracy, relative to the target, accepted once progress stops.
const STALL_FACTOR: f64 = 1e3;
/// Iterations without halving the merit before the best iterate is returned.
const STALL_ITERS: usize = 8;
/// Merit below which a numerical breakdown still yields a usable iterate.
pub(crate) const ACCEPT: f64 = 1e-5;

pub(crate) fn solve(p: &IpmProblem, tol: f64, max_iters: usize) -> Result<IpmOutcome> {
    let n = p.n;
    let k = p.caps.len();
    let m = n + k;
    let cost_norm = frob(&p.cost);
    let b: Vec<f64> = (0..n).map(|_| 1.0).chain(p.caps.iter().map(|c| c.1)).collect();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut x = Mat::<c64>::identity(n, n);
    let mut z = scaled(&Mat::<c64>::identity(n, n), 1.0 + cost_norm);
    let mut y = vec![0.0; m];
    let mut w = vec![1.0; k];
    let mut zl = vec![1.0; k];

    let mut best: Option<(f64, usize, IpmOutcome)> = None;
    for iter in 0..max_iters.max(1) {
        let rp: Vec<f64> = (0..m)
            .map(|i| {
                if i < n {
                    b[i] - x[(i, i)].re
                } else {
                    b[i] - inner(&p.caps[i - n].0, &x) - w[i - n]
                }
            })
            .collect();
        let mut rd = &p.cost - &z;
        apply_adjoint(&mut rd, &y, &p.caps, -1.0);
        let rd_lp: Vec<f64> = (0..k).map(|j| -y[n + j] - zl[j]).collect();
        let pobj = inner(&p.cost, &x);
        let dobj: f64 = b.iter().zip(&y).map(|(a, c)| a * c).sum();
        let pinf = norm(&rp) / (1.0 + b_norm);
        let dinf = (frob(&rd).powi(2) + norm(&rd_lp).powi(2)).sqrt() / (1.0 + cost_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let res = Residuals { primal: pinf, dual: dinf.max(gap) };
        let merit = pinf.max(dinf).max(gap);
        if merit <= tol {
            return Ok(IpmOutcome { x, z, status: SolveStatus::Optimal, residuals: res, iterations: iter });
        }
        if dobj > 1e10 * (1.0 + pobj.abs()) && dinf < 1e-3 {
            // the dual ray grows without bound: the primal constraints are inconsistent
            return Ok(IpmOutcome { x, z, status: SolveStatus::Infeasible, residuals: res, iterations: iter });
        }
        let improved = best.as_ref().is_none_or(|(bm, _, _)| merit < 0.5 * bm);
        if improved {
            let snap = IpmOutcome { x: x.clone(), z: z.clone(), status: SolveStatus::MaxIters, residuals: res, iterations: iter };
            best = Some((merit, iter, snap));
        } else if best.as_ref().is_some_and(|(bm, at, _)| {
            iter - at >= if *bm <= ACCEPT { STALL_ITERS } else { 3 * STALL_ITERS }
        }) {
            // rounding keeps the last digits from settling once Z is nearly singular
            break;
        }
        if let Err(e) = newton_step(p, &mut x, &mut z, &mut y, &mut w, &mut zl, &rp, &rd, &rd_lp) {
            if best.as_ref().is_some_and(|(bm, _, _)| *bm <= ACCEPT) {
                break;
            }
            return Err(e);
        }
    }
    let (merit, _, mut out) = best.expect("at least one iteration");
    if merit <= STALL_FACTOR * tol {
        out.status = SolveStatus::Optimal;
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn newton_step(
    p: &IpmProblem,
    x: &mut Mat<c64>,
    z: &mut Mat<c64>,
    y: &mut [f64],
    w: &mut [f64],
    zl: &mut [f64],
    rp: &[f64],
    rd: &Mat<c64>,
    rd_lp: &[f64],
) -> Result<()> {
    let n = p.n;
    let k = p.caps.len();
    let m = n + k;
    let mu = (inner(&*x, &*z) + w.iter().zip(&*zl).map(|(a, c)| a * c).sum::<f64>()) / (n + k) as f64;

    let zinv = hermitian_inverse(&*z)?;
    let schur = schur_complement(&*x, &zinv, &p.caps, &*w, &*zl);
    let chol = match schur.llt(Side::Lower) {
        Ok(c) => c,
        Err(_) => {
            let mut reg = schur.clone();
            let d = (0..m).map(|i| reg[(i, i)]).fold(0.0, f64::max);
            for i in 0..m {
                reg[(i, i)] += 1e-12 * d.max(1e-300);
            }
            reg.llt(Side::Lower).map_err(|_| Error::Eigen)?
        }
    };
    let xz = &*x * &*z;
    let x_rd = &*x * rd;

    let direction = |rc: &Mat<c64>, rc_lp: &[f64]| -> Result<Direction> {
        // H = (R_c − X·R_d)·Z⁻¹
        let h = &(rc - &x_rd) * &zinv;
        let mut rhs = Mat::<f64>::zeros(m, 1);
        for i in 0..n {
            rhs[(i, 0)] = rp[i] - h[(i, i)].re;
        }
        for j in 0..k {
            rhs[(n + j, 0)] = rp[n + j] - inner_re_trace(&p.caps[j].0, &h) - rc_lp[j] / zl[j]
                + w[j] / zl[j] * rd_lp[j];
        }
        let dy_m = chol.solve(&rhs);
        let dy: Vec<f64> = (0..m).map(|i| dy_m[(i, 0)]).collect();
        let mut dz = rd.clone();
        apply_adjoint(&mut dz, &dy, &p.caps, -1.0);
        let mut aty = Mat::<c64>::zeros(n, n);
        apply_adjoint(&mut aty, &dy, &p.caps, 1.0);
        let mut dx = &h + &(&(&*x * &aty) * &zinv);
        sym(&mut dx);
        let dzl: Vec<f64> = (0..k).map(|j| rd_lp[j] - dy[n + j]).collect();
        let dw: Vec<f64> = (0..k).map(|j| (rc_lp[j] - w[j] * dzl[j]) / zl[j]).collect();
        Ok(Direction { dx, dy, dz, dw, dzl })
    };

    // predictor
    let rc_aff = scaled(&xz, -1.0);
    let rc_lp_aff: Vec<f64> = (0..k).map(|j| -w[j] * zl[j]).collect();
    let aff = direction(&rc_aff, &rc_lp_aff)?;
    let ap = max_step(&*x, &aff.dx)?.min(lp_step(&*w, &aff.dw)).min(1.0);
    let ad = max_step(&*z, &aff.dz)?.min(lp_step(&*zl, &aff.dzl)).min(1.0);
    let mu_aff = {
        let xa = &*x + &scaled(&aff.dx, ap);
        let za = &*z + &scaled(&aff.dz, ad);
        let lp: f64 = (0..k).map(|j| (w[j] + ap * aff.dw[j]) * (zl[j] + ad * aff.dzl[j])).sum();
        (inner(&xa, &za) + lp) / (n + k) as f64
    };
    // short predictor steps call for more centering
    let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
    let sigma = (mu_aff / mu).clamp(0.0, 1.0).powf(expon);
    let fraction = STEP_FRACTION_BASE + 0.09 * ap.min(ad);

    // corrector
    let mut rc = scaled(&xz, -1.0);
    rc -= &(&aff.dx * &aff.dz);
    for i in 0..n {
        rc[(i, i)] += c64::new(sigma * mu, 0.0);
    }
    let rc_lp: Vec<f64> = (0..k).map(|j| sigma * mu - w[j] * zl[j] - aff.dw[j] * aff.dzl[j]).collect();
    let d = direction(&rc, &rc_lp)?;
    let ap = (fraction * max_step(&*x, &d.dx)?.min(lp_step(&*w, &d.dw))).min(1.0);
    let ad = (fraction * max_step(&*z, &d.dz)?.min(lp_step(&*zl, &d.dzl))).min(1.0);

    *x += &scaled(&d.dx, ap);
    sym(x);
    *z += &scaled(&d.dz, ad);
    sym(z);
    for j in 0..k {
        w[j] += ap * d.dw[j];
        zl[j] += ad * d.dzl[j];
    }
    for i in 0..m {
        y[i] += ad * d.dy[i];
    }
    Ok(())
}

struct Direction {
    dx: Mat<c64>,
    dy: Vec<f64>,
    dz: Mat<c64>,
    dw: Vec<f64>,
    dzl: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn sym(m: &mut Mat<c64>) {
    super::project::hermitian_part(m);
}

/// `Re tr(A·H)` for Hermitian A and arbitrary H.
fn inner_re_trace(a: &Mat<c64>, h: &Mat<c64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)] * h[(j, i)];
            acc += v.re;
        }
    }
    acc
}

/// `out += sign · (Diag(y_diag) + Σ y_k A_k)`.
fn apply_adjoint(out: &mut Mat<c64>, y: &[f64], caps: &[(Mat<c64>, f64)], sign: f64) {
    let n = out.nrows();
    for i in 0..n {
        out[(i, i)] += c64::new(sign * y[i], 0.0);
    }
    for (j, (a, _)) in caps.iter().enumerate() {
        super::project::axpy(out, sign * y[n + j], a);
    }
}

fn schur_complement(x: &Mat<c64>, zinv: &Mat<c64>, caps: &[(Mat<c64>, f64)], w: &[f64], zl: &[f64]) -> Mat<f64> {
    let n = x.nrows();
    let k = caps.len();
    let mut s = Mat::<f64>::zeros(n + k, n + k);
    for j in 0..n {
        for i in 0..n {
            let v = x[(i, j)] * zinv[(i, j)].conj();
            s[(i, j)] = v.re;
        }
    }
    let g: Vec<Mat<c64>> = caps.iter().map(|(a, _)| &(x * a) * zinv).collect();
    for (l, gl) in g.iter().enumerate() {
        for i in 0..n {
            let v = gl[(i, i)].re;
            s[(i, n + l)] = v;
            s[(n + l, i)] = v;
        }
        for (q, (aq, _)) in caps.iter().enumerate().take(l + 1) {
            let v = inner_re_trace(aq, gl);
            s[(n + q, n + l)] = v;
            s[(n + l, n + q)] = v;
        }
        s[(n + l, n + l)] += w[l] / zl[l];
    }
    // symmetrize away rounding
    for j in 0..n + k {
        for i in 0..j {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

fn hermitian_inverse(z: &Mat<c64>) -> Result<Mat<c64>> {
    let n = z.nrows();
    let llt = z.llt(Side::Lower).map_err(|_| Error::Eigen)?;
    let mut inv = llt.solve(Mat::<c64>::identity(n, n));
    sym(&mut inv);
    Ok(inv)
}

/// Largest `α` keeping `X + α·D ⪰ 0`, from the spectrum of `L⁻¹ D L⁻ᴴ`.
fn max_step(x: &Mat<c64>, d: &Mat<c64>) -> Result<f64> {
    let llt = x.llt(Side::Lower).map_err(|_| Error::Eigen)?;
    let l = llt.L();
    let mut t = d.clone();
    solve_lower_triangular_in_place(l, t.as_mut(), Par::Seq);
    let mut t = t.adjoint().to_owned();
    solve_lower_triangular_in_place(l, t.as_mut(), Par::Seq);
    sym(&mut t);
    let ev = t.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigen)?;
    let lo = ev.first().copied().unwrap_or(0.0);
    Ok(if lo >= 0.0 { f64::INFINITY } else { -1.0 / lo })
}

fn lp_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(a, d)| -a / d)
        .fold(f64::INFINITY, f64::min)
}
