//! Euclidean projections used by the ADMM iterations.

use faer::{c64, Mat, Side};

use super::inner;
use crate::error::{Error, Result};

/// `{X : diag(X) = d, <X, A_k> ≤ t_k}` for Hermitian X.
///
/// With the diagonal pinned, each cap is a half-space on the off-diagonal part;
/// the projection solves the small dual QP over the cap multipliers by
/// coordinate descent, warm-started from the previous call.
pub(crate) struct AffineSet {
    diag: f64,
    offdiag: Vec<Mat<c64>>,
    rhs: Vec<f64>,
    gram: Vec<f64>,
    mu: Vec<f64>,
}

const SWEEP_LIMIT: usize = 20_000;

impl AffineSet {
    pub fn new(n: usize, diag: f64, caps: &[(Mat<c64>, f64)]) -> Self {
        let k = caps.len();
        let mut offdiag = Vec::with_capacity(k);
        let mut rhs = Vec::with_capacity(k);
        for (a, t) in caps {
            let mut b = a.clone();
            let mut trace = 0.0;
            for i in 0..n {
                trace += a[(i, i)].re;
                b[(i, i)] = c64::new(0.0, 0.0);
            }
            rhs.push(t - diag * trace);
            offdiag.push(b);
        }
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                let g = inner(&offdiag[i], &offdiag[j]);
                gram[i * k + j] = g;
                gram[j * k + i] = g;
            }
        }
        Self { diag, offdiag, rhs, gram, mu: vec![0.0; k] }
    }

    pub fn n_caps(&self) -> usize {
        self.rhs.len()
    }

    /// Projects `y` in place, approximately if the dual sweep budget runs out.
    /// Fails when the cap system has no solution.
    pub fn project(&mut self, y: &mut Mat<c64>) -> Result<()> {
        let n = y.nrows();
        for i in 0..n {
            y[(i, i)] = c64::new(self.diag, 0.0);
        }
        let k = self.n_caps();
        if k == 0 {
            return Ok(());
        }
        // slack of the unprojected point: <Y_off, B_k> - b_k
        let c: Vec<f64> = (0..k)
            .map(|i| offdiag_inner(y, &self.offdiag[i]) - self.rhs[i])
            .collect();
        if c.iter().all(|&v| v <= 0.0) {
            self.mu.iter_mut().for_each(|m| *m = 0.0);
            return Ok(());
        }
        let scale = c.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for _ in 0..SWEEP_LIMIT {
            let mut worst = 0.0f64;
            for i in 0..k {
                let gii = self.gram[i * k + i];
                let gmu: f64 = (0..k).map(|j| self.gram[i * k + j] * self.mu[j]).sum();
                let viol = c[i] - gmu;
                if gii <= 1e-14 {
                    // the cap does not depend on the off-diagonal part
                    if self.rhs[i] < -1e-12 * scale {
                        return Err(Error::Infeasible);
                    }
                    continue;
                }
                let next = (self.mu[i] + viol / gii).max(0.0);
                let kkt = if self.mu[i] > 0.0 { viol.abs() } else { viol.max(0.0) };
                worst = worst.max(kkt);
                self.mu[i] = next;
            }
            if worst <= 1e-12 * scale {
                break;
            }
        }
        // an unconverged sweep still gives a usable approximate projection
        // unless the caps remain clearly violated
        let residual = (0..k)
            .map(|i| c[i] - (0..k).map(|j| self.gram[i * k + j] * self.mu[j]).sum::<f64>())
            .fold(0.0f64, f64::max);
        if !(residual <= 1e-3 * scale) {
            self.mu.iter_mut().for_each(|m| *m = 0.0);
            return Err(Error::Infeasible);
        }
        for (b, &m) in self.offdiag.iter().zip(&self.mu) {
            if m > 0.0 {
                axpy(y, -m, b);
            }
        }
        Ok(())
    }

    /// Largest cap violation of `y` (assumed to have the pinned diagonal).
    #[cfg(test)]
    pub fn cap_violation(&self, y: &Mat<c64>) -> f64 {
        (0..self.n_caps())
            .map(|i| offdiag_inner(y, &self.offdiag[i]) - self.rhs[i])
            .fold(0.0f64, f64::max)
    }
}

fn offdiag_inner(y: &Mat<c64>, b: &Mat<c64>) -> f64 {
    // b has a zero diagonal, so the full inner product already skips it
    inner(y, b)
}

pub(crate) fn axpy(y: &mut Mat<c64>, alpha: f64, x: &Mat<c64>) {
    for j in 0..y.ncols() {
        let xc = x.col(j);
        let mut yc = y.col_mut(j);
        for i in 0..xc.nrows() {
            yc[i] += xc[i] * alpha;
        }
    }
}

pub(crate) fn hermitian_part(m: &mut Mat<c64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
        m[(j, j)] = c64::new(m[(j, j)].re, 0.0);
    }
}

/// Rebuilds `Σ w_k q_k q_kᴴ` over the eigenpairs with nonzero weight.
fn reassemble(u: faer::MatRef<'_, c64>, weights: &[f64]) -> Mat<c64> {
    let n = u.nrows();
    let keep: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] > 0.0).collect();
    if keep.is_empty() {
        return Mat::zeros(n, n);
    }
    let b = Mat::from_fn(n, keep.len(), |i, j| u[(i, keep[j])] * weights[keep[j]].sqrt());
    let mut out = &b * b.adjoint();
    hermitian_part(&mut out);
    out
}

/// Nearest PSD matrix (eigenvalue clipping at zero).
pub(crate) fn project_psd(m: &Mat<c64>) -> Result<Mat<c64>> {
    let eig = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
    let s = eig.S().column_vector();
    let w: Vec<f64> = (0..s.nrows()).map(|k| s[k].re.max(0.0)).collect();
    Ok(reassemble(eig.U(), &w))
}

/// Proximal map of `t·λ_max(Y) + indicator(Y ⪰ 0)`.
///
/// Acts on the spectrum by clipping every eigenvalue into `[0, m]`, with the
/// level `m` chosen so that the total clipped mass equals `t`.
pub(crate) fn prox_top_clip(m: &Mat<c64>, t: f64) -> Result<Mat<c64>> {
    let eig = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
    let s = eig.S().column_vector();
    let lam: Vec<f64> = (0..s.nrows()).map(|k| s[k].re).collect();
    let level = clip_level(&lam, t);
    let w: Vec<f64> = lam.iter().map(|&l| l.clamp(0.0, level)).collect();
    Ok(reassemble(eig.U(), &w))
}

/// Level `m ≥ 0` with `Σ (λ_i − m)^+ = t`, or zero when the positive mass is at most `t`.
pub(crate) fn clip_level(lam: &[f64], t: f64) -> f64 {
    let mut pos: Vec<f64> = lam.iter().copied().filter(|&l| l > 0.0).collect();
    pos.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = pos.iter().sum();
    if total <= t {
        return 0.0;
    }
    let mut acc = 0.0;
    for (j, &l) in pos.iter().enumerate() {
        acc += l;
        let m = (acc - t) / (j + 1) as f64;
        let next = pos.get(j + 1).copied().unwrap_or(0.0);
        if m >= next && m <= l {
            return m;
        }
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{frob, outer};

    fn herm(n: usize, seed: u64) -> Mat<c64> {
        let mut s = seed;
        let mut rnd = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = Mat::from_fn(n, n, |_, _| c64::new(rnd(), rnd()));
        Mat::from_fn(n, n, |i, j| a[(i, j)] + a[(j, i)].conj())
    }

    #[test]
    fn clip_level_balances_mass() {
        let lam = [5.0, 3.0, 1.0, -2.0];
        let m = clip_level(&lam, 3.0);
        let clipped: f64 = lam.iter().map(|l| (l - m).max(0.0)).sum();
        assert!((clipped - 3.0).abs() < 1e-12);
        assert_eq!(clip_level(&lam, 9.0), 0.0);
        assert_eq!(clip_level(&lam, 20.0), 0.0);
    }

    #[test]
    fn psd_projection_is_idempotent_and_psd() {
        let h = herm(6, 3);
        let p = project_psd(&h).unwrap();
        let ev = p.self_adjoint_eigenvalues(Side::Lower).unwrap();
        assert!(ev[0] > -1e-12);
        let pp = project_psd(&p).unwrap();
        assert!(frob(&(&pp - &p)) < 1e-10);
    }

    #[test]
    fn prox_reduces_to_psd_projection_at_zero_weight() {
        let h = herm(5, 11);
        let a = prox_top_clip(&h, 0.0).unwrap();
        let b = project_psd(&h).unwrap();
        assert!(frob(&(&a - &b)) < 1e-10);
    }

    #[test]
    fn prox_satisfies_optimality_by_sampling() {
        // compare prox objective against random perturbations
        let h = herm(4, 5);
        let t = 0.7;
        let f = |y: &Mat<c64>| {
            let ev = y.self_adjoint_eigenvalues(Side::Lower).unwrap();
            if ev[0] < -1e-10 {
                return f64::INFINITY;
            }
            t * ev[3].max(0.0) + 0.5 * frob(&(y - &h)).powi(2)
        };
        let y = prox_top_clip(&h, t).unwrap();
        let best = f(&y);
        for s in 0..200 {
            let d = herm(4, 100 + s);
            let cand = project_psd(&(&y + &crate::sdp::scaled(&d, 1e-2))).unwrap();
            assert!(f(&cand) >= best - 1e-9);
        }
    }

    #[test]
    fn affine_projection_meets_caps() {
        let n = 3;
        let a: Vec<c64> = (0..n).map(|k| c64::from_polar(1.0, 0.9 * k as f64)).collect();
        let mut set = AffineSet::new(n, 1.0, &[(outer(&a), 0.5)]);
        let mut y = outer(&a);
        set.project(&mut y).unwrap();
        assert!(set.cap_violation(&y) < 1e-9);
        for i in 0..n {
            assert!((y[(i, i)].re - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn contradictory_caps_are_detected() {
        let p = [c64::new(1.0, 0.0), c64::new(1.0, 0.0)];
        let q = [c64::new(1.0, 0.0), c64::new(-1.0, 0.0)];
        let mut set = AffineSet::new(2, 1.0, &[(outer(&p), 0.0), (outer(&q), 0.0)]);
        let mut y = Mat::<c64>::identity(2, 2);
        assert!(matches!(set.project(&mut y), Err(Error::Infeasible)));
    }
}
