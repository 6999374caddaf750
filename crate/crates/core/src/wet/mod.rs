//! Downlink energy transfer: beam patterns, stitched beam plans, harvesting
//! and per-beam charging times.

mod charging;
mod stitch;

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Result};

pub use charging::{
    charging_times, harvested_energy, ChargingGain, Device, DeviceCluster, EnergyAccounting, WetLink,
};
pub use stitch::{
    coverage_floor, stitch_beams, threshold_search, uniform_plan, FirstBeam, SearchParams, StitchOutcome, ThresholdPeak,
};

/// Normalized array factor `F` of an `n`-element half-wavelength ULA steered
/// to `direction`, evaluated at `omega`. Signed; equals 1 at the steering angle.
pub fn beam_gain(direction: f64, omega: f64, n: usize) -> f64 {
    dirichlet(omega.sin() - direction.sin(), n)
}

/// `sin(nπx/2) / (n·sin(πx/2))` with the removable singularities filled in.
pub(crate) fn dirichlet(x: f64, n: usize) -> f64 {
    let nf = n as f64;
    let half = 0.5 * PI * x;
    let den = nf * half.sin();
    if den.abs() < 1e-12 {
        // x is an even integer: the kernel is ±1 there
        let k = (x / 2.0).round() as i64;
        return if (k * (n as i64 - 1)) % 2 == 0 { 1.0 } else { -1.0 };
    }
    (nf * half).sin() / den
}

/// Half-width in `u = sin ω` of the region where `|F|² ≥ gamma`, measured from the peak.
pub fn u_half_width(gamma: f64, n: usize) -> Result<f64> {
    check_gamma(gamma)?;
    // |F|² falls monotonically from 1 to 0 between the peak and the first null at 2/n
    let (mut lo, mut hi) = (0.0, 2.0 / n as f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dirichlet(mid, n).powi(2) >= gamma {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    Ok(lo)
}

/// `gamma` for which the `|F|² ≥ gamma` region has half-width `h` in `u`.
pub fn gamma_for_half_width(h: f64, n: usize) -> f64 {
    dirichlet(h, n).powi(2)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("threshold {gamma} must lie in (0, 1)")));
    }
    Ok(())
}

/// Angular widths `(left, right)` of the contiguous `|F|² ≥ gamma` region
/// around `direction`, split at the direction; left is towards −π/2.
pub fn beam_widths(direction: f64, gamma: f64, n: usize, scan_resolution: f64) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    if !(scan_resolution > 0.0) {
        return Err(invalid("scan resolution must be positive"));
    }
    let first_null = 2.0 / n as f64;
    let u = direction.sin();
    let edge = |sign: f64| -> f64 {
        let limit = sign * FRAC_PI_2;
        let stop = (u + sign * first_null).clamp(-1.0, 1.0).asin();
        let above = |w: f64| beam_gain(direction, w, n).powi(2) >= gamma;
        if above(stop) {
            return (stop - direction).abs().min((limit - direction).abs());
        }
        let (mut inside, mut outside) = (direction, stop);
        while (outside - inside).abs() > scan_resolution {
            let mid = 0.5 * (inside + outside);
            if above(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        (inside - direction).abs()
    };
    Ok((edge(-1.0), edge(1.0)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Beam {
    pub direction: f64,
    pub gamma: f64,
    pub width_left: f64,
    pub width_right: f64,
}

/// Beams sorted by direction, covering `[−π/2, π/2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamPlan {
    pub beams: Vec<Beam>,
    /// Elements of the array that forms the beams.
    pub n_elements: usize,
    /// Largest gap between adjacent γ-level beam edges, in radians.
    pub coverage_residual: f64,
}

impl BeamPlan {
    pub fn n_beams(&self) -> usize {
        self.beams.len()
    }

    pub fn directions(&self) -> Vec<f64> {
        self.beams.iter().map(|b| b.direction).collect()
    }

    /// Builds a plan from beam directions, computing each beam's γ-level widths.
    pub fn from_directions(directions: &[f64], gamma: f64, n: usize) -> Result<Self> {
        if directions.is_empty() {
            return Err(invalid("a plan needs at least one beam"));
        }
        let mut dirs = directions.to_vec();
        dirs.sort_by(f64::total_cmp);
        let mut beams = Vec::with_capacity(dirs.len());
        for &d in &dirs {
            if !(-FRAC_PI_2..=FRAC_PI_2).contains(&d) {
                return Err(invalid(format!("beam direction {d} outside [-pi/2, pi/2]")));
            }
            let (width_left, width_right) = beam_widths(d, gamma, n, 1e-9)?;
            beams.push(Beam { direction: d, gamma, width_left, width_right });
        }
        let mut residual = 0.0f64;
        for pair in beams.windows(2) {
            let gap = (pair[1].direction - pair[1].width_left) - (pair[0].direction + pair[0].width_right);
            residual = residual.max(gap);
        }
        let first = &beams[0];
        let last = &beams[beams.len() - 1];
        residual = residual
            .max(first.direction - first.width_left + FRAC_PI_2)
            .max(FRAC_PI_2 - last.direction - last.width_right);
        Ok(Self { beams, n_elements: n, coverage_residual: residual.max(0.0) })
    }
}

/// `Σ_j |F_j(ω)|²` over every beam of the plan.
pub fn total_gain(plan: &BeamPlan, omega: f64) -> f64 {
    plan.beams.iter().map(|b| beam_gain(b.direction, omega, plan.n_elements).powi(2)).sum()
}

/// Logistic harvesting model `f(P) = M_s/(X(1 + e^{−a(P−b)})) − Y`, shifted so `f(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EhModel {
    pub a: f64,
    pub b: f64,
    pub m_s: f64,
}

impl Default for EhModel {
    fn default() -> Self {
        Self { a: 132.8, b: 0.01181, m_s: 0.02337 }
    }
}

impl EhModel {
    pub fn x(&self) -> f64 {
        let e = (self.a * self.b).exp();
        e / (1.0 + e)
    }

    pub fn y(&self) -> f64 {
        self.m_s / (self.a * self.b).exp()
    }

    /// Harvested DC power for `input_power` watts at the rectifier.
    pub fn harvest(&self, input_power: f64) -> f64 {
        let logistic = 1.0 / (1.0 + (-self.a * (input_power - self.b)).exp());
        // M_s·(logistic/X − 1/e^{ab}) rearranged so f(0) cancels exactly
        let e = (self.a * self.b).exp();
        let v = self.m_s * (logistic * (1.0 + e) - 1.0) / e;
        v.max(0.0)
    }

    /// `M_s − f(P)`, computed without cancellation. Past a few hundred
    /// milliwatts `f` rounds to `M_s`; the gap stays resolvable.
    pub fn saturation_gap(&self, input_power: f64) -> f64 {
        let q = (-self.a * (input_power - self.b)).exp();
        let e = (self.a * self.b).exp();
        self.m_s * (1.0 + 1.0 / e) * q / (1.0 + q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_sum(direction: f64, omega: f64, n: usize) -> f64 {
        let x = PI * (omega.sin() - direction.sin());
        let (mut re, mut im) = (0.0, 0.0);
        for p in 0..n {
            re += (p as f64 * x).cos();
            im += (p as f64 * x).sin();
        }
        (re * re + im * im).sqrt() / n as f64
    }

    #[test]
    fn gain_matches_geometric_series() {
        for k in 0..200 {
            let d = -1.5 + 0.015 * k as f64;
            let w = 1.4 - 0.013 * k as f64;
            for n in [1, 2, 7, 16, 64] {
                let f = beam_gain(d, w, n).abs();
                assert!((f - direct_sum(d, w, n)).abs() < 1e-10, "n={n} d={d} w={w}");
            }
        }
    }

    #[test]
    fn gain_peak_and_first_null() {
        assert_eq!(beam_gain(0.3, 0.3, 16), 1.0);
        assert!(beam_gain(0.0, (2.0f64 / 16.0).asin(), 16).abs() < 1e-12);
    }

    #[test]
    fn half_width_inverts_gamma() {
        let h = u_half_width(0.5, 16).unwrap();
        assert!((gamma_for_half_width(h, 16) - 0.5).abs() < 1e-12);
        assert!((gamma_for_half_width(1.0 / 16.0, 16) - 0.406_589_331_718_037).abs() < 1e-12);
    }

    #[test]
    fn harvest_limits() {
        let m = EhModel::default();
        assert!(m.harvest(0.0).abs() <= 1e-15 * m.m_s);
        assert!(m.harvest(10.0) >= 0.999 * m.m_s);
        assert!(m.harvest(1e6) <= m.m_s);
        let x = m.x();
        let y = m.y();
        assert!((m.harvest(m.b) - (m.m_s / (2.0 * x) - y)).abs() < 1e-15);
    }

    #[test]
    fn saturation_gap_complements_harvest() {
        let m = EhModel::default();
        for p in [0.0, 0.005, m.b, 0.05, 0.2] {
            assert!((m.harvest(p) + m.saturation_gap(p) - m.m_s).abs() < 1e-16, "p = {p}");
        }
        assert_eq!(m.harvest(1.0), m.m_s);
        assert!(m.saturation_gap(1.0) > 0.0 && m.saturation_gap(1.0) < m.saturation_gap(0.99));
    }

    #[test]
    fn widths_reject_bad_gamma() {
        assert!(beam_widths(0.0, 1.0, 16, 1e-6).is_err());
        assert!(beam_widths(0.0, 0.0, 16, 1e-6).is_err());
    }
}
