//! Beam stitching and the threshold search over the stitching level.

use std::f64::consts::FRAC_PI_2;

use super::{gamma_for_half_width, u_half_width, BeamPlan};
use crate::error::{invalid, Result};

/// Where the first beam sits at the endfire end of the half-space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FirstBeam {
    /// Right γ-edge of the first beam at π/2.
    #[default]
    EdgeAtEndfire,
    /// Peak of the first beam at π/2.
    PeakAtEndfire,
}

#[derive(Clone, Debug)]
pub struct StitchOutcome {
    /// Directions on the non-negative half, from endfire inwards.
    pub half_directions: Vec<f64>,
    /// Whether a broadside beam closes the plan.
    pub broadside: bool,
    /// Terminal mismatch at broadside, in radians.
    pub residual: f64,
    /// Mirrored plan over the whole space.
    pub plan: BeamPlan,
}

/// Places beams from endfire towards broadside with adjacent γ-edges touching,
/// then closes the plan either by mirroring or with a broadside beam,
/// whichever leaves the smaller mismatch.
pub fn stitch_beams(gamma: f64, n: usize, guard_delta: f64, first: FirstBeam) -> Result<StitchOutcome> {
    let half = stitch_half(gamma, n, guard_delta, first)?;
    let mut all: Vec<f64> = half.directions.iter().flat_map(|&d| [d, -d]).collect();
    if half.broadside {
        all.push(0.0);
    }
    let plan = BeamPlan::from_directions(&all, gamma, n)?;
    Ok(StitchOutcome { half_directions: half.directions, broadside: half.broadside, residual: half.residual, plan })
}

struct HalfPlan {
    directions: Vec<f64>,
    broadside: bool,
    residual: f64,
}

fn stitch_half(gamma: f64, n: usize, guard_delta: f64, first: FirstBeam) -> Result<HalfPlan> {
    if n < 2 {
        return Err(invalid("stitching needs at least two elements"));
    }
    if !(guard_delta >= 0.0) {
        return Err(invalid("guard must be non-negative"));
    }
    // |F|² is a function of u = sin ω, so edges are symmetric in u around each peak
    let h = u_half_width(gamma, n)?;
    let mut u = match first {
        FirstBeam::EdgeAtEndfire => 1.0 - h,
        FirstBeam::PeakAtEndfire => 1.0,
    };
    let mut centers = vec![u];
    let mut edge = u - h;
    while edge.asin() > guard_delta {
        u = edge - h;
        if u <= 0.0 {
            break;
        }
        centers.push(u);
        edge = u - h;
    }
    let mirror_gap = edge.asin().abs();
    let broadside_gap = (edge.asin() - h.asin()).abs();
    Ok(HalfPlan {
        directions: centers.iter().map(|c| c.asin()).collect(),
        broadside: broadside_gap < mirror_gap,
        residual: mirror_gap.min(broadside_gap),
    })
}

/// Evenly stitched plan with exactly `n_beams` beams.
pub fn uniform_plan(n_beams: usize, n: usize, first: FirstBeam) -> Result<BeamPlan> {
    let (h, centers): (f64, Vec<f64>) = match first {
        FirstBeam::EdgeAtEndfire => {
            if n_beams == 0 {
                return Err(invalid("a plan needs at least one beam"));
            }
            let h = 1.0 / n_beams as f64;
            (h, (0..n_beams).map(|j| 1.0 - (2 * j + 1) as f64 * h).collect())
        }
        FirstBeam::PeakAtEndfire => {
            if n_beams < 2 {
                return Err(invalid("peak-at-endfire plans need at least two beams"));
            }
            let h = 1.0 / (n_beams - 1) as f64;
            (h, (0..n_beams).map(|j| 1.0 - 2.0 * j as f64 * h).collect())
        }
    };
    if h >= 2.0 / n as f64 {
        return Err(invalid(format!("{n_beams} beams cannot cover the space with {n} elements")));
    }
    let dirs: Vec<f64> = centers.iter().map(|c| c.clamp(-1.0, 1.0).asin()).collect();
    BeamPlan::from_directions(&dirs, gamma_for_half_width(h, n), n)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchParams {
    /// Range of normalized power levels scanned for γ.
    pub interval: (f64, f64),
    pub coarse_len: usize,
    pub fine_len: usize,
    pub max_fine_iters: usize,
    pub guard_delta: f64,
    pub first: FirstBeam,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            interval: (0.2, 0.8),
            coarse_len: 200,
            fine_len: 50,
            max_fine_iters: 10,
            guard_delta: 1e-3,
            first: FirstBeam::EdgeAtEndfire,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ThresholdPeak {
    pub gamma: f64,
    pub residual: f64,
    pub plan: BeamPlan,
}

/// Coarse scan of the stitching residual over γ, then local refinement
/// around every prominent peak of `1/residual`.
pub fn threshold_search(n: usize, params: &SearchParams) -> Result<Vec<ThresholdPeak>> {
    let (lo, hi) = params.interval;
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        return Err(invalid("search interval must satisfy 0 < start < end < 1"));
    }
    if params.coarse_len < 2 || params.fine_len < 2 {
        return Err(invalid("scan lengths must be at least 2"));
    }
    let residual = |g: f64| -> Result<f64> { Ok(stitch_half(g, n, params.guard_delta, params.first)?.residual) };
    let step = (hi - lo) / params.coarse_len as f64;
    let gammas: Vec<f64> = (0..=params.coarse_len).map(|i| lo + step * i as f64).collect();
    let metric: Vec<f64> = gammas.iter().map(|&g| residual(g).map(inverse)).collect::<Result<_>>()?;
    let mut sorted = metric.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];

    let mut peaks = Vec::new();
    for i in 1..metric.len() - 1 {
        if !(metric[i] > metric[i - 1] && metric[i] > metric[i + 1] && metric[i] >= 2.0 * median) {
            continue;
        }
        let (mut g, mut r) = (gammas[i], residual(gammas[i])?);
        let mut delta = step;
        for _ in 0..params.max_fine_iters {
            let fine = 2.0 * delta / params.fine_len as f64;
            let (mut bg, mut br) = (g, r);
            for k in 0..=params.fine_len {
                let c = g - delta + fine * k as f64;
                if c <= 0.0 || c >= 1.0 {
                    continue;
                }
                let rc = residual(c)?;
                if rc < br {
                    (bg, br) = (c, rc);
                }
            }
            let settled = (r - br).abs() <= 1e-3 * r.max(1e-300) || br <= 1e-14;
            (g, r) = (bg, br);
            delta = fine;
            if settled {
                break;
            }
        }
        let plan = stitch_beams(g, n, params.guard_delta, params.first)?.plan;
        peaks.push(ThresholdPeak { gamma: g, residual: r, plan });
    }
    Ok(peaks)
}

fn inverse(r: f64) -> f64 {
    1.0 / r.max(1e-15)
}

/// Smallest total gain on an ω grid of the given step over `[−π/2, π/2]`.
pub fn coverage_floor(plan: &BeamPlan, grid_step: f64) -> f64 {
    let count = (std::f64::consts::PI / grid_step).ceil() as usize;
    (0..=count)
        .map(|i| (-FRAC_PI_2 + grid_step * i as f64).min(FRAC_PI_2))
        .map(|w| super::total_gain(plan, w))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_elements_stitch_to_sixteen_beams() {
        let g = gamma_for_half_width(1.0 / 16.0, 16);
        let out = stitch_beams(g, 16, 1e-3, FirstBeam::EdgeAtEndfire).unwrap();
        assert_eq!(out.plan.n_beams(), 16);
        assert!(!out.broadside);
        assert!(out.residual < 1e-9);
    }

    #[test]
    fn uniform_plan_matches_stitching() {
        let p = uniform_plan(16, 16, FirstBeam::EdgeAtEndfire).unwrap();
        let g = gamma_for_half_width(1.0 / 16.0, 16);
        let s = stitch_beams(g, 16, 1e-3, FirstBeam::EdgeAtEndfire).unwrap();
        for (a, b) in p.directions().iter().zip(s.plan.directions()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(uniform_plan(4, 16, FirstBeam::EdgeAtEndfire).is_err());
    }

    #[test]
    fn coverage_floor_reaches_gamma() {
        let p = uniform_plan(16, 16, FirstBeam::PeakAtEndfire).unwrap();
        let g = p.beams[0].gamma;
        assert!(coverage_floor(&p, 1e-3) >= g - 1e-12);
    }
}
