//! Uplink information transfer: phase designs and SINR evaluation.

mod design;

use std::f64::consts::PI;

use faer::c64;
use rand::Rng;

use crate::array::{
    los_channels, spatial_frequencies, steer_ula, steer_upa, steer_upa_angles, AngleTriple, ChannelSet,
    PathLossModel, UpaGeometry,
};
use crate::error::{invalid, Error, Result};

pub use design::{build_eli, build_robust, polish_caps, robust_grid, EliDesign};

/// An uplink transmitter seen from the surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Source {
    pub angles: AngleTriple,
    pub distance: f64,
    pub tx_power: f64,
}

#[derive(Clone, Debug)]
pub struct UplinkScenario {
    pub geometry: UpaGeometry,
    pub hap_antennas: usize,
    pub angles_g: AngleTriple,
    /// HAP to surface distance in meters.
    pub hap_distance: f64,
    pub target: Source,
    pub interferers: Vec<Source>,
    /// Receiver noise power in watts.
    pub noise_power: f64,
    /// Linear cap on each interferer's reflected gain, one per interferer.
    pub suppression_caps: Vec<f64>,
    /// Combiner power normalization.
    pub receive_power: f64,
    pub pathloss: PathLossModel,
}

impl UplinkScenario {
    pub fn validate(&self) -> Result<()> {
        if self.hap_antennas == 0 {
            return Err(invalid("HAP needs at least one antenna"));
        }
        if self.suppression_caps.len() != self.interferers.len() {
            return Err(Error::Dimension(format!(
                "{} suppression caps for {} interferers",
                self.suppression_caps.len(),
                self.interferers.len()
            )));
        }
        if self.suppression_caps.iter().any(|t| !(*t >= 0.0)) {
            return Err(invalid("suppression caps must be non-negative"));
        }
        if !(self.noise_power > 0.0) || !(self.receive_power > 0.0) {
            return Err(invalid("noise and receive power must be positive"));
        }
        self.angles_g.validate()?;
        for s in std::iter::once(&self.target).chain(&self.interferers) {
            s.angles.validate()?;
            if !(s.tx_power >= 0.0) {
                return Err(invalid("transmit power must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn true_angles(&self) -> AngleEstimate {
        AngleEstimate {
            target: self.target.angles,
            interferers: self.interferers.iter().map(|s| s.angles).collect(),
        }
    }

    /// LoS channels towards the true source positions, with path losses applied.
    pub fn los_channels(&self) -> Result<ChannelSet> {
        let angles: Vec<AngleTriple> =
            std::iter::once(&self.target).chain(&self.interferers).map(|s| s.angles).collect();
        let r2u = std::iter::once(&self.target)
            .chain(&self.interferers)
            .map(|s| self.pathloss.gain(s.distance))
            .collect::<Result<Vec<_>>>()?;
        los_channels(&self.geometry, self.hap_antennas, &self.angles_g, &angles)?
            .with_pathloss(self.pathloss.gain(self.hap_distance)?, r2u)
    }
}

/// Source directions as the designer believes them to be.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleEstimate {
    pub target: AngleTriple,
    pub interferers: Vec<AngleTriple>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorTarget {
    Target,
    Interferers,
    Both,
}

/// Elevation estimates off by an independent uniform draw in `[−xi, xi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensingError {
    pub xi: f64,
    pub applies_to: ErrorTarget,
}

impl AngleEstimate {
    pub fn perturbed<R: Rng + ?Sized>(&self, err: &SensingError, rng: &mut R) -> Result<Self> {
        if !(err.xi >= 0.0) {
            return Err(invalid("sensing error half-width must be non-negative"));
        }
        let mut draw = |a: &AngleTriple, on: bool| {
            let mut out = *a;
            if on && err.xi > 0.0 {
                let e: f64 = rng.gen_range(-err.xi..=err.xi);
                out.elevation = (a.elevation + e).clamp(-PI / 2.0, PI / 2.0);
            }
            out
        };
        let on_t = matches!(err.applies_to, ErrorTarget::Target | ErrorTarget::Both);
        let on_i = matches!(err.applies_to, ErrorTarget::Interferers | ErrorTarget::Both);
        let target = draw(&self.target, on_t);
        let interferers = self.interferers.iter().map(|a| draw(a, on_i)).collect();
        Ok(Self { target, interferers })
    }
}

/// Diagonal surface phases and HAP combiner.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseConfig {
    pub theta: Vec<c64>,
    pub v: Vec<c64>,
}

impl PhaseConfig {
    pub fn validate(&self, receive_power: f64) -> Result<()> {
        if self.theta.iter().any(|t| (t.norm() - 1.0).abs() > 1e-9) {
            return Err(invalid("surface phases must have unit modulus"));
        }
        let p: f64 = self.v.iter().map(|x| x.norm_sqr()).sum();
        if (p - receive_power).abs() > 1e-9 * receive_power.max(1.0) {
            return Err(invalid("combiner power does not match the receive power"));
        }
        Ok(())
    }
}

/// Matched combiner `√P·conj(β)/‖β‖` towards the surface.
pub fn hap_combiner(hap_antennas: usize, angles_g: &AngleTriple, receive_power: f64) -> Vec<c64> {
    let b = steer_ula(hap_antennas, spatial_frequencies(angles_g).varpi);
    let s = (receive_power / hap_antennas as f64).sqrt();
    b.iter().map(|x| x.conj() * s).collect()
}

/// Co-phases the cascaded HAP–surface–target path.
pub fn aligned_design(scenario: &UplinkScenario, estimate: &AngleEstimate) -> PhaseConfig {
    let fg = spatial_frequencies(&scenario.angles_g);
    let ag = steer_upa(&scenario.geometry, fg.vartheta, fg.phi);
    let ad = steer_upa_angles(&scenario.geometry, &estimate.target);
    PhaseConfig {
        theta: ag.iter().zip(&ad).map(|(g, d)| (g * d).conj()).collect(),
        v: hap_combiner(scenario.hap_antennas, &scenario.angles_g, scenario.receive_power),
    }
}

/// `|vᵀ Gᵀ Θ h|²` for one source channel.
pub fn reflected_gain(channels: &ChannelSet, config: &PhaseConfig, source: usize) -> f64 {
    let g = &channels.g;
    let h = &channels.h[source];
    let mut acc = c64::new(0.0, 0.0);
    for n in 0..g.nrows() {
        let mut gv = c64::new(0.0, 0.0);
        for m in 0..g.ncols() {
            gv += g[(n, m)] * config.v[m];
        }
        acc += gv * config.theta[n] * h[n];
    }
    acc.norm_sqr()
}

/// True iff the aligned pattern towards `target` has an exact null at `interferer`.
pub fn orthogonality_check(target: &AngleTriple, interferer: &AngleTriple, geom: &UpaGeometry) -> bool {
    let dx = (target.azimuth.cos() - interferer.azimuth.cos()).abs();
    let dy = (target.azimuth.sin() * target.elevation.sin()
        - interferer.azimuth.sin() * interferer.elevation.sin())
    .abs();
    null_multiple(dx, geom.n_x) || null_multiple(dy, geom.n_y)
}

fn null_multiple(diff: f64, n: usize) -> bool {
    // diff = 2k/n with k a positive integer; k a multiple of n is a grating lobe, not a null
    let k = diff * n as f64 / 2.0;
    let r = k.round();
    r >= 1.0 && (k - r).abs() * 2.0 / n as f64 <= 1e-9 && !(r as usize).is_multiple_of(n)
}

/// `|Σ_{p<n} e^{i p δ}|²`, the squared Dirichlet kernel.
pub fn dirichlet_sq(n: usize, delta: f64) -> f64 {
    let half = 0.5 * delta;
    let s = half.sin();
    if s.abs() < 1e-9 {
        // near a multiple of 2π the kernel is flat; use the series to second order
        let m = (delta / (2.0 * PI)).round();
        let d = delta - 2.0 * PI * m;
        let nf = n as f64;
        let v = nf * nf * (1.0 - d * d * (nf * nf - 1.0) / 12.0);
        return v.max(0.0);
    }
    let r = (n as f64 * half).sin() / s;
    r * r
}

/// Interferer gain under the aligned design, from the separable kernel form.
pub fn interference_power_closed(
    target: &AngleTriple,
    interferer: &AngleTriple,
    geom: &UpaGeometry,
    hap_antennas: usize,
    receive_power: f64,
) -> f64 {
    let ft = spatial_frequencies(target);
    let fi = spatial_frequencies(interferer);
    receive_power
        * hap_antennas as f64
        * dirichlet_sq(geom.n_x, ft.phi - fi.phi)
        * dirichlet_sq(geom.n_y, ft.vartheta - fi.vartheta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SinrReport {
    pub signal_power: f64,
    pub interference_powers: Vec<f64>,
    pub sinr: f64,
    pub capacity: f64,
}

/// SINR of the target after combining, on the given (true) channels.
pub fn evaluate_sinr(scenario: &UplinkScenario, config: &PhaseConfig, channels: &ChannelSet) -> Result<SinrReport> {
    let k = 1 + scenario.interferers.len();
    if channels.h.len() != k || channels.pathloss_r2u.len() != k {
        return Err(Error::Dimension(format!("expected {k} source channels, got {}", channels.h.len())));
    }
    if config.theta.len() != channels.n() || config.v.len() != channels.hap_antennas() {
        return Err(Error::Dimension("phase configuration does not match channel size".into()));
    }
    let power = |idx: usize, tx: f64| {
        tx * channels.pathloss_h2r * channels.pathloss_r2u[idx] * reflected_gain(channels, config, idx)
    };
    let signal_power = power(0, scenario.target.tx_power);
    let interference_powers: Vec<f64> =
        scenario.interferers.iter().enumerate().map(|(i, s)| power(i + 1, s.tx_power)).collect();
    let sinr = signal_power / (interference_powers.iter().sum::<f64>() + scenario.noise_power);
    Ok(SinrReport { signal_power, interference_powers, sinr, capacity: (1.0 + sinr).log2() })
}

/// Suppression cap (dB) predicted to maximize capacity for a given interferer link.
pub fn tau_heuristic(noise_power: f64, interferer_tx: f64, cascaded_pathloss: f64) -> Result<f64> {
    if !(noise_power > 0.0 && interferer_tx > 0.0 && cascaded_pathloss > 0.0) {
        return Err(invalid("heuristic inputs must be positive"));
    }
    Ok(9.5 * (noise_power / (interferer_tx * cascaded_pathloss)).log10() - 7.5)
}
