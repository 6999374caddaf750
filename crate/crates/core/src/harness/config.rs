//! Scenario configuration. Keys carry their units; dB, dBm, degree and
//! millijoule values are converted to linear SI units while parsing.

use std::path::Path;

use serde::{Deserialize, Deserializer};

use crate::array::{AngleTriple, PathLossModel, UpaGeometry};
use crate::error::{Error, Result};
use crate::sdp::{IrmParams, RankPenalty, SolverSettings};
use crate::uplink::{ErrorTarget, Source, UplinkScenario};
use crate::wet::{ChargingGain, EhModel, EnergyAccounting, FirstBeam, SearchParams, WetLink};

fn db(v: f64) -> f64 {
    10f64.powf(v / 10.0)
}

fn de_db<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    f64::deserialize(d).map(db)
}

fn de_db_list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Vec::<f64>::deserialize(d).map(|v| v.into_iter().map(db).collect())
}

fn de_dbm<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    f64::deserialize(d).map(|v| db(v - 30.0))
}

fn de_deg<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    f64::deserialize(d).map(f64::to_radians)
}

fn de_deg_list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Vec::<f64>::deserialize(d).map(|v| v.into_iter().map(f64::to_radians).collect())
}

fn de_deg_list_opt<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<f64>>, D::Error> {
    de_deg_list(d).map(Some)
}

fn de_mj<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    f64::deserialize(d).map(|v| v * 1e-3)
}

fn degrees(v: &[f64]) -> Vec<f64> {
    v.iter().map(|d| d.to_radians()).collect()
}

fn decibels(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&d| db(d)).collect()
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub link: LinkConfig,
    pub angles: AngleConfig,
    pub solver: SolverConfig,
    pub rician: RicianConfig,
    pub error: ErrorConfig,
    pub distance_tau: DistanceTauConfig,
    pub wet: WetConfig,
    pub wet_beams: WetBeamsConfig,
    pub wet_sensing: WetSensingConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            geometry: GeometryConfig::default(),
            link: LinkConfig::default(),
            angles: AngleConfig::default(),
            solver: SolverConfig::default(),
            rician: RicianConfig::default(),
            error: ErrorConfig::default(),
            distance_tau: DistanceTauConfig::default(),
            wet: WetConfig::default(),
            wet_beams: WetBeamsConfig::default(),
            wet_sensing: WetSensingConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub n_x: usize,
    pub n_y: usize,
    pub hap_antennas: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { n_x: 8, n_y: 8, hap_antennas: 4 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub hap_distance_m: f64,
    pub target_distance_m: f64,
    pub interferer_distance_m: f64,
    pub uplink_tx_w: f64,
    pub interferer_tx_w: f64,
    #[serde(rename = "noise_dbm", deserialize_with = "de_dbm")]
    pub noise_power: f64,
    /// Power budget of the HAP combiner.
    pub receive_power: f64,
    #[serde(rename = "pathloss_ref_db", deserialize_with = "de_db")]
    pub pathloss_ref_gain: f64,
    pub pathloss_exponent: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            hap_distance_m: 20.0,
            target_distance_m: 10.0,
            interferer_distance_m: 10.0,
            uplink_tx_w: 15.5e-3,
            interferer_tx_w: 15.5e-3,
            noise_power: db(-80.0 - 30.0),
            receive_power: 1.0,
            pathloss_ref_gain: db(-30.0),
            pathloss_exponent: 2.2,
        }
    }
}

impl LinkConfig {
    pub fn pathloss(&self) -> PathLossModel {
        PathLossModel { ref_gain: self.pathloss_ref_gain, exponent: self.pathloss_exponent }
    }
}

/// Source elevations in the surface's vertical plane, plus the HAP direction.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AngleConfig {
    #[serde(rename = "target_deg", deserialize_with = "de_deg")]
    pub target: f64,
    #[serde(rename = "interferers_deg", deserialize_with = "de_deg_list")]
    pub interferers: Vec<f64>,
    #[serde(rename = "hap_azimuth_deg", deserialize_with = "de_deg")]
    pub hap_azimuth: f64,
    #[serde(rename = "hap_elevation_deg", deserialize_with = "de_deg")]
    pub hap_elevation: f64,
    #[serde(rename = "hap_departure_deg", deserialize_with = "de_deg")]
    pub hap_departure: f64,
}

impl Default for AngleConfig {
    fn default() -> Self {
        Self {
            target: 12.1f64.to_radians(),
            interferers: degrees(&[21.3, -12.5]),
            hap_azimuth: 90f64.to_radians(),
            hap_elevation: (-20f64).to_radians(),
            hap_departure: 30f64.to_radians(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub ipm_tol: f64,
    pub ipm_max_iters: usize,
    pub irm_epsilon_0: f64,
    pub irm_growth: f64,
    pub irm_max_iters: usize,
    pub irm_penalty: RankPenalty,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        let i = IrmParams::default();
        Self {
            tol: s.tol,
            max_iters: s.max_iters,
            ipm_tol: s.ipm_tol,
            ipm_max_iters: s.ipm_max_iters,
            irm_epsilon_0: i.epsilon_0,
            irm_growth: i.growth,
            irm_max_iters: i.max_iters,
            irm_penalty: i.penalty,
        }
    }
}

impl SolverConfig {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.tol,
            max_iters: self.max_iters,
            ipm_tol: self.ipm_tol,
            ipm_max_iters: self.ipm_max_iters,
            ..Default::default()
        }
    }

    pub fn irm(&self) -> IrmParams {
        IrmParams {
            epsilon_0: self.irm_epsilon_0,
            growth: self.irm_growth,
            max_iters: self.irm_max_iters,
            r_tol: None,
            penalty: self.irm_penalty,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RicianConfig {
    /// Rician factors, linear.
    pub kappa: Vec<f64>,
    #[serde(rename = "tau_db", deserialize_with = "de_db_list")]
    pub tau: Vec<f64>,
    pub trials: usize,
}

impl Default for RicianConfig {
    fn default() -> Self {
        Self {
            kappa: vec![0.0, 1.0, 10.0, 100.0, 1e12],
            tau: decibels(&[-30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 40.0]),
            trials: 100,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorConfig {
    #[serde(rename = "xi_deg", deserialize_with = "de_deg_list")]
    pub xi: Vec<f64>,
    #[serde(rename = "tau_db", deserialize_with = "de_db")]
    pub tau: f64,
    #[serde(rename = "robust_delta_deg", deserialize_with = "de_deg_list")]
    pub robust_delta: Vec<f64>,
    pub robust_grid: usize,
    /// Overrides the shared interferer list for this experiment.
    #[serde(rename = "interferers_deg", deserialize_with = "de_deg_list_opt")]
    pub interferers: Option<Vec<f64>>,
    pub applies_to: ErrorTarget,
    pub trials: usize,
}

impl Default for ErrorConfig {
    fn default() -> Self {
        Self {
            xi: degrees(&[0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0]),
            tau: db(-20.0),
            robust_delta: degrees(&[1.0]),
            robust_grid: 11,
            interferers: Some(degrees(&[21.3])),
            applies_to: ErrorTarget::Both,
            trials: 100,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceTauConfig {
    pub distances_m: Vec<f64>,
    #[serde(rename = "tau_db", deserialize_with = "de_db_list")]
    pub tau: Vec<f64>,
    #[serde(rename = "interferers_deg", deserialize_with = "de_deg_list_opt")]
    pub interferers: Option<Vec<f64>>,
}

impl Default for DistanceTauConfig {
    fn default() -> Self {
        Self {
            distances_m: vec![10.0, 30.0, 100.0],
            tau: decibels(&[5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0]),
            interferers: Some(degrees(&[21.3])),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct WetConfig {
    /// Elements along the axis that forms the beams.
    pub n_elements: usize,
    /// Total surface elements.
    pub n_surface: usize,
    pub hap_antennas: usize,
    pub tx_w: f64,
    pub hap_distance_m: f64,
    #[serde(rename = "demand_mj", deserialize_with = "de_mj")]
    pub demand: f64,
    pub radii_m: Vec<f64>,
    pub eh_a: f64,
    pub eh_b_w: f64,
    pub eh_max_w: f64,
    pub search: SearchParams,
}

impl Default for WetConfig {
    fn default() -> Self {
        let eh = EhModel::default();
        Self {
            n_elements: 16,
            n_surface: 256,
            hap_antennas: 4,
            tx_w: 4.0,
            hap_distance_m: 20.0,
            demand: 1.35e-3,
            radii_m: vec![3.0, 5.0, 7.0],
            eh_a: eh.a,
            eh_b_w: eh.b,
            eh_max_w: eh.m_s,
            search: SearchParams::default(),
        }
    }
}

impl WetConfig {
    pub fn eh(&self) -> EhModel {
        EhModel { a: self.eh_a, b: self.eh_b_w, m_s: self.eh_max_w }
    }

    pub fn link(&self, pathloss: PathLossModel) -> Result<WetLink> {
        Ok(WetLink {
            tx_power: self.tx_w,
            n_surface: self.n_surface,
            hap_antennas: self.hap_antennas,
            hap_gain: pathloss.gain(self.hap_distance_m)?,
            pathloss,
        })
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct WetBeamsConfig {
    pub n_beams: Vec<usize>,
    pub devices: usize,
    pub trials: usize,
}

impl Default for WetBeamsConfig {
    fn default() -> Self {
        Self { n_beams: (10..=24).collect(), devices: 50, trials: 100 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct WetSensingConfig {
    pub n_beams: usize,
    pub first_beam: FirstBeam,
    /// Upper bounds of the per-beam device count draw.
    pub max_devices: Vec<usize>,
    pub charging: ChargingGain,
    pub accounting: EnergyAccounting,
    pub trials: usize,
}

impl Default for WetSensingConfig {
    fn default() -> Self {
        Self {
            n_beams: 16,
            first_beam: FirstBeam::EdgeAtEndfire,
            max_devices: vec![10, 20, 30, 40, 50],
            charging: ChargingGain::OwnBeam,
            accounting: EnergyAccounting::OwnBeam,
            trials: 500,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok((Self::from_toml(text)?, bytes))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        let l = &self.link;
        let positive = [
            l.hap_distance_m,
            l.target_distance_m,
            l.interferer_distance_m,
            l.uplink_tx_w,
            l.interferer_tx_w,
            l.noise_power,
            l.receive_power,
            l.pathloss_ref_gain,
            l.pathloss_exponent,
            self.wet.tx_w,
            self.wet.demand,
            self.wet.hap_distance_m,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("physical values must be positive and finite");
        }
        if self.geometry.n_x == 0 || self.geometry.n_y == 0 || self.geometry.hap_antennas == 0 {
            return bad("array sizes must be at least 1");
        }
        if self.rician.trials == 0 || self.error.trials == 0 || self.wet_beams.trials == 0 || self.wet_sensing.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.rician.kappa.iter().any(|k| !(*k >= 0.0)) {
            return bad("Rician factors must be non-negative");
        }
        if self.error.xi.iter().any(|x| !(*x >= 0.0)) || self.error.robust_delta.iter().any(|x| !(*x >= 0.0)) {
            return bad("error and robust widths must be non-negative");
        }
        if self.distance_tau.distances_m.iter().any(|d| !(*d >= 1.0)) {
            return bad("distances must be at least 1 m");
        }
        if self.wet.radii_m.is_empty() || self.wet.radii_m.iter().any(|d| !(*d >= 1.0)) {
            return bad("device radii must be at least 1 m");
        }
        if self.wet_sensing.max_devices.contains(&0) {
            return bad("device count bounds must be at least 1");
        }
        if self.wet.n_elements < 2 || self.wet.n_surface == 0 || self.wet.hap_antennas == 0 {
            return bad("WET array sizes must be positive");
        }
        Ok(())
    }

    /// Larger surface with coarser uplink sweeps.
    pub fn apply_full(&mut self) {
        self.geometry.n_x = 16;
        self.geometry.n_y = 16;
        self.rician.kappa = vec![0.0, 10.0, 1e12];
        self.rician.tau = decibels(&[-20.0, 0.0, 40.0]);
        self.rician.trials = self.rician.trials.min(20);
        self.error.xi = degrees(&[0.0, 2.0, 6.0, 10.0]);
        self.error.trials = self.error.trials.min(20);
        self.distance_tau.tau = decibels(&[5.0, 15.0, 25.0, 35.0]);
    }

    pub fn geometry(&self) -> Result<UpaGeometry> {
        UpaGeometry::new(self.geometry.n_x, self.geometry.n_y)
    }

    /// Uplink scenario with every interferer at `interferer_distance` and capped at `tau`.
    pub fn uplink_scenario(&self, interferers: &[f64], interferer_distance: f64, tau: f64) -> Result<UplinkScenario> {
        let a = &self.angles;
        let l = &self.link;
        let sc = UplinkScenario {
            geometry: self.geometry()?,
            hap_antennas: self.geometry.hap_antennas,
            angles_g: AngleTriple::new(a.hap_azimuth, a.hap_elevation, a.hap_departure)?,
            hap_distance: l.hap_distance_m,
            target: Source { angles: AngleTriple::in_plane(a.target), distance: l.target_distance_m, tx_power: l.uplink_tx_w },
            interferers: interferers
                .iter()
                .map(|&e| Source { angles: AngleTriple::in_plane(e), distance: interferer_distance, tx_power: l.interferer_tx_w })
                .collect(),
            noise_power: l.noise_power,
            suppression_caps: vec![tau; interferers.len()],
            receive_power: l.receive_power,
            pathloss: l.pathloss(),
        };
        sc.validate()?;
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_file() {
        assert_eq!(ScenarioConfig::from_toml("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn units_convert_once() {
        let c = ScenarioConfig::from_toml(
            "[link]\nnoise_dbm = -80.0\n[angles]\ntarget_deg = 90.0\n[rician]\ntau_db = [-20.0]\n[wet]\ndemand_mj = 2.0\n",
        )
        .unwrap();
        assert!((c.link.noise_power - 1e-11).abs() < 1e-24);
        assert!((c.angles.target - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((c.rician.tau[0] - 0.01).abs() < 1e-15);
        assert!((c.wet.demand - 2e-3).abs() < 1e-18);
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        assert!(ScenarioConfig::from_toml("bogus = 1").is_err());
        assert!(ScenarioConfig::from_toml("[rician]\ntrials = 0").is_err());
        assert!(ScenarioConfig::from_toml("[link]\nuplink_tx_w = -1.0").is_err());
    }
}
