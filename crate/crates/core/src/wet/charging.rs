//! Per-beam charging times and harvested energy over a rotation period.

use super::{beam_gain, BeamPlan, EhModel};
use crate::array::PathLossModel;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Device {
    /// Angle seen from the surface, radians.
    pub angle: f64,
    /// Surface-to-device distance, meters.
    pub distance: f64,
}

/// Devices grouped by the beam that serves them.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceCluster {
    pub beams: Vec<Vec<Device>>,
    /// Energy each device must collect per period, joules.
    pub demand: f64,
}

impl DeviceCluster {
    pub fn counts(&self) -> Vec<usize> {
        self.beams.iter().map(Vec::len).collect()
    }

    fn check(&self, plan: &BeamPlan) -> Result<()> {
        if self.beams.len() != plan.n_beams() {
            return Err(Error::Dimension(format!(
                "{} device groups for {} beams",
                self.beams.len(),
                plan.n_beams()
            )));
        }
        if !(self.demand > 0.0) {
            return Err(invalid("energy demand must be positive"));
        }
        Ok(())
    }
}

/// Link budget shared by every beam of the rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WetLink {
    pub tx_power: f64,
    /// Surface elements, entering the gain as `N²`.
    pub n_surface: usize,
    pub hap_antennas: usize,
    /// HAP-to-surface channel gain (linear).
    pub hap_gain: f64,
    pub pathloss: PathLossModel,
}

impl WetLink {
    /// RF power at `device` while `beam` is active.
    pub fn received_power(&self, plan: &BeamPlan, beam: usize, device: &Device) -> Result<f64> {
        let f = beam_gain(plan.beams[beam].direction, device.angle, plan.n_elements);
        Ok(f * f * self.peak_power(device)?)
    }

    /// RF power at `device` if it sat at the peak of the active beam.
    pub fn peak_power(&self, device: &Device) -> Result<f64> {
        let n = self.n_surface as f64;
        Ok(self.tx_power * n * n * self.hap_antennas as f64 * self.hap_gain * self.pathloss.gain(device.distance)?)
    }
}

/// Which received power sets a device's charging requirement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChargingGain {
    /// Power summed over every beam of the rotation.
    Total,
    /// Power from the device's own beam only.
    #[default]
    OwnBeam,
}

/// Which beams contribute to a device's harvested energy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyAccounting {
    /// `Σ_j f(P_j)·T_j` over the whole rotation.
    AllBeams,
    /// `f(P_own)·T_own`.
    #[default]
    OwnBeam,
}

const NULL_FLOOR: f64 = 1e-20;

/// Dwell time per beam: the slowest device of the beam must reach the demand.
/// Beams without devices get zero.
pub fn charging_times(plan: &BeamPlan, clusters: &DeviceCluster, link: &WetLink, mode: ChargingGain) -> Result<Vec<f64>> {
    clusters.check(plan)?;
    let mut times = Vec::with_capacity(plan.n_beams());
    for (j, devices) in clusters.beams.iter().enumerate() {
        let mut t = 0.0f64;
        for d in devices {
            let power = match mode {
                ChargingGain::OwnBeam => link.received_power(plan, j, d)?,
                ChargingGain::Total => {
                    let mut s = 0.0;
                    for k in 0..plan.n_beams() {
                        s += link.received_power(plan, k, d)?;
                    }
                    s
                }
            };
            // an exact null evaluates to rounding noise rather than zero
            if !(power > NULL_FLOOR * link.peak_power(d)?) {
                return Err(invalid(format!("device at {} rad receives no power from beam {j}", d.angle)));
            }
            t = t.max(clusters.demand / power);
        }
        times.push(t);
    }
    Ok(times)
}

/// Energy each device harvests over one rotation with the given dwell times,
/// applying the harvesting model per beam.
pub fn harvested_energy(
    plan: &BeamPlan,
    clusters: &DeviceCluster,
    link: &WetLink,
    times: &[f64],
    model: &EhModel,
    accounting: EnergyAccounting,
) -> Result<Vec<Vec<f64>>> {
    clusters.check(plan)?;
    if times.len() != plan.n_beams() {
        return Err(Error::Dimension(format!("{} dwell times for {} beams", times.len(), plan.n_beams())));
    }
    let mut out = Vec::with_capacity(plan.n_beams());
    for (j, devices) in clusters.beams.iter().enumerate() {
        let mut group = Vec::with_capacity(devices.len());
        for d in devices {
            let e = match accounting {
                EnergyAccounting::OwnBeam => model.harvest(link.received_power(plan, j, d)?) * times[j],
                EnergyAccounting::AllBeams => {
                    let mut s = 0.0;
                    for (k, &t) in times.iter().enumerate() {
                        s += model.harvest(link.received_power(plan, k, d)?) * t;
                    }
                    s
                }
            };
            group.push(e);
        }
        out.push(group);
    }
    Ok(out)
}
