//! Energy transfer sweeps.

use std::f64::consts::FRAC_PI_2;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{fmt_param, mean_stderr, trial_rng, Experiment, Rows, RunOutput, ScenarioConfig};
use crate::error::{invalid, Result};
use crate::schedule::{count_only_order, optimal_order, waiting_cost, RotationOrder};
use crate::wet::{
    beam_gain, charging_times, harvested_energy, threshold_search, uniform_plan, BeamPlan, Device, DeviceCluster,
    EnergyAccounting, FirstBeam, SearchParams,
};

fn first_beam_label(f: FirstBeam) -> &'static str {
    match f {
        FirstBeam::EdgeAtEndfire => "edge-at-endfire",
        FirstBeam::PeakAtEndfire => "peak-at-endfire",
    }
}

fn pick_radius<R: Rng + ?Sized>(radii: &[f64], rng: &mut R) -> f64 {
    *radii.choose(rng).expect("radii validated non-empty")
}

/// Groups devices by the beam with the strongest gain towards them.
fn cluster_by_gain(plan: &BeamPlan, devices: &[Device], demand: f64) -> DeviceCluster {
    let mut beams = vec![Vec::new(); plan.n_beams()];
    for d in devices {
        let best = (0..plan.n_beams())
            .max_by(|&a, &b| {
                let ga = beam_gain(plan.beams[a].direction, d.angle, plan.n_elements).powi(2);
                let gb = beam_gain(plan.beams[b].direction, d.angle, plan.n_elements).powi(2);
                ga.total_cmp(&gb)
            })
            .unwrap_or(0);
        beams[best].push(*d);
    }
    DeviceCluster { beams, demand }
}

/// Mean and worst energy of devices spread over the half-plane under plans
/// with an increasing number of equal-dwell beams, for both first-beam
/// placements. Also reports the thresholds found by the search.
pub fn run_wet_beams(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let exp = Experiment::WetBeams;
    let w = &cfg.wet;
    let wb = &cfg.wet_beams;
    let mut rows = Rows::new(exp, cfg.seed);
    let link = w.link(cfg.link.pathloss())?;
    let eh = w.eh();
    for first in [FirstBeam::EdgeAtEndfire, FirstBeam::PeakAtEndfire] {
        let label = first_beam_label(first).to_string();
        let params = SearchParams { first, ..w.search };
        for peak in threshold_search(w.n_elements, &params)? {
            let p = [("first_beam", label.clone()), ("n_beams", peak.plan.n_beams().to_string())];
            rows.push(&p, "searched_gamma", peak.gamma, None);
            rows.push(&p, "searched_residual_rad", peak.residual, None);
        }
        for &n_b in &wb.n_beams {
            let p = [("first_beam", label.clone()), ("n_beams", n_b.to_string())];
            let plan = match uniform_plan(n_b, w.n_elements, first) {
                Ok(plan) => plan,
                Err(_) => {
                    rows.cell(false, &p, None);
                    continue;
                }
            };
            rows.cell(true, &p, None);
            let times = vec![1.0 / n_b as f64; n_b];
            let (mut means, mut mins) = (Vec::new(), Vec::new());
            for trial in 0..wb.trials {
                // every plan sees the same deployment in a given trial
                let mut rng = trial_rng(cfg.seed, exp, trial, "deployment");
                let devices: Vec<Device> = (0..wb.devices)
                    .map(|_| Device { angle: rng.gen_range(-FRAC_PI_2..=FRAC_PI_2), distance: pick_radius(&w.radii_m, &mut rng) })
                    .collect();
                let clusters = cluster_by_gain(&plan, &devices, w.demand);
                let energy: Vec<f64> = harvested_energy(&plan, &clusters, &link, &times, &eh, EnergyAccounting::AllBeams)?
                    .into_iter()
                    .flatten()
                    .collect();
                let (mean, _) = mean_stderr(&energy);
                let min = energy.iter().copied().fold(f64::INFINITY, f64::min);
                rows.push(&p, "mean_energy_j", mean, Some(trial));
                rows.push(&p, "min_energy_j", min, Some(trial));
                means.push(mean);
                mins.push(min);
            }
            rows.push_stats(&p, "mean_energy_j", &means);
            rows.push_stats(&p, "min_energy_j", &mins);
        }
    }
    Ok(rows.out)
}

/// Per-trial outcome of the sensing comparison.
struct SensingTrial {
    worst_sensing: f64,
    worst_baseline: f64,
    wait_optimal: f64,
    wait_baseline: f64,
    wait_count_only: f64,
}

fn sensing_trial<R: Rng + ?Sized>(cfg: &ScenarioConfig, plan: &BeamPlan, max_devices: usize, rng: &mut R) -> Result<SensingTrial> {
    let w = &cfg.wet;
    let ws = &cfg.wet_sensing;
    let link = w.link(cfg.link.pathloss())?;
    let eh = w.eh();
    let mut beams = Vec::with_capacity(plan.n_beams());
    for b in &plan.beams {
        let count = rng.gen_range(1..=max_devices);
        let (lo, hi) = ((b.direction - b.width_left).max(-FRAC_PI_2), (b.direction + b.width_right).min(FRAC_PI_2));
        beams.push(
            (0..count)
                .map(|_| Device { angle: rng.gen_range(lo..=hi), distance: pick_radius(&w.radii_m, rng) })
                .collect::<Vec<_>>(),
        );
    }
    let clusters = DeviceCluster { beams, demand: w.demand };
    let counts = clusters.counts();
    let times = charging_times(plan, &clusters, &link, ws.charging)?;
    let uniform = vec![times.iter().sum::<f64>() / times.len() as f64; times.len()];
    let worst = |t: &[f64]| -> Result<f64> {
        Ok(harvested_energy(plan, &clusters, &link, t, &eh, ws.accounting)?
            .into_iter()
            .flatten()
            .fold(f64::INFINITY, f64::min))
    };
    let opt = optimal_order(&counts, &times)?;
    Ok(SensingTrial {
        worst_sensing: worst(&times)?,
        worst_baseline: worst(&uniform)?,
        wait_optimal: waiting_cost(&opt, &counts, &times, &[])?.average,
        wait_baseline: waiting_cost(&RotationOrder::sequential(counts.len()), &counts, &uniform, &[])?.average,
        wait_count_only: waiting_cost(&count_only_order(&counts), &counts, &times, &[])?.average,
    })
}

/// Sensing-aided dwell times and rotation order against equal dwell times in
/// index order, over the per-beam device count bound.
pub fn run_wet_sensing_gain(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let exp = Experiment::WetSensing;
    let ws = &cfg.wet_sensing;
    let mut rows = Rows::new(exp, cfg.seed);
    let plan = uniform_plan(ws.n_beams, cfg.wet.n_elements, ws.first_beam)?;
    if plan.n_beams() == 0 {
        return Err(invalid("sensing experiment needs a non-empty plan"));
    }
    for &max_devices in &ws.max_devices {
        let p = [("max_devices", fmt_param(max_devices as f64))];
        let mut cols: [Vec<f64>; 5] = Default::default();
        for trial in 0..ws.trials {
            let mut rng = trial_rng(cfg.seed, exp, trial, &format!("max_devices={max_devices}"));
            let t = sensing_trial(cfg, &plan, max_devices, &mut rng)?;
            let vals = [t.worst_sensing, t.worst_baseline, t.wait_optimal, t.wait_baseline, t.wait_count_only];
            for (k, v) in vals.into_iter().enumerate() {
                rows.push(&p, METRICS[k], v, Some(trial));
                cols[k].push(v);
            }
        }
        rows.cell(true, &p, None);
        for (k, c) in cols.iter().enumerate() {
            rows.push_stats(&p, METRICS[k], c);
        }
        let mean = |c: &[f64]| mean_stderr(c).0;
        rows.push(&p, "energy_improvement", mean(&cols[0]) / mean(&cols[1]) - 1.0, None);
        rows.push(&p, "waiting_reduction", 1.0 - mean(&cols[2]) / mean(&cols[3]), None);
        rows.push(&p, "count_only_gap", mean(&cols[4]) / mean(&cols[2]) - 1.0, None);
    }
    Ok(rows.out)
}

const METRICS: [&str; 5] =
    ["worst_energy_sensing_j", "worst_energy_baseline_j", "waiting_optimal_s", "waiting_baseline_s", "waiting_count_only_s"];
