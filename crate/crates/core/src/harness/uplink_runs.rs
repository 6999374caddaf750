//! Uplink capacity sweeps.

use super::{db_param, deg_param, fmt_param, trial_rng, Experiment, Rows, RunOutput, ScenarioConfig};
use crate::error::Result;
use crate::uplink::{
    aligned_design, build_eli, build_robust, evaluate_sinr, tau_heuristic, AngleEstimate, EliDesign, PhaseConfig,
    SensingError,
};

/// Capacity of the aligned and capped designs on Rician draws around the LoS
/// geometry, for every (κ, τ) pair. Designs use the true angles and are shared
/// across κ; every κ and trial shares one channel draw across τ.
pub fn run_capacity_vs_rician(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let exp = Experiment::UplinkRician;
    let mut rows = Rows::new(exp, cfg.seed);
    let interferers = &cfg.angles.interferers;
    let base = cfg.uplink_scenario(interferers, cfg.link.interferer_distance_m, 1.0)?;
    let ali = aligned_design(&base, &base.true_angles());
    let (settings, irm) = (cfg.solver.settings(), cfg.solver.irm());
    let designs: Vec<Option<EliDesign>> = cfg
        .rician
        .tau
        .iter()
        .map(|&tau| {
            let sc = cfg.uplink_scenario(interferers, cfg.link.interferer_distance_m, tau)?;
            Ok(build_eli(&sc, &sc.true_angles(), &irm, &settings).ok())
        })
        .collect::<Result<_>>()?;
    let los = base.los_channels()?;
    for &kappa in &cfg.rician.kappa {
        let mut ali_caps = vec![Vec::new(); designs.len()];
        let mut eli_caps = vec![Vec::new(); designs.len()];
        for trial in 0..cfg.rician.trials {
            let mut rng = trial_rng(cfg.seed, exp, trial, &format!("kappa={}", fmt_param(kappa)));
            let ch = los.rician(kappa, &mut rng)?;
            let c_ali = evaluate_sinr(&base, &ali, &ch)?.capacity;
            for (i, (&tau, design)) in cfg.rician.tau.iter().zip(&designs).enumerate() {
                let params = [("kappa", fmt_param(kappa)), ("tau_db", db_param(tau))];
                rows.cell(design.is_some(), &params, Some(trial));
                rows.push(&params, "capacity_ali", c_ali, Some(trial));
                ali_caps[i].push(c_ali);
                if let Some(d) = design {
                    let c = evaluate_sinr(&base, &d.config, &ch)?.capacity;
                    rows.push(&params, "capacity_eli", c, Some(trial));
                    eli_caps[i].push(c);
                }
            }
        }
        for (i, &tau) in cfg.rician.tau.iter().enumerate() {
            let params = [("kappa", fmt_param(kappa)), ("tau_db", db_param(tau))];
            rows.push_stats(&params, "capacity_ali", &ali_caps[i]);
            rows.push_stats(&params, "capacity_eli", &eli_caps[i]);
        }
    }
    Ok(rows.out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Variant {
    Aligned,
    Capped,
    Robust(f64),
}

impl Variant {
    fn label(self) -> String {
        match self {
            Self::Aligned => "ali".into(),
            Self::Capped => "eli".into(),
            Self::Robust(delta) => format!("robust-{}", deg_param(delta)),
        }
    }
}

/// Capacity on the true LoS channels of designs built from corrupted angle
/// estimates. All variants of a trial share one corrupted estimate.
pub fn run_capacity_vs_error(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let exp = Experiment::UplinkError;
    let e = &cfg.error;
    let mut rows = Rows::new(exp, cfg.seed);
    let interferers = e.interferers.as_deref().unwrap_or(&cfg.angles.interferers);
    let sc = cfg.uplink_scenario(interferers, cfg.link.interferer_distance_m, e.tau)?;
    let truth = sc.true_angles();
    let ch = sc.los_channels()?;
    let (settings, irm) = (cfg.solver.settings(), cfg.solver.irm());
    let mut variants = vec![Variant::Aligned, Variant::Capped];
    variants.extend(e.robust_delta.iter().map(|&d| Variant::Robust(d)));

    let design = |v: Variant, est: &AngleEstimate| -> Result<PhaseConfig> {
        Ok(match v {
            Variant::Aligned => aligned_design(&sc, est),
            Variant::Capped => build_eli(&sc, est, &irm, &settings)?.config,
            Variant::Robust(delta) => build_robust(&sc, est, delta, e.robust_grid, &irm, &settings)?.config,
        })
    };
    // repeated estimates (always the case at ξ = 0) reuse the previous design
    let mut cache: Vec<Option<(AngleEstimate, Option<PhaseConfig>)>> = vec![None; variants.len()];
    for &xi in &e.xi {
        let mut caps = vec![Vec::new(); variants.len()];
        for trial in 0..e.trials {
            let mut rng = trial_rng(cfg.seed, exp, trial, &format!("xi={}", deg_param(xi)));
            let est = truth.perturbed(&SensingError { xi, applies_to: e.applies_to }, &mut rng)?;
            for (i, &v) in variants.iter().enumerate() {
                let params = [("xi_deg", deg_param(xi)), ("variant", v.label())];
                let config = match &cache[i] {
                    Some((prev, cfg)) if *prev == est => cfg.clone(),
                    _ => {
                        let c = design(v, &est).ok();
                        cache[i] = Some((est.clone(), c.clone()));
                        c
                    }
                };
                rows.cell(config.is_some(), &params, Some(trial));
                if let Some(c) = config {
                    let cap = evaluate_sinr(&sc, &c, &ch)?.capacity;
                    rows.push(&params, "capacity", cap, Some(trial));
                    caps[i].push(cap);
                }
            }
        }
        for (i, &v) in variants.iter().enumerate() {
            rows.push_stats(&[("xi_deg", deg_param(xi)), ("variant", v.label())], "capacity", &caps[i]);
        }
    }
    Ok(rows.out)
}

/// LoS capacity over interferer distance and suppression cap, with the
/// heuristic cap and the best swept cap per distance. Designs depend on τ only.
pub fn run_capacity_vs_distance_tau(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let exp = Experiment::UplinkDistanceTau;
    let dt = &cfg.distance_tau;
    let mut rows = Rows::new(exp, cfg.seed);
    let interferers = dt.interferers.as_deref().unwrap_or(&cfg.angles.interferers);
    let (settings, irm) = (cfg.solver.settings(), cfg.solver.irm());
    let designs: Vec<Option<PhaseConfig>> = dt
        .tau
        .iter()
        .map(|&tau| {
            let sc = cfg.uplink_scenario(interferers, cfg.link.interferer_distance_m, tau)?;
            Ok(build_eli(&sc, &sc.true_angles(), &irm, &settings).ok().map(|d| d.config))
        })
        .collect::<Result<_>>()?;
    for &d in &dt.distances_m {
        let sc = cfg.uplink_scenario(interferers, d, 1.0)?;
        let ch = sc.los_channels()?;
        let dist = ("distance_m", fmt_param(d));
        let ali = aligned_design(&sc, &sc.true_angles());
        rows.push(std::slice::from_ref(&dist), "capacity_ali", evaluate_sinr(&sc, &ali, &ch)?.capacity, None);
        let cascaded = sc.pathloss.gain(sc.hap_distance)? * sc.pathloss.gain(d)?;
        let heuristic = tau_heuristic(sc.noise_power, cfg.link.interferer_tx_w, cascaded)?;
        rows.push(std::slice::from_ref(&dist), "tau_heuristic_db", heuristic, None);
        let mut best: Option<(f64, f64)> = None;
        for (&tau, design) in dt.tau.iter().zip(&designs) {
            let params = [dist.clone(), ("tau_db", db_param(tau))];
            rows.cell(design.is_some(), &params, None);
            if let Some(c) = design {
                let cap = evaluate_sinr(&sc, c, &ch)?.capacity;
                rows.push(&params, "capacity", cap, None);
                if best.is_none_or(|(_, b)| cap > b) {
                    best = Some((10.0 * tau.log10(), cap));
                }
            }
        }
        if let Some((tau_db, _)) = best {
            rows.push(std::slice::from_ref(&dist), "argmax_tau_db", tau_db, None);
        }
    }
    Ok(rows.out)
}
