//! Seeded Monte Carlo experiments and their CSV output.

mod config;
mod output;
mod uplink_runs;
mod wet_runs;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub use config::{
    AngleConfig, DistanceTauConfig, ErrorConfig, GeometryConfig, LinkConfig, RicianConfig, ScenarioConfig, SolverConfig,
    WetBeamsConfig, WetConfig, WetSensingConfig,
};
pub use output::{emit_csv, fmt_param, fmt_value, parse_csv, render_csv, write_manifest, ResultRow, CSV_HEADER};
pub use uplink_runs::{run_capacity_vs_distance_tau, run_capacity_vs_error, run_capacity_vs_rician};
pub use wet_runs::{run_wet_beams, run_wet_sensing_gain};

use crate::error::{invalid, Result};

/// Share of failed cells above which a run counts as solver-dominated.
pub const FAILURE_LIMIT: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    UplinkRician,
    UplinkError,
    UplinkDistanceTau,
    WetBeams,
    WetSensing,
}

impl Experiment {
    pub const ALL: [Experiment; 5] =
        [Self::UplinkRician, Self::UplinkError, Self::UplinkDistanceTau, Self::WetBeams, Self::WetSensing];

    pub fn id(self) -> &'static str {
        match self {
            Self::UplinkRician => "uplink-rician",
            Self::UplinkError => "uplink-error",
            Self::UplinkDistanceTau => "uplink-distance-tau",
            Self::WetBeams => "wet-beams",
            Self::WetSensing => "wet-sensing",
        }
    }

    /// Sets the trial count of this experiment; no effect on deterministic sweeps.
    pub fn set_trials(self, cfg: &mut ScenarioConfig, trials: usize) {
        match self {
            Self::UplinkRician => cfg.rician.trials = trials,
            Self::UplinkError => cfg.error.trials = trials,
            Self::UplinkDistanceTau => {}
            Self::WetBeams => cfg.wet_beams.trials = trials,
            Self::WetSensing => cfg.wet_sensing.trials = trials,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.id() == s).ok_or_else(|| invalid(format!("unknown experiment {s}")))
    }
}

/// Rows of one experiment plus its cell accounting.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub cells: usize,
    pub failed: usize,
}

impl RunOutput {
    pub fn failure_fraction(&self) -> f64 {
        if self.cells == 0 {
            0.0
        } else {
            self.failed as f64 / self.cells as f64
        }
    }

    pub fn solver_dominated(&self) -> bool {
        self.failure_fraction() > FAILURE_LIMIT
    }

    /// First aggregate value of `metric` whose parameters match `params` exactly.
    pub fn aggregate(&self, metric: &str, params: &[(&str, &str)]) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.trial.is_none()
                    && r.metric == metric
                    && r.params.len() == params.len()
                    && r.params.iter().zip(params).all(|((k, v), (pk, pv))| k == pk && v == pv)
            })
            .map(|r| r.value)
    }
}

pub fn run(experiment: Experiment, cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match experiment {
        Experiment::UplinkRician => run_capacity_vs_rician(cfg),
        Experiment::UplinkError => run_capacity_vs_error(cfg),
        Experiment::UplinkDistanceTau => run_capacity_vs_distance_tau(cfg),
        Experiment::WetBeams => run_wet_beams(cfg),
        Experiment::WetSensing => run_wet_sensing_gain(cfg),
    }
}

/// Independent stream for one trial of one sweep cell, stable under changes
/// to the trial count or to other cells.
pub fn trial_rng(seed: u64, experiment: Experiment, trial: usize, cell: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(experiment.id().as_bytes());
    h.update([0]);
    h.update((trial as u64).to_le_bytes());
    h.update(cell.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Sample mean and standard error; the error is 0 for fewer than two samples.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Linear ratio as a dB parameter string, rounded to suppress conversion noise.
pub(crate) fn db_param(linear: f64) -> String {
    fmt_param((10.0 * linear.log10() * 1e9).round() / 1e9)
}

pub(crate) fn deg_param(radians: f64) -> String {
    fmt_param((radians.to_degrees() * 1e9).round() / 1e9)
}

/// Accumulates rows for one experiment.
pub(crate) struct Rows {
    experiment: Experiment,
    seed: u64,
    pub out: RunOutput,
}

impl Rows {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        Self { experiment, seed, out: RunOutput::default() }
    }

    pub fn push(&mut self, params: &[(&str, String)], metric: &str, value: f64, trial: Option<usize>) {
        self.out.rows.push(ResultRow {
            experiment: self.experiment.id().to_string(),
            seed: self.seed,
            params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            metric: metric.to_string(),
            value,
            trial,
        });
    }

    /// Mean and standard error of `samples` as aggregate rows.
    pub fn push_stats(&mut self, params: &[(&str, String)], metric: &str, samples: &[f64]) {
        if samples.is_empty() {
            return;
        }
        let (m, s) = mean_stderr(samples);
        self.push(params, &format!("{metric}_mean"), m, None);
        self.push(params, &format!("{metric}_stderr"), s, None);
    }

    pub fn cell(&mut self, ok: bool, params: &[(&str, String)], trial: Option<usize>) {
        self.out.cells += 1;
        if !ok {
            self.out.failed += 1;
            self.push(params, "status", 1.0, trial);
        }
    }
}
