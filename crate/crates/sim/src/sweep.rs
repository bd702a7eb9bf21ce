//! Parameter sweeps: run a set of policies over a grid of scenario
//! variants and seeds, aggregate per grid point, and serialize to CSV.
//!
//! Every policy within one (value, seed) cell runs on the same generated
//! scenario and the same channel draws, so policy columns are paired
//! comparisons rather than independent samples.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::baselines;
use crate::policy::{run_horizon, RunMetrics};
use crate::scenario::{generate_scenario, ScenarioConfig};
use crate::SimError;

/// Scenario dimension a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    TransmitPower,
    NumUsers,
    NumSubchannels,
    TaskSize,
}

impl SweepAxis {
    pub fn all() -> [SweepAxis; 4] {
        [
            SweepAxis::TransmitPower,
            SweepAxis::NumUsers,
            SweepAxis::NumSubchannels,
            SweepAxis::TaskSize,
        ]
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SweepAxis::TransmitPower => "transmit_power",
            SweepAxis::NumUsers => "num_users",
            SweepAxis::NumSubchannels => "num_subchannels",
            SweepAxis::TaskSize => "task_size",
        };
        f.write_str(name)
    }
}

impl FromStr for SweepAxis {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s.replace('-', "_").as_str() {
            "transmit_power" => Ok(SweepAxis::TransmitPower),
            "num_users" => Ok(SweepAxis::NumUsers),
            "num_subchannels" => Ok(SweepAxis::NumSubchannels),
            "task_size" => Ok(SweepAxis::TaskSize),
            other => Err(SimError::config("axis", format!("unknown sweep axis `{other}`"))),
        }
    }
}

/// Full sweep description: the axis and its grid, the policies to
/// compare, the seeds to average over, and the base scenario every grid
/// point is derived from.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub axis_values: Vec<f64>,
    pub policies: Vec<String>,
    pub seeds: Vec<u64>,
    pub base: ScenarioConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.axis_values.is_empty() {
            return Err(SimError::config("axis_values", "must list at least one value"));
        }
        if self.axis_values.iter().any(|v| !v.is_finite()) {
            return Err(SimError::config("axis_values", "must be finite"));
        }
        if self.axis_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::config("axis_values", "must be strictly increasing"));
        }
        for name in &self.policies {
            if baselines::by_name(name).is_none() {
                return Err(SimError::config("policies", format!("unknown policy `{name}`")));
            }
        }
        if self.seeds.is_empty() {
            return Err(SimError::config("seeds", "must list at least one seed"));
        }
        Ok(())
    }
}

/// Applies one grid value to a copy of the base scenario. Count axes
/// round to the nearest integer; range axes pin both ends to the value.
pub fn apply_axis(base: &ScenarioConfig, axis: SweepAxis, value: f64) -> ScenarioConfig {
    let mut config = base.clone();
    match axis {
        SweepAxis::TransmitPower => config.power_range_w = [value, value],
        SweepAxis::NumUsers => config.num_users = value.round().max(1.0) as usize,
        SweepAxis::NumSubchannels => config.num_subchannels = value.round().max(1.0) as usize,
        SweepAxis::TaskSize => config.task_size_range = [value, value],
    }
    config
}

/// One aggregated grid point for one policy.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub policy: String,
    pub mean_objective: f64,
    /// Standard error of `mean_objective` across seeds.
    pub sem: f64,
    pub hit_rate: f64,
    pub mean_latency: f64,
    pub mean_aoi: f64,
    /// Mean count of slots whose energy caps could not cover the task.
    pub infeasible_slots: f64,
}

fn mean_and_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs the whole grid. Cells (one scenario value and one seed, all
/// policies) run in parallel; output rows are ordered by axis value,
/// then by the policy list order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SimError> {
    spec.validate()?;
    spec.base.validate()?;
    if spec.policies.is_empty() {
        return Ok(Vec::new());
    }

    let cells: Vec<(usize, u64)> = spec
        .axis_values
        .iter()
        .enumerate()
        .flat_map(|(vi, _)| spec.seeds.iter().map(move |&s| (vi, s)))
        .collect();

    let per_cell: Vec<(usize, Vec<RunMetrics>)> = cells
        .par_iter()
        .map(|&(vi, seed)| -> Result<(usize, Vec<RunMetrics>), SimError> {
            let mut config = apply_axis(&spec.base, spec.axis, spec.axis_values[vi]);
            config.rng_seed = seed;
            config.validate()?;
            let scenario = generate_scenario(&config)?;
            let mut metrics = Vec::with_capacity(spec.policies.len());
            for name in &spec.policies {
                let policy = baselines::by_name(name).expect("validated above");
                metrics.push(run_horizon(&scenario, &config, &policy)?.metrics);
            }
            Ok((vi, metrics))
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    let mut rows = Vec::with_capacity(spec.axis_values.len() * spec.policies.len());
    for (vi, &value) in spec.axis_values.iter().enumerate() {
        for (pi, name) in spec.policies.iter().enumerate() {
            let runs: Vec<&RunMetrics> = per_cell
                .iter()
                .filter(|(cell_vi, _)| *cell_vi == vi)
                .map(|(_, metrics)| &metrics[pi])
                .collect();
            let objectives: Vec<f64> = runs.iter().map(|m| m.mean_objective).collect();
            let (mean_objective, sem) = mean_and_sem(&objectives);
            let n = runs.len() as f64;
            rows.push(SweepRow {
                axis_value: value,
                policy: name.clone(),
                mean_objective,
                sem,
                hit_rate: runs.iter().map(|m| m.cache_hit_rate).sum::<f64>() / n,
                mean_latency: runs.iter().map(|m| m.mean_latency_on_sense).sum::<f64>() / n,
                mean_aoi: runs.iter().map(|m| m.mean_aoi_on_hit).sum::<f64>() / n,
                infeasible_slots: runs.iter().map(|m| m.infeasible_slots as f64).sum::<f64>() / n,
            });
        }
    }
    Ok(rows)
}

/// Sweep serialization: header plus one comma-separated row per grid
/// point and policy.
pub fn csv_string(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("axis,policy,mean_objective,sem,hit_rate,mean_latency,mean_aoi,infeasible_slots\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.axis_value,
            r.policy,
            r.mean_objective,
            r.sem,
            r.hit_rate,
            r.mean_latency,
            r.mean_aoi,
            r.infeasible_slots,
        ));
    }
    out
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, csv_string(rows))
}
