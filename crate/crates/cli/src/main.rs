//! `mcs`: run single simulation horizons, parameter sweeps, and
//! brute-force self-checks from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use mcs_sim::baselines;
use mcs_sim::oracle::run_validation_suites;
use mcs_sim::policy::{run_horizon, trace_csv};
use mcs_sim::scenario::{generate_scenario, Popularity, SlotDuration};
use mcs_sim::sweep::{csv_string, emit_csv, run_sweep};
use mcs_sim::{ScenarioConfig, SweepAxis, SweepSpec};

#[derive(Parser)]
#[command(name = "mcs", version, about = "Cache-enabled crowdsensing cell simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy over one scenario and print summary metrics.
    Run(RunArgs),
    /// Run a policy comparison over a parameter grid and emit CSV.
    Sweep(SweepArgs),
    /// Cross-check the fast solvers against brute-force references.
    Oracle(OracleArgs),
}

/// Scenario overrides; each flag mirrors a config file key. Range-valued
/// flags take `lo,hi` pairs.
#[derive(Args, Default)]
struct ScenarioFlags {
    #[arg(long)]
    num_users: Option<usize>,
    #[arg(long)]
    num_subchannels: Option<usize>,
    #[arg(long)]
    num_task_types: Option<usize>,
    #[arg(long)]
    num_slots: Option<usize>,
    #[arg(long)]
    bandwidth_hz: Option<f64>,
    #[arg(long)]
    noise_density_dbm_per_hz: Option<f64>,
    #[arg(long)]
    cache_capacity_bits: Option<f64>,
    #[arg(long)]
    aoi_max: Option<f64>,
    #[arg(long)]
    weight_latency: Option<f64>,
    #[arg(long)]
    weight_aoi: Option<f64>,
    #[arg(long)]
    resense_frequency: Option<f64>,
    #[arg(long, value_parser = parse_range)]
    distance_range_m: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_range)]
    power_range_w: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_range)]
    sensing_rate_range: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_range)]
    sensing_energy_range: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_range)]
    energy_budget_range: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_range)]
    task_size_range: Option<[f64; 2]>,
    /// `uniform` or `zipf(<exponent>)`.
    #[arg(long, value_parser = parse_popularity)]
    task_popularity: Option<Popularity>,
    #[arg(long)]
    cache_hit_slot_duration: Option<f64>,
    /// `latency-coupled` or `fixed(<seconds>)`.
    #[arg(long, value_parser = parse_slot_duration)]
    slot_duration: Option<SlotDuration>,
    #[arg(long)]
    per_slot_user_params: Option<bool>,
    #[arg(long)]
    redistribute_capped_bits: Option<bool>,
    #[arg(long)]
    rng_seed: Option<u64>,
}

impl ScenarioFlags {
    fn apply(&self, config: &mut ScenarioConfig) {
        macro_rules! set {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { config.$field = v; })*
            };
        }
        set!(
            num_users,
            num_subchannels,
            num_task_types,
            num_slots,
            bandwidth_hz,
            noise_density_dbm_per_hz,
            cache_capacity_bits,
            aoi_max,
            weight_latency,
            weight_aoi,
            resense_frequency,
            distance_range_m,
            power_range_w,
            sensing_rate_range,
            sensing_energy_range,
            energy_budget_range,
            task_size_range,
            task_popularity,
            cache_hit_slot_duration,
            slot_duration,
            per_slot_user_params,
            redistribute_capped_bits,
            rng_seed,
        );
    }
}

fn parse_range(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected `lo,hi`, got `{s}`"));
    }
    let lo: f64 = parts[0].parse().map_err(|_| format!("bad number `{}`", parts[0]))?;
    let hi: f64 = parts[1].parse().map_err(|_| format!("bad number `{}`", parts[1]))?;
    Ok([lo, hi])
}

fn parse_popularity(s: &str) -> Result<Popularity, String> {
    s.parse()
}

fn parse_slot_duration(s: &str) -> Result<SlotDuration, String> {
    s.parse()
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file (flat TOML; keys mirror the flag names).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Policy name: proposed, b1, b2, b3, b4, b5.
    #[arg(long, default_value = "proposed")]
    policy: String,
    /// Write the per-slot trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioFlags,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config file: `axis`, `axis_values`, `policies`, and seed
    /// settings at the top level, plus a `[scenario]` table of base
    /// scenario overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario dimension to vary: transmit_power, num_users,
    /// num_subchannels, or task_size.
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Comma-separated policy names.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<String>>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Use seeds seed_base..seed_base+seed_count instead of a list.
    #[arg(long)]
    seed_count: Option<usize>,
    #[arg(long)]
    seed_base: Option<u64>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioFlags,
}

#[derive(Args)]
struct OracleArgs {
    /// Random cases per suite.
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

/// Top-level shape of a sweep config file.
#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct SweepFile {
    axis: Option<String>,
    axis_values: Vec<f64>,
    policies: Vec<String>,
    seeds: Vec<u64>,
    seed_count: Option<usize>,
    seed_base: Option<u64>,
    scenario: Option<ScenarioConfig>,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn scenario_from(config: Option<&Path>, flags: &ScenarioFlags) -> Result<ScenarioConfig> {
    let mut scenario: ScenarioConfig = match config {
        Some(path) => read_toml(path)?,
        None => ScenarioConfig::default(),
    };
    flags.apply(&mut scenario);
    scenario.validate()?;
    Ok(scenario)
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let config = scenario_from(args.config.as_deref(), &args.scenario)?;
    let Some(policy) = baselines::by_name(&args.policy) else {
        bail!("unknown policy `{}`; expected one of {}", args.policy, baselines::policy_names().join(", "));
    };
    let scenario = generate_scenario(&config)?;
    let result = run_horizon(&scenario, &config, &policy)?;
    let m = &result.metrics;
    println!("policy {} over {} slots (seed {}):", args.policy, config.num_slots, config.rng_seed);
    println!("  mean objective      {:.6}", m.mean_objective);
    println!("  cache hit rate      {:.4}", m.cache_hit_rate);
    println!("  mean sense latency  {:.6} s", m.mean_latency_on_sense);
    println!("  mean age on hit     {:.6} s", m.mean_aoi_on_hit);
    println!("  infeasible slots    {}", m.infeasible_slots);
    if let Some(path) = &args.trace {
        fs::write(path, trace_csv(&result.trace))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("trace written to {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let file: SweepFile = match &args.config {
        Some(path) => read_toml(path)?,
        None => SweepFile::default(),
    };

    let axis_name = args
        .axis
        .clone()
        .or(file.axis)
        .context("no sweep axis: pass --axis or set `axis` in the config file")?;
    let axis: SweepAxis = axis_name.parse()?;

    let axis_values = args
        .values
        .clone()
        .filter(|v| !v.is_empty())
        .or_else(|| (!file.axis_values.is_empty()).then(|| file.axis_values.clone()))
        .context("no axis values: pass --values or set `axis_values`")?;

    let policies = args
        .policies
        .clone()
        .filter(|p| !p.is_empty())
        .or_else(|| (!file.policies.is_empty()).then(|| file.policies.clone()))
        .unwrap_or_else(|| baselines::policy_names().iter().map(|s| s.to_string()).collect());

    let seed_base = args.seed_base.or(file.seed_base).unwrap_or(0);
    let seeds: Vec<u64> = if let Some(list) = args.seeds.clone().filter(|s| !s.is_empty()) {
        list
    } else if let Some(count) = args.seed_count {
        (seed_base..seed_base + count as u64).collect()
    } else if !file.seeds.is_empty() {
        file.seeds.clone()
    } else if let Some(count) = file.seed_count {
        (seed_base..seed_base + count as u64).collect()
    } else {
        (0..50).collect()
    };

    let mut base = file.scenario.unwrap_or_default();
    args.scenario.apply(&mut base);

    let spec = SweepSpec { axis, axis_values, policies, seeds, base };
    let rows = run_sweep(&spec)?;
    match &args.out {
        Some(path) => {
            emit_csv(&rows, path).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => print!("{}", csv_string(&rows)),
    }
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let mut failed = false;
    for report in run_validation_suites(args.cases, args.seed) {
        if report.passed() {
            println!("suite {:<10} PASS ({} cases)", report.name, report.cases);
        } else {
            failed = true;
            println!(
                "suite {:<10} FAIL ({}/{} cases failed)",
                report.name, report.failures, report.cases
            );
            if let Some(first) = &report.first_failure {
                println!("  first failure: {first}");
            }
        }
    }
    if failed {
        bail!("oracle validation failed");
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Oracle(args) => cmd_oracle(&args),
    }
}
