//! Experiment instance generation: user parameter draws, the task
//! catalog, and the slot-by-slot task publication schedule.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::rng::{self, Stream};
use crate::SimError;

/// How the published task id is drawn each slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Popularity {
    Uniform,
    Zipf { exponent: f64 },
}

impl fmt::Display for Popularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Popularity::Uniform => write!(f, "uniform"),
            Popularity::Zipf { exponent } => write!(f, "zipf({exponent})"),
        }
    }
}

impl FromStr for Popularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("uniform") {
            return Ok(Popularity::Uniform);
        }
        if let Some(inner) = s.strip_prefix("zipf(").and_then(|r| r.strip_suffix(')')) {
            let exponent: f64 = inner
                .trim()
                .parse()
                .map_err(|_| format!("bad zipf exponent `{inner}`"))?;
            return Ok(Popularity::Zipf { exponent });
        }
        Err(format!("expected `uniform` or `zipf(<exponent>)`, got `{s}`"))
    }
}

impl TryFrom<String> for Popularity {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Popularity> for String {
    fn from(p: Popularity) -> String {
        p.to_string()
    }
}

/// How much age every cached entry accrues per elapsed slot.
///
/// `LatencyCoupled` ties the slot length to what actually happened: the
/// realized sensing latency on a sensing slot, the configured cache-hit
/// duration on a reuse slot. `Fixed` uses one constant for every slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SlotDuration {
    LatencyCoupled,
    Fixed(f64),
}

impl fmt::Display for SlotDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotDuration::LatencyCoupled => write!(f, "latency-coupled"),
            SlotDuration::Fixed(v) => write!(f, "fixed({v})"),
        }
    }
}

impl FromStr for SlotDuration {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("latency-coupled") {
            return Ok(SlotDuration::LatencyCoupled);
        }
        if let Some(inner) = s.strip_prefix("fixed(").and_then(|r| r.strip_suffix(')')) {
            let v: f64 = inner
                .trim()
                .parse()
                .map_err(|_| format!("bad fixed slot duration `{inner}`"))?;
            return Ok(SlotDuration::Fixed(v));
        }
        Err(format!("expected `latency-coupled` or `fixed(<seconds>)`, got `{s}`"))
    }
}

impl TryFrom<String> for SlotDuration {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<SlotDuration> for String {
    fn from(d: SlotDuration) -> String {
        d.to_string()
    }
}

/// Every knob of one experiment. Field names double as the flat config
/// file keys and the CLI flag names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub num_subchannels: usize,
    pub num_task_types: usize,
    pub num_slots: usize,
    /// Per-subchannel bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Noise power density in dBm/Hz; converted to W/Hz internally.
    pub noise_density_dbm_per_hz: f64,
    pub cache_capacity_bits: f64,
    /// Age ceiling: cached entries at or past this age are purged.
    pub aoi_max: f64,
    pub weight_latency: f64,
    pub weight_aoi: f64,
    /// Re-sense frequency knob in [0,1]; scales the age threshold of the
    /// sensing rule and doubles as the coin bias of the random-sensing
    /// comparison policies.
    pub resense_frequency: f64,
    pub distance_range_m: [f64; 2],
    pub power_range_w: [f64; 2],
    /// Sensing rate o, bit/s.
    pub sensing_rate_range: [f64; 2],
    /// Sensing energy e, J/bit.
    pub sensing_energy_range: [f64; 2],
    /// Per-slot energy budget E, J.
    pub energy_budget_range: [f64; 2],
    /// Task size V, bits.
    pub task_size_range: [f64; 2],
    pub task_popularity: Popularity,
    /// Slot length charged to age growth when a slot is served from cache
    /// under the latency-coupled mode, seconds.
    pub cache_hit_slot_duration: f64,
    pub slot_duration: SlotDuration,
    /// Redraw user parameters every slot instead of once per scenario.
    pub per_slot_user_params: bool,
    /// When a user's energy cap truncates its share, re-balance the freed
    /// bits over the remaining users (keeps the full task covered). When
    /// off, shares are truncated pointwise and the shortfall is reported.
    pub redistribute_capped_bits: bool,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            num_users: 30,
            num_subchannels: 20,
            num_task_types: 20,
            num_slots: 1000,
            bandwidth_hz: 1.0e6,
            noise_density_dbm_per_hz: -174.0,
            cache_capacity_bits: 5.0e7,
            aoi_max: 50.0,
            weight_latency: 1.0,
            weight_aoi: 0.1,
            resense_frequency: 0.7,
            distance_range_m: [30.0, 500.0],
            power_range_w: [0.1, 0.2],
            sensing_rate_range: [1.0e4, 1.0e6],
            sensing_energy_range: [1.0e-12, 1.0e-11],
            energy_budget_range: [0.01, 0.1],
            task_size_range: [0.5e7, 1.5e7],
            task_popularity: Popularity::Zipf { exponent: 0.8 },
            cache_hit_slot_duration: 0.05,
            slot_duration: SlotDuration::LatencyCoupled,
            per_slot_user_params: false,
            redistribute_capped_bits: true,
            rng_seed: 42,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        fn count(field: &'static str, v: usize) -> Result<(), SimError> {
            if v == 0 {
                return Err(SimError::config(field, "must be at least 1"));
            }
            Ok(())
        }
        fn positive(field: &'static str, v: f64) -> Result<(), SimError> {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SimError::config(field, format!("must be positive, got {v}")));
            }
            Ok(())
        }
        fn range(field: &'static str, r: [f64; 2]) -> Result<(), SimError> {
            positive(field, r[0])?;
            positive(field, r[1])?;
            if r[0] > r[1] {
                return Err(SimError::config(
                    field,
                    format!("minimum {} exceeds maximum {}", r[0], r[1]),
                ));
            }
            Ok(())
        }

        count("num_users", self.num_users)?;
        count("num_subchannels", self.num_subchannels)?;
        count("num_task_types", self.num_task_types)?;
        count("num_slots", self.num_slots)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        if !self.noise_density_dbm_per_hz.is_finite() {
            return Err(SimError::config("noise_density_dbm_per_hz", "must be finite"));
        }
        positive("cache_capacity_bits", self.cache_capacity_bits)?;
        positive("aoi_max", self.aoi_max)?;
        positive("weight_latency", self.weight_latency)?;
        positive("weight_aoi", self.weight_aoi)?;
        if !(0.0..=1.0).contains(&self.resense_frequency) {
            return Err(SimError::config(
                "resense_frequency",
                format!("must lie in [0,1], got {}", self.resense_frequency),
            ));
        }
        range("distance_range_m", self.distance_range_m)?;
        range("power_range_w", self.power_range_w)?;
        range("sensing_rate_range", self.sensing_rate_range)?;
        range("sensing_energy_range", self.sensing_energy_range)?;
        range("energy_budget_range", self.energy_budget_range)?;
        range("task_size_range", self.task_size_range)?;
        if let Popularity::Zipf { exponent } = self.task_popularity {
            if !(exponent > 0.0) {
                return Err(SimError::config(
                    "task_popularity",
                    format!("zipf exponent must be positive, got {exponent}"),
                ));
            }
        }
        positive("cache_hit_slot_duration", self.cache_hit_slot_duration)?;
        if let SlotDuration::Fixed(v) = self.slot_duration {
            positive("slot_duration", v)?;
        }
        Ok(())
    }

    /// Noise density converted from dBm/Hz to W/Hz.
    pub fn noise_density_w_per_hz(&self) -> f64 {
        crate::channel::noise_density_w_per_hz(self.noise_density_dbm_per_hz)
    }

    /// Age threshold multiplier of the sensing rule: re-sense once the
    /// served age would reach this multiple of the candidate latency.
    pub fn resense_threshold(&self) -> f64 {
        self.resense_frequency * self.weight_latency / self.weight_aoi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserProfile {
    pub user_id: usize,
    pub distance_m: f64,
    pub transmit_power_w: f64,
    /// Sensing rate o, bit/s.
    pub sensing_rate: f64,
    /// Sensing energy e, J/bit.
    pub sensing_energy_per_bit: f64,
    /// Per-slot energy budget E, J.
    pub energy_budget_j: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskType {
    pub task_id: usize,
    pub size_bits: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub users: Vec<UserProfile>,
    pub tasks: Vec<TaskType>,
    /// Published task id per slot, length `num_slots`.
    pub schedule: Vec<usize>,
}

fn sample_range(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

/// One full set of user parameter draws. Exposed separately so the
/// per-slot redraw mode can pull a fresh set each slot from its own
/// stream.
pub fn draw_users(config: &ScenarioConfig, rng: &mut impl Rng) -> Vec<UserProfile> {
    (0..config.num_users)
        .map(|user_id| UserProfile {
            user_id,
            distance_m: sample_range(rng, config.distance_range_m),
            transmit_power_w: sample_range(rng, config.power_range_w),
            sensing_rate: sample_range(rng, config.sensing_rate_range),
            sensing_energy_per_bit: sample_range(rng, config.sensing_energy_range),
            energy_budget_j: sample_range(rng, config.energy_budget_range),
        })
        .collect()
}

fn draw_schedule(config: &ScenarioConfig, rng: &mut impl Rng) -> Vec<usize> {
    let m = config.num_task_types;
    match config.task_popularity {
        Popularity::Uniform => (0..config.num_slots).map(|_| rng.random_range(0..m)).collect(),
        Popularity::Zipf { exponent } => {
            let zipf = Zipf::new(m as f64, exponent).expect("validated zipf parameters");
            (0..config.num_slots)
                .map(|_| zipf.sample(rng) as usize - 1)
                .collect()
        }
    }
}

/// Draws users, the task catalog, and the publication schedule. Fully
/// determined by the config (including its seed).
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario, SimError> {
    config.validate()?;
    let mut rng = rng::stream(config.rng_seed, Stream::Scenario, 0);
    let users = draw_users(config, &mut rng);
    let tasks = (0..config.num_task_types)
        .map(|task_id| TaskType {
            task_id,
            size_bits: sample_range(&mut rng, config.task_size_range),
        })
        .collect();
    let schedule = draw_schedule(config, &mut rng);
    Ok(Scenario { users, tasks, schedule })
}

/// Publication counts over the first `upto` slots: result[i] = number of
/// slots s < upto with schedule[s] = i. `upto` ranges over 1..=len.
pub fn task_frequency(
    schedule: &[usize],
    num_task_types: usize,
    upto: usize,
) -> Result<Vec<u64>, SimError> {
    if upto == 0 || upto > schedule.len() {
        return Err(SimError::SlotOutOfRange { slot: upto, max: schedule.len() });
    }
    let mut counts = vec![0u64; num_task_types];
    for &task in &schedule[..upto] {
        counts[task] += 1;
    }
    Ok(counts)
}
