//! The per-slot decision loop: sense-vs-reuse branching, resource
//! orchestration, objective accounting, and trace records.

use crate::allocation::{self, AllocationResult};
use crate::assignment::{build_alpha, solve_matching, AssignmentResult};
use crate::baselines;
use crate::cache::{CacheState, CommitOutcome};
use crate::channel::draw_channels;
use crate::rng::{self, Stream};
use crate::scenario::{draw_users, Scenario, ScenarioConfig, SlotDuration, TaskType};
use crate::SimError;
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubchannelStrategy {
    /// Optimal matching, maximizing the total matched speed.
    Hungarian,
    /// Each subchannel in index order takes the unassigned user with the
    /// highest gain on it.
    GreedyBestGain,
    /// Fresh uniform injective draw every slot.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskSplit {
    /// Min-max split: everyone finishes together, energy caps respected
    /// per the configured redistribution mode.
    EqualCompletionTime,
    /// Same share for every matched user, truncated at energy caps.
    Uniform,
    /// Shares proportional to matched channel gains, truncated at caps.
    GainFractional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SensingRule {
    /// Re-sense once the served age reaches the threshold multiple of the
    /// candidate latency (or the task is not cached).
    AgeThreshold,
    /// Coin flip with the configured re-sense frequency; an uncached task
    /// still forces sensing.
    RandomCoin,
    AlwaysSense,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheRule {
    /// Evict in ascending posterior-score order.
    PosteriorScore,
    /// Evict oldest first.
    ReplaceOldest,
    /// Never cache anything.
    Disabled,
}

/// A complete policy: one choice per decision stage. The proposed policy
/// and the five comparison policies are all values of this type; see
/// [`crate::baselines`] for the named bundles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolicySpec {
    pub subchannel: SubchannelStrategy,
    pub split: TaskSplit,
    pub sensing: SensingRule,
    pub cache: CacheRule,
}

/// Age-threshold sensing decision: re-sense when the task is uncached,
/// or when its age is both within the valid window and at least
/// `threshold_ratio` times the candidate sensing latency.
pub fn decide_sensing(
    aoi: f64,
    cached: bool,
    latency_candidate: f64,
    threshold_ratio: f64,
    aoi_max: f64,
) -> bool {
    if !cached {
        return true;
    }
    (0.0..=aoi_max).contains(&aoi) && aoi >= threshold_ratio * latency_candidate
}

/// One simulated slot as recorded in the trace.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotRecord {
    /// 1-based slot index.
    pub slot: usize,
    pub task_id: usize,
    /// Whether the task was cached when the decision was made.
    pub cached: bool,
    /// True if the slot re-sensed, false if it served from cache.
    pub sensed: bool,
    /// Candidate sensing latency, computed every slot (the sensing rule
    /// needs it even when the slot ends up reusing the cache).
    pub system_latency_s: f64,
    /// Served age at decision time (post-purge).
    pub aoi: f64,
    pub slot_cost: f64,
    /// Cache occupancy after the slot's commit.
    pub cache_bits: f64,
    /// Entries removed this slot: age purges plus commit evictions.
    pub evictions: usize,
    /// False when the energy caps could not cover the full task.
    pub feasible: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunMetrics {
    /// Time-averaged slot cost, the run objective.
    pub mean_objective: f64,
    /// Fraction of slots served from cache.
    pub cache_hit_rate: f64,
    pub mean_latency_on_sense: f64,
    pub mean_aoi_on_hit: f64,
    pub infeasible_slots: usize,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub metrics: RunMetrics,
    pub trace: Vec<SlotRecord>,
}

fn assignment_for(
    policy: &PolicySpec,
    matrix: &crate::assignment::AlphaMatrix,
    seed: u64,
    slot: u64,
) -> Result<AssignmentResult, SimError> {
    match policy.subchannel {
        SubchannelStrategy::Hungarian => solve_matching(matrix),
        SubchannelStrategy::GreedyBestGain => Ok(baselines::greedy_best_gain(matrix)),
        SubchannelStrategy::Random => {
            let mut rng = rng::stream(seed, Stream::RandomAssign, slot);
            Ok(baselines::random_assignment(matrix, &mut rng))
        }
    }
}

fn split_for(
    policy: &PolicySpec,
    assignment: &AssignmentResult,
    users: &[crate::scenario::UserProfile],
    task_bits: f64,
    redistribute: bool,
) -> AllocationResult {
    match policy.split {
        TaskSplit::EqualCompletionTime => {
            allocation::allocate(assignment, users, task_bits, redistribute)
        }
        TaskSplit::Uniform => allocation::uniform_split(assignment, users, task_bits),
        TaskSplit::GainFractional => {
            allocation::gain_fractional_split(assignment, users, task_bits)
        }
    }
}

/// Runs one policy over the whole horizon. Identical (scenario, config)
/// inputs give identical traces regardless of the policy's own draws:
/// channel and schedule randomness comes from streams keyed only by the
/// run seed and slot index.
pub fn run_horizon(
    scenario: &Scenario,
    config: &ScenarioConfig,
    policy: &PolicySpec,
) -> Result<RunResult, SimError> {
    config.validate()?;
    let noise = config.noise_density_w_per_hz();
    let threshold = config.resense_threshold();
    let seed = config.rng_seed;

    let mut cache = CacheState::new(config.cache_capacity_bits);
    let mut frequencies = vec![0u64; config.num_task_types];
    let mut prev_slot_duration = 0.0f64;
    let mut trace = Vec::with_capacity(config.num_slots);

    let mut slot_users = scenario.users.clone();
    for t in 0..config.num_slots {
        let purged = cache.advance_aoi(prev_slot_duration, config.aoi_max);

        let task_id = scenario.schedule[t];
        frequencies[task_id] += 1;
        let task: &TaskType = &scenario.tasks[task_id];

        if config.per_slot_user_params {
            let mut rng = rng::stream(seed, Stream::UserParams, t as u64);
            slot_users = draw_users(config, &mut rng);
        }

        let mut channel_rng = rng::stream(seed, Stream::Channel, t as u64);
        let channels = draw_channels(&slot_users, config.num_subchannels, &mut channel_rng);
        let matrix = build_alpha(&slot_users, &channels, config.bandwidth_hz, noise);

        let assignment = assignment_for(policy, &matrix, seed, t as u64)?;
        let allocation = split_for(
            policy,
            &assignment,
            &slot_users,
            task.size_bits,
            config.redistribute_capped_bits,
        );
        let latency = allocation.system_latency_s;

        let (cached, aoi) = cache.lookup(task_id);
        let sense = match policy.sensing {
            SensingRule::AgeThreshold => {
                decide_sensing(aoi, cached, latency, threshold, config.aoi_max)
            }
            SensingRule::RandomCoin => {
                !cached
                    || rng::stream(seed, Stream::SensingCoin, t as u64)
                        .random_bool(config.resense_frequency)
            }
            SensingRule::AlwaysSense => true,
        };

        let (slot_cost, commit) = if sense {
            let outcome = match policy.cache {
                CacheRule::PosteriorScore => cache.commit_posterior(task, &frequencies),
                CacheRule::ReplaceOldest => cache.commit_replace_oldest(task),
                CacheRule::Disabled => CommitOutcome::default(),
            };
            (config.weight_latency * latency, outcome)
        } else {
            (config.weight_aoi * aoi, CommitOutcome::default())
        };

        prev_slot_duration = match config.slot_duration {
            SlotDuration::Fixed(v) => v,
            SlotDuration::LatencyCoupled => {
                if sense {
                    latency
                } else {
                    config.cache_hit_slot_duration
                }
            }
        };

        trace.push(SlotRecord {
            slot: t + 1,
            task_id,
            cached,
            sensed: sense,
            system_latency_s: latency,
            aoi,
            slot_cost,
            cache_bits: cache.used_bits(),
            evictions: purged.len() + commit.evicted.len(),
            feasible: allocation.feasible,
        });
    }

    Ok(RunResult { metrics: summarize(&trace), trace })
}

fn summarize(trace: &[SlotRecord]) -> RunMetrics {
    let slots = trace.len().max(1) as f64;
    let mean_objective = trace.iter().map(|r| r.slot_cost).sum::<f64>() / slots;
    let hits: Vec<&SlotRecord> = trace.iter().filter(|r| !r.sensed).collect();
    let senses: Vec<&SlotRecord> = trace.iter().filter(|r| r.sensed).collect();
    let mean_latency_on_sense = if senses.is_empty() {
        0.0
    } else {
        senses.iter().map(|r| r.system_latency_s).sum::<f64>() / senses.len() as f64
    };
    let mean_aoi_on_hit = if hits.is_empty() {
        0.0
    } else {
        hits.iter().map(|r| r.aoi).sum::<f64>() / hits.len() as f64
    };
    RunMetrics {
        mean_objective,
        cache_hit_rate: hits.len() as f64 / slots,
        mean_latency_on_sense,
        mean_aoi_on_hit,
        infeasible_slots: trace.iter().filter(|r| !r.feasible).count(),
    }
}

/// Trace serialization: header plus one comma-separated row per slot.
pub fn trace_csv(trace: &[SlotRecord]) -> String {
    let mut out = String::from(
        "t,task_id,cached,sensed,system_latency,aoi,slot_cost,cache_bits,evictions,feasible\n",
    );
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.slot,
            r.task_id,
            r.cached as u8,
            r.sensed as u8,
            r.system_latency_s,
            r.aoi,
            r.slot_cost,
            r.cache_bits,
            r.evictions,
            r.feasible as u8,
        ));
    }
    out
}
