//! Discrete-time simulator and optimization library for a cache-enabled
//! mobile crowdsensing cell.
//!
//! Each slot a base station publishes one sensing task. The controller
//! either serves the task from its cache, paying an age-of-information
//! cost, or re-senses it: users are matched one-to-one to OFDMA
//! subchannels, the task's bits are split across the matched users so the
//! slowest completion time is minimized under per-user energy budgets, and
//! the fresh result is committed to a capacity-limited cache with
//! posterior-score eviction. The run objective is the time-averaged
//! weighted sum of sensing latency and served age.
//!
//! The modules follow that pipeline: [`scenario`] draws experiment
//! instances, [`channel`] produces per-slot link gains and rates,
//! [`assignment`] and [`allocation`] solve the per-slot latency
//! subproblem, [`cache`] keeps freshness state, [`policy`] runs the slot
//! loop, [`baselines`] names the comparison strategies, [`sweep`] runs
//! multi-seed parameter sweeps with CSV output, and [`oracle`] holds
//! independent brute-force checkers used by the tests and the `oracle`
//! CLI subcommand.

pub mod allocation;
pub mod assignment;
pub mod baselines;
pub mod cache;
pub mod channel;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod scenario;
pub mod sweep;

pub use allocation::AllocationResult;
pub use assignment::{AlphaMatrix, AssignmentResult};
pub use cache::CacheState;
pub use policy::{PolicySpec, RunMetrics, RunResult, SlotRecord};
pub use scenario::{Scenario, ScenarioConfig};
pub use sweep::{SweepAxis, SweepRow, SweepSpec};

/// Library-level failures. Configuration problems name the offending
/// field so CLI users can fix their input without reading source.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("config field `{field}` {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("alpha matrix must have at least one user and one subchannel")]
    EmptyAlphaMatrix,
    #[error("slot {slot} out of range 1..={max}")]
    SlotOutOfRange { slot: usize, max: usize },
}

impl SimError {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        SimError::InvalidConfig { field, reason: reason.into() }
    }
}
