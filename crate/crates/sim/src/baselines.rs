//! Named policy bundles and the non-optimal assignment heuristics the
//! comparison policies use.

use crate::assignment::{AlphaMatrix, AssignmentResult};
use crate::policy::{CacheRule, PolicySpec, SensingRule, SubchannelStrategy, TaskSplit};
use rand::seq::SliceRandom;
use rand::Rng;

/// Full pipeline: optimal matching, equal-completion-time split,
/// age-threshold sensing, posterior-score cache.
pub fn proposed() -> PolicySpec {
    PolicySpec {
        subchannel: SubchannelStrategy::Hungarian,
        split: TaskSplit::EqualCompletionTime,
        sensing: SensingRule::AgeThreshold,
        cache: CacheRule::PosteriorScore,
    }
}

/// Greedy matching, uniform split, coin-flip sensing, oldest-first cache.
pub fn baseline1() -> PolicySpec {
    PolicySpec {
        subchannel: SubchannelStrategy::GreedyBestGain,
        split: TaskSplit::Uniform,
        sensing: SensingRule::RandomCoin,
        cache: CacheRule::ReplaceOldest,
    }
}

/// Random matching, gain-proportional split, coin-flip sensing,
/// oldest-first cache.
pub fn baseline2() -> PolicySpec {
    PolicySpec {
        subchannel: SubchannelStrategy::Random,
        split: TaskSplit::GainFractional,
        sensing: SensingRule::RandomCoin,
        cache: CacheRule::ReplaceOldest,
    }
}

/// Greedy matching, gain-proportional split, coin-flip sensing,
/// oldest-first cache.
pub fn baseline3() -> PolicySpec {
    PolicySpec {
        subchannel: SubchannelStrategy::GreedyBestGain,
        split: TaskSplit::GainFractional,
        sensing: SensingRule::RandomCoin,
        cache: CacheRule::ReplaceOldest,
    }
}

/// Greedy matching and gain-proportional split, but the full sensing and
/// caching logic.
pub fn baseline4() -> PolicySpec {
    PolicySpec {
        subchannel: SubchannelStrategy::GreedyBestGain,
        split: TaskSplit::GainFractional,
        sensing: SensingRule::AgeThreshold,
        cache: CacheRule::PosteriorScore,
    }
}

/// Optimal slot resource use but no cache: every slot re-senses.
pub fn baseline5() -> PolicySpec {
    PolicySpec {
        subchannel: SubchannelStrategy::Hungarian,
        split: TaskSplit::EqualCompletionTime,
        sensing: SensingRule::AlwaysSense,
        cache: CacheRule::Disabled,
    }
}

/// All policy names accepted by [`by_name`], proposed first.
pub fn policy_names() -> [&'static str; 6] {
    ["proposed", "b1", "b2", "b3", "b4", "b5"]
}

pub fn by_name(name: &str) -> Option<PolicySpec> {
    match name {
        "proposed" => Some(proposed()),
        "b1" => Some(baseline1()),
        "b2" => Some(baseline2()),
        "b3" => Some(baseline3()),
        "b4" => Some(baseline4()),
        "b5" => Some(baseline5()),
        _ => None,
    }
}

/// For each subchannel in index order, assigns the not-yet-assigned user
/// with the highest gain on it (ties to the lower user id). Stops when
/// users or subchannels run out.
pub fn greedy_best_gain(matrix: &AlphaMatrix) -> AssignmentResult {
    let (k, n) = (matrix.num_users, matrix.num_subchannels);
    let mut taken = vec![false; k];
    let mut pairs = Vec::with_capacity(k.min(n));
    for sub in 0..n {
        if pairs.len() == k {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for user in 0..k {
            if taken[user] {
                continue;
            }
            let g = matrix.gain(user, sub);
            if best.map_or(true, |(_, bg)| g > bg) {
                best = Some((user, g));
            }
        }
        let (user, _) = best.expect("unassigned user must exist");
        taken[user] = true;
        pairs.push((user, sub));
    }
    AssignmentResult::from_pairs(matrix, pairs)
}

/// Uniform random injective matching: shuffled users paired with
/// shuffled subchannels.
pub fn random_assignment(matrix: &AlphaMatrix, rng: &mut impl Rng) -> AssignmentResult {
    let (k, n) = (matrix.num_users, matrix.num_subchannels);
    let mut users: Vec<usize> = (0..k).collect();
    let mut subs: Vec<usize> = (0..n).collect();
    users.shuffle(rng);
    subs.shuffle(rng);
    let pairs = users.into_iter().zip(subs).take(k.min(n)).collect();
    AssignmentResult::from_pairs(matrix, pairs)
}
