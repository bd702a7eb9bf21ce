//! Slow reference implementations used to cross-check the production
//! paths: brute-force matching, bisection allocation, and step-by-step
//! cache-eviction replay. The CLI exposes them as self-check suites.

use crate::allocation::allocate_raw;
use crate::assignment::{solve_matching, AlphaMatrix};
use crate::cache::CacheState;
use crate::rng::{stream, Stream};
use crate::scenario::TaskType;
use itertools::Itertools;
use rand::Rng;

/// Best matching by trying every injective assignment of the smaller
/// side. Returns the maximum total matched speed and the pairs reaching
/// it, ordered by subchannel. Exponential; keep dimensions small.
pub fn best_matching_exhaustive(matrix: &AlphaMatrix) -> (f64, Vec<(usize, usize)>) {
    let (k, n) = (matrix.num_users, matrix.num_subchannels);
    if k == 0 || n == 0 {
        return (0.0, Vec::new());
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_pairs = Vec::new();
    if k <= n {
        for perm in (0..n).permutations(k) {
            let weight: f64 =
                perm.iter().enumerate().map(|(u, &s)| 1.0 / matrix.alpha(u, s)).sum();
            if weight > best {
                best = weight;
                best_pairs = perm.into_iter().enumerate().collect();
            }
        }
    } else {
        for perm in (0..k).permutations(n) {
            let weight: f64 =
                perm.iter().enumerate().map(|(s, &u)| 1.0 / matrix.alpha(u, s)).sum();
            if weight > best {
                best = weight;
                best_pairs = perm.into_iter().enumerate().map(|(s, u)| (u, s)).collect();
            }
        }
    }
    best_pairs.sort_by_key(|&(_, s)| s);
    (best, best_pairs)
}

/// Minimal common completion time by bisection: the smallest gamma whose
/// per-user shares min(gamma / alpha_i, cap_i) cover the demand. None when
/// the caps cannot cover it at all.
pub fn min_max_latency_bisection(
    alphas: &[f64],
    caps_bits: &[f64],
    demand_bits: f64,
) -> Option<f64> {
    assert_eq!(alphas.len(), caps_bits.len());
    if demand_bits <= 0.0 {
        return Some(0.0);
    }
    let total: f64 = caps_bits.iter().sum();
    if alphas.is_empty() || total < demand_bits * (1.0 - 1e-12) {
        return None;
    }
    let covered =
        |gamma: f64| -> f64 { alphas.iter().zip(caps_bits).map(|(a, c)| (gamma / a).min(*c)).sum() };
    let mut hi = 1.0f64;
    while covered(hi) < demand_bits {
        hi *= 2.0;
        if hi > 1e300 {
            return None;
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if covered(mid) >= demand_bits {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn unnormalized_score(aoi: f64, size_bits: f64, requests: u64) -> f64 {
    (requests as f64 / size_bits).ln_1p() / (aoi + 1.0)
}

/// Replays posterior-score eviction the slow way: recompute the
/// normalized posterior of every remaining entry after each removal and
/// evict the minimum (ties: larger size, then lower id) until the total
/// fits. Entries are (id, age, size) and must include any fresh insert.
pub fn eviction_sequence_recomputed(
    entries: &[(usize, f64, f64)],
    frequencies: &[u64],
    capacity_bits: f64,
) -> Vec<usize> {
    let mut remaining: Vec<(usize, f64, f64)> = entries.to_vec();
    let mut evicted = Vec::new();
    loop {
        let used: f64 = remaining.iter().map(|e| e.2).sum();
        if used <= capacity_bits || remaining.is_empty() {
            return evicted;
        }
        let total: f64 = remaining
            .iter()
            .map(|&(id, aoi, size)| unnormalized_score(aoi, size, frequencies[id]))
            .sum();
        let uniform = 1.0 / remaining.len() as f64;
        let victim = remaining
            .iter()
            .enumerate()
            .map(|(idx, &(id, aoi, size))| {
                let w = unnormalized_score(aoi, size, frequencies[id]);
                let posterior = if total > 0.0 { w / total } else { uniform };
                (idx, id, posterior, size)
            })
            .min_by(|a, b| a.2.total_cmp(&b.2).then(b.3.total_cmp(&a.3)).then(a.1.cmp(&b.1)))
            .map(|(idx, _, _, _)| idx)
            .expect("remaining is non-empty");
        evicted.push(remaining.remove(victim).0);
    }
}

/// Exhaustively picks the eviction set of minimal discarded posterior
/// mass among all subsets that make the rest fit. Ties go to fewer
/// evictions, then the lexicographically smallest id set. Returns the
/// evicted ids in ascending order. Exponential; entries must stay small.
pub fn min_mass_eviction_exhaustive(
    entries: &[(usize, f64, f64)],
    frequencies: &[u64],
    capacity_bits: f64,
) -> Vec<usize> {
    let m = entries.len();
    assert!(m <= 20, "exhaustive eviction is exponential in the entry count");
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for mask in 0u32..(1u32 << m) {
        let mut kept_size = 0.0;
        let mut evicted_mass = 0.0;
        let mut evicted_ids = Vec::new();
        for (i, &(id, aoi, size)) in entries.iter().enumerate() {
            if mask & (1 << i) != 0 {
                kept_size += size;
            } else {
                evicted_mass += unnormalized_score(aoi, size, frequencies[id]);
                evicted_ids.push(id);
            }
        }
        if kept_size > capacity_bits {
            continue;
        }
        let candidate = (evicted_mass, evicted_ids.len(), evicted_ids);
        let better = match &best {
            None => true,
            Some(b) => candidate
                .0
                .total_cmp(&b.0)
                .then(candidate.1.cmp(&b.1))
                .then(candidate.2.cmp(&b.2))
                .is_lt(),
        };
        if better {
            best = Some(candidate);
        }
    }
    let mut ids = best.expect("the empty keep set always fits").2;
    ids.sort_unstable();
    ids
}

/// Builds a cache holding the given (id, age, size) entries by committing
/// them oldest first and aging between commits. Ids must be distinct and
/// the capacity must hold the running total at every step.
pub fn build_aged_cache(capacity_bits: f64, entries: &[(usize, f64, f64)]) -> CacheState {
    let mut order: Vec<(usize, f64, f64)> = entries.to_vec();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut cache = CacheState::new(capacity_bits);
    let mut prev_age = order.first().map_or(0.0, |e| e.1);
    for &(id, age, size) in &order {
        cache.advance_aoi(prev_age - age, f64::INFINITY);
        let outcome = cache.commit_replace_oldest(&TaskType { task_id: id, size_bits: size });
        assert!(
            outcome.stored && outcome.evicted.is_empty(),
            "capacity too small to replay the requested entries"
        );
        prev_age = age;
    }
    cache.advance_aoi(prev_age, f64::INFINITY);
    cache
}

/// Outcome of one self-check suite: case count, failure count, and a
/// description of the first failing case when there is one.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn new(name: &'static str) -> Self {
        SuiteReport { name, cases: 0, failures: 0, first_failure: None }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(describe());
            }
        }
    }
}

fn matching_suite(cases: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("matching");
    let mut rng = stream(seed, Stream::Scenario, 1);
    for _ in 0..cases {
        let k = rng.random_range(1..=5usize);
        let n = rng.random_range(1..=5usize);
        let alphas: Vec<f64> =
            (0..k * n).map(|_| 10f64.powf(rng.random_range(-7.0..=-3.0))).collect();
        let matrix = AlphaMatrix::from_alphas(k, n, alphas);
        let solved = solve_matching(&matrix).expect("non-empty matrix");
        let (best, _) = best_matching_exhaustive(&matrix);
        let ok = (solved.weight_sum - best).abs() <= 1e-12 * best.abs();
        report.record(ok, || {
            format!("{k}x{n}: solver weight {} vs exhaustive {best}", solved.weight_sum)
        });
    }
    report
}

fn allocation_suite(cases: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("allocation");
    let mut rng = stream(seed, Stream::Scenario, 2);
    for case in 0..cases {
        let n = rng.random_range(1..=8usize);
        let alphas: Vec<f64> =
            (0..n).map(|_| 10f64.powf(rng.random_range(-7.0..=-4.0))).collect();
        if case % 2 == 0 {
            let caps = vec![1e30; n];
            let demand = 10f64.powf(rng.random_range(5.0..=7.5));
            let (_, d_bar, feasible, _) = allocate_raw(&alphas, &caps, demand, true);
            let inv_sum: f64 = alphas.iter().map(|a| 1.0 / a).sum();
            let closed = demand / inv_sum;
            let gamma = min_max_latency_bisection(&alphas, &caps, demand);
            let ok = feasible
                && (d_bar - closed).abs() <= 1e-9 * closed
                && gamma.map_or(false, |g| (g - d_bar).abs() <= 1e-9 * d_bar);
            report.record(ok, || {
                format!("uncapped n={n}: level {d_bar}, closed form {closed}, bisection {gamma:?}")
            });
        } else {
            let caps: Vec<f64> =
                (0..n).map(|_| 10f64.powf(rng.random_range(4.0..=7.0))).collect();
            let total: f64 = caps.iter().sum();
            let tight = rng.random_bool(0.5);
            let demand = total
                * if tight { rng.random_range(1.15..=2.0) } else { rng.random_range(0.30..=0.85) };
            let (z, d_bar, feasible, shortfall) = allocate_raw(&alphas, &caps, demand, true);
            let gamma = min_max_latency_bisection(&alphas, &caps, demand);
            let ok = if tight {
                !feasible
                    && gamma.is_none()
                    && (shortfall - (demand - total)).abs() <= 1e-9 * demand
                    && z.iter().zip(&caps).all(|(zi, c)| (zi - c).abs() <= 1e-9 * c)
            } else {
                feasible && gamma.map_or(false, |g| (g - d_bar).abs() <= 1e-9 * d_bar)
            };
            report.record(ok, || {
                format!("capped n={n} tight={tight}: level {d_bar}, bisection {gamma:?}")
            });
        }
    }
    report
}

fn eviction_suite(cases: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("eviction");
    let mut rng = stream(seed, Stream::Scenario, 3);
    for _ in 0..cases {
        let m = rng.random_range(1..=8usize);
        let entries: Vec<(usize, f64, f64)> = (0..m)
            .map(|id| (id, rng.random_range(0.0..=45.0), 10f64.powf(rng.random_range(6.5..=7.2))))
            .collect();
        let existing: f64 = entries.iter().map(|e| e.2).sum();
        let capacity = existing / rng.random_range(0.60..=0.95);
        let new_size = rng.random_range((capacity - existing) * 1.05..=capacity);
        let frequencies: Vec<u64> = (0..=m).map(|_| rng.random_range(0..=30u64)).collect();

        let mut cache = build_aged_cache(capacity, &entries);
        let mut oracle_entries: Vec<(usize, f64, f64)> =
            cache.entries().map(|(id, e)| (id, e.aoi, e.size_bits)).collect();
        oracle_entries.push((m, 0.0, new_size));
        let expected = eviction_sequence_recomputed(&oracle_entries, &frequencies, capacity);
        let outcome =
            cache.commit_posterior(&TaskType { task_id: m, size_bits: new_size }, &frequencies);
        let ok = outcome.evicted == expected
            && cache.used_bits() <= capacity
            && outcome.stored == !expected.contains(&m);
        report.record(ok, || {
            format!("m={m}: evicted {:?}, replay expected {expected:?}", outcome.evicted)
        });
    }
    report
}

/// Runs every self-check suite with `cases` random cases each.
pub fn run_validation_suites(cases: usize, seed: u64) -> Vec<SuiteReport> {
    vec![matching_suite(cases, seed), allocation_suite(cases, seed), eviction_suite(cases, seed)]
}
