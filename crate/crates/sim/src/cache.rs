//! Base-station result cache: age bookkeeping, capacity-bounded commits,
//! and the two replacement orders (ascending posterior score, oldest
//! first).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::scenario::TaskType;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CacheEntry {
    pub aoi: f64,
    pub size_bits: f64,
}

/// Prior, likelihood, and normalized posterior of one cached task. The
/// prior rewards freshness (1/(age+1)), the likelihood rewards demand per
/// bit (ln(1 + requests/size)), and the posterior is their normalized
/// product over the cached set.
#[derive(Clone, Copy, Debug)]
pub struct PosteriorScore {
    pub prior: f64,
    pub likelihood: f64,
    pub posterior: f64,
}

/// What a commit did: whether the fresh result is now cached, and which
/// entries were displaced to make room.
#[derive(Clone, Debug, Default)]
pub struct CommitOutcome {
    pub stored: bool,
    pub evicted: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct CacheState {
    entries: BTreeMap<usize, CacheEntry>,
    capacity_bits: f64,
}

impl CacheState {
    pub fn new(capacity_bits: f64) -> Self {
        CacheState { entries: BTreeMap::new(), capacity_bits }
    }

    pub fn capacity_bits(&self) -> f64 {
        self.capacity_bits
    }

    pub fn used_bits(&self) -> f64 {
        self.entries.values().map(|e| e.size_bits).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, task_id: usize) -> bool {
        self.entries.contains_key(&task_id)
    }

    /// (cached, age); age is 0 for absent tasks.
    pub fn lookup(&self, task_id: usize) -> (bool, f64) {
        match self.entries.get(&task_id) {
            Some(e) => (true, e.aoi),
            None => (false, 0.0),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &CacheEntry)> {
        self.entries.iter().map(|(&id, e)| (id, e))
    }

    /// Ages every entry by the previous slot's duration, then purges
    /// entries at or past the ceiling. Returns the purged ids (ascending).
    pub fn advance_aoi(&mut self, elapsed: f64, aoi_max: f64) -> Vec<usize> {
        for e in self.entries.values_mut() {
            e.aoi += elapsed;
        }
        let purged: Vec<usize> = self
            .entries
            .iter()
            .filter(|(_, e)| e.aoi >= aoi_max)
            .map(|(&id, _)| id)
            .collect();
        for id in &purged {
            self.entries.remove(id);
        }
        purged
    }

    /// Normalized posterior scores over the cached set, ascending id. If
    /// every likelihood is zero (no entry was ever requested) the
    /// posterior falls back to uniform.
    pub fn posterior_scores(&self, frequencies: &[u64]) -> Vec<(usize, PosteriorScore)> {
        let weights: Vec<(usize, f64, f64)> = self
            .entries
            .iter()
            .map(|(&id, e)| {
                let prior = 1.0 / (e.aoi + 1.0);
                let likelihood = (frequencies[id] as f64 / e.size_bits).ln_1p();
                (id, prior, likelihood)
            })
            .collect();
        let total: f64 = weights.iter().map(|(_, p, l)| p * l).sum();
        let uniform = 1.0 / weights.len().max(1) as f64;
        weights
            .into_iter()
            .map(|(id, prior, likelihood)| {
                let posterior =
                    if total > 0.0 { prior * likelihood / total } else { uniform };
                (id, PosteriorScore { prior, likelihood, posterior })
            })
            .collect()
    }

    /// Commits a fresh sensing result under posterior-score replacement.
    /// An already-cached task is refreshed in place; otherwise the result
    /// is inserted and, if capacity overflows, cached tasks leave in
    /// ascending posterior order (ties: larger size first, then lower id)
    /// until the rest fits. The fresh insert competes on the same terms.
    pub fn commit_posterior(&mut self, task: &TaskType, frequencies: &[u64]) -> CommitOutcome {
        self.commit_with(task, |state| {
            let scores = state.posterior_scores(frequencies);
            let mut order: Vec<(usize, f64, f64)> = scores
                .into_iter()
                .map(|(id, s)| (id, s.posterior, state.entries[&id].size_bits))
                .collect();
            order.sort_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then(b.2.total_cmp(&a.2))
                    .then(a.0.cmp(&b.0))
            });
            order.into_iter().map(|(id, _, _)| id).collect()
        })
    }

    /// Commits a fresh sensing result, displacing the oldest entries
    /// (ties: larger size first, then lower id) until the rest fits.
    pub fn commit_replace_oldest(&mut self, task: &TaskType) -> CommitOutcome {
        self.commit_with(task, |state| {
            let mut order: Vec<(usize, f64, f64)> = state
                .entries
                .iter()
                .map(|(&id, e)| (id, e.aoi, e.size_bits))
                .collect();
            order.sort_by(|a, b| {
                b.1.total_cmp(&a.1)
                    .then(b.2.total_cmp(&a.2))
                    .then(a.0.cmp(&b.0))
            });
            order.into_iter().map(|(id, _, _)| id).collect()
        })
    }

    /// Shared commit shape: refresh in place, or insert and evict along
    /// the order produced by `eviction_order` (computed with the fresh
    /// insert already present) until capacity holds.
    fn commit_with(
        &mut self,
        task: &TaskType,
        eviction_order: impl Fn(&CacheState) -> Vec<usize>,
    ) -> CommitOutcome {
        if let Some(entry) = self.entries.get_mut(&task.task_id) {
            entry.aoi = 0.0;
            return CommitOutcome { stored: true, evicted: Vec::new() };
        }
        if task.size_bits > self.capacity_bits {
            return CommitOutcome { stored: false, evicted: Vec::new() };
        }
        self.entries.insert(task.task_id, CacheEntry { aoi: 0.0, size_bits: task.size_bits });
        if self.used_bits() <= self.capacity_bits {
            return CommitOutcome { stored: true, evicted: Vec::new() };
        }
        let order = eviction_order(self);
        let mut evicted = Vec::new();
        for id in order {
            if self.used_bits() <= self.capacity_bits {
                break;
            }
            self.entries.remove(&id);
            evicted.push(id);
        }
        let stored = self.entries.contains_key(&task.task_id);
        CommitOutcome { stored, evicted }
    }

    /// One line per entry, ascending id: `task_id aoi size_bits`.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (&id, e) in &self.entries {
            writeln!(out, "{} {} {}", id, e.aoi, e.size_bits).unwrap();
        }
        out
    }
}
