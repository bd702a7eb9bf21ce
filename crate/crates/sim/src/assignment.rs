//! User-subchannel matching: per-bit processing times and the
//! maximum-total-speed assignment, solved by a shortest-augmenting-path
//! Hungarian method with potentials.

use crate::channel::{subchannel_rate, ChannelRealization};
use crate::scenario::UserProfile;
use crate::SimError;

/// Per-(user, subchannel) link quantities for one slot: channel gain,
/// achievable rate, and the per-bit processing time alpha = 1/o + 1/r.
#[derive(Clone, Debug)]
pub struct AlphaMatrix {
    pub num_users: usize,
    pub num_subchannels: usize,
    alphas: Vec<f64>,
    rates: Vec<f64>,
    gains: Vec<f64>,
}

impl AlphaMatrix {
    pub fn alpha(&self, user: usize, subchannel: usize) -> f64 {
        self.alphas[user * self.num_subchannels + subchannel]
    }

    pub fn rate(&self, user: usize, subchannel: usize) -> f64 {
        self.rates[user * self.num_subchannels + subchannel]
    }

    pub fn gain(&self, user: usize, subchannel: usize) -> f64 {
        self.gains[user * self.num_subchannels + subchannel]
    }

    /// Synthetic instance from explicit per-cell values, row-major
    /// (user-major) order. For tests and oracles.
    pub fn from_parts(
        num_users: usize,
        num_subchannels: usize,
        alphas: Vec<f64>,
        rates: Vec<f64>,
        gains: Vec<f64>,
    ) -> Self {
        assert_eq!(alphas.len(), num_users * num_subchannels);
        assert_eq!(rates.len(), alphas.len());
        assert_eq!(gains.len(), alphas.len());
        AlphaMatrix { num_users, num_subchannels, alphas, rates, gains }
    }

    /// Synthetic instance where only the alphas matter; rates are set to
    /// their transmission-only limit 1/alpha and gains to 1.
    pub fn from_alphas(num_users: usize, num_subchannels: usize, alphas: Vec<f64>) -> Self {
        let rates = alphas.iter().map(|a| 1.0 / a).collect();
        let gains = vec![1.0; alphas.len()];
        Self::from_parts(num_users, num_subchannels, alphas, rates, gains)
    }
}

/// Computes gain, rate, and alpha for every (user, subchannel) cell.
pub fn build_alpha(
    users: &[UserProfile],
    channels: &ChannelRealization,
    bandwidth_hz: f64,
    noise_w_per_hz: f64,
) -> AlphaMatrix {
    let num_users = users.len();
    let num_subchannels = channels.num_subchannels;
    let cells = num_users * num_subchannels;
    let mut alphas = Vec::with_capacity(cells);
    let mut rates = Vec::with_capacity(cells);
    let mut gains = Vec::with_capacity(cells);
    for user in users {
        for n in 0..num_subchannels {
            let g = channels.gain(user.user_id, n);
            let r = subchannel_rate(user.transmit_power_w, g, bandwidth_hz, noise_w_per_hz);
            gains.push(g);
            rates.push(r);
            alphas.push(1.0 / user.sensing_rate + 1.0 / r);
        }
    }
    AlphaMatrix { num_users, num_subchannels, alphas, rates, gains }
}

/// A feasible matching plus the link quantities of each matched pair,
/// ordered by subchannel index.
#[derive(Clone, Debug)]
pub struct AssignmentResult {
    /// (user, subchannel) pairs; users and subchannels each appear at
    /// most once and the matching size is min(num_users, num_subchannels).
    pub pairs: Vec<(usize, usize)>,
    pub per_user_rate: Vec<f64>,
    pub per_user_alpha: Vec<f64>,
    pub per_user_gain: Vec<f64>,
    /// Total matched speed, sum of 1/alpha over the pairs, bit/s.
    pub weight_sum: f64,
}

impl AssignmentResult {
    pub fn from_pairs(matrix: &AlphaMatrix, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_by_key(|&(_, n)| n);
        let per_user_rate = pairs.iter().map(|&(k, n)| matrix.rate(k, n)).collect();
        let per_user_alpha: Vec<f64> = pairs.iter().map(|&(k, n)| matrix.alpha(k, n)).collect();
        let per_user_gain = pairs.iter().map(|&(k, n)| matrix.gain(k, n)).collect();
        let weight_sum = per_user_alpha.iter().map(|a| 1.0 / a).sum();
        AssignmentResult { pairs, per_user_rate, per_user_alpha, per_user_gain, weight_sum }
    }

    pub fn selected_users(&self) -> Vec<usize> {
        self.pairs.iter().map(|&(k, _)| k).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Matching that maximizes the total matched speed, i.e. minimizes the
/// equal-split latency of any fixed task size.
pub fn solve_matching(matrix: &AlphaMatrix) -> Result<AssignmentResult, SimError> {
    let (k, n) = (matrix.num_users, matrix.num_subchannels);
    if k == 0 || n == 0 {
        return Err(SimError::EmptyAlphaMatrix);
    }
    // Maximizing sum 1/alpha is a min-cost assignment on -1/alpha. The
    // solver wants rows <= columns, so orient the smaller side as rows.
    let pairs: Vec<(usize, usize)> = if k <= n {
        let assigned = hungarian_min(k, n, |row, col| -1.0 / matrix.alpha(row, col));
        assigned.into_iter().enumerate().map(|(row, col)| (row, col)).collect()
    } else {
        let assigned = hungarian_min(n, k, |row, col| -1.0 / matrix.alpha(col, row));
        assigned.into_iter().enumerate().map(|(row, col)| (col, row)).collect()
    };
    Ok(AssignmentResult::from_pairs(matrix, pairs))
}

/// Minimum-cost assignment of every row to a distinct column, rows <=
/// columns. Returns the column of each row. Shortest augmenting paths
/// with dual potentials; O(rows^2 * columns). Column scans ascend, and
/// only strict improvements update, so the result is deterministic.
fn hungarian_min<F: Fn(usize, usize) -> f64>(rows: usize, cols: usize, cost: F) -> Vec<usize> {
    debug_assert!(rows >= 1 && rows <= cols);
    // 1-based working arrays; column 0 is the virtual start of each path.
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut matched_row = vec![0usize; cols + 1]; // 0 = free column
    let mut way = vec![0usize; cols + 1];

    for row in 1..=rows {
        matched_row[0] = row;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path back to the virtual column.
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }

    let mut row_to_col = vec![usize::MAX; rows];
    for j in 1..=cols {
        if matched_row[j] != 0 {
            row_to_col[matched_row[j] - 1] = j - 1;
        }
    }
    debug_assert!(row_to_col.iter().all(|&c| c != usize::MAX));
    row_to_col
}
