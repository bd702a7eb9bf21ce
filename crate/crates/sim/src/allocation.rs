//! Sensing-bit allocation across the matched users: the
//! equal-completion-time split under per-user energy caps, plus the
//! uniform and gain-proportional splits used by the comparison policies.

use crate::assignment::AssignmentResult;
use crate::scenario::UserProfile;

/// Relative slack applied when checking energy and demand feasibility,
/// so allocations sitting exactly on a cap pass.
const FEASIBILITY_SLACK: f64 = 1e-9;

/// Bits per matched user plus the resulting times, energies, and the
/// system latency (the slowest matched user's completion time).
#[derive(Clone, Debug)]
pub struct AllocationResult {
    /// Aligned with the assignment's pair order.
    pub z_bits: Vec<f64>,
    pub completion_time_s: Vec<f64>,
    pub energy_j: Vec<f64>,
    pub system_latency_s: f64,
    /// False when the energy caps cannot cover the full task.
    pub feasible: bool,
    /// Demand left uncovered when infeasible (or when a truncating split
    /// drops bits), in bits.
    pub shortfall_bits: f64,
}

/// Combined per-bit energy cost of sensing plus transmitting, J/bit.
pub fn energy_coefficient(user: &UserProfile, rate: f64) -> f64 {
    user.sensing_energy_per_bit + user.transmit_power_w / rate
}

fn finish(
    assignment: &AssignmentResult,
    users: &[UserProfile],
    z: Vec<f64>,
    feasible: bool,
    shortfall: f64,
) -> AllocationResult {
    let completion_time_s: Vec<f64> = z
        .iter()
        .zip(&assignment.per_user_alpha)
        .map(|(zi, a)| zi * a)
        .collect();
    let energy_j = assignment
        .pairs
        .iter()
        .zip(&assignment.per_user_rate)
        .zip(&z)
        .map(|(((k, _), r), zi)| energy_coefficient(&users[*k], *r) * zi)
        .collect();
    let system_latency_s = completion_time_s.iter().fold(0.0f64, |m, &t| m.max(t));
    AllocationResult {
        z_bits: z,
        completion_time_s,
        energy_j,
        system_latency_s,
        feasible,
        shortfall_bits: shortfall,
    }
}

fn empty_infeasible(task_bits: f64) -> AllocationResult {
    AllocationResult {
        z_bits: Vec::new(),
        completion_time_s: Vec::new(),
        energy_j: Vec::new(),
        system_latency_s: 0.0,
        feasible: false,
        shortfall_bits: task_bits,
    }
}

/// Core equal-completion-time split on plain slices: every active user
/// gets demand proportional to its speed so all finish together; users
/// whose energy cap cannot hold their share are frozen at the cap and the
/// remainder is re-balanced over the rest. With `redistribute` off the
/// shares are truncated pointwise instead and the lost bits reported.
///
/// Returns (z, system latency, feasible, shortfall).
pub fn allocate_raw(
    alphas: &[f64],
    caps_bits: &[f64],
    demand_bits: f64,
    redistribute: bool,
) -> (Vec<f64>, f64, bool, f64) {
    let n = alphas.len();
    assert_eq!(caps_bits.len(), n);
    if n == 0 {
        return (Vec::new(), 0.0, false, demand_bits);
    }

    if !redistribute {
        let inv_sum: f64 = alphas.iter().map(|a| 1.0 / a).sum();
        let level = demand_bits / inv_sum;
        let z: Vec<f64> = alphas
            .iter()
            .zip(caps_bits)
            .map(|(a, cap)| (level / a).min(*cap))
            .collect();
        let assigned: f64 = z.iter().sum();
        let shortfall = (demand_bits - assigned).max(0.0);
        let d_bar = z.iter().zip(alphas).map(|(zi, a)| zi * a).fold(0.0f64, f64::max);
        let feasible = shortfall <= FEASIBILITY_SLACK * demand_bits;
        return (z, d_bar, feasible, shortfall);
    }

    let mut z = vec![0.0f64; n];
    let mut active: Vec<bool> = vec![true; n];
    let mut remaining = demand_bits;
    loop {
        let inv_sum: f64 = (0..n).filter(|&i| active[i]).map(|i| 1.0 / alphas[i]).sum();
        let level = (remaining / inv_sum).max(0.0);
        // A user violates its cap when even the equal-finish share does
        // not fit; its best feasible finish time is cap * alpha < level.
        let mut any_frozen = false;
        for i in 0..n {
            if active[i] && caps_bits[i] * alphas[i] < level {
                z[i] = caps_bits[i];
                remaining -= caps_bits[i];
                active[i] = false;
                any_frozen = true;
            }
        }
        if !any_frozen {
            for i in 0..n {
                if active[i] {
                    z[i] = level / alphas[i];
                }
            }
            let d_bar = level.max(z.iter().zip(alphas).map(|(zi, a)| zi * a).fold(0.0, f64::max));
            return (z, d_bar, true, 0.0);
        }
        if active.iter().all(|a| !a) {
            // Every user sits at its cap and demand is left over.
            let d_bar = z.iter().zip(alphas).map(|(zi, a)| zi * a).fold(0.0f64, f64::max);
            return (z, d_bar, false, remaining.max(0.0));
        }
    }
}

/// Equal-completion-time allocation of the task over the matched users.
pub fn allocate(
    assignment: &AssignmentResult,
    users: &[UserProfile],
    task_bits: f64,
    redistribute: bool,
) -> AllocationResult {
    if assignment.is_empty() {
        return empty_infeasible(task_bits);
    }
    let caps: Vec<f64> = energy_caps(assignment, users);
    let (z, _, feasible, shortfall) =
        allocate_raw(&assignment.per_user_alpha, &caps, task_bits, redistribute);
    finish(assignment, users, z, feasible, shortfall)
}

/// Every matched user gets the same share, truncated to its energy cap.
pub fn uniform_split(
    assignment: &AssignmentResult,
    users: &[UserProfile],
    task_bits: f64,
) -> AllocationResult {
    if assignment.is_empty() {
        return empty_infeasible(task_bits);
    }
    let caps = energy_caps(assignment, users);
    let share = task_bits / assignment.len() as f64;
    truncated(assignment, users, task_bits, |_, cap| share.min(cap), &caps)
}

/// Shares proportional to each matched pair's channel gain, truncated to
/// the energy caps.
pub fn gain_fractional_split(
    assignment: &AssignmentResult,
    users: &[UserProfile],
    task_bits: f64,
) -> AllocationResult {
    if assignment.is_empty() {
        return empty_infeasible(task_bits);
    }
    let caps = energy_caps(assignment, users);
    let gain_sum: f64 = assignment.per_user_gain.iter().sum();
    truncated(
        assignment,
        users,
        task_bits,
        |i, cap| (task_bits * assignment.per_user_gain[i] / gain_sum).min(cap),
        &caps,
    )
}

fn truncated(
    assignment: &AssignmentResult,
    users: &[UserProfile],
    task_bits: f64,
    share: impl Fn(usize, f64) -> f64,
    caps: &[f64],
) -> AllocationResult {
    let z: Vec<f64> = caps.iter().enumerate().map(|(i, &cap)| share(i, cap)).collect();
    let assigned: f64 = z.iter().sum();
    let shortfall = (task_bits - assigned).max(0.0);
    let feasible = shortfall <= FEASIBILITY_SLACK * task_bits;
    finish(assignment, users, z, feasible, shortfall)
}

/// Largest bit count each matched user can process without exceeding its
/// energy budget.
pub fn energy_caps(assignment: &AssignmentResult, users: &[UserProfile]) -> Vec<f64> {
    assignment
        .pairs
        .iter()
        .zip(&assignment.per_user_rate)
        .map(|((k, _), r)| {
            let user = &users[*k];
            user.energy_budget_j / energy_coefficient(user, *r)
        })
        .collect()
}

/// Per-user check that the allocation respects each energy budget, with
/// slack for allocations sitting exactly on a cap.
pub fn energy_within_budget(
    allocation: &AllocationResult,
    assignment: &AssignmentResult,
    users: &[UserProfile],
) -> Vec<bool> {
    allocation
        .energy_j
        .iter()
        .zip(&assignment.pairs)
        .map(|(e, (k, _))| *e <= users[*k].energy_budget_j * (1.0 + FEASIBILITY_SLACK))
        .collect()
}
