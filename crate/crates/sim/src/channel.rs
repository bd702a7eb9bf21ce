//! Per-slot link model: distance path loss, unit-mean exponential power
//! fading, and the OFDMA subchannel rate.

use rand::Rng;
use rand_distr::Exp1;

use crate::scenario::UserProfile;

/// Linear power gains for one slot, indexed by (user, subchannel).
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub num_users: usize,
    pub num_subchannels: usize,
    gains: Vec<f64>,
}

impl ChannelRealization {
    pub fn gain(&self, user: usize, subchannel: usize) -> f64 {
        self.gains[user * self.num_subchannels + subchannel]
    }
}

/// dBm/Hz to W/Hz.
pub fn noise_density_w_per_hz(dbm_per_hz: f64) -> f64 {
    10f64.powf(dbm_per_hz / 10.0) * 1e-3
}

/// Distance-dependent linear gain from the 128.1 + 37.6*log10(d_km) dB
/// path-loss model. Distances come in meters and are converted.
pub fn path_loss_gain(distance_m: f64) -> f64 {
    let d_km = distance_m / 1000.0;
    let pl_db = 128.1 + 37.6 * d_km.log10();
    10f64.powf(-pl_db / 10.0)
}

/// Block fading: one exponential power draw (squared unit-variance
/// Rayleigh envelope) per user and subchannel, redrawn every slot.
pub fn draw_channels(
    users: &[UserProfile],
    num_subchannels: usize,
    rng: &mut impl Rng,
) -> ChannelRealization {
    let mut gains = Vec::with_capacity(users.len() * num_subchannels);
    for user in users {
        let base = path_loss_gain(user.distance_m);
        for _ in 0..num_subchannels {
            let fading: f64 = rng.sample(Exp1);
            gains.push(base * fading);
        }
    }
    ChannelRealization { num_users: users.len(), num_subchannels, gains }
}

/// Shannon rate of one subchannel, bit/s. ln_1p keeps the value positive
/// even when the SNR drops below f64 resolution around 1.0.
pub fn subchannel_rate(power_w: f64, gain: f64, bandwidth_hz: f64, noise_w_per_hz: f64) -> f64 {
    let snr = power_w * gain / (noise_w_per_hz * bandwidth_hz);
    bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn path_loss_at_one_kilometer_is_the_reference_value() {
        let g = path_loss_gain(1000.0);
        assert!((g - 10f64.powf(-12.81)).abs() / g < 1e-12);
    }

    #[test]
    fn path_loss_at_hundred_meters() {
        let g = path_loss_gain(100.0);
        assert!((g - 10f64.powf(-9.05)).abs() / g < 1e-12);
    }

    #[test]
    fn path_loss_decreases_with_distance() {
        let mut prev = path_loss_gain(30.0);
        for d in [50.0, 100.0, 200.0, 350.0, 500.0] {
            let g = path_loss_gain(d);
            assert!(g < prev, "gain rose at {d} m");
            prev = g;
        }
    }

    #[test]
    fn fading_power_has_unit_mean() {
        let mut rng = stream(1, Stream::Channel, 0);
        let user = UserProfile {
            user_id: 0,
            distance_m: 1000.0,
            transmit_power_w: 0.1,
            sensing_rate: 1e5,
            sensing_energy_per_bit: 1e-12,
            energy_budget_j: 0.05,
        };
        let ch = draw_channels(&[user], 100_000, &mut rng);
        let base = path_loss_gain(1000.0);
        let mean: f64 =
            (0..100_000).map(|n| ch.gain(0, n) / base).sum::<f64>() / 100_000.0;
        assert!((mean - 1.0).abs() < 0.02, "fading mean {mean}");
    }

    #[test]
    fn rate_matches_log2_identities() {
        // SNR 1 -> one bit per hertz, SNR 3 -> two.
        let n0 = 1e-15;
        let w = 1.0e6;
        let p_for_snr = |snr: f64| snr * n0 * w; // with gain 1
        assert!((subchannel_rate(p_for_snr(1.0), 1.0, w, n0) - 1.0e6).abs() < 1e-6);
        assert!((subchannel_rate(p_for_snr(3.0), 1.0, w, n0) - 2.0e6).abs() < 1e-6);
    }

    #[test]
    fn rate_at_reference_operating_point() {
        let n0 = noise_density_w_per_hz(-174.0);
        assert!((n0 - 3.98107170553e-21).abs() / n0 < 1e-9);
        let r = subchannel_rate(0.1, 1e-12, 1.0e6, n0);
        assert!((r - 4.70702026e6).abs() / r < 1e-6, "rate {r}");
    }

    #[test]
    fn rate_is_monotone_in_power_and_gain() {
        let n0 = noise_density_w_per_hz(-174.0);
        let base = subchannel_rate(0.1, 1e-12, 1.0e6, n0);
        assert!(subchannel_rate(0.2, 1e-12, 1.0e6, n0) > base);
        assert!(subchannel_rate(0.1, 2e-12, 1.0e6, n0) > base);
        assert!(base > 0.0);
    }

    #[test]
    fn rate_vanishes_with_the_signal() {
        let n0 = noise_density_w_per_hz(-174.0);
        let tiny = subchannel_rate(1e-30, 1e-12, 1.0e6, n0);
        assert!(tiny > 0.0 && tiny < 1.0);
    }
}
