//! Link budget, delay and packet error for one user under one allocation.

use super::{ActionVector, EnvConfig, EnvState};

/// Number of blocks assigned to user `k`.
pub fn blocks_assigned(k: usize, action: &ActionVector) -> usize {
    action.blocks.iter().filter(|&&u| u == k).count()
}

/// `p_k h_k / (I_m + B_U N0)`.
pub fn uplink_sinr(k: usize, action: &ActionVector, state: &EnvState, config: &EnvConfig) -> f64 {
    action.powers[k] * state.gains[k] / config.uplink_noise_w()
}

/// Sum over user `k`'s blocks of `B_U log2(1 + SINR)`, in bit/s.
pub fn uplink_rate(k: usize, action: &ActionVector, state: &EnvState, config: &EnvConfig) -> f64 {
    let per_block = config.uplink_bandwidth_hz * (1.0 + uplink_sinr(k, action, state, config)).log2();
    blocks_assigned(k, action) as f64 * per_block
}

/// `B_D log2(1 + P_B h_k / (I_D + B_D N0))`, in bit/s.
pub fn downlink_rate(k: usize, state: &EnvState, config: &EnvConfig) -> f64 {
    let sinr = config.bs_power_w * state.gains[k] / config.downlink_noise_w();
    config.downlink_bandwidth_hz * (1.0 + sinr).log2()
}

/// Core hosting user `k`.
pub fn core_of(k: usize, config: &EnvConfig) -> usize {
    k % config.cores
}

/// `workload / (tau_k u_n upsilon)`; infinite when the user has no CPU share.
pub fn processing_delay(k: usize, action: &ActionVector, state: &EnvState, config: &EnvConfig) -> f64 {
    let share = action.user_share(k);
    if share <= 0.0 {
        return f64::INFINITY;
    }
    config.workload_cycles / (share * state.cpu[core_of(k, config)] * config.cpu_capacity_hz)
}

/// `(d_k, D_k)` with `D_k = d_k + l_D / r_D + l_U / r_U`.
///
/// `D_k` is infinite when the user has no blocks or no CPU share.
pub fn round_trip_delay(k: usize, action: &ActionVector, state: &EnvState, config: &EnvConfig) -> (f64, f64) {
    let d = processing_delay(k, action, state, config);
    let r_up = uplink_rate(k, action, state, config);
    let r_down = downlink_rate(k, state, config);
    if !d.is_finite() || r_up <= 0.0 || r_down <= 0.0 {
        return (d, f64::INFINITY);
    }
    (d, d + config.downlink_bits / r_down + config.uplink_bits / r_up)
}

/// Per-block error `1 - exp(-z sigma^2 / (p_k h_k))`.
pub fn block_error(k: usize, action: &ActionVector, state: &EnvState, config: &EnvConfig) -> f64 {
    let received = action.powers[k] * state.gains[k];
    if received <= 0.0 {
        return 1.0;
    }
    -(-config.waterfall_threshold * config.uplink_noise_w() / received).exp_m1()
}

/// Sum of per-block errors over the user's blocks, before clamping.
pub fn packet_error_raw(k: usize, action: &ActionVector, state: &EnvState, config: &EnvConfig) -> f64 {
    blocks_assigned(k, action) as f64 * block_error(k, action, state, config)
}

/// [`packet_error_raw`] clamped to at most 1.
pub fn packet_error(k: usize, action: &ActionVector, state: &EnvState, config: &EnvConfig) -> f64 {
    packet_error_raw(k, action, state, config).min(1.0)
}
