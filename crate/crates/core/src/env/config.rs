use crate::{Error, Result};

/// `10^((dBm - 30) / 10)` watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Base-station and user parameters. Powers are stored in watts; the
/// defaults document their dBm originals.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    /// K
    pub users: usize,
    /// M
    pub blocks: usize,
    /// N
    pub cores: usize,
    pub uplink_bandwidth_hz: f64,
    pub downlink_bandwidth_hz: f64,
    /// -174 dBm/Hz
    pub noise_density_w_per_hz: f64,
    /// -207 dBm
    pub uplink_interference_w: f64,
    /// -207 dBm
    pub downlink_interference_w: f64,
    pub bs_power_w: f64,
    pub max_power_w: f64,
    /// CPU cycles per second.
    pub cpu_capacity_hz: f64,
    /// Cycles per VR pre-processing job; 1 gives the bare reciprocal delay.
    pub workload_cycles: f64,
    pub waterfall_threshold: f64,
    pub uplink_bits: f64,
    pub downlink_bits: f64,
    pub max_delay_s: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// Steps per episode.
    pub horizon: usize,
    pub mean_channel_gain: f64,
    pub channel_correlation: f64,
    pub cpu_walk_std: f64,
    /// Ceiling applied to delays of unserved users when averaging.
    pub delay_cap_s: f64,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            users: 3,
            blocks: 6,
            cores: 8,
            uplink_bandwidth_hz: 1e6,
            downlink_bandwidth_hz: 20e6,
            noise_density_w_per_hz: dbm_to_watts(-174.0),
            uplink_interference_w: dbm_to_watts(-207.0),
            downlink_interference_w: dbm_to_watts(-207.0),
            bs_power_w: 1.0,
            max_power_w: 0.01,
            cpu_capacity_hz: 2.3e9,
            workload_cycles: 1e7,
            waterfall_threshold: 1.0,
            uplink_bits: (8 * 32 * 16) as f64,
            downlink_bits: 1e6,
            max_delay_s: 0.1,
            eta1: 1.0,
            eta2: 1.0,
            horizon: 50,
            mean_channel_gain: 1e-10,
            channel_correlation: 0.0,
            cpu_walk_std: 0.05,
            delay_cap_s: 1.0,
            seed: 0,
        }
    }
}

impl EnvConfig {
    /// Uplink payload for a `channels x length` window of 16-bit samples.
    pub fn window_bits(channels: usize, length: usize) -> f64 {
        (channels * length * 16) as f64
    }

    /// `I_m + B_U * N0`.
    pub fn uplink_noise_w(&self) -> f64 {
        self.uplink_interference_w + self.uplink_bandwidth_hz * self.noise_density_w_per_hz
    }

    /// `I_D + B_D * N0`.
    pub fn downlink_noise_w(&self) -> f64 {
        self.downlink_interference_w + self.downlink_bandwidth_hz * self.noise_density_w_per_hz
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(format!("env: {msg}")));
        if self.users == 0 || self.blocks == 0 || self.cores == 0 || self.horizon == 0 {
            return fail("users, blocks, cores and horizon must be positive");
        }
        let positive = [
            ("uplink_bandwidth_hz", self.uplink_bandwidth_hz),
            ("downlink_bandwidth_hz", self.downlink_bandwidth_hz),
            ("noise_density", self.noise_density_w_per_hz),
            ("uplink_interference", self.uplink_interference_w),
            ("downlink_interference", self.downlink_interference_w),
            ("bs_power", self.bs_power_w),
            ("max_power", self.max_power_w),
            ("cpu_capacity_hz", self.cpu_capacity_hz),
            ("workload_cycles", self.workload_cycles),
            ("waterfall_threshold", self.waterfall_threshold),
            ("uplink_bits", self.uplink_bits),
            ("downlink_bits", self.downlink_bits),
            ("max_delay_s", self.max_delay_s),
            ("mean_channel_gain", self.mean_channel_gain),
            ("delay_cap_s", self.delay_cap_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("env: {name} must be positive and finite, got {v}")));
            }
        }
        if !(self.eta1 >= 0.0 && self.eta2 >= 0.0) {
            return fail("eta1 and eta2 must be non-negative");
        }
        if !(0.0..1.0).contains(&self.channel_correlation) {
            return fail("channel_correlation must be in [0, 1)");
        }
        if !(self.cpu_walk_std >= 0.0) {
            return fail("cpu_walk_std must be non-negative");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-174.0) / 10f64.powf(-20.4) - 1.0).abs() < 1e-12);
        assert!((dbm_to_watts(-207.0) / 10f64.powf(-23.7) - 1.0).abs() < 1e-12);
        assert!((watts_to_dbm(0.01) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn defaults_validate() {
        EnvConfig::default().validate().unwrap();
        let bad = EnvConfig { max_delay_s: 0.0, ..EnvConfig::default() };
        assert!(bad.validate().is_err());
        let bad = EnvConfig { eta1: -1.0, ..EnvConfig::default() };
        assert!(bad.validate().is_err());
        let bad = EnvConfig { channel_correlation: 1.0, ..EnvConfig::default() };
        assert!(bad.validate().is_err());
    }
}
