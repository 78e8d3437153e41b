use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{clearsky_curve, timestamp_of, Dataset, IrradianceRecord, TimeEmbedding};
use crate::{Error, Result};

/// Innovation scale of the hourly cloud-index process.
pub const CLOUD_NOISE: f64 = 0.15;
/// Measurement noise on the cloud-index proxy feature.
pub const PROXY_NOISE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub latitude: f64,
    pub year_count: u32,
    pub cloud_autocorrelation: f64,
    pub cloud_floor: f64,
    pub seed: u64,
    pub start_year: i32,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { latitude: 60.0, year_count: 5, cloud_autocorrelation: 0.7, cloud_floor: 0.2, seed: 0, start_year: 2016 }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(Error::invalid(format!("latitude {} outside [-90, 90]", self.latitude)));
        }
        if self.year_count == 0 {
            return Err(Error::invalid("year_count must be positive"));
        }
        if !(0.0..1.0).contains(&self.cloud_autocorrelation) {
            return Err(Error::invalid(format!("cloud autocorrelation {} outside [0, 1)", self.cloud_autocorrelation)));
        }
        if !(self.cloud_floor > 0.0 && self.cloud_floor <= 1.0) {
            return Err(Error::invalid(format!("cloud floor {} outside (0, 1]", self.cloud_floor)));
        }
        Ok(())
    }
}

pub const SYNTHETIC_FEATURES: [&str; 4] = ["ghi", "ghi_lag24", "clear_sky_feature", "cloud_proxy"];

/// Hourly series of `year_count` 365-day years (29 February is skipped).
///
/// The cloud index follows `k' = ρ k + (1 - ρ) + σ η` clamped to
/// `[cloud_floor, 1]`, advancing only while the sun is up, and the target is
/// `clear_sky · k`.
pub fn synthesize_dataset(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rho = config.cloud_autocorrelation;
    let mut k = 1.0_f64;
    let mut targets: Vec<f64> = Vec::with_capacity(config.year_count as usize * 8760);
    let mut records = Vec::with_capacity(config.year_count as usize * 8760);

    for year in config.start_year..config.start_year + config.year_count as i32 {
        let start = timestamp_of(year, 1, 1, 0).expect("valid year");
        let end = timestamp_of(year + 1, 1, 1, 0).expect("valid year");
        let leap_day = timestamp_of(year, 2, 29, 0);
        for ts in start..end {
            if let Some(ld) = leap_day {
                if (ld..ld + 24).contains(&ts) {
                    continue;
                }
            }
            let cs = clearsky_curve(ts as f64, config.latitude);
            if cs > 0.0 {
                let eta: f64 = StandardNormal.sample(&mut rng);
                k = (rho * k + (1.0 - rho) + CLOUD_NOISE * eta).clamp(config.cloud_floor, 1.0);
            }
            let proxy_noise: f64 = StandardNormal.sample(&mut rng);
            let target = cs * k;
            let lag24 = if targets.len() >= 24 { targets[targets.len() - 24] } else { 0.0 };
            targets.push(target);

            let mut features = vec![target, lag24, cs, k + PROXY_NOISE * proxy_noise];
            features.extend_from_slice(&TimeEmbedding::at(ts).values());
            records.push(IrradianceRecord { timestamp: ts, features, target, clear_sky: cs });
        }
    }

    let names = SYNTHETIC_FEATURES.iter().chain(TimeEmbedding::NAMES.iter()).map(|s| s.to_string()).collect();
    Dataset::new(names, records)
}
