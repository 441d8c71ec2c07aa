//! Seeded synthetic series for tests, demos and the acceptance suite.
//!
//! * `seasonal`: `level + slope·t + amplitude·sin(2πt/period) + N(0, noise²)`.
//! * `traffic`: daily web-traffic-like counts with a weekly profile, slow
//!   growth, Gaussian noise and upward spikes at seeded positions.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};
use crate::timeseries::TimeSeries;

/// 2024-01-01T00:00:00Z.
pub const DEFAULT_START: i64 = 1_704_067_200;
pub const DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Seasonal,
    Traffic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub kind: SynthKind,
    pub n: usize,
    pub period: usize,
    pub seed: u64,
    pub start: i64,
    pub frequency: i64,
    /// Standard deviation of the Gaussian noise.
    pub noise: f64,
    /// Number of injected spikes (traffic only).
    pub spikes: usize,
    /// Spike height in multiples of `noise` (traffic only).
    pub spike_scale: f64,
}

impl SynthConfig {
    pub fn seasonal(n: usize, period: usize, seed: u64) -> Self {
        Self {
            kind: SynthKind::Seasonal,
            n,
            period,
            seed,
            start: DEFAULT_START,
            frequency: DAY,
            noise: 1.0,
            spikes: 0,
            spike_scale: 0.0,
        }
    }

    pub fn traffic(n: usize, seed: u64) -> Self {
        Self {
            kind: SynthKind::Traffic,
            n,
            period: 7,
            seed,
            start: DEFAULT_START,
            frequency: DAY,
            noise: 20.0,
            spikes: 1,
            spike_scale: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub series: TimeSeries,
    /// Indices of injected spikes, ascending.
    pub spikes: Vec<usize>,
}

pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    if config.n < 3 {
        return Err(ForecastError::arg(
            "synthetic series need at least 3 points",
        ));
    }
    if config.period < 2 {
        return Err(ForecastError::arg("period must be at least 2"));
    }
    if !(config.noise >= 0.0 && config.noise.is_finite()) {
        return Err(ForecastError::arg("noise must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, config.noise).map_err(|e| ForecastError::arg(e.to_string()))?;
    let m = config.period as f64;
    let mut spikes = Vec::new();
    let values: Vec<f64> = match config.kind {
        SynthKind::Seasonal => (0..config.n)
            .map(|t| {
                let t = t as f64;
                100.0 + 0.5 * t + 10.0 * (TAU * t / m).sin() + normal.sample(&mut rng)
            })
            .collect(),
        SynthKind::Traffic => {
            let mut v: Vec<f64> = (0..config.n)
                .map(|t| {
                    let tf = t as f64;
                    let weekly = 200.0 * (TAU * tf / m).sin() + 80.0 * (2.0 * TAU * tf / m).cos();
                    1000.0 + 1.5 * tf + weekly + normal.sample(&mut rng)
                })
                .collect();
            // Keep spikes away from the start so models have history before them.
            let lo = (config.n / 4).max(2 * config.period).min(config.n - 1);
            let available = config.n - lo;
            let wanted = config.spikes.min(available);
            while spikes.len() < wanted {
                let k = rng.random_range(lo..config.n);
                if !spikes.contains(&k) {
                    spikes.push(k);
                }
            }
            spikes.sort_unstable();
            for &k in &spikes {
                v[k] += config.spike_scale * config.noise;
            }
            v
        }
    };
    let name = match config.kind {
        SynthKind::Seasonal => "seasonal",
        SynthKind::Traffic => "traffic",
    };
    Ok(SynthOutput {
        series: TimeSeries::from_values(name, config.start, config.frequency, &values)?,
        spikes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_shaped() {
        let a = generate(&SynthConfig::seasonal(240, 12, 7)).unwrap();
        let b = generate(&SynthConfig::seasonal(240, 12, 7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.series.len(), 240);
        assert_eq!(a.series.first_timestamp(), DEFAULT_START);
        assert_ne!(a, generate(&SynthConfig::seasonal(240, 12, 8)).unwrap());
    }

    #[test]
    fn noise_free_seasonal_is_exact() {
        let mut c = SynthConfig::seasonal(24, 12, 1);
        c.noise = 0.0;
        let v = generate(&c).unwrap().series.complete_values().unwrap();
        assert!((v[3] - (101.5 + 10.0)).abs() < 1e-9);
    }

    #[test]
    fn traffic_spikes_injected() {
        let mut c = SynthConfig::traffic(200, 3);
        c.spikes = 3;
        let out = generate(&c).unwrap();
        assert_eq!(out.spikes.len(), 3);
        assert!(out.spikes.iter().all(|&k| k >= 50));
        assert!(out.spikes.windows(2).all(|w| w[0] < w[1]));
    }
}
