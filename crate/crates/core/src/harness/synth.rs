//! Seeded synthetic series for fixtures and smoke runs.
//!
//! * `ar`: AR(2) with coefficients drawn uniformly from the stationarity
//!   triangle shrunk to `|phi1| + phi2 < 0.95`, `phi2 > -0.9`; unit-variance
//!   Gaussian innovations and a 100-step burn-in.
//! * `sine`: unit sine with period drawn from `[8, 40]` samples, random phase
//!   and Gaussian noise of standard deviation 0.1.
//! * `noise`: standard Gaussian white noise.
//! * `trend`: strictly increasing walk with positive increments.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::data::{DataError, TimeSeries, MIN_SERIES_LEN};

const AR_BURN_IN: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("unknown series kind '{0}' (expected ar, sine, noise or trend)")]
    UnknownKind(String),

    #[error("series length {0} is below the minimum of {MIN_SERIES_LEN}")]
    TooShort(usize),

    #[error("start values ({start}) must match the AR order ({order})")]
    StartMismatch { start: usize, order: usize },

    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Ar,
    Sine,
    Noise,
    Trend,
}

impl SynthKind {
    pub fn id(self) -> &'static str {
        match self {
            SynthKind::Ar => "ar",
            SynthKind::Sine => "sine",
            SynthKind::Noise => "noise",
            SynthKind::Trend => "trend",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SynthKind {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "ar" => Ok(SynthKind::Ar),
            "sine" => Ok(SynthKind::Sine),
            "noise" => Ok(SynthKind::Noise),
            "trend" => Ok(SynthKind::Trend),
            other => Err(SynthError::UnknownKind(other.to_string())),
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws `(phi1, phi2)` uniformly from the shrunk stationarity triangle.
pub fn draw_stable_ar2(rng: &mut impl Rng) -> (f64, f64) {
    loop {
        let phi1: f64 = rng.random_range(-1.9..1.9);
        let phi2: f64 = rng.random_range(-0.9..0.95);
        if phi1.abs() + phi2 < 0.95 {
            return (phi1, phi2);
        }
    }
}

/// Runs `y_t = sum_j coefficients[j] * y_{t-1-j} + noise_sd * e_t` from the
/// given start values (most recent last). The start values are the first
/// observations of the returned series.
pub fn ar_series(
    id: &str,
    coefficients: &[f64],
    noise_sd: f64,
    start: &[f64],
    n: usize,
    seed: u64,
) -> Result<TimeSeries, SynthError> {
    if start.len() != coefficients.len() {
        return Err(SynthError::StartMismatch {
            start: start.len(),
            order: coefficients.len(),
        });
    }
    if n < MIN_SERIES_LEN {
        return Err(SynthError::TooShort(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = start.to_vec();
    while values.len() < n {
        let t = values.len();
        let mut next: f64 = coefficients
            .iter()
            .enumerate()
            .map(|(j, phi)| phi * values[t - 1 - j])
            .sum();
        if noise_sd > 0.0 {
            next += noise_sd * normal(&mut rng);
        }
        values.push(next);
    }
    values.truncate(n);
    Ok(TimeSeries::new(id, values)?)
}

pub fn generate_synthetic(kind: SynthKind, n: usize, seed: u64) -> Result<TimeSeries, SynthError> {
    if n < MIN_SERIES_LEN {
        return Err(SynthError::TooShort(n));
    }
    let id = format!("{kind}-{seed}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = match kind {
        SynthKind::Ar => {
            let (phi1, phi2) = draw_stable_ar2(&mut rng);
            let (mut y1, mut y2) = (0.0, 0.0);
            let mut out = Vec::with_capacity(n);
            for t in 0..n + AR_BURN_IN {
                let y = phi1 * y1 + phi2 * y2 + normal(&mut rng);
                y2 = y1;
                y1 = y;
                if t >= AR_BURN_IN {
                    out.push(y);
                }
            }
            out
        }
        SynthKind::Sine => {
            let period: f64 = rng.random_range(8.0..40.0);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            (0..n)
                .map(|t| (std::f64::consts::TAU * t as f64 / period + phase).sin() + 0.1 * normal(&mut rng))
                .collect()
        }
        SynthKind::Noise => (0..n).map(|_| normal(&mut rng)).collect(),
        SynthKind::Trend => {
            let mut level = 10.0;
            (0..n)
                .map(|_| {
                    level += 0.1 + 0.5 * normal(&mut rng).abs();
                    level
                })
                .collect()
        }
    };
    Ok(TimeSeries::new(id, values)?.with_source(format!("synthetic:{kind}")))
}
