//! Embedding dimension selection by False Nearest Neighbors.
//!
//! For each candidate dimension `d` every delay vector is paired with its
//! nearest neighbor (Euclidean, excluding itself and anything within `d`
//! time steps). The pair is *false* when adding the next lag inflates their
//! distance by more than `r_tol`, or when the inflated distance exceeds
//! `a_tol` times the series standard deviation. The smallest `d` whose false
//! fraction drops below the threshold is returned.

use serde::Serialize;

use crate::data::TimeSeries;

/// Distances below this fraction of the series spread count as coincident,
/// so exact repeats are not flagged by rounding noise.
pub const RESOLUTION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FnnConfig {
    pub p_max: usize,
    pub r_tol: f64,
    pub a_tol: f64,
    pub fnn_fraction_threshold: f64,
}

impl FnnConfig {
    /// Classical thresholds with `p_max = min(30, n/5)`.
    pub fn for_length(n: usize) -> Self {
        Self {
            p_max: (n / 5).clamp(1, 30),
            r_tol: 10.0,
            a_tol: 2.0,
            fnn_fraction_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FnnSelection {
    pub p: usize,
    /// Set when the series has zero variance and no neighbor structure exists.
    pub degenerate: bool,
    /// False-neighbor fraction of each dimension evaluated, starting at 1.
    pub fractions: Vec<f64>,
}

/// Fraction of false nearest neighbors at dimension `d`, or `None` when too
/// few delay vectors remain to search.
pub fn false_neighbor_fraction(values: &[f64], d: usize, config: &FnnConfig, spread: f64) -> Option<f64> {
    let n = values.len();
    // Points t in [d, n) have d coordinates y_t..y_{t-d+1} plus the extra lag y_{t-d}.
    if d == 0 || n <= d + 1 {
        return None;
    }
    let resolution = RESOLUTION * spread;
    let points: Vec<usize> = (d..n).collect();
    let mut false_count = 0usize;
    let mut counted = 0usize;
    for &t in &points {
        let mut best: Option<(f64, usize)> = None;
        for &s in &points {
            if s.abs_diff(t) <= d {
                continue;
            }
            let dist2: f64 = (0..d)
                .map(|k| {
                    let diff = values[t - k] - values[s - k];
                    diff * diff
                })
                .sum();
            if best.is_none_or(|(b, _)| dist2 < b) {
                best = Some((dist2, s));
            }
        }
        let Some((dist2, s)) = best else { continue };
        counted += 1;
        let extra = (values[t - d] - values[s - d]).abs();
        let dist = dist2.sqrt();
        let inflated = (dist2 + extra * extra).sqrt();
        let ratio_false = extra > config.r_tol * dist.max(resolution);
        let lonely_false = inflated > config.a_tol * spread;
        if ratio_false || lonely_false {
            false_count += 1;
        }
    }
    (counted > 0).then(|| false_count as f64 / counted as f64)
}

pub fn select_embedding_dimension(series: &TimeSeries, config: &FnnConfig) -> FnnSelection {
    let values = series.values();
    let spread = series.std_dev();
    if spread == 0.0 {
        return FnnSelection {
            p: 1,
            degenerate: true,
            fractions: Vec::new(),
        };
    }
    let p_max = config.p_max.max(1);
    let mut fractions = Vec::new();
    for d in 1..=p_max {
        match false_neighbor_fraction(values, d, config, spread) {
            Some(f) => {
                fractions.push(f);
                if f < config.fnn_fraction_threshold {
                    return FnnSelection {
                        p: d,
                        degenerate: false,
                        fractions,
                    };
                }
            }
            None => break,
        }
    }
    FnnSelection {
        p: p_max,
        degenerate: false,
        fractions,
    }
}
