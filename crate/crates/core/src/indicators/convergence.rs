//! Smallest bin length at which recurrences to a value become Gumbel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::evt::{lilliefors_gumbel, GofResult};
use crate::extraction::raw_block_maxima;
use crate::rng::substream;

/// Adds uniform noise on [0, precision) to every reading of a quantised record.
pub fn jitter(series: &[f64], precision: f64, seed: u64) -> Result<Vec<f64>> {
    if !(precision > 0.0 && precision.is_finite()) {
        return config("precision must be positive");
    }
    let mut rng = substream(seed, 0);
    Ok(series
        .iter()
        .map(|v| v + precision * rng.random::<f64>())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinCheck {
    pub bin: usize,
    /// Absent when there were too few bins or the fit failed.
    pub gof: Option<GofResult>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    /// Smallest bin from which every larger grid bin passes; `None` means
    /// the value is rare at all scanned scales.
    pub n_min: Option<usize>,
    pub checks: Vec<BinCheck>,
    /// Grid bins that failed above a passing one.
    pub violations: usize,
}

/// Lilliefors-tests binned maxima of −log|Yₜ − ζ| at every grid bin length.
/// Exact hits are skipped rather than mapped to +∞.
pub fn min_convergent_bin(series: &[f64], zeta: f64, bin_grid: &[usize]) -> Result<Convergence> {
    if bin_grid.is_empty() || bin_grid.contains(&0) {
        return config("bin grid must be non-empty with positive entries");
    }
    if bin_grid.windows(2).any(|w| w[0] >= w[1]) {
        return config("bin grid must be strictly ascending");
    }
    let g1: Vec<f64> = series
        .iter()
        .map(|y| (y - zeta).abs())
        .map(|r| if r > 0.0 { -r.ln() } else { f64::NEG_INFINITY })
        .collect();
    let checks: Vec<BinCheck> = bin_grid
        .iter()
        .map(|&bin| {
            let maxima: Vec<f64> = raw_block_maxima(&g1, bin)
                .into_iter()
                .filter(|v| v.is_finite())
                .collect();
            let gof = lilliefors_gumbel(&maxima).ok();
            BinCheck {
                bin,
                pass: gof.as_ref().is_some_and(|g| g.pass),
                gof,
            }
        })
        .collect();
    let mut n_min = None;
    for c in checks.iter().rev() {
        if !c.pass {
            break;
        }
        n_min = Some(c.bin);
    }
    let first_pass = checks.iter().position(|c| c.pass);
    let violations = first_pass.map_or(0, |i| checks[i..].iter().filter(|c| !c.pass).count());
    Ok(Convergence {
        n_min,
        checks,
        violations,
    })
}
