//! Recurrence statistics over a grid of reference values of a scalar
//! (or paired) series.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mean_sd;
use crate::error::{config, Error, Result};
use crate::evt::{fit_gev_mle_point, GevParams, GofResult};
use crate::extraction::{ei_ferro_segers, ei_sueveges, maxima_from_blocks};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceConfig {
    /// Quantile for the extremal index estimators.
    pub p: f64,
    /// Bin length; defaults to ⌊s/n⌋ − 2 with n = ⌊√s/2⌋.
    pub bin: Option<usize>,
    pub trim: usize,
    /// Seed for jittering exact hits.
    pub seed: u64,
}

impl Default for RecurrenceConfig {
    fn default() -> Self {
        RecurrenceConfig {
            p: 0.99,
            bin: None,
            trim: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceRow {
    pub zeta: Vec<f64>,
    pub theta_fs: Option<f64>,
    pub theta_sv: Option<f64>,
    pub gev: Option<GevParams>,
    pub gof: Option<GofResult>,
    /// Why the row is incomplete, if it is.
    pub flag: Option<String>,
}

/// ζᵢ = min + i·(max − min)/num for i = 1..=num.
pub fn zeta_grid(series: &[f64], num: usize) -> Vec<f64> {
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    (1..=num)
        .map(|i| lo + i as f64 * (hi - lo).abs() / num as f64)
        .collect()
}

/// (number of bins n = ⌊√s/2⌋, bin length m = ⌊s/n⌋ − 2).
pub fn default_bins(s: usize) -> (usize, usize) {
    let n = (((s as f64).sqrt() / 2.0).floor() as usize).max(1);
    (n, (s / n).saturating_sub(2).max(1))
}

/// Smallest positive gap between distinct values: the resolution of the record.
fn resolution(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v.windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > 0.0)
        .min_by(|a, b| a.total_cmp(b))
}

/// −log of distances; exact zeros are replaced by uniform draws below the
/// record resolution.
fn log_distances(
    dist: impl Iterator<Item = f64>,
    res: Option<f64>,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    dist.map(|r| {
        if r > 0.0 {
            Ok(-r.ln())
        } else {
            let res =
                res.ok_or_else(|| Error::Degenerate("exact hit in a constant record".into()))?;
            Ok(-(res * (1.0 - rng.random::<f64>())).ln())
        }
    })
    .collect()
}

fn analyse(zeta: Vec<f64>, g1: Result<Vec<f64>>, cfg: &RecurrenceConfig) -> RecurrenceRow {
    let mut row = RecurrenceRow {
        zeta,
        theta_fs: None,
        theta_sv: None,
        gev: None,
        gof: None,
        flag: None,
    };
    let g1 = match g1 {
        Ok(v) => v,
        Err(e) => {
            row.flag = Some(e.to_string());
            return row;
        }
    };
    let mut flags = Vec::new();
    match ei_ferro_segers(&g1, cfg.p) {
        Ok(e) => row.theta_fs = Some(e.theta),
        Err(e) => flags.push(format!("theta_fs: {e}")),
    }
    match ei_sueveges(&g1, cfg.p) {
        Ok(e) => row.theta_sv = Some(e.theta),
        Err(e) => flags.push(format!("theta_sv: {e}")),
    }
    let (n, m) = default_bins(g1.len());
    let m = cfg.bin.unwrap_or(m);
    // n − 1 bins of length m
    let bins = if cfg.bin.is_some() {
        g1.len() / m
    } else {
        n.saturating_sub(1)
    };
    let maxima: Vec<f64> = (0..bins)
        .map(|j| {
            g1[j * m..(j + 1) * m]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    match maxima_from_blocks(maxima, m, cfg.trim).and_then(|bm| fit_gev_mle_point(&bm.maxima)) {
        Ok(fit) => {
            row.gev = fit.params.gev();
            row.gof = fit.gof;
        }
        Err(e) => flags.push(format!("gev: {e}")),
    }
    if !flags.is_empty() {
        row.flag = Some(flags.join("; "));
    }
    row
}

fn check(series: &[f64], num: usize, cfg: &RecurrenceConfig) -> Result<()> {
    if num == 0 {
        return config("need at least one grid point");
    }
    if !(cfg.p > 0.0 && cfg.p < 1.0) {
        return config("p must lie in (0,1)");
    }
    if cfg.bin == Some(0) {
        return config("bin length must be >= 1");
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("series must be finite".into()));
    }
    if series.len() < 16 {
        return Err(Error::TooFewPoints {
            needed: 16,
            got: series.len(),
        });
    }
    Ok(())
}

/// One row per grid value ζ of the series range: extremal index by both
/// interval estimators and a GEV fit of binned maxima of −log|Yₜ − ζ|.
pub fn recurrence_scan(
    series: &[f64],
    num_points: usize,
    cfg: &RecurrenceConfig,
) -> Result<Vec<RecurrenceRow>> {
    check(series, num_points, cfg)?;
    let res = resolution(series);
    Ok(zeta_grid(series, num_points)
        .into_iter()
        .enumerate()
        .map(|(i, z)| {
            let mut rng = substream(cfg.seed, i as u64);
            let g1 = log_distances(series.iter().map(|y| (y - z).abs()), res, &mut rng);
            analyse(vec![z], g1, cfg)
        })
        .collect())
}

/// Cartesian ζ grid over two series, with the distance taken in
/// coordinates standardised by each series' standard deviation.
pub fn recurrence_scan_2d(
    s1: &[f64],
    s2: &[f64],
    num_points: usize,
    cfg: &RecurrenceConfig,
) -> Result<Vec<Vec<RecurrenceRow>>> {
    check(s1, num_points, cfg)?;
    check(s2, num_points, cfg)?;
    if s1.len() != s2.len() {
        return Err(Error::DimensionMismatch {
            expected: s1.len(),
            got: s2.len(),
        });
    }
    let (_, sd1) = mean_sd(s1);
    let (_, sd2) = mean_sd(s2);
    if !(sd1 > 0.0 && sd2 > 0.0) {
        return Err(Error::Degenerate("a series is constant".into()));
    }
    let a: Vec<f64> = s1.iter().map(|v| v / sd1).collect();
    let b: Vec<f64> = s2.iter().map(|v| v / sd2).collect();
    let (res_a, res_b) = (resolution(&a), resolution(&b));
    let res = match (res_a, res_b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    };
    let (g1, g2) = (zeta_grid(s1, num_points), zeta_grid(s2, num_points));
    Ok(g1
        .iter()
        .enumerate()
        .map(|(i, &z1)| {
            g2.iter()
                .enumerate()
                .map(|(j, &z2)| {
                    let (za, zb) = (z1 / sd1, z2 / sd2);
                    let mut rng = substream(cfg.seed, (i * num_points + j) as u64);
                    let dist = a
                        .iter()
                        .zip(&b)
                        .map(|(x, y)| ((x - za).powi(2) + (y - zb).powi(2)).sqrt());
                    analyse(vec![z1, z2], log_distances(dist, res, &mut rng), cfg)
                })
                .collect()
        })
        .collect())
}
