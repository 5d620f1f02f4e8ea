//! Shape parameters of energy extremes along a noise-amplitude scan of the
//! stochastic turbulence model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mean_sd;
use crate::dynsys::ToyModel;
use crate::error::{config, Error, Result};
use crate::evt::fit_gev_mle_point;
use crate::extraction::maxima_from_blocks;
use crate::rng::{derive_seed, substream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TippingConfig {
    pub dt: f64,
    /// Steps per ensemble member.
    pub steps: usize,
    /// Bin length for maxima and minima.
    pub block: usize,
    pub trim: usize,
    pub seed: u64,
}

impl Default for TippingConfig {
    fn default() -> Self {
        TippingConfig {
            dt: 0.01,
            steps: 1_000_000,
            block: 1000,
            trim: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TippingRow {
    pub u: f64,
    /// Ensemble mean and sd of ξ for block maxima of the energy.
    pub xi_max: f64,
    pub xi_max_sd: f64,
    /// Same for the negated block minima.
    pub xi_min: f64,
    pub xi_min_sd: f64,
    /// Normal-approximation 95% interval of the ensemble means.
    pub ci95_max: (f64, f64),
    pub ci95_min: (f64, f64),
    /// Ensemble means of the energy variance and skewness.
    pub variance: f64,
    pub skewness: f64,
    pub n_transitions: Vec<u64>,
    /// Members whose fits failed.
    pub failed: usize,
    pub flag: Option<String>,
}

impl TippingRow {
    pub fn total_transitions(&self) -> u64 {
        self.n_transitions.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TippingReport {
    pub rows: Vec<TippingRow>,
    /// Interpolated zero crossing of the mean ξ of minima, reported only when
    /// the transition onset is one of the two bracketing values.
    pub u_c: Option<f64>,
    /// First u at which any member leaves the turbulent state. Noise makes
    /// isolated transitions possible well below the critical value.
    pub first_transition: Option<f64>,
    /// First u at which every member records a transition: the onset used
    /// to gate `u_c`.
    pub onset: Option<f64>,
}

struct Member {
    xi_max: Result<f64>,
    xi_min: Result<f64>,
    variance: f64,
    skewness: f64,
    transitions: u64,
}

fn run_member(mu: f64, nu: f64, u: f64, cfg: &TippingConfig, seed: u64) -> Result<Member> {
    let mut model = ToyModel::new(mu, nu, u, cfg.dt)?;
    let mut rng = substream(seed, 0);
    let mut s = model.node;
    let nb = cfg.steps / cfg.block;
    let (mut maxima, mut minima) = (Vec::with_capacity(nb), Vec::with_capacity(nb));
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let shift = 0.5 * (s[0] * s[0] + s[1] * s[1]);
    let (mut m1, mut m2, mut m3) = (0.0, 0.0, 0.0);
    for i in 0..nb * cfg.block {
        model.advance(&mut s, &mut rng);
        let e = 0.5 * (s[0] * s[0] + s[1] * s[1]);
        if !e.is_finite() {
            return Err(Error::Divergence {
                step: i + 1,
                norm: e,
            });
        }
        hi = hi.max(e);
        lo = lo.min(e);
        let d = e - shift;
        m1 += d;
        m2 += d * d;
        m3 += d * d * d;
        if (i + 1) % cfg.block == 0 {
            maxima.push(hi);
            minima.push(-lo);
            hi = f64::NEG_INFINITY;
            lo = f64::INFINITY;
        }
    }
    let (top, bottom) = (
        maxima.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        -minima.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    if top - bottom <= 1e-12 * top.abs().max(1.0) {
        return Ok(Member {
            xi_max: Err(Error::Degenerate("energy is constant".into())),
            xi_min: Err(Error::Degenerate("energy is constant".into())),
            variance: 0.0,
            skewness: 0.0,
            transitions: model.transitions,
        });
    }
    let n = (nb * cfg.block) as f64;
    let (m1, m2, m3) = (m1 / n, m2 / n, m3 / n);
    let variance = m2 - m1 * m1;
    let third = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
    let skewness = if variance > 0.0 {
        third / variance.powf(1.5)
    } else {
        0.0
    };
    let fit = |v: Vec<f64>| -> Result<f64> {
        let bm = maxima_from_blocks(v, cfg.block, cfg.trim)?;
        Ok(fit_gev_mle_point(&bm.maxima)?.xi())
    };
    Ok(Member {
        xi_max: fit(maxima),
        xi_min: fit(minima),
        variance,
        skewness,
        transitions: model.transitions,
    })
}

fn ci(mean: f64, sd: f64, n: usize) -> (f64, f64) {
    let h = 1.96 * sd / (n as f64).sqrt();
    (mean - h, mean + h)
}

/// Runs `ensemble` trajectories per grid value, each started at the stable
/// node, and fits maxima and negated minima of E = (X² + Y²)/2.
pub fn tipping_scan(
    mu: f64,
    nu: f64,
    u_grid: &[f64],
    ensemble: usize,
    cfg: &TippingConfig,
) -> Result<TippingReport> {
    if ensemble < 10 {
        return config("ensemble must have at least ten members");
    }
    if u_grid.is_empty() || u_grid.iter().any(|u| !(*u >= 0.0)) {
        return config("u grid must be non-empty and non-negative");
    }
    if cfg.block == 0 || cfg.steps / cfg.block < 2 * cfg.trim + 4 {
        return config("too few bins for the requested steps and bin length");
    }
    ToyModel::new(mu, nu, 0.0, cfg.dt)?;
    let tasks: Vec<(usize, usize)> = (0..u_grid.len())
        .flat_map(|i| (0..ensemble).map(move |j| (i, j)))
        .collect();
    let members: Vec<Member> = tasks
        .par_iter()
        .map(|&(i, j)| {
            run_member(
                mu,
                nu,
                u_grid[i],
                cfg,
                derive_seed(cfg.seed, (i * ensemble + j) as u64),
            )
        })
        .collect::<Result<_>>()?;

    let rows: Vec<TippingRow> = u_grid
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let ms = &members[i * ensemble..(i + 1) * ensemble];
            let xmax: Vec<f64> = ms
                .iter()
                .filter_map(|m| m.xi_max.as_ref().ok().copied())
                .collect();
            let xmin: Vec<f64> = ms
                .iter()
                .filter_map(|m| m.xi_min.as_ref().ok().copied())
                .collect();
            let failed = ms
                .iter()
                .filter(|m| m.xi_max.is_err() || m.xi_min.is_err())
                .count();
            let (xi_max, xi_max_sd) = mean_sd(&xmax);
            let (xi_min, xi_min_sd) = mean_sd(&xmin);
            let n_transitions: Vec<u64> = ms.iter().map(|m| m.transitions).collect();
            let mut flags = Vec::new();
            if 2 * failed > ensemble {
                let why = ms
                    .iter()
                    .find_map(|m| m.xi_max.as_ref().err().or(m.xi_min.as_ref().err()));
                flags.push(format!(
                    "{failed} of {ensemble} fits failed: {}",
                    why.map(|e| e.to_string()).unwrap_or_default()
                ));
            }
            if n_transitions.iter().all(|&t| t == 0) {
                flags.push("no transitions in any member".to_string());
            }
            TippingRow {
                u,
                xi_max,
                xi_max_sd,
                xi_min,
                xi_min_sd,
                ci95_max: ci(xi_max, xi_max_sd, xmax.len()),
                ci95_min: ci(xi_min, xi_min_sd, xmin.len()),
                variance: ms.iter().map(|m| m.variance).sum::<f64>() / ensemble as f64,
                skewness: ms.iter().map(|m| m.skewness).sum::<f64>() / ensemble as f64,
                n_transitions,
                failed,
                flag: (!flags.is_empty()).then(|| flags.join("; ")),
            }
        })
        .collect();
    let u_c = critical_value(&rows);
    let first_transition = rows.iter().find(|r| r.total_transitions() > 0).map(|r| r.u);
    let onset = onset_index(&rows).map(|i| rows[i].u);
    Ok(TippingReport {
        rows,
        u_c,
        first_transition,
        onset,
    })
}

fn usable(r: &TippingRow) -> bool {
    r.xi_min.is_finite() && 2 * r.failed <= r.n_transitions.len()
}

fn onset_index(rows: &[TippingRow]) -> Option<usize> {
    rows.iter()
        .position(|r| !r.n_transitions.is_empty() && r.n_transitions.iter().all(|&t| t > 0))
}

fn critical_value(rows: &[TippingRow]) -> Option<f64> {
    let first_active = onset_index(rows)?;
    let idx: Vec<usize> = (0..rows.len()).filter(|&i| usable(&rows[i])).collect();
    let (a, b) = idx
        .windows(2)
        .map(|w| (w[0], w[1]))
        .find(|&(a, b)| rows[a].xi_min < 0.0 && rows[b].xi_min >= 0.0)?;
    if first_active != a && first_active != b {
        return None;
    }
    let (ra, rb) = (&rows[a], &rows[b]);
    Some(ra.u + (rb.u - ra.u) * (-ra.xi_min) / (rb.xi_min - ra.xi_min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(u: f64, xi_min: f64, tr: u64) -> TippingRow {
        row_counts(u, xi_min, vec![tr, tr])
    }

    fn row_counts(u: f64, xi_min: f64, n_transitions: Vec<u64>) -> TippingRow {
        TippingRow {
            u,
            xi_max: -0.5,
            xi_max_sd: 0.0,
            xi_min,
            xi_min_sd: 0.0,
            ci95_max: (0.0, 0.0),
            ci95_min: (0.0, 0.0),
            variance: 0.0,
            skewness: 0.0,
            n_transitions,
            failed: 0,
            flag: None,
        }
    }

    #[test]
    fn crossing_is_interpolated_and_gated_on_transitions() {
        let rows = vec![
            row(0.1, -0.4, 0),
            row(0.2, -0.2, 0),
            row(0.3, 0.2, 3),
            row(0.4, 0.3, 9),
        ];
        assert!((critical_value(&rows).unwrap() - 0.25).abs() < 1e-12);
        let late = vec![
            row(0.1, -0.4, 0),
            row(0.2, -0.2, 0),
            row(0.3, 0.2, 0),
            row(0.4, 0.3, 9),
        ];
        assert_eq!(critical_value(&late), None);
        let never = vec![row(0.1, -0.4, 0), row(0.2, -0.2, 1)];
        assert_eq!(critical_value(&never), None);
    }

    #[test]
    fn isolated_early_transitions_do_not_set_the_onset() {
        let rows = vec![
            row_counts(0.1, -0.4, vec![1, 0, 0]),
            row_counts(0.2, -0.2, vec![2, 0, 1]),
            row_counts(0.3, 0.2, vec![4, 3, 5]),
        ];
        assert_eq!(onset_index(&rows), Some(2));
        assert!((critical_value(&rows).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_is_flagged_and_low_noise_is_laminar_free() {
        let cfg = TippingConfig {
            steps: 100_000,
            block: 1000,
            ..Default::default()
        };
        let r = tipping_scan(1.0, 0.2475, &[0.0, 0.02], 10, &cfg).unwrap();
        assert!(r.rows[0].flag.is_some());
        assert_eq!(r.rows[0].failed, 10);
        assert_eq!(r.rows[1].total_transitions(), 0);
        assert!(r.rows[1].xi_max < 0.0);
        assert_eq!(r.u_c, None);
    }

    #[test]
    fn rejects_bad_parameters() {
        let cfg = TippingConfig::default();
        assert!(tipping_scan(1.0, 0.3, &[0.1], 10, &cfg).is_err());
        assert!(tipping_scan(1.0, 0.2475, &[0.1], 9, &cfg).is_err());
    }
}
