//! Location of recurrence extremes under additive or observational noise,
//! compared with the ball-measure prediction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynsys::{NoiseSpec, SystemSpec, Trajectory};
use crate::error::{config, Error, Result};
use crate::evt::{fit_gev_mle_point, lilliefors_gumbel, GofResult};
use crate::extraction::maxima_from_blocks;
use crate::rng::derive_seed;

/// Clean-orbit visits to the ε-ball below which a row is flagged.
pub const MIN_BALL_OCCUPANCY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Additive,
    Observational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudyConfig {
    pub series_len: usize,
    pub burn_in: usize,
    pub x0: f64,
    pub trim: usize,
    pub seed: u64,
}

impl Default for NoiseStudyConfig {
    fn default() -> Self {
        NoiseStudyConfig {
            series_len: 1_000_000,
            burn_in: 1000,
            x0: 0.1234567,
            trim: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub eps: f64,
    pub m: usize,
    pub n_blocks: usize,
    pub xi: Option<f64>,
    pub sigma: Option<f64>,
    pub mu_hat: Option<f64>,
    /// log(m·μ(B_ε(ζ))/ε).
    pub b_theory: Option<f64>,
    pub rel_error: Option<f64>,
    /// Fraction of unperturbed states within ε of ζ.
    pub ball_measure: f64,
    pub gof: Option<GofResult>,
    pub flag: Option<String>,
}

fn one_eps(
    spec: &SystemSpec,
    zeta: f64,
    eps: f64,
    kind: NoiseKind,
    m_grid: &[usize],
    cfg: &NoiseStudyConfig,
    seed: u64,
) -> Result<Vec<NoiseRow>> {
    let noise = match kind {
        NoiseKind::Additive => NoiseSpec::Additive { eps },
        NoiseKind::Observational => NoiseSpec::Observational { eps },
    };
    let mut traj = Trajectory::new(spec, noise, &[cfg.x0], cfg.burn_in, seed)?;
    let mut maxima: Vec<Vec<f64>> = m_grid
        .iter()
        .map(|m| Vec::with_capacity(cfg.series_len / m))
        .collect();
    let mut running = vec![f64::NEG_INFINITY; m_grid.len()];
    let mut inside = 0usize;
    let mut hits = 0usize;
    for t in 1..=cfg.series_len {
        let y = traj.next_state()?[0];
        if (traj.true_state()[0] - zeta).abs() < eps {
            inside += 1;
        }
        let r = (y - zeta).abs();
        let g = if r > 0.0 { -r.ln() } else { f64::NEG_INFINITY };
        hits += (r == 0.0) as usize;
        for (k, &m) in m_grid.iter().enumerate() {
            running[k] = running[k].max(g);
            if t % m == 0 {
                maxima[k].push(running[k]);
                running[k] = f64::NEG_INFINITY;
            }
        }
    }
    let ball = inside as f64 / cfg.series_len as f64;
    Ok(m_grid
        .iter()
        .zip(maxima)
        .map(|(&m, mx)| {
            let mut flags = Vec::new();
            if inside < MIN_BALL_OCCUPANCY {
                flags.push(format!("only {inside} states in the noise ball"));
            }
            if hits > 0 {
                flags.push(format!("{hits} exact hits skipped"));
            }
            let b_theory = (inside > 0).then(|| (m as f64 * ball / eps).ln());
            let n_blocks = mx.len();
            let finite: Vec<f64> = mx.into_iter().filter(|v| v.is_finite()).collect();
            let fit = maxima_from_blocks(finite.clone(), m, cfg.trim)
                .and_then(|bm| fit_gev_mle_point(&bm.maxima));
            let gof = lilliefors_gumbel(&finite).ok();
            let (xi, sigma, mu_hat) = match &fit {
                Ok(f) => {
                    let g = f.params.gev().expect("gev fit");
                    (Some(g.xi), Some(g.sigma), Some(g.mu))
                }
                Err(e) => {
                    flags.push(format!("fit: {e}"));
                    (None, None, None)
                }
            };
            let rel_error = match (mu_hat, b_theory) {
                (Some(a), Some(b)) if b != 0.0 => Some((a - b).abs() / b.abs()),
                _ => None,
            };
            NoiseRow {
                eps,
                m,
                n_blocks,
                xi,
                sigma,
                mu_hat,
                b_theory,
                rel_error,
                ball_measure: ball,
                gof,
                flag: (!flags.is_empty()).then(|| flags.join("; ")),
            }
        })
        .collect())
}

/// One row per (ε, m): a GEV fit of bin maxima of −log|yₜ − ζ| set against
/// the predicted location log(m·μ(B_ε(ζ))/ε) for a one-dimensional system.
pub fn noise_scaling_study(
    spec: &SystemSpec,
    zeta: f64,
    eps_grid: &[f64],
    kind: NoiseKind,
    m_grid: &[usize],
    cfg: &NoiseStudyConfig,
) -> Result<Vec<NoiseRow>> {
    if spec.dim() != 1 {
        return Err(Error::Unsupported(
            "noise scaling study is implemented for one-dimensional systems".into(),
        ));
    }
    if eps_grid.is_empty()
        || eps_grid.iter().any(|e| !(*e > 0.0))
        || eps_grid.windows(2).any(|w| w[0] <= w[1])
    {
        return config("eps grid must be positive and strictly descending");
    }
    if m_grid.is_empty() || m_grid.contains(&0) {
        return config("bin lengths must be positive");
    }
    let rows: Vec<Vec<NoiseRow>> = eps_grid
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| {
            one_eps(
                spec,
                zeta,
                eps,
                kind,
                m_grid,
                cfg,
                derive_seed(cfg.seed, i as u64),
            )
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::SystemKind;

    #[test]
    fn shift_with_additive_noise_has_unit_slope_in_log_m() {
        let spec = SystemSpec::new(SystemKind::BernoulliShift { q: 3 }).unwrap();
        let cfg = NoiseStudyConfig {
            series_len: 1_000_000,
            ..Default::default()
        };
        let rows = noise_scaling_study(
            &spec,
            0.4,
            &[1e-2],
            NoiseKind::Additive,
            &[100, 300, 1000],
            &cfg,
        )
        .unwrap();
        let lx: Vec<f64> = rows.iter().map(|r| (r.m as f64).ln()).collect();
        let ly: Vec<f64> = rows.iter().map(|r| r.mu_hat.unwrap()).collect();
        let (slope, _) = crate::geometry::ols(&lx, &ly).unwrap();
        assert!((slope - 1.0).abs() < 0.1, "{slope}");
        // uniform invariant measure: μ(B_ε) = 2ε
        assert!((rows[0].ball_measure - 0.02).abs() < 0.002);
        assert!(rows.iter().all(|r| r.rel_error.unwrap() < 0.1), "{rows:?}");
    }

    #[test]
    fn validates_inputs() {
        let spec = SystemSpec::new(SystemKind::CatMap).unwrap();
        let cfg = NoiseStudyConfig::default();
        assert!(
            noise_scaling_study(&spec, 0.4, &[1e-2], NoiseKind::Additive, &[100], &cfg).is_err()
        );
        let spec = SystemSpec::new(SystemKind::Rotation { alpha: 0.3 }).unwrap();
        assert!(
            noise_scaling_study(&spec, 0.4, &[1e-3, 1e-2], NoiseKind::Additive, &[100], &cfg)
                .is_err()
        );
    }
}
