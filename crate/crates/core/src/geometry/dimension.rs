//! Information dimension as the average of local dimensions over reference
//! points drawn from a long orbit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dim_from_fit, dim_from_mu_slope, Route};
use crate::dynsys::{NoiseSpec, SystemSpec, Trajectory};
use crate::error::{config, Error, Result};
use crate::evt::{fit_gev_lmoments, fit_gev_mle_point, FitMethod, FitResult};
use crate::extraction::maxima_from_blocks;
use crate::observables::{coarsen_minima, BlockMinDistances};

/// Bin length with the block minima of every reference point.
type PerLength = Vec<(usize, Vec<Vec<f64>>)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionConfig {
    /// Length of the analysed window.
    pub series_len: usize,
    /// Bin length for the single-fit routes.
    pub block: usize,
    /// Bin lengths for the μ-slope routes.
    pub slope_blocks: Vec<usize>,
    pub burn_in: usize,
    pub alpha: f64,
    pub c: f64,
    pub trim: usize,
    pub method: FitMethod,
}

impl Default for DimensionConfig {
    fn default() -> Self {
        DimensionConfig {
            series_len: 1_000_000,
            block: 1000,
            slope_blocks: vec![250, 500, 1000, 2000],
            burn_in: 1000,
            alpha: 3.0,
            c: 0.0,
            trim: 1,
            method: FitMethod::Lmom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSummary {
    pub route: Route,
    pub formula: String,
    /// Local dimension per reference point; `None` where the fit or inversion failed.
    pub d_point: Vec<Option<f64>>,
    pub mean: f64,
    pub sd: f64,
    pub failures: usize,
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub zetas: Vec<Vec<f64>>,
    pub routes: Vec<RouteSummary>,
    /// Mean and sd over all successful (route, ζ) estimates.
    pub d1: f64,
    pub d1_sd: f64,
    pub series_len: usize,
}

fn formula(route: Route) -> &'static str {
    match route {
        Route::SigmaG1 => "d = 1/sigma",
        Route::MuSlopeG1 => "d = 1/|dmu/dln k|",
        Route::XiG2 => "d = 1/(alpha xi)",
        Route::MuG2 => "d = 1/(alpha |dln mu/dln k|)",
        Route::SigmaG2 => "d = mu/(alpha sigma)",
        Route::XiG3 => "d = -1/(alpha xi)",
        Route::SigmaG3 => "d = (C - mu)/(alpha sigma)",
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Block minima of the distances for every requested bin length.
enum Minima {
    /// Shared base length, coarsened on demand.
    Base(usize, BlockMinDistances),
    /// One accumulator per length.
    Each(Vec<(usize, BlockMinDistances)>),
}

fn fit_maxima(maxima: Vec<f64>, n: usize, cfg: &DimensionConfig) -> Result<FitResult> {
    if maxima.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularObservation { index: 0 });
    }
    let bm = maxima_from_blocks(maxima, n, cfg.trim)?;
    match cfg.method {
        FitMethod::Lmom => fit_gev_lmoments(&bm.maxima),
        FitMethod::Mle => fit_gev_mle_point(&bm.maxima),
        FitMethod::Moments(_) => {
            config("moment estimators apply to threshold excesses, not block maxima")
        }
    }
}

fn route_estimate(
    route: Route,
    minima: &dyn Fn(usize) -> Vec<f64>,
    cfg: &DimensionConfig,
) -> Result<f64> {
    let class = route.class();
    let to_max = |len: usize| {
        minima(len)
            .into_iter()
            .map(|r| class.apply(r, cfg.alpha, cfg.c))
            .collect::<Vec<_>>()
    };
    if route.is_slope() {
        let mut ks = Vec::new();
        let mut mus = Vec::new();
        for &len in &cfg.slope_blocks {
            let maxima = to_max(len);
            ks.push(maxima.len() as f64);
            let fit = fit_maxima(maxima, len, cfg)?;
            mus.push(fit.params.gev().expect("gev fit").mu);
        }
        Ok(dim_from_mu_slope(route, &ks, &mus, cfg.alpha)?.0)
    } else {
        let fit = fit_maxima(to_max(cfg.block), cfg.block, cfg)?;
        dim_from_fit(&fit.params, route, cfg.alpha, cfg.c)
    }
}

/// Local dimensions at `q_points` reference points, each drawn from the
/// orbit after burn-in at stride max(1000, s/q), followed by an analysed
/// window of `cfg.series_len` recorded states.
pub fn information_dimension(
    spec: &SystemSpec,
    noise: NoiseSpec,
    x0: &[f64],
    routes: &[Route],
    q_points: usize,
    cfg: &DimensionConfig,
    seed: u64,
) -> Result<DimensionReport> {
    if q_points < 2 {
        return config("need at least two reference points");
    }
    if routes.is_empty() {
        return config("no dimension routes requested");
    }
    if cfg.block == 0 || cfg.slope_blocks.contains(&0) {
        return config("bin lengths must be >= 1");
    }
    let slopes = routes.iter().any(|r| r.is_slope());
    if slopes && cfg.slope_blocks.len() < 2 {
        return config("slope routes need at least two bin lengths");
    }
    let mut lengths = vec![cfg.block];
    if slopes {
        lengths.extend(&cfg.slope_blocks);
    }
    lengths.sort_unstable();
    lengths.dedup();

    let space = spec.space();
    let mut traj = Trajectory::new(spec, noise, x0, cfg.burn_in, seed)?;
    let stride = (cfg.series_len / q_points).max(1000);
    let mut zetas = Vec::with_capacity(q_points);
    for _ in 0..q_points {
        for _ in 0..stride {
            traj.next_state()?;
        }
        zetas.push(traj.true_state().to_vec());
    }

    let base = lengths.iter().fold(0, |g, &l| gcd(g, l));
    let mut acc = if base >= 100 || lengths.len() == 1 {
        Minima::Base(base, BlockMinDistances::new(zetas.clone(), space, base))
    } else {
        Minima::Each(
            lengths
                .iter()
                .map(|&l| (l, BlockMinDistances::new(zetas.clone(), space, l)))
                .collect(),
        )
    };
    for _ in 0..cfg.series_len {
        let x = traj.next_state()?;
        match &mut acc {
            Minima::Base(_, a) => a.push(x),
            Minima::Each(v) => v.iter_mut().for_each(|(_, a)| a.push(x)),
        }
    }
    let (base_len, per_len): (usize, PerLength) = match acc {
        Minima::Base(b, a) => (b, vec![(b, a.finish())]),
        Minima::Each(v) => (0, v.into_iter().map(|(l, a)| (l, a.finish())).collect()),
    };
    let lookup = |z: usize, len: usize| -> Vec<f64> {
        if let Some(factor) = len.checked_div(base_len) {
            coarsen_minima(&per_len[0].1[z], factor)
        } else {
            per_len
                .iter()
                .find(|(l, _)| *l == len)
                .expect("length accumulated")
                .1[z]
                .clone()
        }
    };

    let per_zeta: Vec<Vec<Result<f64>>> = (0..q_points)
        .into_par_iter()
        .map(|z| {
            let mins = |len: usize| lookup(z, len);
            routes
                .iter()
                .map(|&r| route_estimate(r, &mins, cfg))
                .collect()
        })
        .collect();

    let mut summaries = Vec::with_capacity(routes.len());
    let mut all = Vec::new();
    for (j, &route) in routes.iter().enumerate() {
        let mut d_point = Vec::with_capacity(q_points);
        let mut first_error = None;
        for row in &per_zeta {
            match &row[j] {
                Ok(d) => d_point.push(Some(*d)),
                Err(e) => {
                    first_error.get_or_insert_with(|| e.to_string());
                    d_point.push(None);
                }
            }
        }
        let ok: Vec<f64> = d_point.iter().flatten().copied().collect();
        let failures = q_points - ok.len();
        if 2 * failures > q_points {
            return Err(Error::Fit {
                reason: format!(
                    "{} failed at {failures} of {q_points} reference points: {}",
                    route.name(),
                    first_error.unwrap_or_default()
                ),
                best: None,
            });
        }
        let (mean, sd) = mean_sd(&ok);
        all.extend(&ok);
        summaries.push(RouteSummary {
            route,
            formula: formula(route).into(),
            d_point,
            mean,
            sd,
            failures,
            first_error,
        });
    }
    let (d1, d1_sd) = mean_sd(&all);
    Ok(DimensionReport {
        zetas,
        routes: summaries,
        d1,
        d1_sd,
        series_len: cfg.series_len,
    })
}
