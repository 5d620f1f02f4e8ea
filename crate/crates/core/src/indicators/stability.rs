//! Per-initial-condition extreme value fits on the standard map, set
//! against round-off diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mean_sd;
use crate::dynsys::{
    orbit_divergence, reversibility_error, NoiseSpec, SystemKind, SystemSpec, Trajectory,
};
use crate::error::{config, Error, Result};
use crate::evt::{
    fit_gev_lmoments, fit_gev_mle_point, fit_gpd_lmoments, fit_gpd_mle, FitMethod, FitResult,
};
use crate::extraction::{exceedances, maxima_from_blocks, raw_block_maxima};
use crate::geometry::{dim_from_fit, Route};
use crate::observables::{dist2, ObsClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityMethod {
    /// Threshold excesses with a fixed exceedance count.
    Pot,
    /// Block maxima.
    Bm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub series_len: usize,
    pub method: StabilityMethod,
    /// Exceedances per orbit (POT).
    pub exceedances: usize,
    /// Bin length (BM).
    pub block: usize,
    pub trim: usize,
    pub fit: FitMethod,
    pub alpha: f64,
    pub c: f64,
    /// Horizon of the round-off diagnostics.
    pub horizon: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            series_len: 100_000,
            method: StabilityMethod::Pot,
            exceedances: 1000,
            block: 100,
            trim: 1,
            fit: FitMethod::Lmom,
            alpha: 3.0,
            c: 1.0,
            horizon: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsFit {
    pub class: ObsClass,
    pub xi: Option<f64>,
    pub sigma: Option<f64>,
    /// Local dimension read off the fit (σ for g1, ξ for g2 and g3).
    pub d: Option<f64>,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCell {
    pub x0: Vec<f64>,
    pub fits: Vec<ObsFit>,
    /// Mean over the successful dimension routes.
    pub d_mean: Option<f64>,
    /// Reversibility error R_t.
    pub r_t: Option<f64>,
    /// Single/double precision orbit divergence Δ_t.
    pub delta_t: Option<f64>,
}

fn route_for(class: ObsClass) -> Route {
    match class {
        ObsClass::G1 => Route::SigmaG1,
        ObsClass::G2 => Route::XiG2,
        ObsClass::G3 => Route::XiG3,
    }
}

fn fit_class(dist: &[f64], class: ObsClass, cfg: &StabilityConfig) -> Result<FitResult> {
    if let Some(index) = dist.iter().position(|&r| r == 0.0) {
        return Err(Error::SingularObservation { index });
    }
    let g: Vec<f64> = dist
        .iter()
        .map(|&r| class.apply(r, cfg.alpha, cfg.c))
        .collect();
    match cfg.method {
        StabilityMethod::Pot => {
            let mut sorted = g.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let t = sorted[cfg.exceedances];
            let e = exceedances(&g, t);
            let excess = e.values;
            match cfg.fit {
                FitMethod::Lmom => fit_gpd_lmoments(&excess, t),
                FitMethod::Mle => fit_gpd_mle(&excess, t),
                FitMethod::Moments(k) => {
                    let p = crate::evt::fit_gpd_moments(&excess, k, t)?;
                    Ok(FitResult::new(
                        crate::evt::FittedParams::Gpd(p),
                        FitMethod::Moments(k),
                        &excess,
                    ))
                }
            }
        }
        StabilityMethod::Bm => {
            let bm = maxima_from_blocks(raw_block_maxima(&g, cfg.block), cfg.block, cfg.trim)?;
            match cfg.fit {
                FitMethod::Mle => fit_gev_mle_point(&bm.maxima),
                FitMethod::Lmom => fit_gev_lmoments(&bm.maxima),
                FitMethod::Moments(_) => config("moment estimators apply to threshold excesses"),
            }
        }
    }
}

fn cell(spec: &SystemSpec, x0: &[f64], cfg: &StabilityConfig) -> Result<StabilityCell> {
    let mut traj = Trajectory::new(spec, NoiseSpec::None, x0, 0, 0)?;
    let mut dist = Vec::with_capacity(cfg.series_len);
    for _ in 0..cfg.series_len {
        dist.push(dist2(true, traj.next_state()?, x0).sqrt());
    }
    let fits: Vec<ObsFit> = [ObsClass::G1, ObsClass::G2, ObsClass::G3]
        .into_iter()
        .map(|class| {
            let fit = fit_class(&dist, class, cfg).and_then(|f| {
                dim_from_fit(&f.params, route_for(class), cfg.alpha, cfg.c).map(|d| (f, d))
            });
            match fit {
                Ok((f, d)) => ObsFit {
                    class,
                    xi: Some(f.xi()),
                    sigma: Some(f.sigma()),
                    d: Some(d),
                    flag: None,
                },
                Err(e) => ObsFit {
                    class,
                    xi: None,
                    sigma: None,
                    d: None,
                    flag: Some(e.to_string()),
                },
            }
        })
        .collect();
    let ds: Vec<f64> = fits.iter().filter_map(|f| f.d).collect();
    Ok(StabilityCell {
        x0: x0.to_vec(),
        d_mean: (!ds.is_empty()).then(|| mean_sd(&ds).0),
        fits,
        r_t: reversibility_error(spec, x0, cfg.horizon).ok(),
        delta_t: orbit_divergence(spec, x0, cfg.horizon).ok(),
    })
}

/// One cell per initial condition, with ζ = x0 for the distance observables.
/// Cells are independent, so the output does not depend on grid order.
pub fn stability_map(
    k: f64,
    ic_grid: &[[f64; 2]],
    cfg: &StabilityConfig,
) -> Result<Vec<StabilityCell>> {
    let spec = SystemSpec::new(SystemKind::StandardMap { k })?;
    if ic_grid.is_empty() {
        return config("empty initial-condition grid");
    }
    if ic_grid.iter().flatten().any(|v| !(0.0..1.0).contains(v)) {
        return config("initial conditions must lie in [0,1)^2");
    }
    if !(cfg.alpha > 0.0) || cfg.horizon == 0 {
        return config("alpha and horizon must be positive");
    }
    match cfg.method {
        StabilityMethod::Pot if cfg.exceedances < 10 || cfg.exceedances >= cfg.series_len => {
            return config("need 10 <= exceedances < series length")
        }
        StabilityMethod::Bm if cfg.block == 0 => return config("bin length must be >= 1"),
        _ => {}
    }
    ic_grid.par_iter().map(|x0| cell(&spec, x0, cfg)).collect()
}

/// Dimension from the route parameter (σ for g1, ξ for g2 and g3) averaged
/// over cells and inverted once. Inverting per cell first is biased upward
/// by the spread of the individual fits. None without usable fits or when the
/// mean parameter has the wrong sign.
pub fn pooled_dimension(cells: &[StabilityCell], class: ObsClass, alpha: f64) -> Option<f64> {
    let vals: Vec<f64> = cells
        .iter()
        .filter_map(|c| c.fits.iter().find(|f| f.class == class && f.d.is_some()))
        .filter_map(|f| match class {
            ObsClass::G1 => f.sigma,
            ObsClass::G2 | ObsClass::G3 => f.xi,
        })
        .collect();
    if vals.is_empty() {
        return None;
    }
    let m = mean_sd(&vals).0;
    let d = match class {
        ObsClass::G1 => 1.0 / m,
        ObsClass::G2 => 1.0 / (alpha * m),
        ObsClass::G3 => -1.0 / (alpha * m),
    };
    (d > 0.0 && d.is_finite()).then_some(d)
}
