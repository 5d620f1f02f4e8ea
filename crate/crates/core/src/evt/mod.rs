//! Extreme value laws, their estimators and goodness-of-fit tests.

mod fit;
mod gev;
mod gof;
mod gpd;
mod lmoments;
mod mle;
mod moments;
pub(crate) mod optim;

pub use fit::{Ci95, FitMethod, FitResult, FittedParams};
pub use gev::{GevParams, XI_ZERO};
pub use gof::{
    fit_gumbel_mle, kolmogorov_q, ks_statistic, ks_test, lilliefors_gumbel, GofResult, GofTest,
    GOF_LEVEL, LILLIEFORS_REPLICATIONS,
};
pub use gpd::GpdParams;
pub use lmoments::{fit_gev_lmoments, fit_gpd_lmoments, sample_lmoments, LMoments};
pub use mle::{fit_gev_mle, fit_gev_mle_point, fit_gpd_mle, profile_ci_gev, GevParam, CHI2_1_95};
pub use moments::{fit_gpd_moments, gpd_analytic_moment, gpd_from_moments};

use crate::error::{Error, Result};

/// Linear-interpolation quantile at h = (n−1)p + 1 of sorted data.
pub fn empirical_quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Empirical quantile used for every threshold in the crate.
pub fn empirical_quantile(data: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile level {p} outside (0,1)")));
    }
    if data.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut x = data.to_vec();
    x.sort_by(f64::total_cmp);
    Ok(empirical_quantile_sorted(&x, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        assert_eq!(empirical_quantile(&[4.0, 1.0, 3.0, 2.0], 0.5).unwrap(), 2.5);
        assert_eq!(
            empirical_quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25).unwrap(),
            2.0
        );
        assert!(empirical_quantile(&[1.0], 1.0).is_err());
    }
}
