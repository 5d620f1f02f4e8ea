use serde::{Deserialize, Serialize};

use statrs::function::gamma::gamma;

use super::fit::{FitMethod, FitResult, FittedParams};
use super::gev::{GevParams, XI_ZERO};
use super::gpd::GpdParams;
use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// First four sample L-moments (unbiased estimators).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LMoments {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
}

impl LMoments {
    /// L-skewness λ3/λ2.
    pub fn tau3(&self) -> f64 {
        self.l3 / self.l2
    }
}

/// Unbiased sample L-moments via probability-weighted moments of the order statistics.
pub fn sample_lmoments(data: &[f64]) -> Result<LMoments> {
    let n = data.len();
    if n < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: n });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite value in sample".into()));
    }
    let mut x = data.to_vec();
    x.sort_by(f64::total_cmp);
    // λ_r = Σ w_r(j) x_(j) / (n(n−1)…(n−r+1)) with integer weights built from
    // the probability-weighted moments; exact integer weights keep small
    // integer samples exact.
    let ni = n as i128;
    let c = x[n / 2];
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    for (j, &v) in x.iter().enumerate() {
        let j = j as i128;
        let w2 = 2 * j - (ni - 1);
        let w3 = 6 * j * (j - 1) - 6 * j * (ni - 2) + (ni - 1) * (ni - 2);
        let w4 = 20 * j * (j - 1) * (j - 2) - 30 * j * (j - 1) * (ni - 3)
            + 12 * j * (ni - 2) * (ni - 3)
            - (ni - 1) * (ni - 2) * (ni - 3);
        s1 += v;
        let v = v - c;
        s2 += w2 as f64 * v;
        s3 += w3 as f64 * v;
        s4 += w4 as f64 * v;
    }
    let nf = n as f64;
    let d2 = nf * (nf - 1.0);
    let d3 = d2 * (nf - 2.0);
    let d4 = d3 * (nf - 3.0);
    let l1 = s1 / nf;
    // A constant sample gives rounding-level values; snap them to zero.
    let constant = x[0] == x[n - 1];
    let snap = |v: f64| if constant { 0.0 } else { v };
    Ok(LMoments {
        l1,
        l2: snap(s2 / d2).max(0.0),
        l3: snap(s3 / d3),
        l4: snap(s4 / d4),
    })
}

/// GEV parameters from sample L-moments (Hosking's rational approximation).
pub(crate) fn gev_from_lmoments(l: &LMoments) -> Result<GevParams> {
    if !(l.l2 > 0.0) {
        return Err(Error::Degenerate("second L-moment is zero".into()));
    }
    let c = 2.0 / (3.0 + l.tau3()) - 2f64.ln() / 3f64.ln();
    let k = 7.8590 * c + 2.9554 * c * c;
    let xi = -k;
    if xi.abs() < XI_ZERO {
        let sigma = l.l2 / 2f64.ln();
        return GevParams::new(0.0, sigma, l.l1 - EULER_GAMMA * sigma);
    }
    if xi >= 1.0 {
        return Err(Error::Degenerate(format!(
            "L-moment shape {xi:.3} >= 1 has no finite mean"
        )));
    }
    let g = gamma(1.0 - xi);
    let sigma = -l.l2 * xi / ((1.0 - 2f64.powf(xi)) * g);
    let mu = l.l1 + sigma * (1.0 - g) / xi;
    GevParams::new(xi, sigma, mu)
        .map_err(|_| Error::Degenerate("L-moment inversion out of range".into()))
}

/// GEV fit by L-moments (no confidence intervals).
pub fn fit_gev_lmoments(maxima: &[f64]) -> Result<FitResult> {
    let l = sample_lmoments(maxima)?;
    let p = gev_from_lmoments(&l)?;
    Ok(FitResult::new(
        FittedParams::Gev(p),
        FitMethod::Lmom,
        maxima,
    ))
}

/// GPD fit of excesses by L-moments: ξ = 2 − λ1/λ2, σ = λ1(1 − ξ).
pub fn fit_gpd_lmoments(excesses: &[f64], threshold: f64) -> Result<FitResult> {
    if excesses.iter().any(|&z| z < 0.0) {
        return Err(Error::Domain("excesses must be non-negative".into()));
    }
    let l = sample_lmoments(excesses)?;
    if !(l.l2 > 0.0) {
        return Err(Error::Degenerate("second L-moment is zero".into()));
    }
    let xi = 2.0 - l.l1 / l.l2;
    let sigma = l.l1 * (1.0 - xi);
    let p = GpdParams::new(xi, sigma, threshold)
        .map_err(|_| Error::Degenerate(format!("GPD L-moment fit gave sigma={sigma}")))?;
    Ok(FitResult::new(
        FittedParams::Gpd(p),
        FitMethod::Lmom,
        excesses,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sample_values() {
        let l = sample_lmoments(&[3.0, 0.0, 2.0, 1.0]).unwrap();
        assert_eq!(l.l1, 1.5);
        assert_eq!(l.l2, 5.0 / 6.0);
        // symmetric sample: no skewness
        assert_eq!(l.l3, 0.0);
    }

    #[test]
    fn half_mean_pair_difference_oracle() {
        // λ2 equals half the mean absolute difference over all pairs.
        let data: [f64; 7] = [0.3, 2.2, -1.0, 4.5, 0.7, 0.71, 3.3];
        let n = data.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += (data[i] - data[j]).abs();
                }
            }
        }
        let want = acc / (n * (n - 1)) as f64 / 2.0;
        assert!((sample_lmoments(&data).unwrap().l2 - want).abs() < 1e-14);
    }

    #[test]
    fn constant_sample() {
        let l = sample_lmoments(&[2.5; 9]).unwrap();
        assert_eq!((l.l1, l.l2, l.l3, l.l4), (2.5, 0.0, 0.0, 0.0));
    }

    #[test]
    fn exact_gpd_lmoments_invert() {
        // For GPD(ξ, σ): λ1 = σ/(1−ξ), λ2 = σ/((1−ξ)(2−ξ)).
        for (xi, sigma) in [(-0.5, 1.0), (0.0, 2.0), (0.3, 0.7)] {
            let l1: f64 = sigma / (1.0 - xi);
            let l2 = sigma / ((1.0 - xi) * (2.0 - xi));
            let xh = 2.0 - l1 / l2;
            assert!((xh - xi).abs() < 1e-12);
            assert!((l1 * (1.0 - xh) - sigma).abs() < 1e-12);
        }
    }

    #[test]
    fn large_sample_consistency() {
        let data = GpdParams::new(0.25, 2.0, 0.0)
            .unwrap()
            .sample(1_000_000, 21, 0);
        let f = fit_gpd_lmoments(&data, 0.0).unwrap();
        assert!((f.xi() - 0.25).abs() < 0.01, "xi {}", f.xi());
        assert!((f.sigma() - 2.0).abs() < 0.02, "sigma {}", f.sigma());

        let data = GevParams::new(-0.2, 1.0, 5.0)
            .unwrap()
            .sample(1_000_000, 22, 0);
        let f = fit_gev_lmoments(&data).unwrap();
        let p = f.params.gev().unwrap();
        assert!(
            (p.xi + 0.2).abs() < 0.01 && (p.sigma - 1.0).abs() < 0.01 && (p.mu - 5.0).abs() < 0.01,
            "{p:?}"
        );
    }

    #[test]
    fn degenerate_sample_is_rejected() {
        assert!(matches!(
            fit_gev_lmoments(&[1.0; 20]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            fit_gpd_lmoments(&[1.0; 20], 0.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            sample_lmoments(&[1.0, 2.0, 3.0]),
            Err(Error::TooFewPoints { needed: 4, got: 3 })
        ));
    }
}
