use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gev::XI_ZERO;
use crate::error::{Error, Result};
use crate::rng::substream;

/// Generalised Pareto law of excesses z = X − T: 1 − (1 + ξz/σ)^(−1/ξ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    pub xi: f64,
    pub sigma: f64,
    pub threshold: f64,
}

impl GpdParams {
    pub fn new(xi: f64, sigma: f64, threshold: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) || !xi.is_finite() || !threshold.is_finite() {
            return Err(Error::Domain(format!(
                "invalid GPD parameters xi={xi} sigma={sigma}"
            )));
        }
        Ok(GpdParams {
            xi,
            sigma,
            threshold,
        })
    }

    /// Largest possible excess (∞ for ξ ≥ 0).
    pub fn upper_endpoint(&self) -> f64 {
        if self.xi < 0.0 && self.xi.abs() >= XI_ZERO {
            -self.sigma / self.xi
        } else {
            f64::INFINITY
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if self.xi.abs() < XI_ZERO {
            return -(-z / self.sigma).exp_m1();
        }
        let t = 1.0 + self.xi * z / self.sigma;
        if t <= 0.0 {
            return 1.0;
        }
        -(-t.ln() / self.xi).exp_m1()
    }

    pub fn log_pdf(&self, z: f64) -> f64 {
        if z < 0.0 {
            return f64::NEG_INFINITY;
        }
        if self.xi.abs() < XI_ZERO {
            return -self.sigma.ln() - z / self.sigma;
        }
        let t = 1.0 + self.xi * z / self.sigma;
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        -self.sigma.ln() - (1.0 + 1.0 / self.xi) * t.ln()
    }

    pub fn pdf(&self, z: f64) -> f64 {
        self.log_pdf(z).exp()
    }

    /// Excess at probability level p.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level {p} outside (0,1)")));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        let l = -(-p).ln_1p();
        if self.xi.abs() < XI_ZERO {
            self.sigma * l
        } else {
            self.sigma * (l * self.xi).exp_m1() / self.xi
        }
    }

    /// Inverse-CDF draws of excesses from the `(seed, task)` stream.
    pub fn sample(&self, count: usize, seed: u64, task: u64) -> Vec<f64> {
        let mut rng = substream(seed, task);
        (0..count)
            .map(|_| self.quantile_unchecked(rng.random::<f64>()))
            .collect()
    }

    pub fn nll(&self, excesses: &[f64]) -> f64 {
        gpd_nll(self.xi, self.sigma, excesses)
    }
}

pub(crate) fn gpd_nll(xi: f64, sigma: f64, z: &[f64]) -> f64 {
    if !(sigma > 0.0) {
        return f64::INFINITY;
    }
    let n = z.len() as f64;
    let inv = 1.0 / sigma;
    let mut acc = n * sigma.ln();
    if xi.abs() < XI_ZERO {
        for &v in z {
            if v < 0.0 {
                return f64::INFINITY;
            }
            acc += v * inv;
        }
    } else {
        let a = 1.0 + 1.0 / xi;
        for &v in z {
            let t = 1.0 + xi * v * inv;
            if v < 0.0 || t <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * t.ln();
        }
    }
    if acc.is_nan() {
        f64::INFINITY
    } else {
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::super::gev::GevParams;
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_origin() {
        assert_eq!(GpdParams::new(0.0, 1.0, 0.0).unwrap().cdf(0.0), 0.0);
    }

    #[test]
    fn bounded_tail_endpoint() {
        let g = GpdParams::new(-0.5, 1.0, 0.0).unwrap();
        assert_eq!(g.upper_endpoint(), 2.0);
        assert_eq!(g.cdf(2.0), 1.0);
        assert!(g.cdf(1.999) < 1.0);
    }

    #[test]
    fn gev_log_plus_one_is_gpd() {
        for xi in [-0.7, -0.3, 0.0, 0.2, 0.9] {
            let gev = GevParams::new(xi, 1.0, 0.0).unwrap();
            let gpd = GpdParams::new(xi, 1.0, 0.0).unwrap();
            for i in 0..400 {
                let y = i as f64 * 0.02;
                let h = gpd.cdf(y);
                if h > 0.0 && h < 1.0 {
                    assert_abs_diff_eq!(1.0 + gev.cdf(y).ln(), h, epsilon = 1e-12);
                }
            }
        }
    }
}
