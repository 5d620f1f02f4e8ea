use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;

/// Below this |ξ| the Gumbel (ξ = 0) branch is used.
pub const XI_ZERO: f64 = 1e-6;

/// Generalised extreme value law exp(−(1 + ξ(y−μ)/σ)^(−1/ξ)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub xi: f64,
    pub sigma: f64,
    pub mu: f64,
}

impl GevParams {
    pub fn new(xi: f64, sigma: f64, mu: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) || !xi.is_finite() || !mu.is_finite() {
            return Err(Error::Domain(format!(
                "invalid GEV parameters xi={xi} sigma={sigma} mu={mu}"
            )));
        }
        Ok(GevParams { xi, sigma, mu })
    }

    pub fn gumbel(sigma: f64, mu: f64) -> Result<Self> {
        Self::new(0.0, sigma, mu)
    }

    /// (lower, upper) support endpoints.
    pub fn support(&self) -> (f64, f64) {
        if self.xi.abs() < XI_ZERO {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else if self.xi > 0.0 {
            (self.mu - self.sigma / self.xi, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, self.mu - self.sigma / self.xi)
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let s = (y - self.mu) / self.sigma;
        if self.xi.abs() < XI_ZERO {
            return (-(-s).exp()).exp();
        }
        let t = 1.0 + self.xi * s;
        if t <= 0.0 {
            return if self.xi > 0.0 { 0.0 } else { 1.0 };
        }
        (-t.powf(-1.0 / self.xi)).exp()
    }

    pub fn log_pdf(&self, y: f64) -> f64 {
        let s = (y - self.mu) / self.sigma;
        if self.xi.abs() < XI_ZERO {
            return -self.sigma.ln() - s - (-s).exp();
        }
        let t = 1.0 + self.xi * s;
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let lt = t.ln();
        -self.sigma.ln() - (1.0 + 1.0 / self.xi) * lt - (-lt / self.xi).exp()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.log_pdf(y).exp()
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level {p} outside (0,1)")));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        let l = -p.ln();
        if self.xi.abs() < XI_ZERO {
            self.mu - self.sigma * l.ln()
        } else {
            self.mu + self.sigma * (l.powf(-self.xi) - 1.0) / self.xi
        }
    }

    /// Inverse-CDF draws from the `(seed, task)` stream.
    pub fn sample(&self, count: usize, seed: u64, task: u64) -> Vec<f64> {
        let mut rng = substream(seed, task);
        (0..count)
            .map(|_| {
                let mut u: f64 = rng.random();
                while u == 0.0 {
                    u = rng.random();
                }
                self.quantile_unchecked(u)
            })
            .collect()
    }

    /// Negative log-likelihood; +∞ outside the support.
    pub fn nll(&self, data: &[f64]) -> f64 {
        gev_nll(self.xi, self.sigma, self.mu, data)
    }
}

pub(crate) fn gev_nll(xi: f64, sigma: f64, mu: f64, data: &[f64]) -> f64 {
    if !(sigma > 0.0) {
        return f64::INFINITY;
    }
    let ls = sigma.ln();
    let inv = 1.0 / sigma;
    let mut acc = 0.0;
    if xi.abs() < XI_ZERO {
        for &y in data {
            let s = (y - mu) * inv;
            acc += ls + s + (-s).exp();
        }
    } else if xi == -1.0 {
        // uniform density on (−∞, μ + σ]; the sample maximum may sit on the endpoint
        for &y in data {
            let t = 1.0 - (y - mu) * inv;
            if t < -1e-12 {
                return f64::INFINITY;
            }
            acc += ls + t.max(0.0);
        }
    } else {
        let a = 1.0 + 1.0 / xi;
        let b = -1.0 / xi;
        for &y in data {
            let t = 1.0 + xi * (y - mu) * inv;
            if t <= 0.0 {
                return f64::INFINITY;
            }
            let lt = t.ln();
            acc += ls + a * lt + (b * lt).exp();
        }
    }
    if acc.is_nan() {
        f64::INFINITY
    } else {
        acc
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn cdf_is_monotone_and_bounded(xi in -1.0..1.0f64, sigma in 0.05..5.0f64, mu in -5.0..5.0f64,
                                       a in -20.0..20.0f64, b in -20.0..20.0f64) {
            let g = GevParams::new(xi, sigma, mu).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (fl, fh) = (g.cdf(lo), g.cdf(hi));
            prop_assert!((0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh));
            prop_assert!(fl <= fh);
        }

        #[test]
        fn quantile_inverts_cdf(xi in -0.9..0.9f64, sigma in 0.1..5.0f64, mu in -5.0..5.0f64, p in 0.01..0.99f64) {
            let g = GevParams::new(xi, sigma, mu).unwrap();
            let y = g.quantile(p).unwrap();
            prop_assert!((g.cdf(y) - p).abs() < 1e-10);
            prop_assert!((g.quantile(g.cdf(y)).unwrap() - y).abs() < 1e-10 * (1.0 + y.abs()));
        }
    }
}
