use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gev::GevParams;
use crate::error::{Error, Result};

/// Null-distribution replications for the Gumbel Lilliefors test.
pub const LILLIEFORS_REPLICATIONS: usize = 2000;
const LILLIEFORS_SEED: u64 = 0x6C69_6C6C_6965_666F;
pub const GOF_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GofTest {
    Ks,
    LillieforsGumbel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub test: GofTest,
    /// Kolmogorov–Smirnov distance.
    pub statistic: f64,
    pub p_value: f64,
    /// 5% critical value where one was simulated.
    pub critical_value: Option<f64>,
    pub pass: bool,
}

/// Kolmogorov survival function Q(λ) = 2 Σ (−1)^(j−1) exp(−2j²λ²).
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sided KS distance between the sample and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> f64 {
    let mut x = data.to_vec();
    x.sort_by(f64::total_cmp);
    ks_sorted(&x, cdf)
}

fn ks_sorted<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> f64 {
    let n = x.len() as f64;
    x.iter().enumerate().fold(0.0, |d, (i, &v)| {
        let f = cdf(v);
        let i = i as f64;
        d.max((i + 1.0) / n - f).max(f - i / n)
    })
}

/// KS test against a fully specified distribution (asymptotic p-value).
pub fn ks_test<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> Result<GofResult> {
    if data.len() < 10 {
        return Err(Error::TooFewPoints {
            needed: 10,
            got: data.len(),
        });
    }
    let d = ks_statistic(data, cdf);
    let rn = (data.len() as f64).sqrt();
    let p = kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
    Ok(GofResult {
        test: GofTest::Ks,
        statistic: d,
        p_value: p,
        critical_value: None,
        pass: p >= GOF_LEVEL,
    })
}

/// Gumbel maximum-likelihood fit (σ by safeguarded Newton on the score equation).
pub fn fit_gumbel_mle(data: &[f64]) -> Result<GevParams> {
    let n = data.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = data.iter().sum::<f64>() / nf;
    let sd = (data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf).sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::Degenerate("Gumbel fit of a constant sample".into()));
    }
    // work on z = (x − mean)/sd
    let z: Vec<f64> = data.iter().map(|v| (v - mean) / sd).collect();
    let zmin = z.iter().cloned().fold(f64::INFINITY, f64::min);
    // score(s) = s − mean(z) + Σ z w / Σ w with w = exp(−(z − zmin)/s); mean(z) = 0
    let eval = |s: f64| {
        let (mut sw, mut szw, mut sz2w) = (0.0, 0.0, 0.0);
        for &v in &z {
            let w = (-(v - zmin) / s).exp();
            sw += w;
            szw += v * w;
            sz2w += v * v * w;
        }
        let m1 = szw / sw;
        let m2 = sz2w / sw;
        (s + m1, 1.0 + (m2 - m1 * m1) / (s * s), sw)
    };
    let (mut lo, mut hi) = (1e-3, 10.0);
    let mut s = 6f64.sqrt() / std::f64::consts::PI;
    for _ in 0..100 {
        let (g, dg, _) = eval(s);
        if g > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let mut next = s - g / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() < 1e-13 * s {
            s = next;
            break;
        }
        s = next;
    }
    let (_, _, sw) = eval(s);
    let mu_z = zmin - s * (sw / nf).ln();
    GevParams::gumbel(s * sd, mean + mu_z * sd)
}

fn lilliefors_null(n: usize) -> std::sync::Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, std::sync::Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&n) {
        return v.clone();
    }
    let std_gumbel = GevParams::gumbel(1.0, 0.0).unwrap();
    let mut stats: Vec<f64> = (0..LILLIEFORS_REPLICATIONS as u64)
        .into_par_iter()
        .map(|task| {
            let mut x = std_gumbel.sample(n, LILLIEFORS_SEED ^ n as u64, task);
            x.sort_by(f64::total_cmp);
            match fit_gumbel_mle(&x) {
                Ok(g) => ks_sorted(&x, |v| g.cdf(v)),
                Err(_) => 1.0,
            }
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let arc = std::sync::Arc::new(stats);
    cache.lock().unwrap().insert(n, arc.clone());
    arc
}

/// KS test of a Gumbel law with MLE-estimated parameters, against a
/// simulated null distribution of the statistic at the same sample size.
pub fn lilliefors_gumbel(data: &[f64]) -> Result<GofResult> {
    if data.len() < 10 {
        return Err(Error::TooFewPoints {
            needed: 10,
            got: data.len(),
        });
    }
    let g = fit_gumbel_mle(data)?;
    let d = ks_statistic(data, |v| g.cdf(v));
    let null = lilliefors_null(data.len());
    let crit = super::empirical_quantile_sorted(&null, 1.0 - GOF_LEVEL);
    let above = null.len() - null.partition_point(|&s| s < d);
    let p = (1.0 + above as f64) / (null.len() as f64 + 1.0);
    Ok(GofResult {
        test: GofTest::LillieforsGumbel,
        statistic: d,
        p_value: p,
        critical_value: Some(crit),
        pass: d < crit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evt::GpdParams;

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.36) ≈ 0.049, Q(1.0) ≈ 0.27
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.0) - 0.2700).abs() < 1e-3);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn quantiles_of_own_cdf_fit_nearly_perfectly() {
        let g = GevParams::new(0.1, 2.0, 1.0).unwrap();
        let n = 500;
        let data: Vec<f64> = (1..=n)
            .map(|i| g.quantile(i as f64 / (n as f64 + 1.0)).unwrap())
            .collect();
        let r = ks_test(&data, |v| g.cdf(v)).unwrap();
        assert!(r.statistic < 1.0 / n as f64);
        assert!(r.pass);
    }

    #[test]
    fn ks_rejects_wrong_law() {
        let data = GpdParams::new(0.0, 1.0, 0.0).unwrap().sample(2000, 1, 0);
        let r = ks_test(&data, |v| v.clamp(0.0, 1.0)).unwrap();
        assert!(!r.pass);
        assert!(ks_test(&data[..5], |v| v).is_err());
    }

    #[test]
    fn gumbel_mle_score_is_zero() {
        let data = GevParams::gumbel(2.0, 3.0).unwrap().sample(5000, 4, 0);
        let g = fit_gumbel_mle(&data).unwrap();
        assert!((g.sigma - 2.0).abs() < 0.1 && (g.mu - 3.0).abs() < 0.1);
        // d nll / d sigma = 0 at the optimum
        let h = 1e-6;
        let a = GevParams::gumbel(g.sigma + h, g.mu).unwrap().nll(&data);
        let b = GevParams::gumbel(g.sigma - h, g.mu).unwrap().nll(&data);
        assert!(((a - b) / (2.0 * h)).abs() < 1e-3);
    }

    #[test]
    fn lilliefors_power_against_frechet() {
        let data = GevParams::new(0.3, 1.0, 0.0).unwrap().sample(10_000, 11, 0);
        assert!(!lilliefors_gumbel(&data).unwrap().pass);
    }

    #[test]
    fn lilliefors_null_calibration() {
        let g = GevParams::gumbel(1.0, 0.0).unwrap();
        let passes = (0..200u64)
            .filter(|&t| lilliefors_gumbel(&g.sample(10_000, 99, t)).unwrap().pass)
            .count();
        assert!((180..=199).contains(&passes), "pass count {passes}/200");
    }
}
