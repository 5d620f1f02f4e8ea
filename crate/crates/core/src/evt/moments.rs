use super::gpd::GpdParams;
use crate::error::{Error, Result};

/// k-th raw moment of a GPD excess: k! σ^k / Π_{j=1..k} (1 − jξ); ∞ once kξ ≥ 1.
pub fn gpd_analytic_moment(p: &GpdParams, k: u32) -> f64 {
    let mut m = 1.0;
    for j in 1..=k {
        let jf = j as f64;
        let den = 1.0 - jf * p.xi;
        if den <= 0.0 {
            return f64::INFINITY;
        }
        m *= jf * p.sigma / den;
    }
    m
}

/// Shape and scale from three consecutive raw moments M_{n−2}, M_{n−1}, M_n.
pub fn gpd_from_moments(m_nm2: f64, m_nm1: f64, m_n: f64, n: u32) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::Domain("moment order must be >= 2".into()));
    }
    let den = m_nm2 * m_n - m_nm1 * m_nm1;
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::Degenerate(
            "moment denominator M(n-2)M(n) - M(n-1)^2 is not positive".into(),
        ));
    }
    let nf = n as f64;
    let c = 1.0 / (nf * (nf - 1.0));
    let xi = c * (nf - 1.0 - m_nm1 * m_nm1 / den);
    let sigma = c * m_nm1 * m_n / den;
    Ok((xi, sigma))
}

/// GPD fit from empirical moments M_k = mean(z^k) of orders n−2..n.
pub fn fit_gpd_moments(excesses: &[f64], order: u32, threshold: f64) -> Result<GpdParams> {
    if excesses.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: excesses.len(),
        });
    }
    if excesses.iter().any(|&z| !(z >= 0.0) || !z.is_finite()) {
        return Err(Error::Domain(
            "excesses must be finite and non-negative".into(),
        ));
    }
    let nf = excesses.len() as f64;
    let m = |k: u32| excesses.iter().map(|z| z.powi(k as i32)).sum::<f64>() / nf;
    let (xi, sigma) = gpd_from_moments(m(order.saturating_sub(2)), m(order - 1), m(order), order)?;
    GpdParams::new(xi, sigma, threshold)
        .map_err(|_| Error::Degenerate(format!("moment fit gave sigma={sigma}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_closed_form() {
        let p = GpdParams::new(-0.5, 1.0, 0.0).unwrap();
        let (m1, m2) = (gpd_analytic_moment(&p, 1), gpd_analytic_moment(&p, 2));
        assert!((m1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((m2 - 2.0 / 3.0).abs() < 1e-15);
        let (xi, sigma) = gpd_from_moments(1.0, m1, m2, 2).unwrap();
        assert!((xi + 0.5).abs() < 1e-14);
        assert!((sigma - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dispersion_one_means_exponential() {
        // M1 = 1, M2 = 2: variance / mean² = 1
        let (xi, sigma) = gpd_from_moments(1.0, 1.0, 2.0, 2).unwrap();
        assert_eq!(xi, 0.0);
        assert_eq!(sigma, 1.0);
    }

    #[test]
    fn degenerate_moments() {
        assert!(matches!(
            gpd_from_moments(1.0, 1.0, 1.0, 2),
            Err(Error::Degenerate(_))
        ));
        assert!(fit_gpd_moments(&[2.0; 10], 2, 0.0).is_err());
    }

    #[test]
    fn empirical_fit_recovers_shape() {
        let z = GpdParams::new(-0.3, 1.5, 0.0)
            .unwrap()
            .sample(400_000, 8, 0);
        let f = fit_gpd_moments(&z, 3, 0.0).unwrap();
        assert!(
            (f.xi + 0.3).abs() < 0.02 && (f.sigma - 1.5).abs() < 0.03,
            "{f:?}"
        );
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn analytic_moments_are_reproduced_exactly(xi in -2.0..0.15f64, sigma in 0.1..5.0f64, n in 2u32..=5) {
            let p = GpdParams::new(xi, sigma, 0.0).unwrap();
            let m = |k| gpd_analytic_moment(&p, k);
            let (xh, sh) = gpd_from_moments(m(n - 2), m(n - 1), m(n), n).unwrap();
            prop_assert!((xh - xi).abs() < 1e-12, "xi {} vs {}", xh, xi);
            prop_assert!((sh - sigma).abs() < 1e-12 * sigma.max(1.0), "sigma {} vs {}", sh, sigma);
        }
    }
}
