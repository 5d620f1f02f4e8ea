//! Extremal index at periodic reference points.

use crate::dynsys::{jacobian, map_step, SystemKind, SystemSpec};
use crate::error::{Error, Result};
use crate::observables::metric_dist;

/// Tolerance for accepting ζ as p-periodic.
pub const PERIODIC_TOL: f64 = 1e-9;

/// θ = 1 − 1/|det Df^p(ζ)| at a repelling periodic point.
pub fn theoretical_ei_periodic(spec: &SystemSpec, zeta: &[f64], p: usize) -> Result<f64> {
    let kind = spec.kind;
    if kind.is_flow() || matches!(kind, SystemKind::CantorIfs) {
        return Err(Error::Unsupported(format!(
            "{} has no deterministic map iterate",
            kind.name()
        )));
    }
    let d = spec.dim();
    if zeta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: zeta.len(),
        });
    }
    if p == 0 {
        return Err(Error::Config("period must be >= 1".into()));
    }
    let mut x = zeta.to_vec();
    let mut next = vec![0.0; d];
    let mut det = 1.0;
    for _ in 0..p {
        let j = jacobian(&kind, &x)?;
        det *= if d == 1 {
            j[0]
        } else {
            j[0] * j[3] - j[1] * j[2]
        };
        map_step(&kind, &x, &mut next, 0.0);
        std::mem::swap(&mut x, &mut next);
    }
    let gap = metric_dist(spec.space(), &x, zeta)?;
    if !(gap <= PERIODIC_TOL) {
        return Err(Error::Verification(format!(
            "point is not {p}-periodic: |f^p(z) - z| = {gap:e}"
        )));
    }
    if !(det.abs() > 1.0) {
        return Err(Error::Domain(format!(
            "periodic point is not repelling: |det| = {}",
            det.abs()
        )));
    }
    Ok(1.0 - 1.0 / det.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(kind: SystemKind) -> SystemSpec {
        SystemSpec::new(kind).unwrap()
    }

    #[test]
    fn shift_map_examples() {
        let b2 = spec(SystemKind::BernoulliShift { q: 2 });
        assert_abs_diff_eq!(
            theoretical_ei_periodic(&b2, &[1.0 / 3.0], 2).unwrap(),
            0.75,
            epsilon = 1e-15
        );
        let b3 = spec(SystemKind::BernoulliShift { q: 3 });
        assert_abs_diff_eq!(
            theoretical_ei_periodic(&b3, &[0.5], 1).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn non_periodic_point_is_rejected() {
        let b3 = spec(SystemKind::BernoulliShift { q: 3 });
        assert!(matches!(
            theoretical_ei_periodic(&b3, &[0.3], 1),
            Err(Error::Verification(_))
        ));
    }

    #[test]
    fn manneville_pomeau_period_two() {
        let alpha = 0.5;
        let kind = SystemKind::ManPom { alpha };
        let left = |x: f64| x * (1.0 + (2.0 * x).powf(alpha));
        // x < 1/2 maps to y >= 1/2, and 2y − 1 = x closes the cycle
        let (mut lo, mut hi) = (0.25, 0.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * left(mid) - 1.0 - mid > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let z = 0.5 * (lo + hi);
        let d1 = 1.0 + (1.0 + alpha) * (2.0 * z).powf(alpha);
        let theta = theoretical_ei_periodic(&spec(kind), &[z], 2).unwrap();
        assert_abs_diff_eq!(theta, 1.0 - 1.0 / (2.0 * d1), epsilon = 1e-12);
    }

    #[test]
    fn cat_fixed_point() {
        let cat = spec(SystemKind::CatMap);
        // det of the cat matrix is 1: not area-changing
        assert!(matches!(
            theoretical_ei_periodic(&cat, &[0.0, 0.0], 1),
            Err(Error::Domain(_))
        ));
    }
}
