//! Extremes of smooth physical observables on attractors with a
//! partially fractal structure.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::ols;
use crate::dynsys::{NoiseSpec, SystemSpec, Trajectory};
use crate::error::{config, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPrediction {
    pub delta: f64,
    pub xi: f64,
    pub sigma: f64,
}

/// δ = d_s + (d_u + d_n)/2, ξ = −1/δ, σ = (A_max − T)/δ.
pub fn physical_predictions(
    d_s: f64,
    d_u: f64,
    d_n: f64,
    a_max: f64,
    t: f64,
) -> Result<PhysicalPrediction> {
    if [d_s, d_u, d_n].iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::Domain(
            "partial dimensions must be non-negative".into(),
        ));
    }
    let delta = d_s + (d_u + d_n) / 2.0;
    if !(delta > 0.0) {
        return Err(Error::Domain("all partial dimensions vanish".into()));
    }
    if !(t < a_max) {
        return Err(Error::Domain(format!(
            "threshold {t} must lie below the maximum {a_max}"
        )));
    }
    Ok(PhysicalPrediction {
        delta,
        xi: -1.0 / delta,
        sigma: (a_max - t) / delta,
    })
}

/// (d_u + d_n, d_s) from the shape parameters of a physical observable
/// (`xi_a`) and of a g3 distance observable with exponent `alpha` (`xi_b`).
pub fn partial_dimensions(xi_a: f64, xi_b: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(xi_a < 0.0 && xi_b < 0.0) {
        return Err(Error::Domain(
            "both shape parameters must be negative".into(),
        ));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain("alpha must be positive".into()));
    }
    let unstable = 2.0 / xi_a - 2.0 / (alpha * xi_b);
    let stable = 1.0 / (alpha * xi_b) - 2.0 / xi_a;
    Ok((unstable, stable))
}

/// −1/ξ_A < d_KY < −2/ξ_A. A violation signals inconsistent inputs, not a failure.
pub fn kaplan_yorke_bound_holds(xi_a: f64, d_ky: f64) -> bool {
    xi_a < 0.0 && -1.0 / xi_a < d_ky && d_ky < -2.0 / xi_a
}

/// Largest values of a linear observable a·x + d along a long orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSample {
    /// Descending; `top[0]` is the sample maximum.
    pub top: Vec<f64>,
    pub series_len: usize,
}

#[derive(PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Key {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Streams `s` states and keeps the `keep` largest observable values.
#[allow(clippy::too_many_arguments)]
pub fn linear_tail_sample(
    spec: &SystemSpec,
    coeffs: &[f64],
    offset: f64,
    x0: &[f64],
    s: usize,
    burn_in: usize,
    seed: u64,
    keep: usize,
) -> Result<TailSample> {
    if coeffs.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: coeffs.len(),
        });
    }
    if keep == 0 || keep > s {
        return config("keep must lie in 1..=s");
    }
    let mut traj = Trajectory::new(spec, NoiseSpec::None, x0, burn_in, seed)?;
    let mut heap: BinaryHeap<Reverse<Key>> = BinaryHeap::with_capacity(keep + 1);
    for _ in 0..s {
        let x = traj.next_state()?;
        let a = coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + offset;
        if heap.len() < keep {
            heap.push(Reverse(Key(a)));
        } else if a > heap.peek().expect("non-empty").0 .0 {
            heap.pop();
            heap.push(Reverse(Key(a)));
        }
    }
    let mut top: Vec<f64> = heap.into_iter().map(|r| r.0 .0).collect();
    top.sort_by(|a, b| b.total_cmp(a));
    Ok(TailSample { top, series_len: s })
}

/// Log–log slope of #{A > A_max − y} against y, fitted on `points`
/// log-spaced y's between the distances to the `lo_count`-th and
/// `hi_count`-th largest values. Near a maximum with exponent δ the count
/// grows like y^δ.
pub fn exceedance_tail_slope(
    sample: &TailSample,
    lo_count: usize,
    hi_count: usize,
    points: usize,
) -> Result<f64> {
    let top = &sample.top;
    if !(2 <= lo_count && lo_count < hi_count && hi_count <= top.len()) {
        return config("need 2 <= lo_count < hi_count <= sample size");
    }
    if points < 3 {
        return config("need at least three fit points");
    }
    let a_max = top[0];
    let z: Vec<f64> = top.iter().map(|a| a_max - a).collect();
    let (y_lo, y_hi) = (z[lo_count - 1], z[hi_count - 1]);
    if !(y_lo > 0.0 && y_hi > y_lo) {
        return Err(Error::Degenerate("tail has tied values".into()));
    }
    let (mut lx, mut ly) = (Vec::with_capacity(points), Vec::with_capacity(points));
    for i in 0..points {
        let y = y_lo * (y_hi / y_lo).powf(i as f64 / (points - 1) as f64);
        let count = z.partition_point(|&v| v < y);
        lx.push(y.ln());
        ly.push((count as f64).ln());
    }
    Ok(ols(&lx, &ly)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::SystemKind;
    use approx::assert_abs_diff_eq;

    #[test]
    fn henon_prediction() {
        let p = physical_predictions(0.26, 1.0, 0.0, 1.27, 1.2).unwrap();
        assert_abs_diff_eq!(p.delta, 0.76, epsilon = 1e-12);
        assert_abs_diff_eq!(p.xi, -1.316, epsilon = 1e-3);
        assert_abs_diff_eq!(p.sigma, 0.07 / 0.76, epsilon = 1e-12);
        let flow = physical_predictions(0.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!((flow.delta, flow.xi), (1.0, -1.0));
    }

    #[test]
    fn partial_dimensions_invert_forward_map() {
        let alpha = 1.3;
        for &(d_s, d_un) in &[(0.26, 1.0), (0.06, 2.0), (1.0, 1.0), (0.4, 0.7)] {
            let xi_a = -1.0 / (d_s + d_un / 2.0);
            let xi_b = -1.0 / (alpha * (d_s + d_un));
            let (un, s) = partial_dimensions(xi_a, xi_b, alpha).unwrap();
            assert_abs_diff_eq!(un, d_un, epsilon = 1e-12);
            assert_abs_diff_eq!(s, d_s, epsilon = 1e-12);
            assert!(kaplan_yorke_bound_holds(xi_a, d_s + d_un) || d_s == 0.0);
        }
        assert!(!kaplan_yorke_bound_holds(-1.0, 2.5));
        assert!(partial_dimensions(0.1, -0.2, 1.0).is_err());
    }

    #[test]
    fn uniform_tail_slope_is_one() {
        // A = x on the shift map is uniform: count(A > 1 − y) ∝ y
        let spec = SystemSpec::new(SystemKind::BernoulliShift { q: 3 }).unwrap();
        let t = linear_tail_sample(&spec, &[1.0], 0.0, &[0.1234], 1_000_000, 100, 0, 5000).unwrap();
        assert_eq!(t.top.len(), 5000);
        assert!(t.top.windows(2).all(|w| w[0] >= w[1]));
        let slope = exceedance_tail_slope(&t, 50, 5000, 20).unwrap();
        assert!((slope - 1.0).abs() < 0.1, "{slope}");
    }
}
