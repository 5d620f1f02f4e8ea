//! Distance and physical observables evaluated along orbits.

use serde::{Deserialize, Serialize};

use crate::dynsys::{Orbit, Space};
use crate::error::{config, Error, Result};

/// Distance in `space`: Euclidean, with the quotient metric per coordinate on tori.
pub fn metric_dist(space: Space, x: &[f64], y: &[f64]) -> Result<f64> {
    let d = space.dim();
    if x.len() != d || y.len() != d {
        let got = if x.len() != d { x.len() } else { y.len() };
        return Err(Error::DimensionMismatch { expected: d, got });
    }
    Ok(dist2(space.is_torus(), x, y).sqrt())
}

#[inline]
pub(crate) fn dist2(torus: bool, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in x.iter().zip(y) {
        let mut d = (a - b).abs();
        if torus && d > 0.5 {
            d = 1.0 - d;
        }
        s += d * d;
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "obs", rename_all = "snake_case")]
pub enum ObservableKind {
    /// −log r
    G1 { zeta: Vec<f64> },
    /// r^(−1/α)
    G2 { zeta: Vec<f64>, alpha: f64 },
    /// C − r^(1/α)
    G3 { zeta: Vec<f64>, alpha: f64, c: f64 },
    /// a·x + d
    Linear { coeffs: Vec<f64>, d: f64 },
}

/// Which distance observable family a fit refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsClass {
    G1,
    G2,
    G3,
}

impl ObsClass {
    /// The observable value for a distance `r`.
    #[inline]
    pub fn apply(self, r: f64, alpha: f64, c: f64) -> f64 {
        match self {
            ObsClass::G1 => -r.ln(),
            ObsClass::G2 => r.powf(-1.0 / alpha),
            ObsClass::G3 => c - r.powf(1.0 / alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub kind: ObservableKind,
    pub space: Space,
    /// Per-coordinate weights w_i in the distance sqrt(Σ w_i (x_i − ζ_i)²).
    pub weights: Option<Vec<f64>>,
}

impl ObservableSpec {
    pub fn new(kind: ObservableKind, space: Space) -> Result<Self> {
        let d = space.dim();
        match &kind {
            ObservableKind::G1 { zeta }
            | ObservableKind::G2 { zeta, .. }
            | ObservableKind::G3 { zeta, .. } => {
                if zeta.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: zeta.len(),
                    });
                }
                if zeta.iter().any(|z| !z.is_finite()) {
                    return config("reference point must be finite");
                }
                if space.is_torus() && zeta.iter().any(|z| !(0.0..1.0).contains(z)) {
                    return config("reference point must lie on the torus [0,1)^D");
                }
            }
            ObservableKind::Linear { coeffs, d: off } => {
                if coeffs.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: coeffs.len(),
                    });
                }
                if coeffs.iter().all(|&a| a == 0.0) {
                    return config("linear observable needs a nonzero coefficient");
                }
                if !off.is_finite() || coeffs.iter().any(|a| !a.is_finite()) {
                    return config("linear coefficients must be finite");
                }
            }
        }
        match kind {
            ObservableKind::G2 { alpha, .. } | ObservableKind::G3 { alpha, .. }
                if !(alpha > 0.0) =>
            {
                return config("alpha must be positive");
            }
            _ => {}
        }
        Ok(ObservableSpec {
            kind,
            space,
            weights: None,
        })
    }

    pub fn with_weights(mut self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.space.dim() || w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return config("weights must be positive, one per coordinate");
        }
        self.weights = Some(w);
        Ok(self)
    }

    fn distance(&self, zeta: &[f64], x: &[f64]) -> f64 {
        match &self.weights {
            None => dist2(self.space.is_torus(), x, zeta).sqrt(),
            Some(w) => x
                .iter()
                .zip(zeta)
                .zip(w)
                .map(|((a, b), wi)| {
                    let mut d = (a - b).abs();
                    if self.space.is_torus() && d > 0.5 {
                        d = 1.0 - d;
                    }
                    wi * d * d
                })
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Observable value at `x`; an exact hit of the reference point is an error.
pub fn evaluate(obs: &ObservableSpec, x: &[f64]) -> Result<f64> {
    let d = obs.space.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    Ok(match &obs.kind {
        ObservableKind::Linear { coeffs, d } => {
            coeffs.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + d
        }
        ObservableKind::G1 { zeta } => {
            let r = obs.distance(zeta, x);
            if r == 0.0 {
                return Err(Error::SingularObservation { index: 0 });
            }
            -r.ln()
        }
        ObservableKind::G2 { zeta, alpha } => {
            let r = obs.distance(zeta, x);
            if r == 0.0 {
                return Err(Error::SingularObservation { index: 0 });
            }
            r.powf(-1.0 / alpha)
        }
        ObservableKind::G3 { zeta, alpha, c } => c - obs.distance(zeta, x).powf(1.0 / alpha),
    })
}

/// Where a series came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Generated {
        system: String,
        observable: String,
        seed: u64,
    },
    External {
        origin: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub dt: f64,
    pub provenance: Provenance,
}

impl TimeSeries {
    pub fn external(values: Vec<f64>, origin: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return config("empty series");
        }
        Ok(TimeSeries {
            values,
            dt: 1.0,
            provenance: Provenance::External {
                origin: origin.into(),
            },
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Pointwise observable along an orbit.
pub fn series(orbit: &Orbit, obs: &ObservableSpec, system: &str) -> Result<TimeSeries> {
    if orbit.dim != obs.space.dim() {
        return Err(Error::DimensionMismatch {
            expected: obs.space.dim(),
            got: orbit.dim,
        });
    }
    let values = orbit
        .iter()
        .enumerate()
        .map(|(i, x)| {
            evaluate(obs, x).map_err(|e| match e {
                Error::SingularObservation { .. } => Error::SingularObservation { index: i },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return config("empty orbit");
    }
    let observable = match &obs.kind {
        ObservableKind::G1 { .. } => "g1",
        ObservableKind::G2 { .. } => "g2",
        ObservableKind::G3 { .. } => "g3",
        ObservableKind::Linear { .. } => "linear",
    };
    Ok(TimeSeries {
        values,
        dt: orbit.dt,
        provenance: Provenance::Generated {
            system: system.into(),
            observable: observable.into(),
            seed: orbit.seed,
        },
    })
}

/// Running per-block minimum distance to a set of reference points.
///
/// Any distance observable's block maxima follow by applying its
/// (decreasing) transform to these minima.
pub struct BlockMinDistances {
    zetas: Vec<Vec<f64>>,
    torus: bool,
    block: usize,
    count: usize,
    cur: Vec<f64>,
    /// `[zeta][block]` minima of completed blocks.
    pub minima: Vec<Vec<f64>>,
}

impl BlockMinDistances {
    pub fn new(zetas: Vec<Vec<f64>>, space: Space, block: usize) -> Self {
        let q = zetas.len();
        BlockMinDistances {
            zetas,
            torus: space.is_torus(),
            block: block.max(1),
            count: 0,
            cur: vec![f64::INFINITY; q],
            minima: vec![Vec::new(); q],
        }
    }

    #[inline]
    pub fn push(&mut self, x: &[f64]) {
        for (c, z) in self.cur.iter_mut().zip(&self.zetas) {
            let d2 = dist2(self.torus, x, z);
            if d2 < *c {
                *c = d2;
            }
        }
        self.count += 1;
        if self.count == self.block {
            for (o, c) in self.minima.iter_mut().zip(self.cur.iter_mut()) {
                o.push(c.sqrt());
                *c = f64::INFINITY;
            }
            self.count = 0;
        }
    }

    /// Completed blocks only; a trailing partial block is dropped.
    pub fn finish(self) -> Vec<Vec<f64>> {
        self.minima
    }
}

/// Minimum distance to each reference point within consecutive blocks of
/// `block` states; trailing partial blocks are dropped. Result is `[zeta][block]`.
pub fn block_min_distances<'a, I>(
    states: I,
    zetas: &[Vec<f64>],
    space: Space,
    block: usize,
) -> Vec<Vec<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = BlockMinDistances::new(zetas.to_vec(), space, block);
    for x in states {
        acc.push(x);
    }
    acc.finish()
}

/// Coarsens block minima by grouping `factor` consecutive blocks.
pub fn coarsen_minima(minima: &[f64], factor: usize) -> Vec<f64> {
    minima
        .chunks_exact(factor.max(1))
        .map(|c| c.iter().cloned().fold(f64::INFINITY, f64::min))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn metric_examples() {
        assert_abs_diff_eq!(
            metric_dist(Space::Torus1, &[0.9], &[0.1]).unwrap(),
            0.2,
            epsilon = 1e-12
        );
        assert_eq!(
            metric_dist(Space::Plane2, &[0.0, 0.0], &[3.0, 4.0]).unwrap(),
            5.0
        );
        assert_abs_diff_eq!(
            metric_dist(Space::Torus2, &[0.0, 0.0], &[0.5, 0.5]).unwrap(),
            0.5f64.sqrt()
        );
        assert!(matches!(
            metric_dist(Space::Plane2, &[0.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn g(kind: ObservableKind) -> ObservableSpec {
        ObservableSpec::new(kind, Space::Interval).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(
            evaluate(&g(ObservableKind::G1 { zeta: vec![0.0] }), &[1.0]).unwrap(),
            0.0
        );
        let v = evaluate(
            &g(ObservableKind::G2 {
                zeta: vec![0.0],
                alpha: 3.0,
            }),
            &[0.125],
        )
        .unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
        let v = evaluate(
            &g(ObservableKind::G3 {
                zeta: vec![0.0],
                alpha: 3.0,
                c: 10.0,
            }),
            &[1.0],
        )
        .unwrap();
        assert_abs_diff_eq!(v, 9.0);
        assert!(matches!(
            evaluate(&g(ObservableKind::G1 { zeta: vec![0.3] }), &[0.3]),
            Err(Error::SingularObservation { .. })
        ));
    }

    #[test]
    fn constant_orbit_gives_constant_series() {
        let orbit = Orbit {
            states: vec![0.6; 10],
            dim: 1,
            dt: 1.0,
            seed: 0,
            burn_in: 0,
            transitions: None,
        };
        let s = series(&orbit, &g(ObservableKind::G1 { zeta: vec![0.5] }), "test").unwrap();
        for v in s.values {
            assert_abs_diff_eq!(v, -(0.1f64).ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn exact_hit_reports_index() {
        let orbit = Orbit {
            states: vec![0.1, 0.2, 0.5],
            dim: 1,
            dt: 1.0,
            seed: 0,
            burn_in: 0,
            transitions: None,
        };
        let r = series(&orbit, &g(ObservableKind::G1 { zeta: vec![0.5] }), "test");
        assert_eq!(r.unwrap_err(), Error::SingularObservation { index: 2 });
    }

    #[test]
    fn linear_observable_picks_coordinate() {
        let obs = ObservableSpec::new(
            ObservableKind::Linear {
                coeffs: vec![1.0, 0.0],
                d: 0.0,
            },
            Space::Plane2,
        )
        .unwrap();
        assert_eq!(evaluate(&obs, &[0.7, -3.0]).unwrap(), 0.7);
        assert!(ObservableSpec::new(
            ObservableKind::Linear {
                coeffs: vec![0.0, 0.0],
                d: 1.0
            },
            Space::Plane2
        )
        .is_err());
    }

    #[test]
    fn block_minima_match_brute_force() {
        let pts: Vec<[f64; 2]> = (0..23)
            .map(|i| [((i * 7) % 23) as f64 / 23.0, ((i * 5) % 23) as f64 / 23.0])
            .collect();
        let z = vec![vec![0.51, 0.49]];
        let mins = block_min_distances(pts.iter().map(|p| &p[..]), &z, Space::Torus2, 5);
        assert_eq!(mins[0].len(), 4);
        for (b, m) in mins[0].iter().enumerate() {
            let brute = pts[b * 5..b * 5 + 5]
                .iter()
                .map(|p| metric_dist(Space::Torus2, p, &z[0]).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(*m, brute, epsilon = 1e-15);
        }
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> impl Strategy<Value = f64> {
        0.0..1.0f64
    }

    proptest! {
        #[test]
        fn torus_metric_axioms(a in (unit(), unit()), b in (unit(), unit()), c in (unit(), unit())) {
            let (a, b, c) = ([a.0, a.1], [b.0, b.1], [c.0, c.1]);
            let ab = metric_dist(Space::Torus2, &a, &b).unwrap();
            let ba = metric_dist(Space::Torus2, &b, &a).unwrap();
            let ac = metric_dist(Space::Torus2, &a, &c).unwrap();
            let cb = metric_dist(Space::Torus2, &c, &b).unwrap();
            prop_assert!((ab - ba).abs() < 1e-15);
            prop_assert!(ab <= ac + cb + 1e-12);
            prop_assert!(ab <= 0.5f64.sqrt() + 1e-15);
            prop_assert_eq!(metric_dist(Space::Torus2, &a, &a).unwrap(), 0.0);
        }

        #[test]
        fn g1_exceedance_matches_radius(x in unit(), z in unit(), u in 0.0..10.0f64) {
            prop_assume!(x != z);
            let obs = ObservableSpec::new(ObservableKind::G1 { zeta: vec![z] }, Space::Interval).unwrap();
            let v = evaluate(&obs, &[x]).unwrap();
            let r = (x - z).abs();
            prop_assume!((v - u).abs() > 1e-9);
            prop_assert_eq!(v > u, r < (-u).exp());
        }

        #[test]
        fn argmax_is_shared_by_all_families(xs in prop::collection::vec(unit(), 2..50), z in unit()) {
            prop_assume!(xs.iter().all(|&x| x != z));
            let orbit = Orbit { states: xs.clone(), dim: 1, dt: 1.0, seed: 0, burn_in: 0, transitions: None };
            let argmax = |k: ObservableKind| {
                let s = series(&orbit, &ObservableSpec::new(k, Space::Interval).unwrap(), "p").unwrap();
                s.values.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc }).0
            };
            let dist_argmin = xs.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &x)| {
                let d = (x - z).abs();
                if d < acc.1 { (i, d) } else { acc }
            }).0;
            prop_assert_eq!(argmax(ObservableKind::G1 { zeta: vec![z] }), dist_argmin);
            prop_assert_eq!(argmax(ObservableKind::G2 { zeta: vec![z], alpha: 3.0 }), dist_argmin);
            prop_assert_eq!(argmax(ObservableKind::G3 { zeta: vec![z], alpha: 3.0, c: 1.0 }), dist_argmin);
        }

        #[test]
        fn g3_never_exceeds_c(x in unit(), z in unit(), c in -5.0..5.0f64) {
            let obs = ObservableSpec::new(ObservableKind::G3 { zeta: vec![z], alpha: 2.0, c }, Space::Interval).unwrap();
            prop_assert!(evaluate(&obs, &[x]).unwrap() <= c);
        }
    }
}
