//! Block maxima, threshold exceedances, declustering and extremal index estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::empirical_quantile;

/// Default quantile for extremal index estimation.
pub const DEFAULT_EI_QUANTILE: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMaxima {
    pub bin_length: usize,
    /// Bin maxima in time order, outliers removed.
    pub maxima: Vec<f64>,
    pub trimmed: usize,
}

/// Maxima of consecutive bins of length `n`; the partial trailing bin is
/// dropped and the `trim_out` smallest and largest maxima are removed.
pub fn block_maxima(series: &[f64], n: usize, trim_out: usize) -> Result<BlockMaxima> {
    if n == 0 {
        return Err(Error::Config("bin length must be >= 1".into()));
    }
    maxima_from_blocks(raw_block_maxima(series, n), n, trim_out)
}

/// Trims already-computed block maxima, keeping time order.
pub fn maxima_from_blocks(maxima: Vec<f64>, n: usize, trim_out: usize) -> Result<BlockMaxima> {
    let k = maxima.len();
    if k < 2 * trim_out + 4 {
        return Err(Error::TooFewPoints {
            needed: 2 * trim_out + 4,
            got: k,
        });
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| maxima[a].total_cmp(&maxima[b]));
    let mut drop = vec![false; k];
    for &i in order[..trim_out].iter().chain(&order[k - trim_out..]) {
        drop[i] = true;
    }
    let kept = maxima
        .into_iter()
        .zip(drop)
        .filter(|(_, d)| !d)
        .map(|(v, _)| v)
        .collect();
    Ok(BlockMaxima {
        bin_length: n,
        maxima: kept,
        trimmed: trim_out,
    })
}

/// Unsorted maxima of consecutive bins, trailing partial bin dropped.
pub fn raw_block_maxima(series: &[f64], n: usize) -> Vec<f64> {
    series
        .chunks_exact(n.max(1))
        .map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exceedances {
    pub threshold: f64,
    pub p: Option<f64>,
    /// Excesses X − T.
    pub values: Vec<f64>,
    pub indices: Vec<usize>,
}

impl Exceedances {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn quantile_threshold(series: &[f64], p: f64) -> Result<f64> {
    empirical_quantile(series, p)
}

/// Strict exceedances X > T.
pub fn exceedances(series: &[f64], threshold: f64) -> Exceedances {
    let (mut values, mut indices) = (Vec::new(), Vec::new());
    for (i, &x) in series.iter().enumerate() {
        if x > threshold {
            values.push(x - threshold);
            indices.push(i);
        }
    }
    Exceedances {
        threshold,
        p: None,
        values,
        indices,
    }
}

/// Exceedances of the empirical p-quantile.
pub fn exceedances_at_quantile(series: &[f64], p: f64) -> Result<Exceedances> {
    let t = quantile_threshold(series, p)?;
    let mut e = exceedances(series, t);
    e.p = Some(p);
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum EiEstimator {
    FerroSegers,
    Sueveges,
    Runs { q: usize },
    Blocks { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EiEstimate {
    pub theta: f64,
    pub estimator: EiEstimator,
    pub p: Option<f64>,
    pub threshold: f64,
    pub n_exceedances: usize,
    pub n_clusters: usize,
    /// The raw value fell outside (0,1] and was clamped.
    pub clamped: bool,
    /// A degenerate sample forced the fallback value.
    pub fallback: bool,
}

fn clamp_theta(raw: f64) -> (f64, bool) {
    if raw > 1.0 {
        (1.0, true)
    } else if raw <= 0.0 || raw.is_nan() {
        (f64::MIN_POSITIVE, true)
    } else {
        (raw, false)
    }
}

fn interexceedance_times(idx: &[usize]) -> Result<Vec<f64>> {
    if idx.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: idx.len(),
        });
    }
    Ok(idx.windows(2).map(|w| (w[1] - w[0]) as f64).collect())
}

/// Intervals estimator θ = 2(Σ(Tᵢ−1))² / (N Σ(Tᵢ−1)(Tᵢ−2)) from exceedance positions.
pub fn ferro_segers_from_indices(idx: &[usize]) -> Result<(f64, bool)> {
    let t = interexceedance_times(idx)?;
    let s1: f64 = t.iter().map(|ti| ti - 1.0).sum();
    let s2: f64 = t.iter().map(|ti| (ti - 1.0) * (ti - 2.0)).sum();
    let den = t.len() as f64 * s2;
    if !(den > 0.0) {
        return Err(Error::EstimatorDegenerate(
            "inter-exceedance times too short for the intervals estimator".into(),
        ));
    }
    Ok(clamp_theta(2.0 * s1 * s1 / den))
}

pub fn ei_ferro_segers(series: &[f64], p: f64) -> Result<EiEstimate> {
    let e = exceedances_at_quantile(series, p)?;
    let (theta, clamped) = ferro_segers_from_indices(&e.indices)?;
    Ok(EiEstimate {
        theta,
        estimator: EiEstimator::FerroSegers,
        p: Some(p),
        threshold: e.threshold,
        n_exceedances: e.len(),
        n_clusters: (theta * e.len() as f64).round() as usize,
        clamped,
        fallback: false,
    })
}

/// Likelihood estimator from exceedance positions with exceedance probability 1 − p.
/// Returns (θ, clamped, fallback).
pub fn sueveges_from_indices(idx: &[usize], p: f64) -> Result<(f64, bool, bool)> {
    let t = interexceedance_times(idx)?;
    let q = 1.0 - p;
    let n = t.len() as f64;
    let nc = t.iter().filter(|&&ti| ti > 1.0).count() as f64;
    let sq: f64 = t.iter().map(|ti| q * (ti - 1.0)).sum();
    if sq <= 0.0 {
        let (theta, clamped) = clamp_theta(nc / n);
        return Ok((theta, clamped, true));
    }
    let b = sq + n + nc;
    let raw = (b - (b * b - 8.0 * nc * sq).max(0.0).sqrt()) / (2.0 * sq);
    let (theta, clamped) = clamp_theta(raw);
    Ok((theta, clamped, false))
}

pub fn ei_sueveges(series: &[f64], p: f64) -> Result<EiEstimate> {
    let e = exceedances_at_quantile(series, p)?;
    let (theta, clamped, fallback) = sueveges_from_indices(&e.indices, p)?;
    Ok(EiEstimate {
        theta,
        estimator: EiEstimator::Sueveges,
        p: Some(p),
        threshold: e.threshold,
        n_exceedances: e.len(),
        n_clusters: (theta * e.len() as f64).round() as usize,
        clamped,
        fallback,
    })
}

/// Exceedances followed by at least `q` non-exceedances close a cluster;
/// the end of the series closes the last one.
pub fn ei_runs(series: &[f64], threshold: f64, q: usize) -> Result<EiEstimate> {
    if q == 0 {
        return Err(Error::Config("run length must be >= 1".into()));
    }
    let e = exceedances(series, threshold);
    if e.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let closing = e.indices.windows(2).filter(|w| w[1] - w[0] > q).count() + 1;
    let theta = closing as f64 / e.len() as f64;
    Ok(EiEstimate {
        theta,
        estimator: EiEstimator::Runs { q },
        p: None,
        threshold,
        n_exceedances: e.len(),
        n_clusters: closing,
        clamped: false,
        fallback: false,
    })
}

/// Share of length-`n` blocks with an exceedance over the number of exceedances.
pub fn ei_blocks(series: &[f64], threshold: f64, n: usize) -> Result<EiEstimate> {
    if n == 0 {
        return Err(Error::Config("block length must be >= 1".into()));
    }
    let e = exceedances(series, threshold);
    if e.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut blocks = 0;
    let mut last = usize::MAX;
    for &i in &e.indices {
        if i / n != last {
            blocks += 1;
            last = i / n;
        }
    }
    let theta = blocks as f64 / e.len() as f64;
    Ok(EiEstimate {
        theta,
        estimator: EiEstimator::Blocks { n },
        p: None,
        threshold,
        n_exceedances: e.len(),
        n_clusters: blocks,
        clamped: false,
        fallback: false,
    })
}

/// Keeps the largest excess of each cluster; clusters break after `q` non-exceedances.
pub fn runs_decluster(exc: &Exceedances, q: usize) -> Exceedances {
    let mut out = Exceedances {
        threshold: exc.threshold,
        p: exc.p,
        values: Vec::new(),
        indices: Vec::new(),
    };
    let mut i = 0;
    while i < exc.len() {
        let mut best = i;
        let mut j = i;
        while j + 1 < exc.len() && exc.indices[j + 1] - exc.indices[j] <= q {
            j += 1;
            if exc.values[j] > exc.values[best] {
                best = j;
            }
        }
        out.values.push(exc.values[best]);
        out.indices.push(exc.indices[best]);
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn uniforms(n: usize, seed: u64) -> Vec<f64> {
        let mut r = crate::rng::substream(seed, 0);
        (0..n).map(|_| r.random::<f64>()).collect()
    }

    #[test]
    fn block_maxima_examples() {
        let b = block_maxima(&[1.0, 3.0, 2.0, 5.0, 4.0, 0.0, 7.0, 1.0, 9.0], 2, 0).unwrap();
        assert_eq!(b.maxima, vec![3.0, 5.0, 4.0, 7.0]);
        let s = [0.3, 0.1, 0.9, 0.5, 0.2];
        assert_eq!(block_maxima(&s, 1, 0).unwrap().maxima, s.to_vec());
        assert!(matches!(
            block_maxima(&[1.0, 2.0, 3.0], 1, 0),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn three_block_example() {
        assert_eq!(
            raw_block_maxima(&[1.0, 3.0, 2.0, 5.0, 4.0, 0.0], 2),
            vec![3.0, 5.0, 4.0]
        );
    }

    #[test]
    fn trimming_removes_both_ends() {
        let s = [5.0, 0.0, 9.0, 3.0, 1.0, 8.0, 4.0, 7.0, 2.0, 6.0];
        let b = block_maxima(&s, 1, 2).unwrap();
        assert_eq!(b.maxima, vec![5.0, 3.0, 4.0, 7.0, 2.0, 6.0]);
    }

    #[test]
    fn threshold_and_empty_exceedances() {
        assert_eq!(quantile_threshold(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.5);
        assert!(exceedances(&[1.0, 2.0], 2.0).is_empty());
    }

    #[test]
    fn exceedance_count_is_binomial() {
        let u = uniforms(100_000, 1);
        let e = exceedances_at_quantile(&u, 0.9).unwrap();
        let expect = 10_000.0;
        assert!((e.len() as f64 - expect).abs() < 3.0 * (100_000.0f64 * 0.1 * 0.9).sqrt());
    }

    #[test]
    fn intervals_estimator_example_clamps() {
        let (theta, clamped) = ferro_segers_from_indices(&[2, 5, 6, 10]).unwrap();
        assert_eq!(theta, 1.0);
        assert!(clamped);
        // raw value 2·25/(3·8)
        let t = [3.0f64, 1.0, 4.0];
        let raw = 2.0 * t.iter().map(|x| x - 1.0).sum::<f64>().powi(2)
            / (3.0 * t.iter().map(|x| (x - 1.0) * (x - 2.0)).sum::<f64>());
        assert!((raw - 50.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn intervals_estimator_degenerate() {
        assert!(matches!(
            ferro_segers_from_indices(&[1, 2, 3, 4]),
            Err(Error::EstimatorDegenerate(_))
        ));
    }

    #[test]
    fn likelihood_estimator_fallback_on_solid_cluster() {
        let (theta, _, fallback) = sueveges_from_indices(&[5, 6, 7, 8, 9], 0.99).unwrap();
        assert!(fallback);
        assert!(theta < 1e-300);
    }

    #[test]
    fn iid_uniforms_have_unit_index() {
        let u = uniforms(100_000, 2);
        let fs = ei_ferro_segers(&u, 0.98).unwrap();
        let sv = ei_sueveges(&u, 0.98).unwrap();
        assert!((0.9..=1.0).contains(&fs.theta), "{fs:?}");
        assert!((sv.theta - 1.0).abs() <= 0.05, "{sv:?}");
    }

    #[test]
    fn runs_and_blocks_examples() {
        let mut s = vec![0.0; 100];
        for i in [10, 30, 50, 70] {
            s[i] = 1.0;
        }
        assert_eq!(ei_runs(&s, 0.5, 5).unwrap().theta, 1.0);
        let e = exceedances(&s, 0.5);
        assert_eq!(runs_decluster(&e, 5), e);

        let mut s = vec![0.0; 20];
        for v in s.iter_mut().take(9).skip(4) {
            *v = 1.0;
        }
        let r = ei_runs(&s, 0.5, 3).unwrap();
        assert!((r.theta - 1.0 / 5.0).abs() < 1e-15);

        // each exceedance doubled back-to-back
        let u = uniforms(20_000, 3);
        let doubled: Vec<f64> = u.iter().flat_map(|&x| [x, x]).collect();
        let t = quantile_threshold(&doubled, 0.99).unwrap();
        let r = ei_runs(&doubled, t, 2).unwrap();
        assert!((r.theta - 0.5).abs() < 0.03, "{}", r.theta);
        let b = ei_blocks(&doubled, t, 2).unwrap();
        assert!((b.theta - 0.5).abs() < 0.03);
    }

    #[test]
    fn clustering_lowers_the_index() {
        let u = uniforms(50_000, 4);
        let doubled: Vec<f64> = u.iter().flat_map(|&x| [x, x]).collect();
        let iid = ei_sueveges(&u, 0.98).unwrap().theta;
        let clustered = ei_sueveges(&doubled, 0.98).unwrap().theta;
        assert!(clustered < iid);
        assert!((clustered - 0.5).abs() < 0.1);
    }

    #[test]
    fn decluster_keeps_cluster_peaks() {
        let e = Exceedances {
            threshold: 0.0,
            p: None,
            values: vec![1.0, 3.0, 2.0, 5.0, 4.0],
            indices: vec![0, 1, 2, 10, 11],
        };
        let d = runs_decluster(&e, 3);
        assert_eq!(d.values, vec![3.0, 5.0]);
        assert_eq!(d.indices, vec![1, 10]);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn max_of_maxima(s in prop::collection::vec(-100.0..100.0f64, 8..200), n in 1usize..5) {
            prop_assume!(s.len() / n >= 4);
            let b = block_maxima(&s, n, 0).unwrap();
            let k = s.len() / n;
            let top = s[..k * n].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(b.maxima.iter().cloned().fold(f64::NEG_INFINITY, f64::max), top);
            prop_assert_eq!(b.maxima.len(), k);
        }

        #[test]
        fn estimates_lie_in_unit_interval(idx in prop::collection::btree_set(0usize..10_000, 3..200), p in 0.5..0.999f64) {
            let idx: Vec<usize> = idx.into_iter().collect();
            let (t, _, _) = sueveges_from_indices(&idx, p).unwrap();
            prop_assert!(t > 0.0 && t <= 1.0);
            if let Ok((t, _)) = ferro_segers_from_indices(&idx) {
                prop_assert!(t > 0.0 && t <= 1.0);
            }
        }
    }
}
