//! Lyapunov spectra by QR-renormalised tangent iteration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynsys::{jacobian, map_step, SystemKind, SystemSpec, DIVERGENCE_NORM};
use crate::error::{config, Error, Result};
use crate::rng::substream;

/// Minimum number of iterates (or flow samples).
pub const MIN_LYAPUNOV_STEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// λ₁ ≥ … ≥ λ_D, per iteration for maps and per time unit for flows.
    pub lyapunov: Vec<f64>,
    pub d_ky: f64,
    pub d_u: f64,
    pub d_n: f64,
    pub d_s: f64,
    pub delta: f64,
    /// Steps that landed exactly on a non-smooth point and were nudged.
    pub nonsmooth_hits: usize,
}

/// Kaplan–Yorke dimension of a descending spectrum.
pub fn kaplan_yorke(lyap: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (j, &l) in lyap.iter().enumerate() {
        if sum + l < 0.0 {
            return if j == 0 {
                0.0
            } else {
                j as f64 + sum / l.abs()
            };
        }
        sum += l;
    }
    lyap.len() as f64
}

/// In-place modified Gram–Schmidt on the columns of a row-major D×D matrix;
/// returns the diagonal of R.
fn gram_schmidt(m: &mut [f64], d: usize) -> [f64; 3] {
    let mut r = [0.0; 3];
    for j in 0..d {
        for i in 0..j {
            let dot: f64 = (0..d).map(|k| m[k * d + i] * m[k * d + j]).sum();
            for k in 0..d {
                m[k * d + j] -= dot * m[k * d + i];
            }
        }
        let norm = (0..d).map(|k| m[k * d + j].powi(2)).sum::<f64>().sqrt();
        r[j] = norm;
        for k in 0..d {
            m[k * d + j] /= norm;
        }
    }
    r
}

fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = (0..d).map(|k| a[i * d + k] * b[k * d + j]).sum();
        }
    }
    out
}

/// Lorenz state plus the 3×3 tangent matrix (row-major), advanced together.
fn lorenz_variational(s: &[f64; 12], sigma: f64, rho: f64, beta: f64) -> [f64; 12] {
    let (x, y, z) = (s[0], s[1], s[2]);
    let j = [-sigma, sigma, 0.0, rho - z, -1.0, -x, y, x, -beta];
    let mut out = [0.0; 12];
    out[0] = sigma * (y - x);
    out[1] = x * (rho - z) - y;
    out[2] = x * y - beta * z;
    for r in 0..3 {
        for c in 0..3 {
            out[3 + r * 3 + c] = (0..3).map(|k| j[r * 3 + k] * s[3 + k * 3 + c]).sum();
        }
    }
    out
}

fn rk4_12(s: &mut [f64; 12], h: f64, f: impl Fn(&[f64; 12]) -> [f64; 12]) {
    let shift = |a: &[f64; 12], k: &[f64; 12], c: f64| {
        let mut o = *a;
        o.iter_mut().zip(k).for_each(|(v, kv)| *v += c * kv);
        o
    };
    let k1 = f(s);
    let k2 = f(&shift(s, &k1, h / 2.0));
    let k3 = f(&shift(s, &k2, h / 2.0));
    let k4 = f(&shift(s, &k3, h));
    for i in 0..12 {
        s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn finish(mut lyap: Vec<f64>, flow: bool, nonsmooth_hits: usize) -> SpectrumReport {
    lyap.sort_by(|a, b| b.total_cmp(a));
    let d_ky = kaplan_yorke(&lyap);
    let (d_n, d_u) = if flow {
        let neutral = (0..lyap.len())
            .min_by(|&a, &b| lyap[a].abs().total_cmp(&lyap[b].abs()))
            .unwrap_or(0);
        let d_u = lyap
            .iter()
            .enumerate()
            .filter(|&(i, &l)| i != neutral && l > 0.0)
            .count();
        (1.0, d_u as f64)
    } else {
        (0.0, lyap.iter().filter(|&&l| l > 0.0).count() as f64)
    };
    let d_s = d_ky - d_u - d_n;
    SpectrumReport {
        lyapunov: lyap,
        d_ky,
        d_u,
        d_n,
        d_s,
        delta: d_s + (d_u + d_n) / 2.0,
        nonsmooth_hits,
    }
}

/// Lyapunov spectrum over `n` iterates (maps) or `n` samples of length
/// `spec.dt` (Lorenz) after `burn_in` discarded steps. The seed only drives
/// the branch choice of the Cantor IFS.
pub fn lyapunov_spectrum(
    spec: &SystemSpec,
    x0: &[f64],
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<SpectrumReport> {
    let d = spec.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x0.len(),
        });
    }
    if n < MIN_LYAPUNOV_STEPS {
        return config(format!(
            "need at least {MIN_LYAPUNOV_STEPS} steps for a Lyapunov estimate"
        ));
    }
    match spec.kind {
        SystemKind::ToyTurbulence { .. } => Err(Error::Unsupported(
            "Lyapunov exponents of the stochastic toy model are not defined".into(),
        )),
        SystemKind::Lorenz63 { sigma, rho, beta } => {
            let h = spec.dt / spec.substeps as f64;
            let mut s = [0.0; 12];
            s[..3].copy_from_slice(x0);
            for i in 0..3 {
                s[3 + i * 4] = 1.0;
            }
            let mut sums = [0.0; 3];
            for step in 0..burn_in + n {
                for _ in 0..spec.substeps {
                    rk4_12(&mut s, h, |v| lorenz_variational(v, sigma, rho, beta));
                }
                let norm = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
                if !(norm <= DIVERGENCE_NORM) {
                    return Err(Error::Divergence {
                        step: step + 1,
                        norm,
                    });
                }
                let r = gram_schmidt(&mut s[3..], 3);
                if step >= burn_in {
                    for i in 0..3 {
                        sums[i] += r[i].ln();
                    }
                }
            }
            let t = n as f64 * spec.dt;
            Ok(finish(sums.iter().map(|v| v / t).collect(), true, 0))
        }
        kind => {
            let lozi = matches!(kind, SystemKind::Lozi { .. });
            let ifs = matches!(kind, SystemKind::CantorIfs);
            let mut rng = substream(seed, 0);
            let mut x = x0.to_vec();
            let mut next = vec![0.0; d];
            let mut q = vec![0.0; d * d];
            for i in 0..d {
                q[i * d + i] = 1.0;
            }
            let mut sums = vec![0.0; d];
            let mut hits = 0;
            for step in 0..burn_in + n {
                if lozi && x[0] == 0.0 {
                    x[0] = 1e-12;
                    hits += 1;
                }
                let j = jacobian(&kind, &x)?;
                let u = if ifs { rng.random::<f64>() } else { 0.0 };
                map_step(&kind, &x, &mut next, u);
                std::mem::swap(&mut x, &mut next);
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(norm <= DIVERGENCE_NORM) {
                    return Err(Error::Divergence {
                        step: step + 1,
                        norm,
                    });
                }
                let r = if d == 1 {
                    let v = (j[0] * q[0]).abs();
                    q[0] = 1.0;
                    [v, 0.0, 0.0]
                } else {
                    q = matmul(&j, &q, d);
                    gram_schmidt(&mut q, d)
                };
                if step >= burn_in {
                    for i in 0..d {
                        sums[i] += r[i].ln();
                    }
                }
            }
            Ok(finish(
                sums.iter().map(|v| v / n as f64).collect(),
                false,
                hits,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn run(kind: SystemKind, x0: &[f64], n: usize) -> SpectrumReport {
        lyapunov_spectrum(&SystemSpec::new(kind).unwrap(), x0, n, 1000, 1).unwrap()
    }

    #[test]
    fn cat_map_spectrum() {
        let r = run(SystemKind::CatMap, &[0.1, 0.2], 1_000_000);
        let l = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert_abs_diff_eq!(r.lyapunov[0], l, epsilon = 1e-6);
        assert!((r.lyapunov[0] + r.lyapunov[1]).abs() < 1e-3);
        assert_abs_diff_eq!(r.d_ky, 2.0, epsilon = 1e-3);
    }

    #[test]
    fn henon_spectrum() {
        let r = run(SystemKind::Henon { a: 1.4, b: 0.3 }, &[0.1, 0.1], 1_000_000);
        assert_abs_diff_eq!(r.lyapunov[0], 0.416, epsilon = 0.01);
        assert!((r.lyapunov[0] + r.lyapunov[1] - 0.3f64.ln()).abs() < 1e-3);
        assert_abs_diff_eq!(r.d_ky, 1.26, epsilon = 0.02);
        assert_eq!(r.d_u, 1.0);
        assert_abs_diff_eq!(r.delta, r.d_s + 0.5, epsilon = 1e-12);

        let r = run(SystemKind::Henon { a: 1.2, b: 0.3 }, &[0.1, 0.1], 1_000_000);
        assert_abs_diff_eq!(r.lyapunov[0], 0.305, epsilon = 0.01);
        assert_abs_diff_eq!(r.d_ky, 1.20, epsilon = 0.02);
    }

    #[test]
    fn lozi_determinant() {
        let r = run(SystemKind::Lozi { a: 1.7, b: 0.5 }, &[0.1, 0.1], 200_000);
        assert!((r.lyapunov[0] + r.lyapunov[1] - 0.5f64.ln()).abs() < 1e-3);
        assert!(r.lyapunov[0] > 0.0);
    }

    #[test]
    fn one_dimensional_maps() {
        let r = run(SystemKind::BernoulliShift { q: 3 }, &[0.1234], 100_000);
        assert_abs_diff_eq!(r.lyapunov[0], 3f64.ln(), epsilon = 1e-12);
        assert_eq!(r.d_ky, 1.0);
        let r = run(SystemKind::CantorIfs, &[0.0], 100_000);
        assert_abs_diff_eq!(r.lyapunov[0], -(3f64.ln()), epsilon = 1e-12);
        assert_eq!(r.d_ky, 0.0);
    }

    #[test]
    fn lorenz_spectrum() {
        let spec = SystemSpec::new(SystemKind::Lorenz63 {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        })
        .unwrap();
        let r = lyapunov_spectrum(&spec, &[1.0, 1.0, 20.0], 100_000, 1000, 0).unwrap();
        assert_abs_diff_eq!(r.lyapunov[0], 0.906, epsilon = 0.05);
        assert!(r.lyapunov[1].abs() < 0.02);
        // the trace of the vector field is constant
        assert_abs_diff_eq!(
            r.lyapunov.iter().sum::<f64>(),
            -(10.0 + 1.0 + 8.0 / 3.0),
            epsilon = 1e-2
        );
        assert_eq!((r.d_u, r.d_n), (1.0, 1.0));
        assert_abs_diff_eq!(r.d_ky, 2.06, epsilon = 0.01);
    }

    #[test]
    fn kaplan_yorke_examples() {
        assert_eq!(kaplan_yorke(&[-0.1, -0.2]), 0.0);
        assert_eq!(kaplan_yorke(&[0.3, 0.1]), 2.0);
        assert_abs_diff_eq!(kaplan_yorke(&[0.5, -1.0]), 1.5);
    }

    #[test]
    fn short_runs_are_rejected() {
        let spec = SystemSpec::new(SystemKind::CatMap).unwrap();
        assert!(matches!(
            lyapunov_spectrum(&spec, &[0.1, 0.2], 10, 0, 0),
            Err(Error::Config(_))
        ));
    }
}
