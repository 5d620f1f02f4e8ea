use super::fit::{Ci95, FitMethod, FitResult, FittedParams};
use super::gev::{gev_nll, GevParams};
use super::gpd::{gpd_nll, GpdParams};
use super::lmoments::{gev_from_lmoments, sample_lmoments};
use super::optim::{nelder_mead, polish, Minimum};
use crate::error::{Error, Result};

/// 95% quantile of the χ² law with one degree of freedom.
pub const CHI2_1_95: f64 = 3.841_458_820_694_124;
const Z_975: f64 = 1.959_963_984_540_054;
const MAX_EVALS: usize = 4000;
/// Below this shape the GEV likelihood is unbounded.
const XI_FLOOR: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GevParam {
    Xi,
    Sigma,
    Mu,
}

/// Standardised copy of the data and the affine map back.
struct Scaled {
    z: Vec<f64>,
    shift: f64,
    scale: f64,
}

impl Scaled {
    fn new(data: &[f64], centre: bool) -> Result<Self> {
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let sd = (data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let scale = if centre { sd } else { mean };
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Degenerate("sample has no spread".into()));
        }
        let shift = if centre { mean } else { 0.0 };
        Ok(Scaled {
            z: data.iter().map(|v| (v - shift) / scale).collect(),
            shift,
            scale,
        })
    }
}

fn check_data(data: &[f64], needed: usize) -> Result<()> {
    if data.len() < needed {
        return Err(Error::TooFewPoints {
            needed,
            got: data.len(),
        });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in sample".into()));
    }
    Ok(())
}

/// Internal coordinates (ξ, ln σ, μ) on standardised data.
fn gev_obj(z: &[f64]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |t: &[f64]| {
        if t[0] < XI_FLOOR {
            return f64::INFINITY;
        }
        gev_nll(t[0], t[1].exp(), t[2], z)
    }
}

fn gev_minimise(z: &[f64]) -> Result<Minimum> {
    let obj = gev_obj(z);
    let mut starts: Vec<[f64; 3]> = Vec::new();
    if let Ok(p) = sample_lmoments(z).and_then(|l| gev_from_lmoments(&l)) {
        starts.push([p.xi.max(XI_FLOOR + 0.05), p.sigma.ln(), p.mu]);
    }
    // Gumbel moment matching on unit-variance data: σ = √6/π, μ = −γσ
    let s0 = 6f64.sqrt() / std::f64::consts::PI;
    for xi in [0.0, 0.2, -0.2] {
        starts.push([xi, s0.ln(), -0.5772 * s0]);
    }
    let mut best: Option<Minimum> = None;
    for s in starts {
        if !obj(&s).is_finite() {
            continue;
        }
        let m = nelder_mead(&obj, &s, &[0.05, 0.05, 0.05], MAX_EVALS);
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
        if best.as_ref().is_some_and(|b| b.converged) {
            break;
        }
    }
    let best = best.ok_or_else(|| Error::Fit {
        reason: "no feasible starting point".into(),
        best: None,
    })?;
    if !best.f.is_finite() {
        return Err(Error::Fit {
            reason: "likelihood is not finite".into(),
            best: Some(best.x),
        });
    }
    if best.x[0] > XI_FLOOR + 0.01 {
        return Ok(polish(&obj, best, 1e-4));
    }
    // On the shape floor the likelihood is maximised in closed form: the
    // endpoint sits on the sample maximum and σ = max − mean.
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let edge = [XI_FLOOR, (top - mean).ln(), mean];
    let f_edge = obj(&edge);
    if f_edge <= best.f + 1e-9 * (1.0 + best.f.abs()) {
        return Ok(Minimum {
            x: edge.to_vec(),
            f: f_edge,
            converged: best.converged,
        });
    }
    Ok(best)
}

fn gev_back(sc: &Scaled, t: &[f64]) -> Result<GevParams> {
    GevParams::new(t[0], t[1].exp() * sc.scale, sc.shift + t[2] * sc.scale)
}

/// GEV maximum-likelihood point estimate without intervals.
pub fn fit_gev_mle_point(maxima: &[f64]) -> Result<FitResult> {
    check_data(maxima, 4)?;
    let sc = Scaled::new(maxima, true)?;
    let m = gev_minimise(&sc.z)?;
    let p = gev_back(&sc, &m.x)?;
    let mut r = FitResult::new(FittedParams::Gev(p), FitMethod::Mle, maxima);
    if !m.converged {
        r.warnings
            .push("optimizer stopped at the evaluation budget".into());
    }
    if m.x[0] < XI_FLOOR + 1e-3 {
        r.warnings
            .push("shape estimate at the lower bound -1; likelihood unbounded below it".into());
    }
    if maxima.len() < 30 {
        r.warnings.push(format!(
            "only {} maxima; 30 or more recommended",
            maxima.len()
        ));
    }
    Ok(r)
}

/// GEV maximum likelihood with profile-likelihood 95% intervals for all three parameters.
pub fn fit_gev_mle(maxima: &[f64]) -> Result<FitResult> {
    let mut r = fit_gev_mle_point(maxima)?;
    let p = r.params.gev().expect("gev fit");
    let xi = profile_ci_gev(maxima, &p, GevParam::Xi)?;
    let sigma = profile_ci_gev(maxima, &p, GevParam::Sigma)?;
    let mu = profile_ci_gev(maxima, &p, GevParam::Mu)?;
    r.ci95 = Some(Ci95 {
        xi,
        sigma,
        mu: Some(mu),
    });
    Ok(r)
}

/// Profile-likelihood 95% interval for one GEV parameter: the set where the
/// maximised log-likelihood with that parameter held fixed stays within
/// χ²₁(0.95)/2 of the overall maximum.
pub fn profile_ci_gev(maxima: &[f64], hat: &GevParams, which: GevParam) -> Result<(f64, f64)> {
    check_data(maxima, 4)?;
    let sc = Scaled::new(maxima, true)?;
    let z = &sc.z;
    let th = [
        hat.xi,
        (hat.sigma / sc.scale).ln(),
        (hat.mu - sc.shift) / sc.scale,
    ];
    let nll_hat = gev_obj(z)(&th);
    let target = nll_hat + CHI2_1_95 / 2.0;
    let j = match which {
        GevParam::Xi => 0,
        GevParam::Sigma => 1,
        GevParam::Mu => 2,
    };
    let free: Vec<usize> = (0..3).filter(|&k| k != j).collect();
    // warm-started nuisance optimisation
    let mut warm = vec![th[free[0]], th[free[1]]];
    let profile = |v: f64, warm: &mut Vec<f64>| -> f64 {
        let obj = |u: &[f64]| {
            let mut t = th;
            t[j] = v;
            t[free[0]] = u[0];
            t[free[1]] = u[1];
            gev_obj(z)(&t)
        };
        let mut start = warm.clone();
        if !obj(&start).is_finite() {
            start = vec![th[free[0]], th[free[1]]];
            if !obj(&start).is_finite() {
                // widen the scale until the sample fits in the support
                let mut ok = false;
                for k in 1..40 {
                    let mut t = th;
                    t[j] = v;
                    t[1] = th[1] + 0.25 * k as f64;
                    if gev_obj(z)(&t).is_finite() {
                        start = vec![t[free[0]], t[free[1]]];
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    return f64::INFINITY;
                }
            }
        }
        let m = nelder_mead(obj, &start, &[0.05, 0.05], MAX_EVALS);
        if m.f.is_finite() {
            *warm = m.x.clone();
        }
        m.f
    };
    let se = curvature_se(&gev_obj(z), &th, j)
        .unwrap_or(0.1)
        .clamp(1e-4, 2.0);
    let mut bounds = [0.0; 2];
    for (side, dir) in [-1.0f64, 1.0].into_iter().enumerate() {
        warm = vec![th[free[0]], th[free[1]]];
        let mut inner = th[j];
        let mut h = 2.0 * se;
        let mut outer = None;
        for _ in 0..40 {
            let v = th[j] + dir * h;
            if j == 0 && v <= XI_FLOOR {
                outer = Some(XI_FLOOR);
                break;
            }
            if profile(v, &mut warm) > target {
                outer = Some(v);
                break;
            }
            inner = v;
            h *= 1.6;
        }
        let Some(mut outer) = outer else {
            bounds[side] = dir * f64::INFINITY;
            continue;
        };
        if j == 0 && outer == XI_FLOOR {
            bounds[side] = XI_FLOOR;
            continue;
        }
        // bisection on the crossing
        for _ in 0..40 {
            if (outer - inner).abs() <= 1e-6 * (1.0 + inner.abs()) {
                break;
            }
            let mid = 0.5 * (inner + outer);
            if profile(mid, &mut warm) > target {
                outer = mid;
            } else {
                inner = mid;
            }
        }
        bounds[side] = 0.5 * (inner + outer);
    }
    let (lo, hi) = (bounds[0], bounds[1]);
    Ok(match which {
        GevParam::Xi => (lo, hi),
        GevParam::Sigma => (lo.exp() * sc.scale, hi.exp() * sc.scale),
        GevParam::Mu => (sc.shift + lo * sc.scale, sc.shift + hi * sc.scale),
    })
}

/// Asymptotic standard error of coordinate j from a finite-difference Hessian.
fn curvature_se(f: &dyn Fn(&[f64]) -> f64, th: &[f64; 3], j: usize) -> Option<f64> {
    let h = 1e-4;
    let mut hess = [[0.0; 3]; 3];
    let f0 = f(th);
    for a in 0..3 {
        for b in a..3 {
            let at = |da: f64, db: f64| {
                let mut t = *th;
                t[a] += da;
                t[b] += db;
                f(&t)
            };
            let v = if a == b {
                (at(h, 0.0) - 2.0 * f0 + at(-h, 0.0)) / (h * h)
            } else {
                (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h)
            };
            hess[a][b] = v;
            hess[b][a] = v;
        }
    }
    let inv = invert3(&hess)?;
    let v = inv[j][j];
    (v > 0.0 && v.is_finite()).then(|| v.sqrt())
}

#[allow(clippy::needless_range_loop)]
fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if !(det.abs() > 0.0) || !det.is_finite() {
        return None;
    }
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (i1, i2) = ((j + 1) % 3, (j + 2) % 3);
            let (j1, j2) = ((i + 1) % 3, (i + 2) % 3);
            r[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) / det;
        }
    }
    Some(r)
}

/// GPD maximum likelihood on excesses over `threshold`.
///
/// Intervals use the asymptotic covariance (n·Var ξ = (1+ξ)², n·Var σ =
/// 2σ²(1+ξ)) when ξ̂ > −1/2, where it is valid, and the profile likelihood otherwise.
pub fn fit_gpd_mle(excesses: &[f64], threshold: f64) -> Result<FitResult> {
    check_data(excesses, 4)?;
    if excesses.iter().any(|&v| v < 0.0) {
        return Err(Error::Domain("excesses must be non-negative".into()));
    }
    let sc = Scaled::new(excesses, false)?;
    let z = &sc.z;
    let obj = |t: &[f64]| gpd_nll(t[0], t[1].exp(), z);
    let mut starts: Vec<[f64; 2]> = Vec::new();
    if let Ok(l) = sample_lmoments(z) {
        if l.l2 > 0.0 {
            let xi = 2.0 - l.l1 / l.l2;
            let s = l.l1 * (1.0 - xi);
            if s > 0.0 {
                starts.push([xi, s.ln()]);
            }
        }
    }
    let zmax = z.iter().cloned().fold(0.0, f64::max);
    starts.push([0.0, 0.0]);
    starts.push([-0.5, (0.5 * zmax * 1.01).ln()]);
    let mut best: Option<Minimum> = None;
    for s in starts {
        if !obj(&s).is_finite() {
            continue;
        }
        let m = nelder_mead(obj, &s, &[0.05, 0.05], MAX_EVALS);
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let best = best.ok_or_else(|| Error::Fit {
        reason: "no feasible starting point".into(),
        best: None,
    })?;
    if !best.f.is_finite() {
        return Err(Error::Fit {
            reason: "likelihood is not finite".into(),
            best: Some(best.x),
        });
    }
    let (xi, sigma) = (best.x[0], best.x[1].exp() * sc.scale);
    let p = GpdParams::new(xi, sigma, threshold)?;
    let mut r = FitResult::new(FittedParams::Gpd(p), FitMethod::Mle, excesses);
    if !best.converged {
        r.warnings
            .push("optimizer stopped at the evaluation budget".into());
    }
    if xi >= 1.0 {
        r.warnings
            .push("shape >= 1: the GPD likelihood is ill-posed here".into());
    }
    if excesses.len() < 30 {
        r.warnings.push(format!(
            "only {} excesses; 30 or more recommended",
            excesses.len()
        ));
    }
    let n = excesses.len() as f64;
    r.ci95 = Some(if xi > -0.5 {
        let se_xi = (1.0 + xi) / n.sqrt();
        let se_s = sigma * (2.0 * (1.0 + xi) / n).sqrt();
        Ci95 {
            xi: (xi - Z_975 * se_xi, xi + Z_975 * se_xi),
            sigma: (sigma - Z_975 * se_s, sigma + Z_975 * se_s),
            mu: None,
        }
    } else {
        let target = best.f + CHI2_1_95 / 2.0;
        let prof_xi = |v: f64| -> f64 {
            let o = |u: &[f64]| gpd_nll(v, u[0].exp(), z);
            let mut start = vec![best.x[1]];
            if !o(&start).is_finite() {
                start = vec![(-v * zmax * 1.01).max(1e-3).ln()];
            }
            nelder_mead(o, &start, &[0.05], 1000).f
        };
        let prof_s = |v: f64| -> f64 {
            let o = |u: &[f64]| gpd_nll(u[0], v.exp(), z);
            let mut start = vec![best.x[0]];
            if !o(&start).is_finite() {
                start = vec![(-v.exp() / zmax / 1.01).max(-5.0)];
            }
            nelder_mead(o, &start, &[0.05], 1000).f
        };
        let xi_ci = profile_bracket(&prof_xi, best.x[0], 0.1, target);
        let ls_ci = profile_bracket(&prof_s, best.x[1], 0.1, target);
        Ci95 {
            xi: xi_ci,
            sigma: (ls_ci.0.exp() * sc.scale, ls_ci.1.exp() * sc.scale),
            mu: None,
        }
    });
    Ok(r)
}

fn profile_bracket(f: &dyn Fn(f64) -> f64, hat: f64, step: f64, target: f64) -> (f64, f64) {
    let mut out = [0.0; 2];
    for (side, dir) in [-1.0f64, 1.0].into_iter().enumerate() {
        let mut inner = hat;
        let mut h = step;
        let mut outer = None;
        for _ in 0..40 {
            let v = hat + dir * h;
            if f(v) > target {
                outer = Some(v);
                break;
            }
            inner = v;
            h *= 1.6;
        }
        out[side] = match outer {
            None => dir * f64::INFINITY,
            Some(mut o) => {
                for _ in 0..40 {
                    let mid = 0.5 * (inner + o);
                    if f(mid) > target {
                        o = mid;
                    } else {
                        inner = mid;
                    }
                }
                0.5 * (inner + o)
            }
        };
    }
    (out[0], out[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gumbel_consistency_at_large_n() {
        let data = GevParams::new(0.0, 1.0, 0.0)
            .unwrap()
            .sample(100_000, 31, 0);
        let p = fit_gev_mle_point(&data).unwrap().params.gev().unwrap();
        assert!(
            p.xi.abs() <= 0.02 && (p.sigma - 1.0).abs() <= 0.02 && p.mu.abs() <= 0.02,
            "{p:?}"
        );
    }

    #[test]
    fn gpd_bounded_tail_consistency() {
        let z = GpdParams::new(-1.0 / 3.0, 1.0, 0.0)
            .unwrap()
            .sample(100_000, 32, 0);
        let f = fit_gpd_mle(&z, 0.0).unwrap();
        assert!((f.xi() + 1.0 / 3.0).abs() <= 0.02, "xi {}", f.xi());
        let ci = f.ci95.unwrap();
        assert!(ci.xi.0 < f.xi() && f.xi() < ci.xi.1);
    }

    #[test]
    fn profile_interval_brackets_estimate() {
        let data = GevParams::new(0.1, 2.0, 3.0).unwrap().sample(500, 33, 0);
        let f = fit_gev_mle(&data).unwrap();
        let p = f.params.gev().unwrap();
        let ci = f.ci95.unwrap();
        assert!(ci.xi.0 < p.xi && p.xi < ci.xi.1);
        assert!(ci.sigma.0 < p.sigma && p.sigma < ci.sigma.1);
        let mu = ci.mu.unwrap();
        assert!(mu.0 < p.mu && p.mu < mu.1);
        // the profile at each endpoint sits at the cut
        let target = p.nll(&data) + CHI2_1_95 / 2.0;
        let prof = |xi: f64| {
            let sc = Scaled::new(&data, true).unwrap();
            let obj = |u: &[f64]| {
                gev_nll(xi, u[0].exp(), u[1], &sc.z) + data.len() as f64 * sc.scale.ln()
            };
            nelder_mead(
                obj,
                &[(p.sigma / sc.scale).ln(), (p.mu - sc.shift) / sc.scale],
                &[0.05, 0.05],
                4000,
            )
            .f
        };
        assert!((prof(ci.xi.0) - target).abs() < 1e-3);
        assert!((prof(ci.xi.1) - target).abs() < 1e-3);
    }

    #[test]
    fn weibull_profile_uses_gpd_fallback_branch() {
        let z = GpdParams::new(-0.7, 1.0, 0.0).unwrap().sample(2000, 34, 0);
        let f = fit_gpd_mle(&z, 5.0).unwrap();
        assert!(f.xi() < -0.5);
        let ci = f.ci95.unwrap();
        assert!(ci.xi.0 < f.xi() && f.xi() < ci.xi.1);
        assert_eq!(f.params.gpd().unwrap().threshold, 5.0);
    }

    #[test]
    fn too_few_or_degenerate() {
        assert!(matches!(
            fit_gev_mle_point(&[1.0, 2.0]),
            Err(Error::TooFewPoints { .. })
        ));
        assert!(matches!(
            fit_gev_mle_point(&[3.0; 50]),
            Err(Error::Degenerate(_))
        ));
    }
}
