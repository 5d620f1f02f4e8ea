//! Derivative-free minimisation.

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
}

/// Nelder–Mead simplex with standard coefficients, restarted once from the
/// best vertex to guard against premature collapse.
pub(crate) fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    max_evals: usize,
) -> Minimum {
    let first = nm_run(&mut f, x0, step, max_evals / 2);
    let second = nm_run(&mut f, &first.x, step, max_evals / 2);
    if second.f <= first.f {
        Minimum {
            converged: second.converged,
            ..second
        }
    } else {
        first
    }
}

fn nm_run<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    step: &[f64],
    max_evals: usize,
) -> Minimum {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    let mut converged = false;
    let mut order: Vec<usize> = (0..=n).collect();
    while evals < max_evals {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        let fr = (vals[worst] - vals[best]).abs();
        let xr = pts
            .iter()
            .flat_map(|p| p.iter().zip(&pts[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if vals[best].is_finite() && fr <= 1e-11 * (1.0 + vals[best].abs()) && xr <= 1e-9 {
            converged = true;
            break;
        }
        let mut c = vec![0.0; n];
        for &i in &order[..n] {
            for (ck, pk) in c.iter_mut().zip(&pts[i]) {
                *ck += pk / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            c.iter()
                .zip(&pts[worst])
                .map(|(ck, wk)| ck + t * (ck - wk))
                .collect()
        };
        let xr_pt = along(1.0);
        let fr_v = f(&xr_pt);
        evals += 1;
        if fr_v < vals[best] {
            let xe = along(2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr_v {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr_pt;
                vals[worst] = fr_v;
            }
        } else if fr_v < vals[second] {
            pts[worst] = xr_pt;
            vals[worst] = fr_v;
        } else {
            let (xc, fc) = if fr_v < vals[worst] {
                let p = along(0.5);
                let v = f(&p);
                (p, v)
            } else {
                let p = along(-0.5);
                let v = f(&p);
                (p, v)
            };
            evals += 1;
            if fc < vals[worst].min(fr_v) {
                pts[worst] = xc;
                vals[worst] = fc;
            } else {
                let xb = pts[best].clone();
                for &i in &order[1..] {
                    for (pk, bk) in pts[i].iter_mut().zip(&xb) {
                        *pk = bk + 0.5 * (*pk - bk);
                    }
                    vals[i] = f(&pts[i]);
                }
                evals += n;
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap();
    Minimum {
        x: pts[best].clone(),
        f: vals[best],
        converged,
    }
}

/// Fourth-order central difference gradient.
fn fd_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let mut at = |t: f64| {
            p[i] = x[i] + t * h;
            f(&p)
        };
        let (a1, b1, a2, b2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
        p[i] = x[i];
        g[i] = (8.0 * (a1 - b1) - (a2 - b2)) / (12.0 * h);
    }
    g
}

fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))?;
        if !(a[piv * n + c].abs() > 0.0) {
            return None;
        }
        for k in 0..n {
            a.swap(c * n + k, piv * n + k);
        }
        b.swap(c, piv);
        for r in c + 1..n {
            let m = a[r * n + c] / a[c * n + c];
            for k in c..n {
                a[r * n + k] -= m * a[c * n + k];
            }
            b[r] -= m * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r * n + k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Newton refinement of a simplex optimum on finite-difference derivatives.
/// Nelder–Mead only resolves the minimiser to about the square root of the
/// function's precision; this drives the gradient to its noise floor. Steps
/// that do not shrink the gradient are rejected and the input is returned.
pub(crate) fn polish<F: FnMut(&[f64]) -> f64>(mut f: F, m: Minimum, h: f64) -> Minimum {
    let n = m.x.len();
    let mut x = m.x.clone();
    let mut g = fd_gradient(&mut f, &x, h);
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    for _ in 0..8 {
        let mut hess = vec![0.0; n * n];
        let mut p = x.clone();
        for j in 0..n {
            p[j] = x[j] + h;
            let gp = fd_gradient(&mut f, &p, h);
            p[j] = x[j] - h;
            let gm = fd_gradient(&mut f, &p, h);
            p[j] = x[j];
            for i in 0..n {
                hess[i * n + j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        for i in 0..n {
            for j in 0..i {
                let s = 0.5 * (hess[i * n + j] + hess[j * n + i]);
                hess[i * n + j] = s;
                hess[j * n + i] = s;
            }
        }
        let Some(dx) = solve(hess, g.iter().map(|v| -v).collect()) else {
            break;
        };
        if norm(&dx) > 0.1 {
            break;
        }
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let fc = f(&cand);
        if !fc.is_finite() {
            break;
        }
        let gc = fd_gradient(&mut f, &cand, h);
        if !(norm(&gc) < norm(&g)) {
            break;
        }
        x = cand;
        g = gc;
        if norm(&dx) < 1e-15 * (1.0 + norm(&x)) {
            break;
        }
    }
    let fx = f(&x);
    if fx.is_finite() && fx <= m.f + 1e-9 * (1.0 + m.f.abs()) {
        Minimum {
            x,
            f: fx,
            converged: m.converged,
        }
    } else {
        m
    }
}
