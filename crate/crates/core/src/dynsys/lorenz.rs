use serde::{Deserialize, Serialize};

use super::{Orbit, DIVERGENCE_NORM};
use crate::error::{config, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        LorenzParams {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

#[inline]
pub(crate) fn field(p: &LorenzParams, s: [f64; 3]) -> [f64; 3] {
    [
        p.sigma * (s[1] - s[0]),
        s[0] * (p.rho - s[2]) - s[1],
        s[0] * s[1] - p.beta * s[2],
    ]
}

#[inline]
pub(crate) fn rk4_step(p: &LorenzParams, s: [f64; 3], h: f64) -> [f64; 3] {
    let add =
        |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
    let k1 = field(p, s);
    let k2 = field(p, add(s, k1, h / 2.0));
    let k3 = field(p, add(s, k2, h / 2.0));
    let k4 = field(p, add(s, k3, h));
    let mut out = s;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Classical RK4 with internal step `dt / substeps`, sampled every `dt`.
pub fn integrate_lorenz(
    p: &LorenzParams,
    x0: [f64; 3],
    dt: f64,
    n: usize,
    substeps: usize,
) -> Result<Orbit> {
    if !(p.sigma > 0.0 && p.rho > 0.0 && p.beta > 0.0) {
        return config("Lorenz parameters must be positive");
    }
    if !(dt > 0.0 && dt.is_finite()) || substeps == 0 || n == 0 {
        return config("need dt > 0, substeps >= 1 and n >= 1");
    }
    let h = dt / substeps as f64;
    let mut s = x0;
    let mut states = Vec::with_capacity(3 * n);
    for i in 0..n {
        for _ in 0..substeps {
            s = rk4_step(p, s, h);
        }
        let norm = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Divergence { step: i + 1, norm });
        }
        states.extend_from_slice(&s);
    }
    Ok(Orbit {
        states,
        dim: 3,
        dt,
        seed: 0,
        burn_in: 0,
        transitions: None,
    })
}
