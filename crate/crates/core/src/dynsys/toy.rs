use rand::Rng;
use rand_distr::StandardNormal;

use super::{Orbit, DIVERGENCE_NORM};
use crate::error::{config, Error, Result};
use crate::rng::{substream, StreamRng};

/// Squared radius of the laminar basin around the origin.
const LAMINAR_RADIUS2: f64 = 1e-6;

/// Euler–Maruyama integrator for the two-mode turbulence model
/// dX = (−μX + Y²)dt − uX dW, dY = (−νY + X − XY)dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyModel {
    pub mu: f64,
    pub nu: f64,
    pub u: f64,
    pub dt: f64,
    pub restart: bool,
    /// Stable turbulent fixed point.
    pub node: [f64; 2],
    pub transitions: u64,
}

impl ToyModel {
    pub fn new(mu: f64, nu: f64, u: f64, dt: f64) -> Result<Self> {
        if !(mu > 0.0 && nu > 0.0) || !(u >= 0.0) || !(dt > 0.0) {
            return config("toy model needs mu, nu, dt > 0 and u >= 0");
        }
        if mu * nu >= 0.25 {
            return config("toy model needs mu*nu < 1/4");
        }
        Ok(ToyModel {
            mu,
            nu,
            u,
            dt,
            restart: true,
            node: Self::stable_node(mu, nu),
            transitions: 0,
        })
    }

    /// Larger root of Y(1−Y) = μν, refined by Newton on the full system.
    fn stable_node(mu: f64, nu: f64) -> [f64; 2] {
        let y0 = 0.5 * (1.0 + (1.0 - 4.0 * mu * nu).sqrt());
        let (mut x, mut y) = (y0 * y0 / mu, y0);
        for _ in 0..50 {
            let f1 = -mu * x + y * y;
            let f2 = -nu * y + x - x * y;
            // J = [[-mu, 2y], [1 - y, -nu - x]]
            let (a, b, c, d) = (-mu, 2.0 * y, 1.0 - y, -nu - x);
            let det = a * d - b * c;
            let dx = (d * f1 - b * f2) / det;
            let dy = (-c * f1 + a * f2) / det;
            x -= dx;
            y -= dy;
            if dx.abs() + dy.abs() < 1e-16 {
                break;
            }
        }
        [x, y]
    }

    /// One Euler–Maruyama step; restarts at the node on entering the laminar basin.
    #[inline]
    pub fn advance(&mut self, s: &mut [f64; 2], rng: &mut StreamRng) {
        let (x, y) = (s[0], s[1]);
        let w: f64 = if self.u > 0.0 {
            rng.sample(StandardNormal)
        } else {
            0.0
        };
        s[0] = x + (-self.mu * x + y * y) * self.dt - self.u * x * self.dt.sqrt() * w;
        s[1] = y + (-self.nu * y + x - x * y) * self.dt;
        if self.restart && s[0] * s[0] + s[1] * s[1] < LAMINAR_RADIUS2 {
            *s = self.node;
            self.transitions += 1;
        }
    }
}

/// Trajectory of `n` samples starting from the stable turbulent fixed point.
pub fn simulate_toy_sde(
    mu: f64,
    nu: f64,
    u: f64,
    dt: f64,
    n: usize,
    seed: u64,
    restart: bool,
) -> Result<Orbit> {
    let mut model = ToyModel::new(mu, nu, u, dt)?;
    model.restart = restart;
    let mut rng = substream(seed, super::DYNAMICS_STREAM);
    let mut s = model.node;
    let mut states = Vec::with_capacity(2 * n);
    for i in 0..n {
        model.advance(&mut s, &mut rng);
        let norm = (s[0] * s[0] + s[1] * s[1]).sqrt();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Divergence { step: i + 1, norm });
        }
        states.extend_from_slice(&s);
    }
    Ok(Orbit {
        states,
        dim: 2,
        dt,
        seed,
        burn_in: 0,
        transitions: Some(model.transitions),
    })
}
