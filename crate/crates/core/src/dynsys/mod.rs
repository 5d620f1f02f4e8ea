//! Deterministic and randomly perturbed maps and flows.

mod lorenz;
mod roundoff;
mod toy;

pub use lorenz::{integrate_lorenz, LorenzParams};
pub use roundoff::{inverse_step, orbit_divergence, reversibility_error};
pub use toy::{simulate_toy_sde, ToyModel};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::rng::{substream, StreamRng};

/// States with a norm above this are treated as escaped to infinity.
pub const DIVERGENCE_NORM: f64 = 1e6;

/// Default number of discarded map iterates.
pub const DEFAULT_BURN_IN: usize = 1000;

/// Stream ids inside one seed.
pub(crate) const DYNAMICS_STREAM: u64 = 0;
pub(crate) const OBSERVATION_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum SystemKind {
    BernoulliShift { q: u32 },
    Rotation { alpha: f64 },
    CatMap,
    StandardMap { k: f64 },
    Henon { a: f64, b: f64 },
    Lozi { a: f64, b: f64 },
    Lsv { b: f64 },
    ManPom { alpha: f64 },
    CantorIfs,
    Lorenz63 { sigma: f64, rho: f64, beta: f64 },
    ToyTurbulence { mu: f64, nu: f64, u: f64 },
}

/// Phase space of a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Interval,
    Torus1,
    Torus2,
    Plane2,
    Space3,
}

impl Space {
    pub fn dim(self) -> usize {
        match self {
            Space::Interval | Space::Torus1 => 1,
            Space::Torus2 | Space::Plane2 => 2,
            Space::Space3 => 3,
        }
    }

    pub fn is_torus(self) -> bool {
        matches!(self, Space::Torus1 | Space::Torus2)
    }

    /// True when every coordinate lives in [0,1).
    pub fn is_unit_cube(self) -> bool {
        matches!(self, Space::Interval | Space::Torus1 | Space::Torus2)
    }
}

impl SystemKind {
    pub fn space(&self) -> Space {
        match self {
            SystemKind::BernoulliShift { .. }
            | SystemKind::Rotation { .. }
            | SystemKind::Lsv { .. }
            | SystemKind::ManPom { .. }
            | SystemKind::CantorIfs => Space::Interval,
            SystemKind::CatMap | SystemKind::StandardMap { .. } => Space::Torus2,
            SystemKind::Henon { .. }
            | SystemKind::Lozi { .. }
            | SystemKind::ToyTurbulence { .. } => Space::Plane2,
            SystemKind::Lorenz63 { .. } => Space::Space3,
        }
    }

    pub fn dim(&self) -> usize {
        self.space().dim()
    }

    pub fn invertible(&self) -> bool {
        match *self {
            SystemKind::CatMap | SystemKind::StandardMap { .. } | SystemKind::Rotation { .. } => {
                true
            }
            SystemKind::Henon { b, .. } | SystemKind::Lozi { b, .. } => b != 0.0,
            _ => false,
        }
    }

    pub fn is_flow(&self) -> bool {
        matches!(
            self,
            SystemKind::Lorenz63 { .. } | SystemKind::ToyTurbulence { .. }
        )
    }

    /// Maps whose coordinates are angles, reduced mod 1 after every operation.
    pub fn wraps(&self) -> bool {
        matches!(
            self,
            SystemKind::BernoulliShift { .. }
                | SystemKind::Rotation { .. }
                | SystemKind::CatMap
                | SystemKind::StandardMap { .. }
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::BernoulliShift { .. } => "bernoulli",
            SystemKind::Rotation { .. } => "rotation",
            SystemKind::CatMap => "cat",
            SystemKind::StandardMap { .. } => "standard",
            SystemKind::Henon { .. } => "henon",
            SystemKind::Lozi { .. } => "lozi",
            SystemKind::Lsv { .. } => "lsv",
            SystemKind::ManPom { .. } => "manpom",
            SystemKind::CantorIfs => "cantor",
            SystemKind::Lorenz63 { .. } => "lorenz",
            SystemKind::ToyTurbulence { .. } => "toy",
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                config(format!("{what} must be finite"))
            }
        };
        match *self {
            SystemKind::BernoulliShift { q } if q < 2 => config("bernoulli shift needs q >= 2"),
            SystemKind::Rotation { alpha } => finite(alpha, "rotation alpha"),
            SystemKind::StandardMap { k } if !(k >= 0.0 && k.is_finite()) => {
                config("standard map needs finite K >= 0")
            }
            SystemKind::Henon { a, b } | SystemKind::Lozi { a, b } => {
                finite(a, "a")?;
                finite(b, "b")
            }
            SystemKind::Lsv { b } if !(b > 0.0 && b < 1.0) => config("LSV map needs b in (0,1)"),
            SystemKind::ManPom { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                config("Manneville-Pomeau map needs alpha > 0")
            }
            SystemKind::Lorenz63 { sigma, rho, beta }
                if !(sigma > 0.0 && rho > 0.0 && beta > 0.0) =>
            {
                config("Lorenz parameters must be positive")
            }
            SystemKind::ToyTurbulence { mu, nu, u } => {
                if !(mu > 0.0 && nu > 0.0) {
                    return config("toy model needs mu, nu > 0");
                }
                if !(u >= 0.0 && u.is_finite()) {
                    return config("toy model needs noise amplitude u >= 0");
                }
                if mu * nu >= 0.25 {
                    return config(
                        "toy model needs mu*nu < 1/4 for the turbulent fixed point to exist",
                    );
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// A validated system with its integration settings (ignored for maps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    /// Sampling interval for flows; 1 for maps.
    pub dt: f64,
    /// RK4 sub-steps per sample (Lorenz only).
    pub substeps: usize,
}

impl SystemSpec {
    pub fn new(kind: SystemKind) -> Result<Self> {
        let dt = if kind.is_flow() { 0.01 } else { 1.0 };
        Self::with_integration(kind, dt, 1)
    }

    pub fn with_integration(kind: SystemKind, dt: f64, substeps: usize) -> Result<Self> {
        kind.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return config("dt must be positive");
        }
        if substeps == 0 {
            return config("substeps must be >= 1");
        }
        let dt = if kind.is_flow() { dt } else { 1.0 };
        Ok(SystemSpec { kind, dt, substeps })
    }

    pub fn space(&self) -> Space {
        self.kind.space()
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn invertible(&self) -> bool {
        self.kind.invertible()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "noise", rename_all = "snake_case")]
pub enum NoiseSpec {
    None,
    /// Uniform kick on [-eps, eps]^D after every step.
    Additive {
        eps: f64,
    },
    /// Uniform perturbation of recorded states only.
    Observational {
        eps: f64,
    },
    /// With probability eps the state is replaced by a uniform point.
    Rasp {
        eps: f64,
    },
}

impl NoiseSpec {
    fn validate(&self, space: Space) -> Result<()> {
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::Additive { eps } | NoiseSpec::Observational { eps } => {
                if eps > 0.0 && eps.is_finite() {
                    Ok(())
                } else {
                    config("noise amplitude must be positive")
                }
            }
            NoiseSpec::Rasp { eps } => {
                if !(eps > 0.0 && eps < 1.0) {
                    return config("RASP probability must lie in (0,1)");
                }
                if !space.is_unit_cube() {
                    return config("RASP resets need a unit-cube phase space");
                }
                Ok(())
            }
        }
    }
}

/// A recorded trajectory, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub states: Vec<f64>,
    pub dim: usize,
    pub dt: f64,
    pub seed: u64,
    pub burn_in: usize,
    /// Laminar restarts (toy model only).
    pub transitions: Option<u64>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.states.chunks_exact(self.dim)
    }

    /// One coordinate as a column.
    pub fn coordinate(&self, c: usize) -> Vec<f64> {
        self.iter().map(|s| s[c]).collect()
    }
}

#[inline]
pub(crate) fn wrap01(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// One deterministic step of a map. `u` is the branch draw for the Cantor IFS.
#[inline]
pub(crate) fn map_step(kind: &SystemKind, x: &[f64], out: &mut [f64], u: f64) {
    match *kind {
        SystemKind::BernoulliShift { q } => out[0] = wrap01(q as f64 * x[0]),
        SystemKind::Rotation { alpha } => out[0] = wrap01(x[0] + alpha),
        SystemKind::CatMap => {
            out[0] = wrap01(2.0 * x[0] + x[1]);
            out[1] = wrap01(x[0] + x[1]);
        }
        SystemKind::StandardMap { k } => {
            let y = wrap01(x[1] - k / std::f64::consts::TAU * (std::f64::consts::TAU * x[0]).sin());
            out[0] = wrap01(x[0] + y);
            out[1] = y;
        }
        SystemKind::Henon { a, b } => {
            out[0] = 1.0 + x[1] - a * x[0] * x[0];
            out[1] = b * x[0];
        }
        SystemKind::Lozi { a, b } => {
            out[0] = 1.0 + x[1] - a * x[0].abs();
            out[1] = b * x[0];
        }
        SystemKind::Lsv { b: alpha } | SystemKind::ManPom { alpha } => {
            let v = x[0];
            out[0] = if v < 0.5 {
                wrap01(v * (1.0 + (2.0 * v).powf(alpha)))
            } else {
                wrap01(2.0 * v - 1.0)
            };
        }
        SystemKind::CantorIfs => {
            out[0] = if u < 0.5 {
                x[0] / 3.0
            } else {
                (x[0] + 2.0) / 3.0
            };
        }
        SystemKind::Lorenz63 { .. } | SystemKind::ToyTurbulence { .. } => {
            unreachable!("flows are advanced by their integrators")
        }
    }
}

/// Jacobian of a map at `x`, row-major D×D.
pub fn jacobian(kind: &SystemKind, x: &[f64]) -> Result<Vec<f64>> {
    use std::f64::consts::TAU;
    Ok(match *kind {
        SystemKind::BernoulliShift { q } => vec![q as f64],
        SystemKind::Rotation { .. } => vec![1.0],
        SystemKind::CatMap => vec![2.0, 1.0, 1.0, 1.0],
        SystemKind::StandardMap { k } => {
            let c = k * (TAU * x[0]).cos();
            vec![1.0 - c, 1.0, -c, 1.0]
        }
        SystemKind::Henon { a, b } => vec![-2.0 * a * x[0], 1.0, b, 0.0],
        SystemKind::Lozi { a, b } => vec![-a * x[0].signum(), 1.0, b, 0.0],
        SystemKind::Lsv { b: alpha } | SystemKind::ManPom { alpha } => {
            if x[0] < 0.5 {
                vec![1.0 + (1.0 + alpha) * 2f64.powf(alpha) * x[0].powf(alpha)]
            } else {
                vec![2.0]
            }
        }
        SystemKind::CantorIfs => vec![1.0 / 3.0],
        SystemKind::Lorenz63 { .. } | SystemKind::ToyTurbulence { .. } => {
            return Err(Error::Unsupported(format!(
                "no map Jacobian for the {} flow",
                kind.name()
            )))
        }
    })
}

/// Random input consumed by a single step.
#[derive(Debug, Clone, Copy)]
pub enum StepDraw<'a> {
    /// Uniform draw in [0,1) selecting the Cantor IFS branch.
    Branch(f64),
    /// Additive kick `eps * w` with `w` in [-1,1]^D.
    Kick { eps: f64, w: &'a [f64] },
}

/// Image of `x` under one map step, plus the optional random input.
pub fn step(spec: &SystemSpec, x: &[f64], draw: Option<StepDraw<'_>>) -> Result<Vec<f64>> {
    let d = spec.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if spec.kind.is_flow() {
        return Err(Error::Unsupported(
            "step() is for maps; use the flow integrators".into(),
        ));
    }
    let is_ifs = matches!(spec.kind, SystemKind::CantorIfs);
    let mut out = vec![0.0; d];
    match draw {
        Some(StepDraw::Branch(u)) if is_ifs => map_step(&spec.kind, x, &mut out, u),
        None if !is_ifs => map_step(&spec.kind, x, &mut out, 0.0),
        Some(StepDraw::Kick { eps, w }) if !is_ifs => {
            if w.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: w.len(),
                });
            }
            map_step(&spec.kind, x, &mut out, 0.0);
            let unit = spec.space().is_unit_cube();
            for (o, wi) in out.iter_mut().zip(w) {
                *o += eps * wi;
                if unit {
                    *o = wrap01(*o);
                }
            }
        }
        _ => return config(
            "random input does not match the system: the Cantor IFS needs exactly one branch draw",
        ),
    }
    Ok(out)
}

/// Streaming generator for long runs that should not be stored.
pub struct Trajectory {
    spec: SystemSpec,
    noise: NoiseSpec,
    state: Vec<f64>,
    scratch: Vec<f64>,
    recorded: Vec<f64>,
    rng: StreamRng,
    obs_rng: StreamRng,
    toy: Option<ToyModel>,
    steps: usize,
}

impl Trajectory {
    /// Builds the generator and discards `burn_in` iterates.
    pub fn new(
        spec: &SystemSpec,
        noise: NoiseSpec,
        x0: &[f64],
        burn_in: usize,
        seed: u64,
    ) -> Result<Self> {
        let d = spec.dim();
        if x0.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x0.len(),
            });
        }
        noise.validate(spec.space())?;
        if x0.iter().any(|v| !v.is_finite()) {
            return config("initial condition must be finite");
        }
        if spec.space().is_unit_cube() && x0.iter().any(|&v| !(0.0..1.0).contains(&v)) {
            return config("initial condition must lie in [0,1)^D");
        }
        let toy = match spec.kind {
            SystemKind::ToyTurbulence { mu, nu, u } => Some(ToyModel::new(mu, nu, u, spec.dt)?),
            _ => None,
        };
        let mut t = Trajectory {
            spec: *spec,
            noise,
            state: x0.to_vec(),
            scratch: vec![0.0; d],
            recorded: vec![0.0; d],
            rng: substream(seed, DYNAMICS_STREAM),
            obs_rng: substream(seed, OBSERVATION_STREAM),
            toy,
            steps: 0,
        };
        for _ in 0..burn_in {
            t.advance()?;
        }
        t.steps = 0;
        Ok(t)
    }

    fn advance(&mut self) -> Result<()> {
        let kind = self.spec.kind;
        match kind {
            SystemKind::Lorenz63 { sigma, rho, beta } => {
                let p = LorenzParams { sigma, rho, beta };
                let h = self.spec.dt / self.spec.substeps as f64;
                let mut s = [self.state[0], self.state[1], self.state[2]];
                for _ in 0..self.spec.substeps {
                    s = lorenz::rk4_step(&p, s, h);
                }
                self.state.copy_from_slice(&s);
            }
            SystemKind::ToyTurbulence { .. } => {
                let toy = self.toy.as_mut().expect("toy model initialised");
                let mut s = [self.state[0], self.state[1]];
                toy.advance(&mut s, &mut self.rng);
                self.state.copy_from_slice(&s);
            }
            _ => {
                let u = if matches!(kind, SystemKind::CantorIfs) {
                    self.rng.random::<f64>()
                } else {
                    0.0
                };
                map_step(&kind, &self.state, &mut self.scratch, u);
                std::mem::swap(&mut self.state, &mut self.scratch);
            }
        }
        match self.noise {
            NoiseSpec::Additive { eps } => {
                let unit = self.spec.space().is_unit_cube();
                for v in self.state.iter_mut() {
                    *v += eps * self.rng.random_range(-1.0..=1.0);
                    if unit {
                        *v = wrap01(*v);
                    }
                }
            }
            NoiseSpec::Rasp { eps } => {
                if self.rng.random::<f64>() < eps {
                    for v in self.state.iter_mut() {
                        *v = self.rng.random::<f64>();
                    }
                }
            }
            NoiseSpec::None | NoiseSpec::Observational { .. } => {}
        }
        self.steps += 1;
        let norm2: f64 = self.state.iter().map(|v| v * v).sum();
        if !(norm2.sqrt() <= DIVERGENCE_NORM) {
            return Err(Error::Divergence {
                step: self.steps,
                norm: norm2.sqrt(),
            });
        }
        Ok(())
    }

    /// Advances one step and returns the recorded state.
    pub fn next_state(&mut self) -> Result<&[f64]> {
        self.advance()?;
        match self.noise {
            NoiseSpec::Observational { eps } => {
                let wrap = self.spec.kind.wraps();
                for (r, &s) in self.recorded.iter_mut().zip(&self.state) {
                    let v = s + eps * self.obs_rng.random_range(-1.0..=1.0);
                    *r = if wrap { wrap01(v) } else { v };
                }
            }
            _ => self.recorded.copy_from_slice(&self.state),
        }
        Ok(&self.recorded)
    }

    /// The unperturbed dynamical state.
    pub fn true_state(&self) -> &[f64] {
        &self.state
    }

    pub fn transitions(&self) -> Option<u64> {
        self.toy.as_ref().map(|t| t.transitions)
    }
}

/// Orbit of length `n`; the first recorded state is iterate `burn_in + 1`.
pub fn iterate(
    spec: &SystemSpec,
    noise: NoiseSpec,
    x0: &[f64],
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Orbit> {
    if n == 0 {
        return config("orbit length must be >= 1");
    }
    let mut traj = Trajectory::new(spec, noise, x0, burn_in, seed)?;
    let d = spec.dim();
    let mut states = Vec::with_capacity(n * d);
    for _ in 0..n {
        states.extend_from_slice(traj.next_state()?);
    }
    Ok(Orbit {
        states,
        dim: d,
        dt: spec.dt,
        seed,
        burn_in,
        transitions: traj.transitions(),
    })
}

/// Perturbs recorded states with uniform noise on [-eps, eps]^D.
///
/// Uses the same random stream as [`iterate`] with observational noise, so
/// `observe_with_noise(iterate(.., None, ..), eps, seed)` equals the
/// observational run for the same seed.
pub fn observe_with_noise(orbit: &Orbit, eps: f64, seed: u64, wrap: bool) -> Result<Orbit> {
    if !(eps > 0.0 && eps.is_finite()) {
        return config("observational noise amplitude must be positive");
    }
    let mut rng = substream(seed, OBSERVATION_STREAM);
    let states = orbit
        .states
        .iter()
        .map(|&s| {
            let v = s + eps * rng.random_range(-1.0..=1.0);
            if wrap {
                wrap01(v)
            } else {
                v
            }
        })
        .collect();
    Ok(Orbit {
        states,
        seed,
        ..orbit.clone()
    })
}
