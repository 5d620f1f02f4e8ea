//! Option groups shared by several commands and their translation into
//! library types.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use evtdyn::dynsys::{NoiseSpec, Space, SystemKind, SystemSpec, ToyModel, Trajectory};
use evtdyn::observables::{evaluate, ObservableKind, ObservableSpec};
use evtdyn::Error;

use crate::failure::{Failure, Outcome};
use crate::io::{read_table, Provenance};
use crate::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemName {
    Bernoulli,
    Rotation,
    Cat,
    Standard,
    Henon,
    Lozi,
    Lsv,
    Manpom,
    Cantor,
    Lorenz,
    Toy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseName {
    None,
    Additive,
    Observational,
    Rasp,
}

#[derive(Debug, Clone, Args)]
pub struct SystemOpts {
    /// Dynamical system
    #[arg(long, value_enum)]
    pub system: Option<SystemName>,
    /// Bernoulli shift multiplier
    #[arg(long, default_value_t = 3)]
    pub q: u32,
    /// Rotation angle
    #[arg(long, value_parser = parse::real)]
    pub omega: Option<f64>,
    /// Intermittency exponent of the Manneville–Pomeau map
    #[arg(long, value_parser = parse::real)]
    pub map_alpha: Option<f64>,
    /// Standard map kick strength K
    #[arg(long, value_parser = parse::real)]
    pub k: Option<f64>,
    /// Hénon/Lozi parameter a
    #[arg(long, value_parser = parse::real)]
    pub a: Option<f64>,
    /// Hénon/Lozi/LSV parameter b
    #[arg(long, value_parser = parse::real)]
    pub b: Option<f64>,
    /// Lorenz σ, ρ, β
    #[arg(long, value_parser = parse::reals, default_value = "10,28,2.6666666666666665")]
    pub lorenz: ::std::vec::Vec<f64>,
    /// Toy model damping μ
    #[arg(long, value_parser = parse::real, default_value_t = 1.0)]
    pub mu: f64,
    /// Toy model damping ν
    #[arg(long, value_parser = parse::real, default_value_t = 0.2475)]
    pub nu: f64,
    /// Toy model noise amplitude u
    #[arg(long, value_parser = parse::real, default_value_t = 0.0)]
    pub u: f64,
    /// Sampling interval for flows
    #[arg(long, value_parser = parse::real, default_value_t = 0.01)]
    pub dt: f64,
    /// Runge–Kutta sub-steps per sample (Lorenz)
    #[arg(long, value_parser = parse::count, default_value = "1")]
    pub substeps: usize,
    /// Random perturbation of the dynamics or of the records
    #[arg(long, value_enum, default_value = "none")]
    pub noise: NoiseName,
    /// Noise amplitude (RASP: reset probability)
    #[arg(long, value_parser = parse::real)]
    pub eps: Option<f64>,
    /// Initial condition, comma separated
    #[arg(long, value_parser = parse::reals, allow_hyphen_values = true)]
    pub x0: Option<::std::vec::Vec<f64>>,
    /// Discarded iterates before recording
    #[arg(long, value_parser = parse::count, default_value = "1000")]
    pub burn_in: usize,
    /// Master seed of all random streams
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Golden-mean rotation angle.
const GOLDEN: f64 = 0.618_033_988_749_894_9;

impl SystemOpts {
    pub fn kind(&self) -> Outcome<SystemKind> {
        let Some(name) = self.system else {
            return Err(Failure::Config("--system is required".into()));
        };
        Ok(match name {
            SystemName::Bernoulli => SystemKind::BernoulliShift { q: self.q },
            SystemName::Rotation => SystemKind::Rotation {
                alpha: self.omega.unwrap_or(GOLDEN),
            },
            SystemName::Cat => SystemKind::CatMap,
            SystemName::Standard => SystemKind::StandardMap {
                k: self.k.unwrap_or(1.0),
            },
            SystemName::Henon => SystemKind::Henon {
                a: self.a.unwrap_or(1.4),
                b: self.b.unwrap_or(0.3),
            },
            SystemName::Lozi => SystemKind::Lozi {
                a: self.a.unwrap_or(1.7),
                b: self.b.unwrap_or(0.5),
            },
            SystemName::Lsv => SystemKind::Lsv {
                b: self.b.unwrap_or(0.5),
            },
            SystemName::Manpom => SystemKind::ManPom {
                alpha: self.map_alpha.unwrap_or(0.5),
            },
            SystemName::Cantor => SystemKind::CantorIfs,
            SystemName::Lorenz => {
                let [sigma, rho, beta] = self.lorenz[..] else {
                    return Err(Failure::Config("--lorenz takes sigma,rho,beta".into()));
                };
                SystemKind::Lorenz63 { sigma, rho, beta }
            }
            SystemName::Toy => SystemKind::ToyTurbulence {
                mu: self.mu,
                nu: self.nu,
                u: self.u,
            },
        })
    }

    pub fn spec(&self) -> Outcome<SystemSpec> {
        if self.system == Some(SystemName::Bernoulli)
            && self.q.is_multiple_of(2)
            && self.noise == NoiseName::None
        {
            // multiplying a binary float by 2 mod 1 shifts its mantissa out
            eprintln!(
                "evtdyn: warning: with even q the floating-point orbit reaches 0 after ~53 steps"
            );
        }
        Ok(SystemSpec::with_integration(
            self.kind()?,
            self.dt,
            self.substeps,
        )?)
    }

    pub fn noise(&self) -> Outcome<NoiseSpec> {
        let eps = || {
            self.eps
                .ok_or_else(|| Failure::Config("--eps is required with --noise".into()))
        };
        Ok(match self.noise {
            NoiseName::None => NoiseSpec::None,
            NoiseName::Additive => NoiseSpec::Additive { eps: eps()? },
            NoiseName::Observational => NoiseSpec::Observational { eps: eps()? },
            NoiseName::Rasp => NoiseSpec::Rasp { eps: eps()? },
        })
    }

    pub fn x0(&self, spec: &SystemSpec) -> Outcome<Vec<f64>> {
        if let Some(x) = &self.x0 {
            return Ok(x.clone());
        }
        Ok(match spec.kind {
            SystemKind::Henon { .. } | SystemKind::Lozi { .. } => vec![0.1, 0.1],
            SystemKind::Lorenz63 { .. } => vec![1.0, 1.0, 1.0],
            SystemKind::ToyTurbulence { mu, nu, u } => {
                ToyModel::new(mu, nu, u, spec.dt)?.node.to_vec()
            }
            _ if spec.dim() == 2 => vec![0.1234567, 0.7654321],
            _ => vec![0.1234567],
        })
    }

    /// True when the run draws random numbers.
    pub fn stochastic(&self) -> bool {
        self.noise != NoiseName::None
            || matches!(self.system, Some(SystemName::Cantor))
            || (matches!(self.system, Some(SystemName::Toy)) && self.u > 0.0)
    }

    /// The seed, which must be explicit for stochastic runs.
    pub fn seed(&self) -> Outcome<u64> {
        match self.seed {
            Some(s) => Ok(s),
            None if self.stochastic() => Err(Failure::Config(
                "this run is stochastic: --seed is required".into(),
            )),
            None => Ok(0),
        }
    }

    pub fn record(&self, spec: &SystemSpec, prov: &mut Provenance) -> Outcome<()> {
        prov.add("system", spec.kind.name());
        let params = serde_json::to_value(spec.kind).unwrap_or_default();
        if let Some(obj) = params.as_object() {
            for (k, v) in obj.iter().filter(|(k, _)| k.as_str() != "system") {
                prov.add(k, v);
            }
        }
        if spec.kind.is_flow() {
            prov.add("dt", spec.dt);
            prov.add("substeps", spec.substeps);
        }
        prov.add(
            "space",
            serde_json::to_value(spec.space())
                .unwrap_or_default()
                .as_str()
                .unwrap_or(""),
        );
        match self.noise()? {
            NoiseSpec::None => {}
            NoiseSpec::Additive { eps } => prov.add("noise", format!("additive eps={eps}")),
            NoiseSpec::Observational { eps } => {
                prov.add("noise", format!("observational eps={eps}"))
            }
            NoiseSpec::Rasp { eps } => prov.add("noise", format!("rasp eps={eps}")),
        }
        let x0 = self.x0(spec)?;
        prov.add("x0", join(&x0));
        prov.add("burn_in", self.burn_in);
        prov.add("seed", self.seed()?);
        Ok(())
    }
}

pub fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObsName {
    G1,
    G2,
    G3,
    Linear,
}

#[derive(Debug, Clone, Args)]
pub struct ObsOpts {
    /// Observable: distance classes g1 = −log r, g2 = r^(−1/α), g3 = C − r^(1/α), or a linear form
    /// (default g1; with --input and no --obs the column is used as is)
    #[arg(long, value_enum)]
    pub obs: Option<ObsName>,
    /// Reference point ζ, comma separated
    #[arg(long, value_parser = parse::reals, allow_hyphen_values = true)]
    pub zeta: Option<::std::vec::Vec<f64>>,
    /// Exponent α of g2 and g3
    #[arg(long, value_parser = parse::real, default_value_t = 3.0)]
    pub alpha: f64,
    /// Constant C of g3
    #[arg(long, value_parser = parse::real, default_value_t = 0.0, allow_hyphen_values = true)]
    pub c: f64,
    /// Coefficients of the linear observable
    #[arg(long, value_parser = parse::reals, allow_hyphen_values = true)]
    pub coeffs: Option<::std::vec::Vec<f64>>,
    /// Offset of the linear observable
    #[arg(long, value_parser = parse::real, default_value_t = 0.0, allow_hyphen_values = true)]
    pub offset: f64,
}

impl ObsOpts {
    pub fn name(&self) -> ObsName {
        self.obs.unwrap_or(ObsName::G1)
    }

    pub fn spec(&self, space: Space) -> Outcome<ObservableSpec> {
        let zeta = || {
            self.zeta.clone().ok_or_else(|| {
                Failure::Config("--zeta is required for distance observables".into())
            })
        };
        let kind = match self.name() {
            ObsName::G1 => ObservableKind::G1 { zeta: zeta()? },
            ObsName::G2 => ObservableKind::G2 {
                zeta: zeta()?,
                alpha: self.alpha,
            },
            ObsName::G3 => ObservableKind::G3 {
                zeta: zeta()?,
                alpha: self.alpha,
                c: self.c,
            },
            ObsName::Linear => ObservableKind::Linear {
                coeffs: self.coeffs.clone().ok_or_else(|| {
                    Failure::Config("--coeffs is required for the linear observable".into())
                })?,
                d: self.offset,
            },
        };
        Ok(ObservableSpec::new(kind, space)?)
    }

    pub fn record(&self, prov: &mut Provenance) {
        let obs = self.name();
        prov.add("observable", format!("{obs:?}").to_lowercase());
        match obs {
            ObsName::Linear => {
                prov.add("coeffs", join(self.coeffs.as_deref().unwrap_or(&[])));
                prov.add("offset", self.offset);
            }
            _ => {
                prov.add("zeta", join(self.zeta.as_deref().unwrap_or(&[])));
                if obs != ObsName::G1 {
                    prov.add("alpha", self.alpha);
                }
                if obs == ObsName::G3 {
                    prov.add("c", self.c);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SourceOpts {
    /// Read the series (or orbit) from a CSV file instead of simulating
    #[arg(long, conflicts_with = "system")]
    pub input: Option<PathBuf>,
    /// 1-based input columns used as the state (default: all)
    #[arg(long, value_parser = parse::counts)]
    pub columns: Option<::std::vec::Vec<usize>>,
    /// Series length when simulating
    #[arg(long, value_parser = parse::count, default_value = "1e6")]
    pub s: usize,
}

fn infer_space(dim: usize) -> Outcome<Space> {
    Ok(match dim {
        1 => Space::Interval,
        2 => Space::Plane2,
        3 => Space::Space3,
        d => {
            return Err(Failure::Config(format!(
                "states with {d} coordinates are not supported"
            )))
        }
    })
}

/// The scalar series a fitting command works on, from a simulation or a file.
pub fn scalar_series(
    sys: &SystemOpts,
    obs: &ObsOpts,
    src: &SourceOpts,
    prov: &mut Provenance,
) -> Outcome<Vec<f64>> {
    if let Some(path) = &src.input {
        let table = read_table(path)?;
        let cols: Vec<usize> = match &src.columns {
            Some(c) => c.clone(),
            None => (1..=table.columns).collect(),
        };
        if cols.iter().any(|&c| c == 0 || c > table.columns) {
            return Err(Failure::Config(format!(
                "--columns must lie in 1..={}",
                table.columns
            )));
        }
        prov.add("input", path.display());
        prov.add(
            "columns",
            cols.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        if obs.obs.is_none() {
            if cols.len() != 1 {
                return Err(Failure::Config(
                    "an observable is needed to reduce several columns to one series".into(),
                ));
            }
            return Ok(table.column(cols[0] - 1));
        }
        let space = match table.space {
            Some(s) if s.dim() == cols.len() => s,
            _ => infer_space(cols.len())?,
        };
        prov.add(
            "space",
            serde_json::to_value(space)
                .unwrap_or_default()
                .as_str()
                .unwrap_or(""),
        );
        let o = obs.spec(space)?;
        obs.record(prov);
        let mut state = vec![0.0; cols.len()];
        let mut out = Vec::with_capacity(table.rows());
        for (i, row) in table.values.chunks_exact(table.columns).enumerate() {
            for (s, &c) in state.iter_mut().zip(&cols) {
                *s = row[c - 1];
            }
            out.push(evaluate(&o, &state).map_err(|e| index_error(e, i))?);
        }
        return Ok(out);
    }
    let spec = sys.spec()?;
    sys.record(&spec, prov)?;
    prov.add("s", src.s);
    let o = obs.spec(spec.space())?;
    obs.record(prov);
    let x0 = sys.x0(&spec)?;
    let mut traj = Trajectory::new(&spec, sys.noise()?, &x0, sys.burn_in, sys.seed()?)?;
    let mut out = Vec::with_capacity(src.s);
    for i in 0..src.s {
        let x = traj.next_state()?;
        out.push(evaluate(&o, x).map_err(|e| index_error(e, i))?);
    }
    Ok(out)
}

fn index_error(e: Error, i: usize) -> Error {
    match e {
        Error::SingularObservation { .. } => Error::SingularObservation { index: i },
        other => other,
    }
}
