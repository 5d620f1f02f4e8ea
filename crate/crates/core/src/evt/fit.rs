use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::gev::GevParams;
use super::gof::{ks_test, GofResult};
use super::gpd::GpdParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum FittedParams {
    Gev(GevParams),
    Gpd(GpdParams),
}

impl FittedParams {
    pub fn xi(&self) -> f64 {
        match self {
            FittedParams::Gev(p) => p.xi,
            FittedParams::Gpd(p) => p.xi,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            FittedParams::Gev(p) => p.sigma,
            FittedParams::Gpd(p) => p.sigma,
        }
    }

    pub fn gev(&self) -> Option<GevParams> {
        match self {
            FittedParams::Gev(p) => Some(*p),
            FittedParams::Gpd(_) => None,
        }
    }

    pub fn gpd(&self) -> Option<GpdParams> {
        match self {
            FittedParams::Gpd(p) => Some(*p),
            FittedParams::Gev(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Mle,
    Lmom,
    Moments(u32),
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitMethod::Mle => write!(f, "mle"),
            FitMethod::Lmom => write!(f, "lmom"),
            FitMethod::Moments(n) => write!(f, "moments{n}"),
        }
    }
}

/// 95% intervals; `mu` is absent for GPD fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ci95 {
    pub xi: (f64, f64),
    pub sigma: (f64, f64),
    pub mu: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: FittedParams,
    pub ci95: Option<Ci95>,
    pub nll: f64,
    pub method: FitMethod,
    pub gof: Option<GofResult>,
    pub n: usize,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub(crate) fn new(params: FittedParams, method: FitMethod, data: &[f64]) -> Self {
        let (nll, gof) = match params {
            FittedParams::Gev(p) => (p.nll(data), ks_test(data, |v| p.cdf(v)).ok()),
            FittedParams::Gpd(p) => (p.nll(data), ks_test(data, |v| p.cdf(v)).ok()),
        };
        FitResult {
            params,
            ci95: None,
            nll,
            method,
            gof,
            n: data.len(),
            warnings: Vec::new(),
        }
    }

    pub fn xi(&self) -> f64 {
        self.params.xi()
    }

    pub fn sigma(&self) -> f64 {
        self.params.sigma()
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "method": self.method.to_string(),
            "xi": self.params.xi(),
            "sigma": self.params.sigma(),
            "nll": self.nll,
            "n": self.n,
        });
        match self.params {
            FittedParams::Gev(p) => v["mu"] = json!(p.mu),
            FittedParams::Gpd(p) => v["threshold"] = json!(p.threshold),
        }
        v["ci95"] = match &self.ci95 {
            Some(ci) => {
                let mut c = json!({ "xi": [ci.xi.0, ci.xi.1], "sigma": [ci.sigma.0, ci.sigma.1] });
                if let Some(m) = ci.mu {
                    c["mu"] = json!([m.0, m.1]);
                }
                c
            }
            None => Value::Null,
        };
        v["gof"] = match &self.gof {
            Some(g) => {
                json!({ "test": g.test, "stat": g.statistic, "p_value": g.p_value, "pass": g.pass })
            }
            None => Value::Null,
        };
        if !self.warnings.is_empty() {
            v["warnings"] = json!(self.warnings);
        }
        v
    }
}
