//! Single- versus double-precision orbit comparisons.

use super::{map_step, wrap01, SystemKind, SystemSpec};
use crate::error::{config, Error, Result};
use crate::observables::metric_dist;

/// Preimage of `x` for invertible maps.
pub fn inverse_step(kind: &SystemKind, x: &[f64], out: &mut [f64]) -> Result<()> {
    use std::f64::consts::TAU;
    match *kind {
        SystemKind::Rotation { alpha } => out[0] = wrap01(x[0] - alpha),
        SystemKind::CatMap => {
            out[0] = wrap01(x[0] - x[1]);
            out[1] = wrap01(2.0 * x[1] - x[0]);
        }
        SystemKind::StandardMap { k } => {
            let px = wrap01(x[0] - x[1]);
            out[1] = wrap01(x[1] + k / TAU * (TAU * px).sin());
            out[0] = px;
        }
        SystemKind::Henon { a, b } if b != 0.0 => {
            let px = x[1] / b;
            out[0] = px;
            out[1] = x[0] - 1.0 + a * px * px;
        }
        SystemKind::Lozi { a, b } if b != 0.0 => {
            let px = x[1] / b;
            out[0] = px;
            out[1] = x[0] - 1.0 + a * px.abs();
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "{} map is not invertible",
                kind.name()
            )))
        }
    }
    Ok(())
}

fn round32(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = *x as f32 as f64);
}

fn check(spec: &SystemSpec, x0: &[f64]) -> Result<()> {
    if spec.kind.is_flow() || matches!(spec.kind, SystemKind::CantorIfs) {
        return Err(Error::Unsupported(
            "round-off diagnostics need a deterministic map".into(),
        ));
    }
    if x0.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return config("initial condition must be finite");
    }
    Ok(())
}

/// Distance after `t` steps between a double-precision orbit and one
/// rounded to single precision after every step.
pub fn orbit_divergence(spec: &SystemSpec, x0: &[f64], t: usize) -> Result<f64> {
    check(spec, x0)?;
    let d = x0.len();
    let (mut hi, mut lo) = (x0.to_vec(), x0.to_vec());
    round32(&mut lo);
    let mut tmp = vec![0.0; d];
    for _ in 0..t {
        map_step(&spec.kind, &hi, &mut tmp, 0.0);
        hi.copy_from_slice(&tmp);
        map_step(&spec.kind, &lo, &mut tmp, 0.0);
        lo.copy_from_slice(&tmp);
        round32(&mut lo);
    }
    metric_dist(spec.space(), &hi, &lo)
}

/// Distance between `x0` and its `t`-step forward-then-backward image,
/// with single-precision rounding after every step.
pub fn reversibility_error(spec: &SystemSpec, x0: &[f64], t: usize) -> Result<f64> {
    check(spec, x0)?;
    if !spec.invertible() {
        return Err(Error::Unsupported(format!(
            "{} map is not invertible",
            spec.kind.name()
        )));
    }
    let d = x0.len();
    let mut x = x0.to_vec();
    round32(&mut x);
    let mut tmp = vec![0.0; d];
    for _ in 0..t {
        map_step(&spec.kind, &x, &mut tmp, 0.0);
        x.copy_from_slice(&tmp);
        round32(&mut x);
    }
    for _ in 0..t {
        inverse_step(&spec.kind, &x, &mut tmp)?;
        x.copy_from_slice(&tmp);
        round32(&mut x);
    }
    if spec.space().is_unit_cube() {
        x.iter_mut().for_each(|v| *v = wrap01(*v));
    }
    metric_dist(spec.space(), x0, &x)
}
