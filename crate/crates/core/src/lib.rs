//! Extreme value statistics for dynamical systems.
//!
//! Orbits of chaotic maps and flows ([`dynsys`]) are turned into scalar
//! series ([`observables`]), their extremes are selected ([`extraction`]) and
//! fitted with GEV/GPD laws ([`evt`]), and the fitted parameters are mapped
//! back to geometric and dynamical quantities ([`geometry`], [`indicators`]).

pub mod dynsys;
pub mod error;
pub mod evt;
pub mod extraction;
pub mod geometry;
pub mod indicators;
pub mod observables;
pub mod rng;

pub use error::{Error, Result};
