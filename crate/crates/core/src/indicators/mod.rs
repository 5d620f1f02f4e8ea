//! Analyses built from the extraction, fitting and geometry layers.

mod convergence;
mod noise;
mod recurrence;
mod stability;
mod tipping;

pub use convergence::{jitter, min_convergent_bin, BinCheck, Convergence};
pub use noise::{noise_scaling_study, NoiseKind, NoiseRow, NoiseStudyConfig, MIN_BALL_OCCUPANCY};
pub use recurrence::{
    default_bins, recurrence_scan, recurrence_scan_2d, zeta_grid, RecurrenceConfig, RecurrenceRow,
};
pub use stability::{
    pooled_dimension, stability_map, ObsFit, StabilityCell, StabilityConfig, StabilityMethod,
};
pub use tipping::{tipping_scan, TippingConfig, TippingReport, TippingRow};

/// Mean and sample standard deviation; NaNs for an empty slice.
pub(crate) fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}
