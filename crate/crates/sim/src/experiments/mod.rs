//! Experiment runners. Each returns a [`Report`]: the primary result table and
//! any side files (grids, contours, protocol traces).

mod dmt;
mod region;
mod select;
mod sweep;

pub use dmt::{dmt_config, run_dmt};
pub use region::{run_optimal_location, run_region};
pub use select::run_select;
pub use sweep::{
    relay_sweep, run_relay_sweep, run_traffic_sweep, traffic_sweep, SweepCell, TrafficCell,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::results::{Provenance, ResultTable};

#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    /// Appended to the output file stem, e.g. `grid_z0.5.csv`.
    pub suffix: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: ResultTable,
    pub attachments: Vec<Attachment>,
}

/// Validates `config` and runs the experiment it names.
pub fn run(config: &ExperimentConfig) -> Result<Report> {
    let params = config.validate()?;
    match config.kind() {
        ExperimentKind::Select => run_select(config, &params),
        ExperimentKind::Region => run_region(config, &params),
        ExperimentKind::OptimalLocation => run_optimal_location(config, &params),
        ExperimentKind::RelaySweep => run_relay_sweep(config, &params),
        ExperimentKind::TrafficSweep => run_traffic_sweep(config, &params),
        ExperimentKind::Dmt => run_dmt(config, &params),
    }
}

pub(crate) fn provenance(config: &ExperimentConfig) -> Provenance {
    Provenance {
        experiment: config.kind().name().to_string(),
        config_sha256: config.sha256(),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.canonical_json(),
    }
}

pub(crate) fn seed_of(config: &ExperimentConfig) -> u64 {
    config.seed.unwrap_or(0)
}

/// Mean, standard error of the mean and sample count.
pub(crate) fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64, u64) {
    let mut n = 0u64;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for v in values {
        n += 1;
        let delta = v - mean;
        mean += delta / n as f64;
        m2 += delta * (v - mean);
    }
    match n {
        0 => (f64::NAN, f64::NAN, 0),
        1 => (mean, f64::NAN, 1),
        _ => (mean, (m2 / (n - 1) as f64 / n as f64).sqrt(), n),
    }
}

pub(crate) fn fmt_zeta(z: f64) -> String {
    format!("z{z}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_standard_error() {
        let (m, se, n) = mean_se([1.0, 2.0, 3.0, 4.0].into_iter());
        assert_eq!((m, n), (2.5, 4));
        // sample sd = sqrt(5/3)
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert!(mean_se(std::iter::empty()).0.is_nan());
    }
}
