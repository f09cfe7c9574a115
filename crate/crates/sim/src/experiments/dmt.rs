//! Outage curves and diversity slopes.

use judrs_core::model::{Geometry, Point2};
use judrs_core::outage::{estimate_outage_curve, DmtConfig, OutageCurve, RateMode};
use judrs_core::SystemParams;

use super::{fmt_zeta, provenance, seed_of, Report};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::results::{format_float, Column, ResultTable};

/// Core outage configuration for one traffic factor.
pub fn dmt_config(config: &ExperimentConfig, params: &SystemParams, zeta: f64) -> Result<DmtConfig> {
    let d = config.distance_m();
    let s = &config.dmt;
    let relays = vec![Point2::new(0.5 * d, 0.0); s.relay_count];
    let rate = match (s.multiplexing_r, s.fixed_rate) {
        (Some(r), _) => RateMode::Multiplexing(r),
        (None, Some(r)) => RateMode::Fixed(r),
        (None, None) => RateMode::Fixed(1.0),
    };
    Ok(DmtConfig {
        rate,
        snr_points_rho: s.rho_db.iter().map(|db| 10f64.powf(db / 10.0)).collect(),
        trials_per_point: config.trials,
        zeta,
        geometry: Geometry::on_axis(d, relays)?,
        params: *params,
        threshold_model: s.threshold_model,
        seed: seed_of(config),
    })
}

pub fn run_dmt(config: &ExperimentConfig, params: &SystemParams) -> Result<Report> {
    let mut table = ResultTable::new(
        vec![
            Column::new("zeta", "-"),
            Column::new("rho", "dB"),
            Column::new("rate_r", "bit/s/Hz"),
            Column::new("p_out", "probability"),
            Column::new("std_error", "probability"),
            Column::new("ci_low", "probability"),
            Column::new("ci_high", "probability"),
            Column::new("trials", "count"),
            Column::new("outage_events", "weighted count"),
            Column::new("admission_violations", "count"),
            Column::new("theoretical_d", "-"),
        ],
        provenance(config),
    );
    for z in config.zetas() {
        let curve = estimate_outage_curve(&dmt_config(config, params, z)?)?;
        for p in &curve.points {
            table.push(vec![
                z.into(),
                p.rho_db().into(),
                p.rate_r.into(),
                p.p_out.into(),
                p.std_error.into(),
                p.ci_low.into(),
                p.ci_high.into(),
                p.trials.into(),
                p.outage_count.into(),
                p.admission_violations.into(),
                curve.theoretical_d.into(),
            ]);
        }
        summarize(&mut table, z, &curve);
    }
    Ok(Report {
        table,
        attachments: Vec::new(),
    })
}

fn summarize(table: &mut ResultTable, zeta: f64, curve: &OutageCurve) {
    let tag = fmt_zeta(zeta);
    table.add_summary(&format!("relays_{tag}"), curve.relay_count);
    table.add_summary(&format!("multiplexing_r_{tag}"), curve.multiplexing_r);
    table.add_summary(&format!("theoretical_d_{tag}"), curve.theoretical_d);
    // Separate keys so the fit can be read back without parsing prose.
    match &curve.fitted_slope {
        Some(f) => {
            table.add_summary(&format!("fitted_d_{tag}"), format_float(f.diversity));
            table.add_summary(&format!("fitted_d_std_error_{tag}"), format_float(f.std_error));
            table.add_summary(&format!("fitted_d_ci_low_{tag}"), format_float(f.ci_low));
            table.add_summary(&format!("fitted_d_ci_high_{tag}"), format_float(f.ci_high));
            table.add_summary(&format!("fit_points_{tag}"), f.points_used);
        }
        None => table.add_summary(
            &format!("fitted_d_{tag}"),
            "none (too few outage events)",
        ),
    }
    table.add_summary(
        &format!("admission_violations_{tag}"),
        curve.total_admission_violations(),
    );
}
