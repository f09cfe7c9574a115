//! Cooperation regions and optimal relay locations.

use judrs_core::geometry::{compute_region_grid, contours_to_table, optimal_relay_location};
use judrs_core::SystemParams;
use rayon::prelude::*;

use super::{fmt_zeta, provenance, Attachment, Report};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::results::{Column, ResultTable};

pub fn run_region(config: &ExperimentConfig, params: &SystemParams) -> Result<Report> {
    let d = config.distance_m();
    let spec = config.grid_spec();
    let mut table = ResultTable::new(
        vec![
            Column::new("zeta", "-"),
            Column::new("region_cells", "count"),
            Column::new("region_area", "m^2"),
            Column::new("grid_cells", "count"),
            Column::new("max_saving", "fraction"),
        ],
        provenance(config),
    );
    let mut attachments = Vec::new();
    for z in config.zetas() {
        let grid = compute_region_grid(spec, d, z, config.rate_r, params)?;
        table.push(vec![
            z.into(),
            grid.region_cell_count().into(),
            grid.region_area().into(),
            grid.values.len().into(),
            grid.max_value().into(),
        ]);
        attachments.push(Attachment {
            suffix: format!("grid_{}.csv", fmt_zeta(z)),
            content: grid.to_table(),
        });
        attachments.push(Attachment {
            suffix: format!("contours_{}.csv", fmt_zeta(z)),
            content: contours_to_table(&grid.contours(&config.grid.contour_levels)),
        });
    }
    table.add_summary("distance_m", d);
    table.add_summary("grid", format!("{}x{}", spec.nx, spec.ny));
    Ok(Report { table, attachments })
}

pub fn run_optimal_location(config: &ExperimentConfig, params: &SystemParams) -> Result<Report> {
    let d = config.distance_m();
    let mut table = ResultTable::new(
        vec![
            Column::new("zeta", "-"),
            Column::new("x", "m"),
            Column::new("y", "m"),
            Column::new("d1_norm", "D"),
            Column::new("d2_norm", "D"),
            Column::new("e_saving", "fraction"),
        ],
        provenance(config),
    );
    let found = config
        .zetas()
        .par_iter()
        .map(|&z| optimal_relay_location(d, z, config.rate_r, params).map(|o| (z, o)))
        .collect::<judrs_core::Result<Vec<_>>>()?;
    for (z, o) in found {
        table.push(vec![
            z.into(),
            o.position.x.into(),
            o.position.y.into(),
            o.d1_norm.into(),
            o.d2_norm.into(),
            o.e_saving.into(),
        ]);
    }
    table.add_summary("distance_m", d);
    Ok(Report {
        table,
        attachments: Vec::new(),
    })
}
