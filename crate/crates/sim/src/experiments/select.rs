//! One selection round on a fixed relay layout.

use judrs_core::model::{realize_links, Geometry, Point2};
use judrs_core::protocol::run_on_links;
use judrs_core::selection::{SelectionContext, SelectorRegistry};
use judrs_core::{seed, SystemParams};

use super::{fmt_zeta, provenance, seed_of, Attachment, Report};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::results::{format_float, Column, ResultTable};

const SELECT_SCOPE: u64 = 3;

pub fn run_select(config: &ExperimentConfig, params: &SystemParams) -> Result<Report> {
    let d = config.distance_m();
    let mut relays: Vec<Point2> = config
        .geometry
        .relays
        .iter()
        .map(|&[x, y]| Point2::new(x, y))
        .collect();
    if relays.is_empty() {
        relays.push(Point2::new(0.5 * d, 0.0));
    }
    let geometry = Geometry::on_axis(d, relays)?;
    // One realization shared by every traffic factor and scheme.
    let mut rng = seed::stream(seed_of(config), &[SELECT_SCOPE]);
    let links = realize_links(&geometry, params, config.geometry.fading, &mut rng)?;
    let registry = SelectorRegistry::with_defaults();
    let candidates = links.candidates();

    let mut table = ResultTable::new(
        vec![
            Column::new("zeta", "-"),
            Column::new("scheme", "-"),
            Column::new("mode", "-"),
            Column::new("relay", "index"),
            Column::new("energy_per_bit", "J/bit"),
            Column::new("ms_energy", "J/bit"),
            Column::new("relay_uplink_energy", "J/bit"),
            Column::new("relay_downlink_energy", "J/bit"),
            Column::new("metric", "1/gain"),
        ],
        provenance(config),
    );
    let mut attachments = Vec::new();
    for z in config.zetas() {
        for scheme in &config.schemes {
            let ctx = SelectionContext {
                candidates: &candidates,
                h_direct: links.h_direct,
                zeta: z,
                rate_r: config.rate_r,
                params,
            };
            let dec = registry.require(scheme)?.select(&ctx)?;
            let b = dec.energy_report.map(|r| r.breakdown);
            table.push(vec![
                z.into(),
                scheme.as_str().into(),
                dec.mode.to_string().into(),
                dec.relay_index.into(),
                dec.energy_per_bit().into(),
                b.map(|b| b.ms).into(),
                b.map(|b| b.relay_uplink).into(),
                b.map(|b| b.relay_downlink).into(),
                dec.metric_value.into(),
            ]);
        }
        let trace = run_on_links(links.clone(), z, config.rate_r, params)?;
        table.add_summary(
            &format!("gamma_{}", fmt_zeta(z)),
            format!("{:?}", trace.gamma_set),
        );
        table.add_summary(
            &format!("sigma_{}", fmt_zeta(z)),
            format!("{:?}", trace.sigma_set),
        );
        attachments.push(Attachment {
            suffix: format!("trace_{}.txt", fmt_zeta(z)),
            content: trace.to_document(),
        });
    }
    table.add_summary("h_direct", format_float(links.h_direct));
    Ok(Report { table, attachments })
}
