//! Monte-Carlo energy sweeps over relay count and traffic asymmetry.
//!
//! Every trial places the relays and draws fading once; all schemes, relay
//! counts and traffic factors are evaluated on that same realization (common
//! random numbers). A sweep with `N` relays uses the first `N` of them.

use std::f64::consts::PI;

use judrs_core::energy::EnergyBreakdown;
use judrs_core::model::{pathloss_gain, realize_links, FadingMode, Geometry, LinkState, Point2};
use judrs_core::selection::{SelectionContext, SelectionDecision, SelectorRegistry};
use judrs_core::{seed, SystemParams};
use rand::Rng;
use rayon::prelude::*;

use super::{mean_se, provenance, seed_of, Report};
use crate::config::ExperimentConfig;
use crate::error::{Result, SimError};
use crate::results::{Column, ResultTable};

const RELAY_SWEEP_SCOPE: u64 = 1;
const TRAFFIC_SWEEP_SCOPE: u64 = 2;

/// Relays uniform in a disc of diameter `factor · D` around the midpoint.
fn place_relays<R: Rng + ?Sized>(rng: &mut R, d: f64, factor: f64, n: usize) -> Vec<Point2> {
    let radius = 0.5 * factor * d;
    (0..n)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            Point2::new(0.5 * d + r * theta.cos(), r * theta.sin())
        })
        .collect()
}

fn draw_trial(
    base: u64,
    scope: &[u64],
    d: f64,
    direct_link: bool,
    factor: f64,
    relays: usize,
    params: &SystemParams,
) -> judrs_core::Result<LinkState> {
    let mut rng = seed::stream(base, scope);
    let positions = place_relays(&mut rng, d, factor, relays);
    let geometry = Geometry::on_axis(d, positions)?;
    let mut links = realize_links(&geometry, params, FadingMode::On, &mut rng)?;
    if !direct_link {
        links.h_direct = 1e-6 * pathloss_gain(d, params)?;
    }
    Ok(links)
}

fn decide(
    registry: &SelectorRegistry,
    scheme: &str,
    links: &LinkState,
    zeta: f64,
    rate_r: f64,
    params: &SystemParams,
) -> judrs_core::Result<SelectionDecision> {
    let candidates = links.candidates();
    let ctx = SelectionContext {
        candidates: &candidates,
        h_direct: links.h_direct,
        zeta,
        rate_r,
        params,
    };
    registry.require(scheme)?.select(&ctx)
}

/// Per-trial energies of one (scenario, zeta, relay count, scheme) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub distance_m: f64,
    pub direct_link: bool,
    pub zeta: f64,
    pub relay_count: usize,
    pub scheme: String,
    /// `None` where the scheme found no feasible transmission.
    pub energies: Vec<Option<f64>>,
    pub cooperative: u64,
}

impl SweepCell {
    pub fn stats(&self) -> (f64, f64, u64) {
        mean_se(self.energies.iter().flatten().copied())
    }

    pub fn infeasible(&self) -> u64 {
        self.energies.iter().filter(|e| e.is_none()).count() as u64
    }
}

pub fn relay_sweep(config: &ExperimentConfig, params: &SystemParams) -> Result<Vec<SweepCell>> {
    let registry = SelectorRegistry::with_defaults();
    let max_n = *config.relay_counts.iter().max().unwrap_or(&0);
    let base = seed_of(config);
    let zetas = config.zetas();
    let factor = config.geometry.placement_diameter_factor;
    let mut cells = Vec::new();
    for (si, sc) in config.geometry.scenarios.iter().enumerate() {
        // trial -> zeta -> count -> scheme -> (energy, cooperative)
        type Outcome = Vec<Vec<Vec<(Option<f64>, bool)>>>;
        let per_trial: Vec<Outcome> = (0..config.trials)
            .into_par_iter()
            .map(|t| -> judrs_core::Result<Outcome> {
                let links = draw_trial(
                    base,
                    &[RELAY_SWEEP_SCOPE, si as u64, t],
                    sc.distance_m,
                    sc.direct_link,
                    factor,
                    max_n,
                    params,
                )?;
                zetas
                    .iter()
                    .map(|&z| {
                        config
                            .relay_counts
                            .iter()
                            .map(|&n| {
                                let prefix = links.prefix(n);
                                config
                                    .schemes
                                    .iter()
                                    .map(|s| {
                                        let d = decide(&registry, s, &prefix, z, config.rate_r, params)?;
                                        Ok((d.energy_per_bit(), d.is_cooperative()))
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect::<judrs_core::Result<_>>()?;

        for (zi, &z) in zetas.iter().enumerate() {
            for (ni, &n) in config.relay_counts.iter().enumerate() {
                for (ki, scheme) in config.schemes.iter().enumerate() {
                    let outcomes = per_trial.iter().map(|o| o[zi][ni][ki]);
                    cells.push(SweepCell {
                        distance_m: sc.distance_m,
                        direct_link: sc.direct_link,
                        zeta: z,
                        relay_count: n,
                        scheme: scheme.clone(),
                        energies: outcomes.clone().map(|o| o.0).collect(),
                        cooperative: outcomes.filter(|o| o.1).count() as u64,
                    });
                }
            }
        }
    }
    Ok(cells)
}

pub fn run_relay_sweep(config: &ExperimentConfig, params: &SystemParams) -> Result<Report> {
    let cells = relay_sweep(config, params)?;
    let mut table = ResultTable::new(
        vec![
            Column::new("distance", "m"),
            Column::new("direct_link", "-"),
            Column::new("zeta", "-"),
            Column::new("relays", "count"),
            Column::new("scheme", "-"),
            Column::new("mean_energy", "J/bit"),
            Column::new("std_error", "J/bit"),
            Column::new("trials", "count"),
            Column::new("infeasible", "count"),
            Column::new("cooperative", "count"),
        ],
        provenance(config),
    );
    for c in &cells {
        let (mean, se, _) = c.stats();
        table.push(vec![
            c.distance_m.into(),
            if c.direct_link { "yes" } else { "no" }.into(),
            c.zeta.into(),
            c.relay_count.into(),
            c.scheme.as_str().into(),
            mean.into(),
            se.into(),
            c.energies.len().into(),
            c.infeasible().into(),
            c.cooperative.into(),
        ]);
    }
    table.add_summary(
        "note",
        "means exclude infeasible trials; relays uniform in a disc around the link midpoint",
    );
    Ok(Report {
        table,
        attachments: Vec::new(),
    })
}

/// Per-trial energy breakdowns of one (zeta, scheme) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficCell {
    pub zeta: f64,
    pub scheme: String,
    pub samples: Vec<Option<EnergyBreakdown>>,
}

impl TrafficCell {
    pub fn stats(&self, f: impl Fn(&EnergyBreakdown) -> f64) -> (f64, f64, u64) {
        mean_se(self.samples.iter().flatten().map(f))
    }

    pub fn mean_total(&self) -> f64 {
        self.stats(EnergyBreakdown::total).0
    }
}

pub fn traffic_sweep(config: &ExperimentConfig, params: &SystemParams) -> Result<Vec<TrafficCell>> {
    let registry = SelectorRegistry::with_defaults();
    let base = seed_of(config);
    let zetas = config.zetas();
    let d = config.distance_m();
    let n = config.geometry.active_relays;
    let factor = config.geometry.placement_diameter_factor;
    let per_trial: Vec<Vec<Vec<Option<EnergyBreakdown>>>> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> judrs_core::Result<_> {
            let links = draw_trial(base, &[TRAFFIC_SWEEP_SCOPE, t], d, true, factor, n, params)?;
            zetas
                .iter()
                .map(|&z| {
                    config
                        .schemes
                        .iter()
                        .map(|s| {
                            let dec = decide(&registry, s, &links, z, config.rate_r, params)?;
                            Ok(dec.energy_report.map(|r| r.breakdown))
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<judrs_core::Result<_>>()
        .map_err(SimError::from)?;

    let mut cells = Vec::new();
    for (zi, &z) in zetas.iter().enumerate() {
        for (ki, scheme) in config.schemes.iter().enumerate() {
            cells.push(TrafficCell {
                zeta: z,
                scheme: scheme.clone(),
                samples: per_trial.iter().map(|o| o[zi][ki]).collect(),
            });
        }
    }
    Ok(cells)
}

pub fn run_traffic_sweep(config: &ExperimentConfig, params: &SystemParams) -> Result<Report> {
    let cells = traffic_sweep(config, params)?;
    let mut table = ResultTable::new(
        vec![
            Column::new("zeta", "-"),
            Column::new("scheme", "-"),
            Column::new("ms_energy", "J/bit"),
            Column::new("ms_std_error", "J/bit"),
            Column::new("relay_uplink_energy", "J/bit"),
            Column::new("relay_downlink_energy", "J/bit"),
            Column::new("relay_energy", "J/bit"),
            Column::new("relay_std_error", "J/bit"),
            Column::new("total_energy", "J/bit"),
            Column::new("total_std_error", "J/bit"),
            Column::new("trials", "count"),
            Column::new("infeasible", "count"),
        ],
        provenance(config),
    );
    for c in &cells {
        let (ms, ms_se, _) = c.stats(|b| b.ms);
        let (ul, _, _) = c.stats(|b| b.relay_uplink);
        let (dl, _, _) = c.stats(|b| b.relay_downlink);
        let (relay, relay_se, _) = c.stats(EnergyBreakdown::relay);
        let (total, total_se, used) = c.stats(EnergyBreakdown::total);
        table.push(vec![
            c.zeta.into(),
            c.scheme.as_str().into(),
            ms.into(),
            ms_se.into(),
            ul.into(),
            dl.into(),
            relay.into(),
            relay_se.into(),
            total.into(),
            total_se.into(),
            c.samples.len().into(),
            (c.samples.len() as u64 - used).into(),
        ]);
    }
    table.add_summary("distance_m", config.distance_m());
    table.add_summary("active_relays", config.geometry.active_relays);
    Ok(Report {
        table,
        attachments: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    #[test]
    fn placement_stays_in_disc() {
        let mut rng = seed::stream(1, &[]);
        for p in place_relays(&mut rng, 450.0, 1.2, 2000) {
            let r = p.distance(&Point2::new(225.0, 0.0));
            assert!(r <= 270.0 + 1e-9);
        }
    }

    #[test]
    fn single_relay_schemes_agree() {
        let mut c = ExperimentConfig::defaults(ExperimentKind::RelaySweep);
        c.seed = Some(3);
        c.trials = 300;
        c.relay_counts = vec![1];
        let p = c.validate().unwrap();
        let cells = relay_sweep(&c, &p).unwrap();
        for chunk in cells.chunks(3) {
            let j = &chunk[0];
            for b in &chunk[1..] {
                for (ej, eb) in j.energies.iter().zip(&b.energies) {
                    // The baseline keeps the lone relay even where direct
                    // transmission would be cheaper.
                    match (ej, eb) {
                        (Some(a), Some(b)) if !j.direct_link => assert_eq!(a, b),
                        (Some(a), Some(b)) => assert!(a <= b),
                        (None, None) => {}
                        _ => panic!("feasibility differs"),
                    }
                }
            }
        }
    }

    #[test]
    fn zeta_one_has_no_downlink_relay_energy() {
        let mut c = ExperimentConfig::defaults(ExperimentKind::TrafficSweep);
        c.seed = Some(9);
        c.trials = 200;
        c.zeta = Some(vec![1.0]);
        let p = c.validate().unwrap();
        for cell in traffic_sweep(&c, &p).unwrap() {
            assert_eq!(cell.stats(|b| b.relay_downlink).0, 0.0);
        }
    }
}
