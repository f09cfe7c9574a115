//! Relay selection: the Minimum Energy Criterion, the best-worst-channel and
//! best-harmonic-mean baselines, and the feasibility thresholds shared with
//! the protocol.
//!
//! Every selector filters candidates through the same two battery
//! constraints (`g_th1` on the MS–relay hop, `g_th2` on the relay–BS hop), so
//! scheme comparisons isolate the ranking rule. Ties go to the lowest relay
//! index.

mod registry;

pub use registry::{
    BestHarmonicMeanSelector, BestWorstChannelSelector, MinEnergySelector, RelaySelector,
    SelectionContext, SelectorRegistry,
};

use serde::{Deserialize, Serialize};

use crate::energy::{
    coop_energy_per_bit, direct_energy_per_bit, direct_power, EnergyReport, TransmissionMode,
};
use crate::error::{domain, Error, Result};
use crate::link_budget::rate_factor_f;
use crate::model::{check_zeta, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateRelay {
    pub index: usize,
    /// MS–relay gain.
    pub h1: f64,
    /// Relay–BS gain.
    pub h2: f64,
}

impl CandidateRelay {
    fn check(&self) -> Result<()> {
        if !(self.h1.is_finite() && self.h1 > 0.0 && self.h2.is_finite() && self.h2 > 0.0) {
            return Err(domain(format!(
                "relay {} has non-positive gains ({}, {})",
                self.index, self.h1, self.h2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionDecision {
    pub mode: TransmissionMode,
    pub relay_index: Option<usize>,
    /// Minimum Energy metric of the chosen relay.
    pub metric_value: Option<f64>,
    /// Absent in the infeasible (outage) case.
    pub energy_report: Option<EnergyReport>,
}

impl SelectionDecision {
    pub fn is_cooperative(&self) -> bool {
        self.mode == TransmissionMode::Cooperative
    }

    pub fn energy_per_bit(&self) -> Option<f64> {
        self.energy_report.map(|r| r.energy_per_bit)
    }

    pub(crate) fn direct(h_d: f64, zeta: f64, rate_r: f64, params: &SystemParams) -> Result<Self> {
        Ok(Self {
            mode: TransmissionMode::Direct,
            relay_index: None,
            metric_value: None,
            energy_report: Some(EnergyReport::direct(h_d, zeta, rate_r, params)?),
        })
    }

    pub(crate) fn infeasible() -> Self {
        Self {
            mode: TransmissionMode::Infeasible,
            relay_index: None,
            metric_value: None,
            energy_report: None,
        }
    }

    pub(crate) fn cooperative(
        c: &CandidateRelay,
        h_d: f64,
        zeta: f64,
        rate_r: f64,
        params: &SystemParams,
    ) -> Result<Self> {
        Ok(Self {
            mode: TransmissionMode::Cooperative,
            relay_index: Some(c.index),
            metric_value: Some(selection_metric(c.h1, c.h2, h_d, zeta)?),
            energy_report: Some(EnergyReport::cooperative(
                c.index, c.h1, c.h2, h_d, zeta, rate_r, params,
            )?),
        })
    }
}

/// Minimum Energy metric: radiated energy per bit of relay `(h1, h2)` in
/// units of `F(2R) / (2RB)`.
///
/// Equals `1/h1 + zeta/h2 - h_d/(h1 h2)` whenever `h_d <= min(h1, h2)`.
/// Beyond that the relay's uplink or downlink power is clamped at zero, giving
/// `zeta/h1 + zeta (1 - h_d/h1)+ / h2 + (1 - zeta)(1 - h_d/h2)+ / h1`.
pub fn selection_metric(h1: f64, h2: f64, h_d: f64, zeta: f64) -> Result<f64> {
    if [h1, h2, h_d].iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(domain(format!(
            "channel gains must be finite and > 0, got ({h1}, {h2}, {h_d})"
        )));
    }
    check_zeta(zeta)?;
    if h_d <= h1 && h_d <= h2 {
        return Ok(1.0 / h1 + zeta / h2 - h_d / (h1 * h2));
    }
    let uplink_relay = (1.0 - h_d / h1).max(0.0) / h2;
    let downlink_relay = (1.0 - h_d / h2).max(0.0) / h1;
    Ok(zeta / h1 + zeta * uplink_relay + (1.0 - zeta) * downlink_relay)
}

/// Step-1 threshold `g_th1 = F(2R)`.
pub fn threshold_gth1(rate_r: f64, params: &SystemParams) -> f64 {
    rate_factor_f(2.0 * rate_r, params)
}

/// Step-3 threshold `g_th2 = F(2R) (1 - h_d/h1)+` for a relay with MS gain `h1`.
pub fn threshold_gth2(h1: f64, h_d: f64, rate_r: f64, params: &SystemParams) -> f64 {
    rate_factor_f(2.0 * rate_r, params) * (1.0 - h_d / h1).max(0.0)
}

/// The MS can reach the relay within its battery limit.
pub fn passes_gamma(h1: f64, rate_r: f64, params: &SystemParams) -> bool {
    params.radiated_budget() * h1 >= threshold_gth1(rate_r, params)
}

/// The relay can complete the uplink within its battery limit.
pub fn passes_sigma(h1: f64, h2: f64, h_d: f64, rate_r: f64, params: &SystemParams) -> bool {
    params.radiated_budget() * h2 >= threshold_gth2(h1, h_d, rate_r, params)
}

pub fn is_admissible(c: &CandidateRelay, h_d: f64, rate_r: f64, params: &SystemParams) -> bool {
    passes_gamma(c.h1, rate_r, params) && passes_sigma(c.h1, c.h2, h_d, rate_r, params)
}

/// The MS can reach the BS on its own within the battery limit.
pub fn direct_is_feasible(h_d: f64, rate_r: f64, params: &SystemParams) -> Result<bool> {
    Ok(direct_power(h_d, rate_r, params)? + params.p_c <= params.p_max)
}

fn validate_all(candidates: &[CandidateRelay], h_d: f64, zeta: f64, rate_r: f64) -> Result<()> {
    for c in candidates {
        c.check()?;
    }
    if !(h_d.is_finite() && h_d > 0.0) {
        return Err(domain(format!("direct gain must be > 0, got {h_d}")));
    }
    check_zeta(zeta)?;
    if !(rate_r.is_finite() && rate_r > 0.0) {
        return Err(domain(format!("rate must be > 0, got {rate_r}")));
    }
    Ok(())
}

/// Picks the admissible relay with the smallest metric, then keeps direct
/// transmission instead when that is no more expensive.
pub fn min_energy_select(
    candidates: &[CandidateRelay],
    h_d: f64,
    zeta: f64,
    rate_r: f64,
    params: &SystemParams,
) -> Result<SelectionDecision> {
    validate_all(candidates, h_d, zeta, rate_r)?;
    let mut best: Option<(f64, &CandidateRelay)> = None;
    for c in candidates.iter().filter(|c| is_admissible(c, h_d, rate_r, params)) {
        let m = selection_metric(c.h1, c.h2, h_d, zeta)?;
        let better = match best {
            None => true,
            Some((bm, bc)) => m < bm || (m == bm && c.index < bc.index),
        };
        if better {
            best = Some((m, c));
        }
    }
    let direct_ok = direct_is_feasible(h_d, rate_r, params)?;
    match best {
        Some((_, c)) => {
            if direct_ok {
                let e_direct = direct_energy_per_bit(h_d, zeta, rate_r, params)?;
                let e_coop = coop_energy_per_bit(c.h1, c.h2, h_d, zeta, rate_r, params)?;
                if e_direct <= e_coop {
                    return SelectionDecision::direct(h_d, zeta, rate_r, params);
                }
            }
            SelectionDecision::cooperative(c, h_d, zeta, rate_r, params)
        }
        None if direct_ok => SelectionDecision::direct(h_d, zeta, rate_r, params),
        None => Ok(SelectionDecision::infeasible()),
    }
}

fn argmax_by<F>(candidates: &[CandidateRelay], score: F) -> Result<usize>
where
    F: Fn(&CandidateRelay) -> f64,
{
    let mut best: Option<(f64, usize)> = None;
    for c in candidates {
        let s = score(c);
        best = match best {
            Some((bs, bi)) if s < bs || (s == bs && bi < c.index) => Some((bs, bi)),
            _ => Some((s, c.index)),
        };
    }
    best.map(|(_, i)| i).ok_or(Error::EmptyCandidates)
}

/// Relay whose weaker hop is strongest.
pub fn best_worst_channel_select(candidates: &[CandidateRelay]) -> Result<usize> {
    argmax_by(candidates, |c| c.h1.min(c.h2))
}

/// Relay with the largest `(1/h1 + 1/h2)^-1`.
pub fn best_harmonic_mean_select(candidates: &[CandidateRelay]) -> Result<usize> {
    argmax_by(candidates, |c| 1.0 / (1.0 / c.h1 + 1.0 / c.h2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(index: usize, h1: f64, h2: f64) -> CandidateRelay {
        CandidateRelay { index, h1, h2 }
    }

    #[test]
    fn metric_without_direct_link() {
        let (h1, h2) = (3.0, 5.0);
        let m = selection_metric(h1, h2, 1e-300, 1.0).unwrap();
        assert!((m - (1.0 / h1 + 1.0 / h2)).abs() < 1e-15);
        let h = 4.0;
        let m = selection_metric(h, h, 1e-300, 0.3).unwrap();
        assert!((m - 1.3 / h).abs() < 1e-15);
    }

    #[test]
    fn metric_matches_printed_form_when_unclamped() {
        let (h1, h2, hd, z) = (2.5e-11, 7.0e-12, 3.1e-12, 0.37);
        let printed = 1.0 / h1 + z / h2 - hd / (h1 * h2);
        assert_eq!(selection_metric(h1, h2, hd, z).unwrap(), printed);
        // The clamped expression agrees algebraically.
        let clamped = z / h1 + z * (1.0 - hd / h1) / h2 + (1.0 - z) * (1.0 - hd / h2) / h1;
        assert!(((clamped - printed) / printed).abs() < 1e-13);
    }

    #[test]
    fn metric_stays_positive_with_strong_direct_link() {
        // The printed form would be negative here.
        let (h1, h2, hd, z) = (1.0, 1.0, 5.0, 0.5);
        assert!(1.0 / h1 + z / h2 - hd / (h1 * h2) < 0.0);
        assert_eq!(selection_metric(h1, h2, hd, z).unwrap(), z / h1);
    }

    #[test]
    fn dominating_candidate_wins() {
        let p = SystemParams::reference();
        let hd = 1e-20;
        let cands = [cand(0, 2e-11, 2e-11), cand(1, 4e-11, 3e-11)];
        let d = min_energy_select(&cands, hd, 0.5, 3.0, &p).unwrap();
        assert_eq!(d.mode, TransmissionMode::Cooperative);
        assert_eq!(d.relay_index, Some(1));
    }

    #[test]
    fn empty_list_goes_direct() {
        let p = SystemParams::reference();
        let d = min_energy_select(&[], 2e-12, 0.5, 3.0, &p).unwrap();
        assert_eq!(d.mode, TransmissionMode::Direct);
        assert!(d.energy_per_bit().unwrap() > 0.0);
    }

    #[test]
    fn nothing_feasible_is_infeasible() {
        let p = SystemParams::reference();
        let d = min_energy_select(&[cand(0, 1e-16, 1e-16)], 1e-18, 0.5, 3.0, &p).unwrap();
        assert_eq!(d.mode, TransmissionMode::Infeasible);
        assert!(d.energy_report.is_none());
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let p = SystemParams::reference();
        let cands = [cand(4, 3e-11, 3e-11), cand(2, 3e-11, 3e-11), cand(7, 3e-11, 3e-11)];
        let d = min_energy_select(&cands, 1e-20, 0.5, 3.0, &p).unwrap();
        assert_eq!(d.relay_index, Some(2));
        assert_eq!(best_worst_channel_select(&cands).unwrap(), 2);
        assert_eq!(best_harmonic_mean_select(&cands).unwrap(), 2);
    }

    #[test]
    fn baselines_on_small_lists() {
        let single = [cand(3, 1.0, 9.0)];
        assert_eq!(best_worst_channel_select(&single).unwrap(), 3);
        assert_eq!(best_harmonic_mean_select(&single).unwrap(), 3);

        let pair = [cand(0, 4.0, 1.0), cand(1, 2.0, 2.0)];
        assert_eq!(best_worst_channel_select(&pair).unwrap(), 1);

        // Harmonic means: (h, h) -> h/2, (h/2, 2h) -> 0.4 h.
        let h = 3.0;
        let pair = [cand(0, h, h), cand(1, h / 2.0, 2.0 * h)];
        assert_eq!(best_harmonic_mean_select(&pair).unwrap(), 0);

        assert_eq!(best_worst_channel_select(&[]), Err(Error::EmptyCandidates));
        assert_eq!(best_harmonic_mean_select(&[]), Err(Error::EmptyCandidates));
    }

    #[test]
    fn strong_direct_link_preferred() {
        let p = SystemParams::reference();
        // Relay at the midpoint of a 500 m link: relaying at 2R costs more.
        let g250 = crate::model::pathloss_gain(250.0, &p).unwrap();
        let g500 = crate::model::pathloss_gain(500.0, &p).unwrap();
        let d = min_energy_select(&[cand(0, g250, g250)], g500, 0.5, 3.0, &p).unwrap();
        assert_eq!(d.mode, TransmissionMode::Direct);
    }

    #[test]
    fn rejects_invalid_candidates() {
        let p = SystemParams::reference();
        assert!(min_energy_select(&[cand(0, 0.0, 1.0)], 1.0, 0.5, 3.0, &p).is_err());
        assert!(min_energy_select(&[], 1.0, 1.2, 3.0, &p).is_err());
    }
}
