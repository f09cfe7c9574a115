//! Energy per information bit of the battery-powered terminals (MS and relay).
//!
//! Relayed transmission runs two phases per direction, so each hop carries
//! `2R` and a phase lasts `L / (2RB)`. Only transmit-mode power is counted;
//! the BS is mains-powered and receive energy is ignored.
//!
//! Relay powers are clamped at zero when the direct link alone already meets
//! the combining target on a hop. The collapsed energy expression uses the
//! matching clamped [`selection_metric`], so energy and metric stay a
//! positive affine pair and both equal the unclamped textbook form whenever
//! `h_d <= min(h1, h2)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::link_budget::{coded_power, rate_factor_f};
use crate::model::{check_zeta, SystemParams};
use crate::selection::selection_metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransmissionMode {
    Cooperative,
    Direct,
    Infeasible,
}

impl std::fmt::Display for TransmissionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TransmissionMode::Cooperative => "cooperative",
            TransmissionMode::Direct => "direct",
            TransmissionMode::Infeasible => "infeasible",
        })
    }
}

/// Radiated powers of the MS and the selected relay, W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPowers {
    pub p_ms_uplink: f64,
    pub p_relay_uplink: f64,
    pub p_relay_downlink: f64,
}

impl LinkPowers {
    /// True when every terminal stays within its battery limit.
    pub fn is_feasible(&self, params: &SystemParams) -> bool {
        [self.p_ms_uplink, self.p_relay_uplink, self.p_relay_downlink]
            .iter()
            .all(|p| p + params.p_c <= params.p_max)
    }

    /// Per-terminal energy split for traffic factor `zeta` at rate `rate_r`.
    pub fn breakdown(&self, zeta: f64, rate_r: f64, params: &SystemParams) -> EnergyBreakdown {
        let phase = 2.0 * rate_r * params.bandwidth_b;
        EnergyBreakdown {
            ms: zeta * (self.p_ms_uplink + params.p_c) / phase,
            relay_uplink: zeta * (self.p_relay_uplink + params.p_c) / phase,
            relay_downlink: (1.0 - zeta) * (self.p_relay_downlink + params.p_c) / phase,
        }
    }

    /// Energy per bit summed terminal by terminal.
    pub fn energy_per_bit(&self, zeta: f64, rate_r: f64, params: &SystemParams) -> f64 {
        self.breakdown(zeta, rate_r, params).total()
    }
}

/// Energy per information bit spent by each battery-powered role, J/bit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub ms: f64,
    pub relay_uplink: f64,
    pub relay_downlink: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.ms + self.relay_uplink + self.relay_downlink
    }

    pub fn relay(&self) -> f64 {
        self.relay_uplink + self.relay_downlink
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// J/bit.
    pub energy_per_bit: f64,
    pub mode: TransmissionMode,
    pub link_powers: Option<LinkPowers>,
    pub relay_index: Option<usize>,
    pub breakdown: EnergyBreakdown,
}

impl EnergyReport {
    pub fn cooperative(
        relay_index: usize,
        h1: f64,
        h2: f64,
        h_d: f64,
        zeta: f64,
        rate_r: f64,
        params: &SystemParams,
    ) -> Result<Self> {
        let powers = relay_link_powers(h1, h2, h_d, rate_r, params)?;
        Ok(Self {
            energy_per_bit: coop_energy_per_bit(h1, h2, h_d, zeta, rate_r, params)?,
            mode: TransmissionMode::Cooperative,
            link_powers: Some(powers),
            relay_index: Some(relay_index),
            breakdown: powers.breakdown(zeta, rate_r, params),
        })
    }

    pub fn direct(h_d: f64, zeta: f64, rate_r: f64, params: &SystemParams) -> Result<Self> {
        let energy = direct_energy_per_bit(h_d, zeta, rate_r, params)?;
        Ok(Self {
            energy_per_bit: energy,
            mode: TransmissionMode::Direct,
            link_powers: None,
            relay_index: None,
            breakdown: EnergyBreakdown {
                ms: energy,
                ..Default::default()
            },
        })
    }
}

fn check_inputs(gains: &[f64], zeta: f64, rate_r: f64) -> Result<()> {
    if gains.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(domain(format!("channel gains must be finite and > 0, got {gains:?}")));
    }
    check_zeta(zeta)?;
    if !(rate_r.is_finite() && rate_r > 0.0) {
        return Err(domain(format!("rate must be > 0, got {rate_r}")));
    }
    Ok(())
}

/// Energy per bit of relaying through a relay with gains `(h1, h2)`.
pub fn coop_energy_per_bit(
    h1: f64,
    h2: f64,
    h_d: f64,
    zeta: f64,
    rate_r: f64,
    params: &SystemParams,
) -> Result<f64> {
    check_inputs(&[h1, h2, h_d], zeta, rate_r)?;
    let phase = 2.0 * rate_r * params.bandwidth_b;
    let f = rate_factor_f(2.0 * rate_r, params);
    Ok(f / phase * selection_metric(h1, h2, h_d, zeta)? + (1.0 + zeta) * params.p_c / phase)
}

/// Power the MS needs to reach the BS on its own at rate `rate_r`, W.
pub fn direct_power(h_d: f64, rate_r: f64, params: &SystemParams) -> Result<f64> {
    coded_power(rate_r, params.target_ber_pe, h_d, params)
}

/// Energy per bit of direct MS–BS transmission. Only the uplink share costs
/// battery energy.
pub fn direct_energy_per_bit(
    h_d: f64,
    zeta: f64,
    rate_r: f64,
    params: &SystemParams,
) -> Result<f64> {
    check_inputs(&[h_d], zeta, rate_r)?;
    let eta = params.code_rate_etac;
    let pe = params.target_ber_pe;
    Ok(
        -2.0 * zeta * eta * params.noise_n0 * (5.0 * pe).ln() * (2f64.powf(rate_r / eta) - 1.0)
            / (3.0 * h_d * params.coding_gain_gc * rate_r)
            + zeta * params.p_c / (rate_r * params.bandwidth_b),
    )
}

/// Transmit powers of the MS and the relay for both directions.
pub fn relay_link_powers(
    h1: f64,
    h2: f64,
    h_d: f64,
    rate_r: f64,
    params: &SystemParams,
) -> Result<LinkPowers> {
    check_inputs(&[h1, h2, h_d], 0.5, rate_r)?;
    let f = rate_factor_f(2.0 * rate_r, params);
    Ok(LinkPowers {
        p_ms_uplink: f / h1,
        p_relay_uplink: (f * (1.0 - h_d / h1) / h2).max(0.0),
        p_relay_downlink: (f * (1.0 - h_d / h2) / h1).max(0.0),
    })
}

/// Fractional energy saving of relaying over direct transmission. Negative
/// when relaying costs more.
pub fn cooperation_gain(
    h1: f64,
    h2: f64,
    h_d: f64,
    zeta: f64,
    rate_r: f64,
    params: &SystemParams,
) -> Result<f64> {
    if zeta == 0.0 {
        return Err(domain(
            "cooperation gain is undefined at zeta = 0 (direct energy is zero)",
        ));
    }
    let direct = direct_energy_per_bit(h_d, zeta, rate_r, params)?;
    let coop = coop_energy_per_bit(h1, h2, h_d, zeta, rate_r, params)?;
    Ok((direct - coop) / direct)
}
