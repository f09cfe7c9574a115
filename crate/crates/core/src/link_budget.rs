//! MQAM error-rate and transmit-power relations.
//!
//! BER of Gray-mapped MQAM is approximated by `0.2 · exp(-1.5 γ / (M - 1))`,
//! which caps the usable target BER at 0.2. Coded transmission divides the
//! required power by the coding gain and multiplies by the code rate, with the
//! constellation size tied to the hop rate as `M = 2^(rate / η_c)`.
//! Constellation sizes are continuous; nothing is rounded to square QAM.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::SystemParams;

/// Largest BER the exponential approximation can produce.
pub const MAX_APPROX_BER: f64 = 0.2;

/// End-to-end spectral efficiency `R` of a link, bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub spectral_efficiency_r: f64,
}

impl RateConfig {
    pub fn new(spectral_efficiency_r: f64) -> Result<Self> {
        if !(spectral_efficiency_r.is_finite() && spectral_efficiency_r > 0.0) {
            return Err(domain(format!(
                "spectral efficiency must be > 0, got {spectral_efficiency_r}"
            )));
        }
        Ok(Self {
            spectral_efficiency_r,
        })
    }

    /// Constellation size used on a hop carrying `hop_rate`.
    pub fn constellation_size(hop_rate: f64, params: &SystemParams) -> f64 {
        2f64.powf(hop_rate / params.code_rate_etac)
    }

    /// Rate each of the two relaying phases has to carry.
    pub fn per_hop_rate(&self) -> f64 {
        2.0 * self.spectral_efficiency_r
    }
}

fn check_m(m: f64) -> Result<()> {
    if !(m > 1.0) {
        return Err(domain(format!("constellation size must exceed 1, got {m}")));
    }
    Ok(())
}

fn check_pe(pe: f64) -> Result<()> {
    if !(pe > 0.0 && pe <= MAX_APPROX_BER) {
        return Err(domain(format!(
            "target BER must lie in (0, {MAX_APPROX_BER}], got {pe}"
        )));
    }
    Ok(())
}

fn check_gain(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(domain(format!("channel gain must be > 0, got {h}")));
    }
    Ok(())
}

pub fn ber_mqam(gamma: f64, m: f64) -> Result<f64> {
    check_m(m)?;
    if !(gamma >= 0.0) {
        return Err(domain(format!("SNR must be >= 0, got {gamma}")));
    }
    Ok(MAX_APPROX_BER * (-1.5 * gamma / (m - 1.0)).exp())
}

/// Inverse of [`ber_mqam`] in `gamma`.
pub fn required_snr(pe: f64, m: f64) -> Result<f64> {
    check_m(m)?;
    check_pe(pe)?;
    Ok(-(m - 1.0) * (5.0 * pe).ln() / 1.5)
}

/// Uncoded transmit power reaching `pe` over gain `h`, W.
pub fn required_power_uncoded(pe: f64, m: f64, h: f64, params: &SystemParams) -> Result<f64> {
    check_m(m)?;
    check_pe(pe)?;
    check_gain(h)?;
    let n0b = params.noise_n0 * params.bandwidth_b;
    Ok(2.0 * (5.0 * pe).ln() * n0b / (3.0 * h) * (1.0 - m))
}

/// Trellis-coded MQAM transmit power for `rate_r` bits/s/Hz, W.
pub fn coded_power(rate_r: f64, pe: f64, h: f64, params: &SystemParams) -> Result<f64> {
    if !(rate_r.is_finite() && rate_r > 0.0) {
        return Err(domain(format!("rate must be > 0, got {rate_r}")));
    }
    check_pe(pe)?;
    check_gain(h)?;
    let eta = params.code_rate_etac;
    let n0b = params.noise_n0 * params.bandwidth_b;
    Ok(2.0 * eta * (5.0 * pe).ln() * n0b / (3.0 * h * params.coding_gain_gc)
        * (1.0 - 2f64.powf(rate_r / eta)))
}

/// BER after two decode-and-forward hops.
pub fn df_end_to_end_ber(pe1: f64, pe2: f64) -> f64 {
    // 1 - (1 - pe1)(1 - pe2), without the cancellation.
    pe1 + pe2 - pe1 * pe2
}

/// Equal per-hop split of an end-to-end BER target, `1 - sqrt(1 - pe)`.
///
/// Evaluated as `pe / (1 + sqrt(1 - pe))` to avoid cancellation at small `pe`.
pub fn per_hop_ber_target(pe: f64) -> f64 {
    pe / (1.0 + (1.0 - pe).sqrt())
}

/// Coded power per unit channel gain for one relaying hop at `rate`, with the
/// BER target split evenly over both hops (W · gain).
pub fn rate_factor_f(rate: f64, params: &SystemParams) -> f64 {
    let eta = params.code_rate_etac;
    let pe = params.target_ber_pe;
    2.0 * eta * params.noise_n0 * params.bandwidth_b / (3.0 * params.coding_gain_gc)
        * (2f64.powf(rate / eta) - 1.0)
        * ((1.0 + (1.0 - pe).sqrt()) / (5.0 * pe)).ln()
}
