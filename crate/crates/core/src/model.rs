//! Physical constants, node geometry, traffic profile and the channel-gain
//! generator.
//!
//! Channel power gains follow `h = K · (d / 1 km)^(-p) · v`, with `v` a
//! unit-mean exponential (Rayleigh power) draw. Links are reciprocal: one gain
//! per link serves both directions.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::selection::CandidateRelay;

/// Reference distance of the pathloss constant `K`.
pub const REFERENCE_DISTANCE_M: f64 = 1000.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w * 1e3)
}

/// System parameters in the units they are usually quoted in (dB, dBm, Hz).
///
/// Defaults are the reference parameter set: 33 dBm maximum battery power,
/// -128.1 dB pathloss constant, 180 kHz, 2 GHz, -171 dBm/Hz, exponent 3.76,
/// 4.7 dB coding gain, rate-2/3 trellis code, 1e-4 target BER and 20 dBm
/// circuit power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsDb {
    pub p_max_dbm: f64,
    pub p_c_dbm: f64,
    pub k_db: f64,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub pathloss_exponent: f64,
    pub coding_gain_db: f64,
    pub code_rate: f64,
    pub target_ber: f64,
}

impl Default for ParamsDb {
    fn default() -> Self {
        Self {
            p_max_dbm: 33.0,
            p_c_dbm: 20.0,
            k_db: -128.1,
            bandwidth_hz: 180e3,
            carrier_hz: 2.0e9,
            noise_dbm_per_hz: -171.0,
            pathloss_exponent: 3.76,
            coding_gain_db: 4.7,
            code_rate: 2.0 / 3.0,
            target_ber: 1e-4,
        }
    }
}

impl ParamsDb {
    pub fn to_linear(&self) -> Result<SystemParams> {
        let params = SystemParams {
            p_max: dbm_to_watts(self.p_max_dbm),
            p_c: dbm_to_watts(self.p_c_dbm),
            k_gain: db_to_linear(self.k_db),
            bandwidth_b: self.bandwidth_hz,
            carrier_fc: self.carrier_hz,
            noise_n0: dbm_to_watts(self.noise_dbm_per_hz),
            pathloss_p: self.pathloss_exponent,
            coding_gain_gc: db_to_linear(self.coding_gain_db),
            code_rate_etac: self.code_rate,
            target_ber_pe: self.target_ber,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Linear-unit system parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Maximum battery power of a terminal, W.
    pub p_max: f64,
    /// Circuit power of the transmit chain, W.
    pub p_c: f64,
    /// Pathloss constant at the reference distance (linear).
    pub k_gain: f64,
    /// Bandwidth, Hz.
    pub bandwidth_b: f64,
    /// Carrier frequency, Hz.
    pub carrier_fc: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_n0: f64,
    /// Pathloss exponent.
    pub pathloss_p: f64,
    /// Coding gain (linear).
    pub coding_gain_gc: f64,
    /// Trellis code rate.
    pub code_rate_etac: f64,
    /// End-to-end target bit error rate.
    pub target_ber_pe: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl SystemParams {
    /// The reference parameter set in linear units.
    pub fn reference() -> Self {
        ParamsDb::default()
            .to_linear()
            .expect("reference parameters are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p_max", self.p_max),
            ("p_c", self.p_c),
            ("k_gain", self.k_gain),
            ("bandwidth_b", self.bandwidth_b),
            ("carrier_fc", self.carrier_fc),
            ("noise_n0", self.noise_n0),
            ("pathloss_p", self.pathloss_p),
            ("coding_gain_gc", self.coding_gain_gc),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(field, format!("must be finite and > 0, got {value}")));
            }
        }
        if !(self.code_rate_etac > 0.0 && self.code_rate_etac <= 1.0) {
            return Err(invalid(
                "code_rate_etac",
                format!("must lie in (0, 1], got {}", self.code_rate_etac),
            ));
        }
        if !(self.target_ber_pe > 0.0 && self.target_ber_pe < 1.0) {
            return Err(invalid(
                "target_ber_pe",
                format!("must lie in (0, 1), got {}", self.target_ber_pe),
            ));
        }
        if self.p_c >= self.p_max {
            return Err(invalid(
                "p_c",
                format!("circuit power {} W must be below p_max {} W", self.p_c, self.p_max),
            ));
        }
        Ok(())
    }

    pub fn to_db(&self) -> ParamsDb {
        ParamsDb {
            p_max_dbm: watts_to_dbm(self.p_max),
            p_c_dbm: watts_to_dbm(self.p_c),
            k_db: linear_to_db(self.k_gain),
            bandwidth_hz: self.bandwidth_b,
            carrier_hz: self.carrier_fc,
            noise_dbm_per_hz: watts_to_dbm(self.noise_n0),
            pathloss_exponent: self.pathloss_p,
            coding_gain_db: linear_to_db(self.coding_gain_gc),
            code_rate: self.code_rate_etac,
            target_ber: self.target_ber_pe,
        }
    }

    /// Power available for radiation once the circuit is fed, W.
    pub fn radiated_budget(&self) -> f64 {
        self.p_max - self.p_c
    }
}

/// Share of the total traffic carried on the uplink.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    zeta: f64,
    loads: Option<(f64, f64)>,
}

impl TrafficProfile {
    pub fn from_zeta(zeta: f64) -> Result<Self> {
        check_zeta(zeta)?;
        Ok(Self { zeta, loads: None })
    }

    /// Builds the profile from uplink and downlink loads in bits.
    pub fn from_loads(l_uplink: f64, l_downlink: f64) -> Result<Self> {
        if !(l_uplink >= 0.0 && l_downlink >= 0.0) || !(l_uplink + l_downlink > 0.0) {
            return Err(domain(format!(
                "traffic loads must be non-negative with a positive total, got UL {l_uplink}, DL {l_downlink}"
            )));
        }
        Ok(Self {
            zeta: l_uplink / (l_uplink + l_downlink),
            loads: Some((l_uplink, l_downlink)),
        })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn l_uplink(&self) -> Option<f64> {
        self.loads.map(|l| l.0)
    }

    pub fn l_downlink(&self) -> Option<f64> {
        self.loads.map(|l| l.1)
    }

    pub fn l_total(&self) -> Option<f64> {
        self.loads.map(|(u, d)| u + d)
    }
}

pub(crate) fn check_zeta(zeta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(domain(format!("traffic factor must lie in [0, 1], got {zeta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Positions of the mobile station, the base station and the relays, in m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    ms: Point2,
    bs: Point2,
    relays: Vec<Point2>,
}

impl Geometry {
    pub fn new(ms: Point2, bs: Point2, relays: Vec<Point2>) -> Result<Self> {
        if !(ms.distance(&bs) > 0.0) {
            return Err(Error::Geometry("MS and BS coincide".into()));
        }
        for (j, r) in relays.iter().enumerate() {
            if !(r.distance(&ms) > 0.0 && r.distance(&bs) > 0.0) {
                return Err(Error::Geometry(format!(
                    "relay {j} at ({}, {}) sits on the MS or the BS",
                    r.x, r.y
                )));
            }
            if !(r.x.is_finite() && r.y.is_finite()) {
                return Err(Error::Geometry(format!("relay {j} has a non-finite position")));
            }
        }
        Ok(Self { ms, bs, relays })
    }

    /// MS at the origin, BS on the positive x axis at `d_ms_bs`.
    pub fn on_axis(d_ms_bs: f64, relays: Vec<Point2>) -> Result<Self> {
        Self::new(Point2::ORIGIN, Point2::new(d_ms_bs, 0.0), relays)
    }

    pub fn ms(&self) -> Point2 {
        self.ms
    }

    pub fn bs(&self) -> Point2 {
        self.bs
    }

    pub fn relays(&self) -> &[Point2] {
        &self.relays
    }

    pub fn relay_count(&self) -> usize {
        self.relays.len()
    }

    /// MS–BS distance `D`.
    pub fn direct_distance(&self) -> f64 {
        self.ms.distance(&self.bs)
    }

    /// `(d1, d2)`: MS–relay and relay–BS distances of relay `j`.
    pub fn relay_distances(&self, j: usize) -> (f64, f64) {
        let r = &self.relays[j];
        (self.ms.distance(r), r.distance(&self.bs))
    }
}

/// Unit-mean exponential draws behind a [`LinkState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingDraws {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub v_direct: f64,
}

/// Channel power gains of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    /// MS–relay gains.
    pub h1: Vec<f64>,
    /// Relay–BS gains.
    pub h2: Vec<f64>,
    /// MS–BS gain.
    pub h_direct: f64,
    pub fading: Option<FadingDraws>,
}

impl LinkState {
    pub fn new(h1: Vec<f64>, h2: Vec<f64>, h_direct: f64) -> Result<Self> {
        let state = Self {
            h1,
            h2,
            h_direct,
            fading: None,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if self.h1.len() != self.h2.len() {
            return Err(domain(format!(
                "h1 has {} entries but h2 has {}",
                self.h1.len(),
                self.h2.len()
            )));
        }
        if let Some(f) = &self.fading {
            if f.v1.len() != self.h1.len() || f.v2.len() != self.h2.len() {
                return Err(domain("fading draws do not match the relay count"));
            }
        }
        let all_positive = self
            .h1
            .iter()
            .chain(&self.h2)
            .chain(std::iter::once(&self.h_direct))
            .all(|&h| h.is_finite() && h > 0.0);
        if !all_positive {
            return Err(domain("channel gains must be finite and > 0"));
        }
        Ok(())
    }

    pub fn relay_count(&self) -> usize {
        self.h1.len()
    }

    pub fn candidates(&self) -> Vec<CandidateRelay> {
        self.h1
            .iter()
            .zip(&self.h2)
            .enumerate()
            .map(|(index, (&h1, &h2))| CandidateRelay { index, h1, h2 })
            .collect()
    }

    /// The state restricted to the first `n` relays.
    pub fn prefix(&self, n: usize) -> LinkState {
        let n = n.min(self.relay_count());
        LinkState {
            h1: self.h1[..n].to_vec(),
            h2: self.h2[..n].to_vec(),
            h_direct: self.h_direct,
            fading: self.fading.as_ref().map(|f| FadingDraws {
                v1: f.v1[..n].to_vec(),
                v2: f.v2[..n].to_vec(),
                v_direct: f.v_direct,
            }),
        }
    }

    /// Every gain divided by `reference`.
    pub fn normalized(&self, reference: f64) -> LinkState {
        LinkState {
            h1: self.h1.iter().map(|h| h / reference).collect(),
            h2: self.h2.iter().map(|h| h / reference).collect(),
            h_direct: self.h_direct / reference,
            fading: self.fading.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingMode {
    On,
    Off,
}

/// Large-scale gain `K · (d / 1 km)^(-p)`.
pub fn pathloss_gain(d: f64, params: &SystemParams) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(domain(format!("distance must be finite and > 0, got {d}")));
    }
    Ok(params.k_gain * (d / REFERENCE_DISTANCE_M).powf(-params.pathloss_p))
}

/// One unit-mean exponential draw.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

/// Draws the gains of every link. The direct-link draw is taken first, then
/// `(v1, v2)` per relay, so a prefix of the relays sees the same fading as a
/// smaller geometry would.
pub fn realize_links<R: Rng + ?Sized>(
    geometry: &Geometry,
    params: &SystemParams,
    fading: FadingMode,
    rng: &mut R,
) -> Result<LinkState> {
    let direct = pathloss_gain(geometry.direct_distance(), params)?;
    let n = geometry.relay_count();
    let mut h1 = Vec::with_capacity(n);
    let mut h2 = Vec::with_capacity(n);
    for j in 0..n {
        let (d1, d2) = geometry.relay_distances(j);
        h1.push(pathloss_gain(d1, params)?);
        h2.push(pathloss_gain(d2, params)?);
    }
    let state = match fading {
        FadingMode::Off => LinkState {
            h1,
            h2,
            h_direct: direct,
            fading: None,
        },
        FadingMode::On => {
            let v_direct = sample_fading(rng);
            let mut v1 = Vec::with_capacity(n);
            let mut v2 = Vec::with_capacity(n);
            for _ in 0..n {
                v1.push(sample_fading(rng));
                v2.push(sample_fading(rng));
            }
            LinkState {
                h1: h1.iter().zip(&v1).map(|(h, v)| h * v).collect(),
                h2: h2.iter().zip(&v2).map(|(h, v)| h * v).collect(),
                h_direct: direct * v_direct,
                fading: Some(FadingDraws { v1, v2, v_direct }),
            }
        }
    };
    // An exponential draw of exactly 0 has probability zero but is representable.
    state.validate()?;
    Ok(state)
}

/// Geometry, traffic and rate of one cooperative cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub geometry: Geometry,
    pub traffic: TrafficProfile,
    /// End-to-end spectral efficiency `R`, bits/s/Hz.
    pub rate_r: f64,
    pub params: SystemParams,
    pub fading: FadingMode,
}
