//! TOML experiment configuration.
//!
//! Every section is optional; absent fields fall back to the reference
//! parameter set and per-experiment defaults. Unknown keys are rejected.

use std::path::PathBuf;

use judrs_core::model::{FadingMode, ParamsDb};
use judrs_core::outage::ThresholdModel;
use judrs_core::selection::SelectorRegistry;
use judrs_core::{Error as CoreError, SystemParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config_err, Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Select,
    Region,
    OptimalLocation,
    RelaySweep,
    TrafficSweep,
    Dmt,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Select => "select",
            ExperimentKind::Region => "region",
            ExperimentKind::OptimalLocation => "optimal-location",
            ExperimentKind::RelaySweep => "relay-sweep",
            ExperimentKind::TrafficSweep => "traffic-sweep",
            ExperimentKind::Dmt => "dmt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Table,
    Document,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepScenario {
    pub distance_m: f64,
    /// Without a direct link `h_D` is pinned to 1e-6 of the distance's
    /// pathloss gain.
    pub direct_link: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// MS–BS distance. Defaults to 450 m for the traffic sweep and 500 m
    /// elsewhere.
    pub distance_m: Option<f64>,
    /// Fixed relay positions `[x, y]` in m for `select`. Empty means one
    /// relay at the midpoint.
    pub relays: Vec<[f64; 2]>,
    pub fading: FadingMode,
    /// Random relays are uniform in a disc of this many `D` in diameter,
    /// centred on the MS–BS midpoint.
    pub placement_diameter_factor: f64,
    /// Relays per trial in the traffic sweep.
    pub active_relays: usize,
    pub scenarios: Vec<SweepScenario>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            distance_m: None,
            relays: Vec::new(),
            fading: FadingMode::Off,
            placement_diameter_factor: 1.2,
            active_relays: 8,
            scenarios: vec![
                SweepScenario {
                    distance_m: 450.0,
                    direct_link: true,
                },
                SweepScenario {
                    distance_m: 1200.0,
                    direct_link: false,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    /// Extents in m; default `[-0.6 D, 1.6 D]` on both axes.
    pub x_min_m: Option<f64>,
    pub x_max_m: Option<f64>,
    pub y_min_m: Option<f64>,
    pub y_max_m: Option<f64>,
    pub contour_levels: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: 201,
            ny: 201,
            x_min_m: None,
            x_max_m: None,
            y_min_m: None,
            y_max_m: None,
            contour_levels: vec![0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmtSection {
    /// Relays, all at the MS–BS midpoint.
    pub relay_count: usize,
    /// `R = r log2(rho)`. Mutually exclusive with `fixed_rate`.
    pub multiplexing_r: Option<f64>,
    /// Constant `R`, bits/s/Hz. Used (at 1.0) when neither is given.
    pub fixed_rate: Option<f64>,
    pub rho_db: Vec<f64>,
    pub threshold_model: ThresholdModel,
}

impl Default for DmtSection {
    fn default() -> Self {
        Self {
            relay_count: 1,
            multiplexing_r: None,
            fixed_rate: None,
            rho_db: vec![10.0, 15.0, 20.0, 25.0],
            threshold_model: ThresholdModel::Capacity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    /// Overrides of the reference parameters, in dB units.
    #[serde(default)]
    pub params: ParamsDb,
    #[serde(default)]
    pub geometry: GeometryConfig,
    /// Uplink traffic shares. Defaults to `[0.5]` for `select`, `relay-sweep`
    /// and `dmt`, `[0.2, 0.5, 0.8]` otherwise.
    #[serde(default)]
    pub zeta: Option<Vec<f64>>,
    #[serde(default = "default_rate")]
    pub rate_r: f64,
    #[serde(default = "default_relay_counts")]
    pub relay_counts: Vec<usize>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<String>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub dmt: DmtSection,
}

fn default_rate() -> f64 {
    3.0
}

fn default_relay_counts() -> Vec<usize> {
    (1..=8).collect()
}

fn default_schemes() -> Vec<String> {
    SelectorRegistry::with_defaults()
        .names()
        .into_iter()
        .map(String::from)
        .collect()
}

fn default_trials() -> u64 {
    10_000
}

impl ExperimentConfig {
    /// Defaults for `kind` with no document.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut c = parse_config("").expect("empty document parses");
        c.experiment = Some(kind);
        c
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.expect("experiment kind is resolved before use")
    }

    pub fn distance_m(&self) -> f64 {
        self.geometry.distance_m.unwrap_or(match self.experiment {
            Some(ExperimentKind::TrafficSweep) => 450.0,
            _ => 500.0,
        })
    }

    pub fn zetas(&self) -> Vec<f64> {
        self.zeta.clone().unwrap_or_else(|| match self.experiment {
            Some(ExperimentKind::Select | ExperimentKind::RelaySweep | ExperimentKind::Dmt) => {
                vec![0.5]
            }
            _ => vec![0.2, 0.5, 0.8],
        })
    }

    pub fn is_stochastic(&self) -> bool {
        match self.kind() {
            ExperimentKind::RelaySweep | ExperimentKind::TrafficSweep | ExperimentKind::Dmt => {
                true
            }
            ExperimentKind::Select => self.geometry.fading == FadingMode::On,
            ExperimentKind::Region | ExperimentKind::OptimalLocation => false,
        }
    }

    /// Checks every invariant and returns the linear parameters.
    pub fn validate(&self) -> Result<SystemParams> {
        let kind = self
            .experiment
            .ok_or_else(|| config_err("experiment", "missing experiment kind"))?;
        let params = self.params.to_linear().map_err(params_error)?;

        let zetas = self.zetas();
        if zetas.is_empty() {
            return Err(config_err("zeta", "must list at least one value"));
        }
        for (i, z) in zetas.iter().enumerate() {
            if !(0.0..=1.0).contains(z) {
                return Err(config_err(&format!("zeta[{i}]"), format!("{z} is outside [0, 1]")));
            }
            let needs_uplink = matches!(kind, ExperimentKind::Region | ExperimentKind::OptimalLocation);
            if needs_uplink && *z == 0.0 {
                return Err(config_err(
                    &format!("zeta[{i}]"),
                    "energy saving is undefined without uplink traffic",
                ));
            }
        }
        if !(self.rate_r.is_finite() && self.rate_r > 0.0) {
            return Err(config_err("rate_r", format!("must be > 0, got {}", self.rate_r)));
        }
        let d = self.distance_m();
        if !(d.is_finite() && d > 0.0) {
            return Err(config_err("geometry.distance_m", format!("must be > 0, got {d}")));
        }
        if self.trials == 0 {
            return Err(config_err("trials", "must be >= 1"));
        }
        if self.is_stochastic() && self.seed.is_none() {
            return Err(config_err("seed", format!("required for {}", kind.name())));
        }
        let registry = SelectorRegistry::with_defaults();
        if self.schemes.is_empty() {
            return Err(config_err("schemes", "must list at least one scheme"));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if registry.get(s).is_none() {
                return Err(config_err(
                    &format!("schemes[{i}]"),
                    format!("unknown scheme '{s}' (known: {})", registry.names().join(", ")),
                ));
            }
        }
        match kind {
            ExperimentKind::RelaySweep => {
                if self.relay_counts.is_empty() {
                    return Err(config_err("relay_counts", "must list at least one count"));
                }
                if self.geometry.scenarios.is_empty() {
                    return Err(config_err("geometry.scenarios", "must list at least one scenario"));
                }
                for (i, s) in self.geometry.scenarios.iter().enumerate() {
                    if !(s.distance_m.is_finite() && s.distance_m > 0.0) {
                        return Err(config_err(
                            &format!("geometry.scenarios[{i}].distance_m"),
                            format!("must be > 0, got {}", s.distance_m),
                        ));
                    }
                }
                self.check_placement()?;
            }
            ExperimentKind::TrafficSweep => self.check_placement()?,
            ExperimentKind::Region => {
                let spec = self.grid_spec();
                if spec.nx < 2 || spec.ny < 2 {
                    return Err(config_err(
                        "grid",
                        format!("degenerate {}x{} grid, need at least 2x2", spec.nx, spec.ny),
                    ));
                }
                spec.validate()
                    .map_err(|e| config_err("grid", e))?;
            }
            ExperimentKind::Dmt => {
                let s = &self.dmt;
                if s.multiplexing_r.is_some() && s.fixed_rate.is_some() {
                    return Err(config_err(
                        "dmt",
                        "multiplexing_r and fixed_rate are mutually exclusive",
                    ));
                }
                if s.rho_db.is_empty() {
                    return Err(config_err("dmt.rho_db", "must list at least one SNR"));
                }
                if s.rho_db.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(config_err("dmt.rho_db", "must be strictly increasing"));
                }
                if let Some(r) = s.multiplexing_r.or(s.fixed_rate) {
                    if !(r.is_finite() && r > 0.0) {
                        return Err(config_err("dmt", format!("rate parameter must be > 0, got {r}")));
                    }
                }
            }
            ExperimentKind::Select | ExperimentKind::OptimalLocation => {}
        }
        Ok(params)
    }

    fn check_placement(&self) -> Result<()> {
        let f = self.geometry.placement_diameter_factor;
        if !(f.is_finite() && f > 0.0) {
            return Err(config_err(
                "geometry.placement_diameter_factor",
                format!("must be > 0, got {f}"),
            ));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> judrs_core::geometry::GridSpec {
        let d = self.distance_m();
        let g = &self.grid;
        judrs_core::geometry::GridSpec {
            x_min: g.x_min_m.unwrap_or(-0.6 * d),
            x_max: g.x_max_m.unwrap_or(1.6 * d),
            y_min: g.y_min_m.unwrap_or(-0.6 * d),
            y_max: g.y_max_m.unwrap_or(1.6 * d),
            nx: g.nx,
            ny: g.ny,
        }
    }

    /// Hash of the effective configuration, output path excluded.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.zeta = Some(self.zetas());
        c.geometry.distance_m = Some(self.distance_m());
        serde_json::to_string(&c).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

fn params_error(e: CoreError) -> SimError {
    match e {
        CoreError::InvalidParam { field, reason } => {
            let name = match field.as_str() {
                "p_max" => "p_max_dbm",
                "p_c" => {
                    return config_err(
                        "params.p_c_dbm",
                        format!("must be below params.p_max_dbm ({reason})"),
                    )
                }
                "k_gain" => "k_db",
                "bandwidth_b" => "bandwidth_hz",
                "carrier_fc" => "carrier_hz",
                "noise_n0" => "noise_dbm_per_hz",
                "pathloss_p" => "pathloss_exponent",
                "coding_gain_gc" => "coding_gain_db",
                "code_rate_etac" => "code_rate",
                "target_ber_pe" => "target_ber",
                other => other,
            };
            config_err(&format!("params.{name}"), reason)
        }
        other => SimError::Config(other.to_string()),
    }
}

/// Parses a TOML document. Structural errors carry the offending key and
/// line; invariants are checked by [`ExperimentConfig::validate`].
pub fn parse_config(document: &str) -> Result<ExperimentConfig> {
    toml::from_str(document).map_err(|e| SimError::Config(e.to_string().trim_end().to_string()))
}
