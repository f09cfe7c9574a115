//! Energy-efficient relay selection for cooperative cellular links with
//! asymmetric uplink/downlink traffic.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: physical constants, geometry, traffic profile and the
//!   pathloss/Rayleigh channel-gain generator.
//! - [`link_budget`]: MQAM error-rate and transmit-power math.
//! - [`energy`]: energy per information bit for relayed and direct operation.
//! - [`selection`]: the Minimum Energy Criterion and the baseline selectors,
//!   all exposed through a name-keyed [`selection::SelectorRegistry`].
//! - [`protocol`]: the five-step joint uplink/downlink selection handshake.
//! - [`geometry`]: cooperation energy-gain surfaces, regions and the optimal
//!   relay location.
//! - [`outage`]: Monte-Carlo outage estimation and diversity-multiplexing
//!   slope fitting.
//!
//! All internal arithmetic is in linear SI units (W, Hz, m, J). Decibel values
//! only appear at the configuration boundary ([`model::ParamsDb`]).

pub mod energy;
pub mod error;
pub mod geometry;
pub mod link_budget;
pub mod model;
pub mod outage;
pub mod protocol;
pub mod seed;
pub mod selection;

pub use error::{Error, Result};
pub use model::{Geometry, LinkState, Point2, Scenario, SystemParams, TrafficProfile};
