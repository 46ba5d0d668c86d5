//! Link-level simulation of an amplifying reconfigurable intelligent surface:
//! two passive panels joined by a single variable-gain power amplifier,
//! compared against a passive single-panel RIS with twice the elements.
//!
//! * [`channel`]: geometry, indoor-hotspot path loss, LOS probability and
//!   Rician/Rayleigh fading draws.
//! * [`link`]: co-phasing, gain selection and end-to-end SNR.
//! * [`analysis`]: Gamma fit of the SNR and MGF-based error probabilities.
//! * [`power`]: consumption model and energy efficiency.
//! * [`montecarlo`]: seeded, thread-count-independent simulation.
//! * [`sweep`] and [`output`]: parameter sweeps, presets and result files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod config;
pub mod error;
pub mod link;
pub mod montecarlo;
pub mod output;
pub mod power;
pub mod sweep;
pub mod units;

pub use config::{parse_config, parse_config_str, BerSettings, Mode, SystemConfig};
pub use error::{Error, Result};
