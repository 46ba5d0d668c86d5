//! Scenario configuration and the sectioned key-value file format.
//!
//! ```text
//! # comments start with '#' or ';'
//! P_t_dBm = 20          # keys may appear before any section
//! [amplifier]
//! P_max_dBm = 10
//! ```
//!
//! Absent keys keep their defaults. dB and dBm values are converted to linear
//! SI units here and nowhere else.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{FadingParams, Geometry, LinkLos};
use crate::error::{Error, Result};
use crate::link::{AmplifierSpec, NoiseSpec};
use crate::power::PowerParams;
use crate::units::{db_to_linear, dbm_to_watts, dbw_to_watts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Active,
    Passive,
}

/// Controls of the symbol-level BER simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerSettings {
    pub symbols_per_draw: usize,
    /// Stop once this many bit errors are counted (after `min_draws`).
    pub min_bit_errors: u64,
    pub min_draws: usize,
}

impl Default for BerSettings {
    fn default() -> Self {
        BerSettings {
            symbols_per_draw: 100,
            min_bit_errors: 200,
            min_draws: 1000,
        }
    }
}

/// Full scenario description, in linear SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub geometry: Geometry,
    pub fading: FadingParams,
    /// Elements per panel of the amplifying design.
    pub n: usize,
    /// Elements of the single passive benchmark panel, normally `2n`.
    pub passive_elements: usize,
    /// Transmit power, watts.
    pub p_t: f64,
    pub amp: AmplifierSpec,
    /// When false the amplifier always runs at `G_max`.
    pub output_limit: bool,
    pub noise: NoiseSpec,
    pub bandwidth: f64,
    pub modulation_order: u32,
    pub power: PowerParams,
    pub n_iterations: usize,
    pub seed: u64,
    pub mode: Mode,
    pub ber: BerSettings,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            geometry: Geometry::default(),
            fading: FadingParams::default(),
            n: 128,
            passive_elements: 256,
            p_t: 1.0,
            amp: AmplifierSpec::default(),
            output_limit: true,
            noise: NoiseSpec::default(),
            bandwidth: 180e3,
            modulation_order: 2,
            power: PowerParams::default(),
            n_iterations: 1_000_000,
            seed: 1,
            mode: Mode::Active,
            ber: BerSettings::default(),
        }
    }
}

impl SystemConfig {
    /// The calibrated placement behind the Gamma-fit table and BER figures:
    /// Tx→RIS₁ always LOS, RIS₂→Rx always NLOS.
    pub fn fixed_los_scenario() -> Self {
        let mut c = SystemConfig::default();
        c.fading.los_h = LinkLos::Los;
        c.fading.los_g = LinkLos::Nlos;
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.fading.validate()?;
        self.amp.validate()?;
        self.noise.validate()?;
        self.power.validate()?;
        if self.n == 0 {
            return Err(Error::invalid("N", "element count must be at least 1"));
        }
        if self.passive_elements == 0 {
            return Err(Error::invalid("passive_elements", "element count must be at least 1"));
        }
        if !(self.p_t >= 0.0 && self.p_t.is_finite()) {
            return Err(Error::invalid("P_t", "transmit power must be finite and non-negative"));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::invalid("BW", "bandwidth must be positive"));
        }
        if self.modulation_order < 2 || !self.modulation_order.is_power_of_two() {
            return Err(Error::invalid("M", "constellation order must be a power of two >= 2"));
        }
        if self.n_iterations == 0 {
            return Err(Error::invalid("n_iterations", "must be at least 1"));
        }
        if self.ber.symbols_per_draw == 0 {
            return Err(Error::invalid("symbols_per_draw", "must be at least 1"));
        }
        let (d1, d2) = crate::channel::link_distances(&self.geometry)?;
        if d1 <= 0.0 || d2 <= 0.0 {
            return Err(Error::invalid("geometry", "RIS must not coincide with the Tx or Rx"));
        }
        Ok(())
    }

    /// Sets the active element count and the matching `2N` passive panel.
    pub fn set_elements(&mut self, n: usize) {
        self.n = n;
        self.passive_elements = 2 * n;
    }

    /// The amplifier as seen by the link: unlimited output when
    /// `output_limit` is off.
    pub fn effective_amp(&self) -> AmplifierSpec {
        if self.output_limit {
            self.amp
        } else {
            AmplifierSpec {
                p_max: f64::INFINITY,
                ..self.amp
            }
        }
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.modulation_order.trailing_zeros()
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("geometry", &["d_v", "d_h", "d"]),
    ("fading", &["f_c_GHz", "K1", "K2", "los_mode", "los_h", "los_g"]),
    ("system", &["mode", "N", "passive_elements", "P_t_dBm", "BW_Hz", "M"]),
    ("amplifier", &["P_max_dBm", "G_max_dB", "F_dB", "output_limit"]),
    ("noise", &["sigma2_tot_dBm", "sigma2_rx_dBm"]),
    (
        "power",
        &[
            "alpha",
            "beta",
            "P_n_mW",
            "phase_bits",
            "P_Tx_dBW",
            "P_Rx_dBm",
            "epsilon",
            "panels_counted",
        ],
    ),
    (
        "simulation",
        &[
            "n_iterations",
            "seed",
            "symbols_per_draw",
            "min_bit_errors",
            "min_draws",
        ],
    ),
];

fn section_of(key: &str) -> Option<&'static str> {
    SECTIONS.iter().find(|(_, keys)| keys.contains(&key)).map(|(s, _)| *s)
}

/// Config key that owns a validation parameter name, for error locations.
fn key_for_param(name: &str) -> &'static [&'static str] {
    match name {
        "d_v" => &["d_v"],
        "d_h" | "d" | "geometry" => &["d_h", "d", "d_v"],
        "K1" => &["K1"],
        "K2" => &["K2"],
        "f_c" => &["f_c_GHz"],
        "G_max" => &["G_max_dB"],
        "P_max" => &["P_max_dBm"],
        "F" => &["F_dB"],
        "sigma2_tot" => &["sigma2_tot_dBm"],
        "sigma2_rx" => &["sigma2_rx_dBm"],
        "N" => &["N"],
        "passive_elements" => &["passive_elements"],
        "P_t" => &["P_t_dBm"],
        "BW" => &["BW_Hz"],
        "M" => &["M"],
        "n_iterations" => &["n_iterations"],
        "symbols_per_draw" => &["symbols_per_draw"],
        "alpha/beta" => &["alpha", "beta"],
        "epsilon" => &["epsilon"],
        "panels_counted" => &["panels_counted"],
        _ => &[],
    }
}

fn parse_f64(value: &str) -> std::result::Result<f64, String> {
    let v: f64 = value.parse().map_err(|_| format!("expected a number, got `{value}`"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("value must be finite, got `{value}`"))
    }
}

fn parse_uint<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("expected a non-negative integer, got `{value}`"))
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{value}`")),
    }
}

fn parse_los(value: &str) -> std::result::Result<LinkLos, String> {
    LinkLos::parse(value).ok_or_else(|| format!("expected probabilistic, los or nlos, got `{value}`"))
}

fn apply_key(config: &mut SystemConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    match key {
        "d_v" => config.geometry.d_v = parse_f64(value)?,
        "d_h" => config.geometry.d_h = parse_f64(value)?,
        "d" => config.geometry.d = parse_f64(value)?,
        "f_c_GHz" => config.fading.f_c = parse_f64(value)?,
        "K1" => config.fading.k1 = parse_f64(value)?,
        "K2" => config.fading.k2 = parse_f64(value)?,
        "los_mode" => config.fading = config.fading.with_los_mode(parse_los(value)?),
        "los_h" => config.fading.los_h = parse_los(value)?,
        "los_g" => config.fading.los_g = parse_los(value)?,
        "mode" => {
            config.mode = match value.to_ascii_lowercase().as_str() {
                "active" => Mode::Active,
                "passive" => Mode::Passive,
                _ => return Err(format!("expected active or passive, got `{value}`")),
            }
        }
        "N" => {
            let n: usize = parse_uint(value)?;
            if n == 0 {
                return Err("element count must be at least 1".into());
            }
            config.n = n;
        }
        "passive_elements" => {
            let n: usize = parse_uint(value)?;
            if n == 0 {
                return Err("element count must be at least 1".into());
            }
            config.passive_elements = n;
        }
        "P_t_dBm" => config.p_t = dbm_to_watts(parse_f64(value)?),
        "BW_Hz" => config.bandwidth = parse_f64(value)?,
        "M" => {
            let m: u32 = parse_uint(value)?;
            if m < 2 || !m.is_power_of_two() {
                return Err(format!("constellation order must be a power of two >= 2, got {m}"));
            }
            config.modulation_order = m;
        }
        "P_max_dBm" => config.amp.p_max = dbm_to_watts(parse_f64(value)?),
        "G_max_dB" => config.amp.g_max = db_to_linear(parse_f64(value)?),
        "F_dB" => config.amp.noise_figure = db_to_linear(parse_f64(value)?),
        "output_limit" => config.output_limit = parse_bool(value)?,
        "sigma2_tot_dBm" => config.noise.sigma2_tot = dbm_to_watts(parse_f64(value)?),
        "sigma2_rx_dBm" => config.noise.sigma2_rx = dbm_to_watts(parse_f64(value)?),
        "alpha" => config.power.alpha = parse_f64(value)?,
        "beta" => config.power.beta = parse_f64(value)?,
        "P_n_mW" => config.power.p_element = parse_f64(value)? * 1e-3,
        "phase_bits" => config.power.phase_bits = parse_uint(value)?,
        "P_Tx_dBW" => config.power.p_tx_static = dbw_to_watts(parse_f64(value)?),
        "P_Rx_dBm" => config.power.p_rx_static = dbm_to_watts(parse_f64(value)?),
        "epsilon" => config.power.epsilon = parse_f64(value)?,
        "panels_counted" => config.power.panels_counted = parse_uint(value)?,
        "n_iterations" => {
            let n: usize = parse_uint(value)?;
            if n == 0 {
                return Err("must be at least 1".into());
            }
            config.n_iterations = n;
        }
        "seed" => config.seed = parse_uint(value)?,
        "symbols_per_draw" => config.ber.symbols_per_draw = parse_uint(value)?,
        "min_bit_errors" => config.ber.min_bit_errors = parse_uint(value)?,
        "min_draws" => config.ber.min_draws = parse_uint(value)?,
        _ => unreachable!("key `{key}` passed section lookup"),
    }
    Ok(())
}

/// Parses configuration text on top of the default scenario.
pub fn parse_config_str(text: &str) -> Result<SystemConfig> {
    parse_config_str_with_base(text, SystemConfig::default())
}

/// Parses configuration text on top of `base`.
pub fn parse_config_str_with_base(text: &str, base: SystemConfig) -> Result<SystemConfig> {
    let mut config = base;
    let mut section: Option<&'static str> = None;
    let mut seen: HashMap<String, usize> = HashMap::new();
    let err = |line: usize, key: &str, reason: String| Error::Config {
        line,
        key: key.to_string(),
        reason,
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find(['#', ';']) {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, line, "malformed section header".into()))?
                .trim();
            section = Some(
                SECTIONS
                    .iter()
                    .find(|(s, _)| *s == name)
                    .map(|(s, _)| *s)
                    .ok_or_else(|| err(line_no, name, "unknown section".into()))?,
            );
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, line, "expected `key = value`".into()))?;
        let key = key.trim();
        let value = value.trim().trim_matches('"');
        if key.is_empty() {
            return Err(err(line_no, key, "empty key".into()));
        }
        let home = section_of(key).ok_or_else(|| err(line_no, key, "unknown key".into()))?;
        if let Some(current) = section {
            if current != home {
                return Err(err(
                    line_no,
                    key,
                    format!("belongs in section [{home}], found in [{current}]"),
                ));
            }
        }
        if let Some(prev) = seen.insert(key.to_string(), line_no) {
            return Err(err(line_no, key, format!("duplicate key (first set on line {prev})")));
        }
        apply_key(&mut config, key, value).map_err(|reason| err(line_no, key, reason))?;
    }

    if seen.contains_key("N") && !seen.contains_key("passive_elements") {
        config.passive_elements = 2 * config.n;
    }

    config.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => {
            let (key, line) = key_for_param(name)
                .iter()
                .find_map(|k| seen.get(*k).map(|l| (k.to_string(), *l)))
                .unwrap_or_else(|| (name.to_string(), 0));
            Error::Config { line, key, reason }
        }
        other => other,
    })?;
    Ok(config)
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}
