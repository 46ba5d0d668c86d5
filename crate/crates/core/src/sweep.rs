//! Parameter sweeps and the figure/table reproduction presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{bep, fit_gamma_mle};
use crate::config::{Mode, SystemConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{simulate_ber, simulate_link_stats, simulate_snr_samples};
use crate::units::dbm_to_watts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "P_t_dBm")]
    PtDbm,
    #[serde(rename = "P_max_dBm")]
    PmaxDbm,
    N,
    #[serde(rename = "d_h_m")]
    DhM,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::PtDbm => "P_t_dBm",
            SweepVariable::PmaxDbm => "P_max_dBm",
            SweepVariable::N => "N",
            SweepVariable::DhM => "d_h_m",
        }
    }

    fn apply(self, config: &mut SystemConfig, value: f64) -> Result<()> {
        match self {
            SweepVariable::PtDbm => config.p_t = dbm_to_watts(value),
            SweepVariable::PmaxDbm => config.amp.p_max = dbm_to_watts(value),
            SweepVariable::N => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::invalid("N", format!("must be a positive integer, got {value}")));
                }
                config.set_elements(value as usize);
            }
            SweepVariable::DhM => config.geometry.d_h = value,
        }
        config.validate()
    }

    fn cell(self, value: f64) -> Cell {
        match self {
            SweepVariable::N => Cell::Int(value as i64),
            _ => Cell::Float(value),
        }
    }
}

impl FromStr for SweepVariable {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "P_t_dBm" => Ok(SweepVariable::PtDbm),
            "P_max_dBm" => Ok(SweepVariable::PmaxDbm),
            "N" => Ok(SweepVariable::N),
            "d_h_m" => Ok(SweepVariable::DhM),
            _ => Err(format!("unknown sweep variable `{s}` (P_t_dBm, P_max_dBm, N, d_h_m)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rate,
    Ber,
    Ee,
    Ptot,
    GammaFit,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Rate, Metric::Ber, Metric::Ee, Metric::Ptot, Metric::GammaFit];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rate => "rate",
            Metric::Ber => "ber",
            Metric::Ee => "ee",
            Metric::Ptot => "ptot",
            Metric::GammaFit => "gamma_fit",
        }
    }

    fn columns(self) -> &'static [&'static str] {
        match self {
            Metric::Rate => &["rate", "g_opt_mean"],
            Metric::Ber => &["ber_sim", "ber_theory", "ci95"],
            Metric::Ee => &["ee"],
            Metric::Ptot => &["ptot"],
            Metric::GammaFit => &["k", "nu"],
        }
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric `{s}` (rate, ber, ee, ptot, gamma_fit)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub metrics: Vec<Metric>,
    pub base: SystemConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("values", "sweep needs at least one value"));
        }
        if self.metrics.is_empty() {
            return Err(Error::invalid("metrics", "sweep needs at least one metric"));
        }
        self.base.validate()
    }
}

/// One table cell. NaN floats mark values that do not apply to a row; JSON
/// stores them as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, from = "RawCell")]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCell {
    Int(i64),
    Float(f64),
    Text(String),
    Null(()),
}

impl From<RawCell> for Cell {
    fn from(raw: RawCell) -> Self {
        match raw {
            RawCell::Int(v) => Cell::Int(v),
            RawCell::Float(v) => Cell::Float(v),
            RawCell::Text(s) => Cell::Text(s),
            RawCell::Null(()) => Cell::Float(f64::NAN),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) if v.is_nan() => f.write_str("NaN"),
            Cell::Float(v) if v.is_infinite() => f.write_str(if *v > 0.0 { "inf" } else { "-inf" }),
            // 17 significant digits round-trip every f64.
            Cell::Float(v) => write!(f, "{v:.16e}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Monte Carlo iterations spent per metric, summed over rows.
    pub iterations: std::collections::BTreeMap<String, u64>,
}

impl ResultTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Float value at `row` of column `name`; integers are widened.
    pub fn get(&self, row: usize, name: &str) -> Option<f64> {
        match self.rows.get(row)?.get(self.column(name)?)? {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(_) => None,
        }
    }

    fn add_iterations(&mut self, metric: &str, n: u64) {
        *self.iterations.entry(metric.to_string()).or_default() += n;
    }
}

/// Seed of table row `row` under the run seed: a SplitMix64 mix of both.
pub fn row_seed(seed: u64, row: u64) -> u64 {
    let mut z = seed ^ row.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn evaluate_metrics(
    config: &SystemConfig,
    metrics: &[Metric],
    seed: u64,
    table: &mut ResultTable,
) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    let needs_stats = metrics
        .iter()
        .any(|m| matches!(m, Metric::Rate | Metric::Ee | Metric::Ptot));
    let stats = if needs_stats {
        table.add_iterations("link", config.n_iterations as u64);
        Some(simulate_link_stats(config, seed)?)
    } else {
        None
    };
    let needs_fit = metrics.iter().any(|m| matches!(m, Metric::Ber | Metric::GammaFit));
    let fit = if needs_fit {
        table.add_iterations("gamma_fit", config.n_iterations as u64);
        let samples = simulate_snr_samples(config, config.n_iterations, seed)?;
        // Degenerate sample sets (e.g. zero transmit power) have no fit.
        fit_gamma_mle(&samples).ok()
    } else {
        None
    };

    for metric in metrics {
        match metric {
            Metric::Rate => {
                let s = stats.as_ref().expect("stats computed");
                let g = if config.mode == Mode::Active {
                    s.mean_g_opt
                } else {
                    f64::NAN
                };
                cells.extend([Cell::Float(s.mean_rate), Cell::Float(g)]);
            }
            Metric::Ee => cells.push(Cell::Float(stats.as_ref().expect("stats computed").mean_ee)),
            Metric::Ptot => cells.push(Cell::Float(stats.as_ref().expect("stats computed").mean_total_power)),
            Metric::Ber => {
                let est = simulate_ber(config, seed)?;
                table.add_iterations("ber", est.draws as u64);
                let theory = match &fit {
                    Some(f) => bep(f.k, f.nu, config.modulation_order)?,
                    None => f64::NAN,
                };
                cells.extend([
                    Cell::Float(est.ber),
                    Cell::Float(theory),
                    Cell::Float(est.ci95_halfwidth),
                ]);
            }
            Metric::GammaFit => {
                let (k, nu) = fit.map_or((f64::NAN, f64::NAN), |f| (f.k, f.nu));
                cells.extend([Cell::Float(k), Cell::Float(nu)]);
            }
        }
    }
    Ok(cells)
}

/// A sweep with fixed label columns, used to assemble multi-series presets.
#[derive(Debug, Clone)]
pub struct Series {
    pub labels: Vec<(&'static str, Cell)>,
    pub spec: SweepSpec,
}

fn log_row(variable: SweepVariable, value: f64, labels: &[(&'static str, Cell)]) {
    let mut line = format!("{} = {value}", variable.name());
    for (name, cell) in labels {
        line.push_str(&format!(", {name} = {cell}"));
    }
    eprintln!("  {line}");
}

/// Runs each series in turn; the table row index `i` seeds row `i` through
/// [`row_seed`]. All series must share label names, variable and metrics.
pub fn run_series(series: &[Series], seed: u64, verbose: bool) -> Result<ResultTable> {
    let first = series
        .first()
        .ok_or_else(|| Error::invalid("series", "nothing to run"))?;
    let mut table = ResultTable::default();
    table.columns.extend(first.labels.iter().map(|(n, _)| n.to_string()));
    table.columns.push(first.spec.variable.name().to_string());
    for m in &first.spec.metrics {
        table.columns.extend(m.columns().iter().map(|c| c.to_string()));
    }

    for s in series {
        s.spec.validate()?;
        for &value in &s.spec.values {
            let row = table.rows.len();
            let wrap = |e: Error| Error::SweepRow {
                row,
                variable: s.spec.variable.name().to_string(),
                value,
                source: Box::new(e),
            };
            if verbose {
                log_row(s.spec.variable, value, &s.labels);
            }
            let mut config = s.spec.base.clone();
            s.spec.variable.apply(&mut config, value).map_err(wrap)?;
            let mut cells: Vec<Cell> = s.labels.iter().map(|(_, c)| c.clone()).collect();
            cells.push(s.spec.variable.cell(value));
            let metrics =
                evaluate_metrics(&config, &s.spec.metrics, row_seed(seed, row as u64), &mut table).map_err(wrap)?;
            cells.extend(metrics);
            table.rows.push(cells);
        }
    }
    Ok(table)
}

/// One row per swept value with the requested metric columns.
pub fn run_sweep(spec: &SweepSpec) -> Result<ResultTable> {
    run_series(
        &[Series {
            labels: Vec::new(),
            spec: spec.clone(),
        }],
        spec.base.seed,
        false,
    )
}

/// Every metric for a single configuration.
pub fn evaluate_single(config: &SystemConfig, metrics: &[Metric]) -> Result<ResultTable> {
    let mut table = ResultTable::default();
    config.validate()?;
    for m in metrics {
        table.columns.extend(m.columns().iter().map(|c| c.to_string()));
    }
    let cells = evaluate_metrics(config, metrics, row_seed(config.seed, 0), &mut table)?;
    table.rows.push(cells);
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig3a,
    Fig3b,
    Fig4a,
    Fig4b,
    Fig5a,
    Fig5b,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Table2,
}

impl Preset {
    pub const ALL: [Preset; 11] = [
        Preset::Fig3a,
        Preset::Fig3b,
        Preset::Fig4a,
        Preset::Fig4b,
        Preset::Fig5a,
        Preset::Fig5b,
        Preset::Fig6,
        Preset::Fig7,
        Preset::Fig8,
        Preset::Fig9,
        Preset::Table2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::Fig4a => "fig4a",
            Preset::Fig4b => "fig4b",
            Preset::Fig5a => "fig5a",
            Preset::Fig5b => "fig5b",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
            Preset::Fig9 => "fig9",
            Preset::Table2 => "table2",
        }
    }

    /// Base scenario used when no configuration file is given. The Gamma
    /// table and BER figures use the fixed LOS/NLOS placement; the rate and
    /// energy figures use probabilistic LOS.
    pub fn default_base(self) -> SystemConfig {
        match self {
            Preset::Fig3a | Preset::Fig3b | Preset::Table2 => SystemConfig::fixed_los_scenario(),
            _ => SystemConfig::default(),
        }
    }

    /// Expands the preset over `base`.
    pub fn series(self, base: &SystemConfig) -> Vec<Series> {
        let with = |f: &dyn Fn(&mut SystemConfig)| {
            let mut c = base.clone();
            f(&mut c);
            c
        };
        let spec = |variable, values: Vec<f64>, metrics: Vec<Metric>, base: SystemConfig| SweepSpec {
            variable,
            values,
            metrics,
            base,
        };
        let text = |s: &str| Cell::Text(s.to_string());
        let p_t_grid = range(-10.0, 30.0, 5.0);

        match self {
            Preset::Fig3a | Preset::Fig3b => {
                let p_max = if self == Preset::Fig3a { 10.0 } else { 20.0 };
                [32usize, 64, 256]
                    .into_iter()
                    .map(|n| Series {
                        labels: vec![("N", Cell::Int(n as i64))],
                        spec: spec(
                            SweepVariable::PtDbm,
                            p_t_grid.clone(),
                            vec![Metric::Ber],
                            with(&|c| {
                                c.set_elements(n);
                                c.amp.p_max = dbm_to_watts(p_max);
                                c.mode = Mode::Active;
                            }),
                        ),
                    })
                    .collect()
            }
            Preset::Fig4a | Preset::Fig4b => {
                let (d, step) = if self == Preset::Fig4a {
                    (50.0, 4.0)
                } else {
                    (100.0, 7.0)
                };
                let d_h = range(1.0, d - 1.0, step);
                let mut out = Vec::new();
                for n in [128usize, 256, 512] {
                    let designs: [(&str, usize, Mode, bool); 3] = [
                        ("active", n, Mode::Active, true),
                        ("passive", 2 * n, Mode::Passive, true),
                        ("active_fixed_gain", n, Mode::Active, false),
                    ];
                    for (label, elements, mode, limit) in designs {
                        out.push(Series {
                            labels: vec![("design", text(label)), ("elements", Cell::Int(elements as i64))],
                            spec: spec(
                                SweepVariable::DhM,
                                d_h.clone(),
                                vec![Metric::Rate],
                                with(&|c| {
                                    c.geometry.d = d;
                                    c.geometry.d_h = 1.0;
                                    c.set_elements(n);
                                    c.mode = mode;
                                    c.output_limit = limit;
                                }),
                            ),
                        });
                    }
                }
                out
            }
            Preset::Fig5a | Preset::Fig5b => {
                let p_t = if self == Preset::Fig5a { 20.0 } else { 10.0 };
                [10.0, 20.0, 30.0]
                    .into_iter()
                    .map(|p_max| Series {
                        labels: vec![("P_t_dBm", Cell::Float(p_t)), ("P_max_dBm", Cell::Float(p_max))],
                        spec: spec(
                            SweepVariable::N,
                            vec![16.0, 32.0, 64.0, 128.0, 256.0, 512.0],
                            vec![Metric::Rate],
                            with(&|c| {
                                c.p_t = dbm_to_watts(p_t);
                                c.amp.p_max = dbm_to_watts(p_max);
                                c.mode = Mode::Active;
                            }),
                        ),
                    })
                    .collect()
            }
            Preset::Fig6 => {
                let mut out = Vec::new();
                for p_max in [10.0, 20.0] {
                    for p_t in [10.0, 20.0, 30.0] {
                        out.push(Series {
                            labels: vec![("P_max_dBm", Cell::Float(p_max)), ("P_t_dBm", Cell::Float(p_t))],
                            spec: spec(
                                SweepVariable::N,
                                vec![10.0, 20.0, 40.0, 60.0, 80.0, 100.0, 150.0, 200.0, 250.0, 300.0, 400.0],
                                vec![Metric::Rate],
                                with(&|c| {
                                    c.p_t = dbm_to_watts(p_t);
                                    c.amp.p_max = dbm_to_watts(p_max);
                                    c.mode = Mode::Active;
                                }),
                            ),
                        });
                    }
                }
                out
            }
            Preset::Fig7 | Preset::Fig8 => {
                let (variable, values) = if self == Preset::Fig7 {
                    (SweepVariable::N, vec![32.0, 64.0, 128.0, 256.0, 512.0, 1024.0])
                } else {
                    (SweepVariable::PtDbm, range(0.0, 40.0, 5.0))
                };
                let metrics = vec![Metric::Ee, Metric::Rate, Metric::Ptot];
                let mut out: Vec<Series> = [10.0, 20.0, 50.0]
                    .into_iter()
                    .map(|p_max| Series {
                        labels: vec![("design", text("active")), ("P_max_dBm", Cell::Float(p_max))],
                        spec: spec(
                            variable,
                            values.clone(),
                            metrics.clone(),
                            with(&|c| {
                                c.amp.p_max = dbm_to_watts(p_max);
                                c.mode = Mode::Active;
                            }),
                        ),
                    })
                    .collect();
                out.push(Series {
                    labels: vec![("design", text("passive")), ("P_max_dBm", Cell::Float(f64::NAN))],
                    spec: spec(variable, values, metrics, with(&|c| c.mode = Mode::Passive)),
                });
                out
            }
            Preset::Fig9 => [10.0, 20.0, 30.0]
                .into_iter()
                .map(|p_t| Series {
                    labels: vec![("P_t_dBm", Cell::Float(p_t))],
                    spec: spec(
                        SweepVariable::PmaxDbm,
                        range(0.0, 50.0, 5.0),
                        vec![Metric::Ee, Metric::Rate, Metric::Ptot],
                        with(&|c| {
                            c.p_t = dbm_to_watts(p_t);
                            c.mode = Mode::Active;
                        }),
                    ),
                })
                .collect(),
            Preset::Table2 => {
                let mut out = Vec::new();
                for p_max in [10.0, 20.0] {
                    for n in [64usize, 256] {
                        out.push(Series {
                            labels: vec![("P_max_dBm", Cell::Float(p_max)), ("N", Cell::Int(n as i64))],
                            spec: spec(
                                SweepVariable::PtDbm,
                                p_t_grid.clone(),
                                vec![Metric::GammaFit],
                                with(&|c| {
                                    c.set_elements(n);
                                    c.amp.p_max = dbm_to_watts(p_max);
                                    c.mode = Mode::Active;
                                }),
                            ),
                        });
                    }
                }
                out
            }
        }
    }

    pub fn run(self, base: &SystemConfig, verbose: bool) -> Result<ResultTable> {
        run_series(&self.series(base), base.seed, verbose)
    }
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}`"))
    }
}

/// `lo, lo+step, …` up to and including `hi` (within rounding).
pub fn range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| lo + step * i as f64).collect()
}
