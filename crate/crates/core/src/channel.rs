//! Tx→RIS₁ and RIS₂→Rx channel generation: geometry, indoor-hotspot path
//! loss, LOS probability and Rician/Rayleigh small-scale fading.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{Mode, SystemConfig};
use crate::error::{ensure_finite, Error, Result};
use crate::units::db_to_linear;

/// Placement of the RIS pair relative to the Tx and Rx.
///
/// `d_v` is the perpendicular offset of the RIS from the Tx–Rx line, `d_h`
/// the distance along that line from the Tx, and `d` the Tx–Rx separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub d_v: f64,
    pub d_h: f64,
    pub d: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            d_v: 5.0,
            d_h: 5.0,
            d: 50.0,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("d_v", self.d_v)?;
        ensure_finite("d_h", self.d_h)?;
        ensure_finite("d", self.d)?;
        if self.d_v < 0.0 {
            return Err(Error::invalid("d_v", "must be non-negative"));
        }
        if self.d_h < 0.0 || self.d_h > self.d {
            return Err(Error::invalid("d_h", format!("must lie in [0, d = {}]", self.d)));
        }
        Ok(())
    }
}

/// Euclidean Tx→RIS₁ and RIS₂→Rx distances `(d_1, d_2)`.
///
/// Zero distances are returned as-is; path loss rejects them downstream.
pub fn link_distances(geometry: &Geometry) -> Result<(f64, f64)> {
    geometry.validate()?;
    let Geometry { d_v, d_h, d } = *geometry;
    Ok((d_v.hypot(d_h), d_v.hypot(d - d_h)))
}

/// Indoor-hotspot path loss in dB at distance `d_n` meters and carrier
/// `f_c` GHz. The NLOS value is floored at the LOS value.
pub fn path_loss_db(d_n: f64, f_c: f64, los: bool) -> Result<f64> {
    if !(d_n.is_finite() && d_n > 0.0) {
        return Err(Error::invalid("d_n", format!("distance must be positive, got {d_n}")));
    }
    if !(f_c.is_finite() && f_c > 0.0) {
        return Err(Error::invalid("f_c", format!("carrier must be positive, got {f_c}")));
    }
    let los_db = 32.4 + 17.3 * d_n.log10() + 20.0 * f_c.log10();
    if los {
        Ok(los_db)
    } else {
        Ok(los_db.max(32.4 + 31.9 * d_n.log10() + 20.0 * f_c.log10()))
    }
}

/// Indoor-hotspot LOS probability. The branches are used exactly as
/// written, including the small jump at 49 m.
pub fn los_probability(d_n: f64) -> Result<f64> {
    if !d_n.is_finite() {
        return Err(Error::invalid("d_n", format!("must be finite, got {d_n}")));
    }
    if d_n < 0.0 {
        return Err(Error::invalid("d_n", "must be non-negative"));
    }
    Ok(if d_n <= 5.0 {
        1.0
    } else if d_n <= 49.0 {
        (-(d_n - 5.0) / 70.8).exp()
    } else {
        0.54 * (-(d_n - 49.0) / 211.7).exp()
    })
}

/// How the LOS state of one link is chosen for each realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LinkLos {
    /// Bernoulli draw with the distance-dependent LOS probability.
    #[default]
    Probabilistic,
    Los,
    Nlos,
}

impl LinkLos {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "probabilistic" => Some(LinkLos::Probabilistic),
            "los" | "forced-los" => Some(LinkLos::Los),
            "nlos" | "forced-nlos" => Some(LinkLos::Nlos),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LinkLos::Probabilistic => "probabilistic",
            LinkLos::Los => "los",
            LinkLos::Nlos => "nlos",
        }
    }

    fn draw<R: Rng + ?Sized>(self, d_n: f64, rng: &mut R) -> Result<bool> {
        Ok(match self {
            LinkLos::Los => true,
            LinkLos::Nlos => false,
            LinkLos::Probabilistic => rng.random::<f64>() < los_probability(d_n)?,
        })
    }
}

/// Rician factors (linear), carrier frequency (GHz) and per-link LOS mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    pub k1: f64,
    pub k2: f64,
    pub f_c: f64,
    pub los_h: LinkLos,
    pub los_g: LinkLos,
}

impl Default for FadingParams {
    fn default() -> Self {
        FadingParams {
            k1: 5.0,
            k2: 5.0,
            f_c: 28.0,
            los_h: LinkLos::Probabilistic,
            los_g: LinkLos::Probabilistic,
        }
    }
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("K1", self.k1), ("K2", self.k2)] {
            ensure_finite(name, k)?;
            if k < 0.0 {
                return Err(Error::invalid(name, "Rician factor must be non-negative"));
            }
        }
        if !(self.f_c.is_finite() && self.f_c > 0.0) {
            return Err(Error::invalid("f_c", "carrier frequency must be positive"));
        }
        Ok(())
    }

    /// Sets the LOS mode of both links.
    pub fn with_los_mode(mut self, mode: LinkLos) -> Self {
        self.los_h = mode;
        self.los_g = mode;
        self
    }
}

/// One draw of both RIS-side channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<Complex64>,
    pub g: Vec<Complex64>,
    pub los_h: bool,
    pub los_g: bool,
    /// Linear path-loss factors (> 1 attenuates).
    pub lambda_h: f64,
    pub lambda_g: f64,
}

/// Draws `n` i.i.d. coefficients
/// `√(1/λ)·(√(K/(K+1))·e^{jω} + √(1/(K+1))·CN(0,1))`
/// with an independent uniform LOS phase `ω` per element.
pub fn draw_channel_vector<R: Rng + ?Sized>(n: usize, k: f64, lambda_db: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(n);
    fill_channel_vector(&mut out, n, k, lambda_db, rng)?;
    Ok(out)
}

fn fill_channel_vector<R: Rng + ?Sized>(
    out: &mut Vec<Complex64>,
    n: usize,
    k: f64,
    lambda_db: f64,
    rng: &mut R,
) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "element count must be at least 1"));
    }
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::invalid(
            "K",
            format!("Rician factor must be finite and >= 0, got {k}"),
        ));
    }
    ensure_finite("lambda_db", lambda_db)?;

    let amplitude = db_to_linear(lambda_db).recip().sqrt();
    let los_weight = amplitude * (k / (k + 1.0)).sqrt();
    // Each quadrature of CN(0,1) carries variance 1/2.
    let nlos_weight = amplitude * (0.5 / (k + 1.0)).sqrt();

    out.clear();
    out.reserve(n);
    for _ in 0..n {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let mut c = Complex64::new(nlos_weight * re, nlos_weight * im);
        if k > 0.0 {
            let omega = rng.random::<f64>() * TAU;
            c += Complex64::from_polar(los_weight, omega);
        }
        out.push(c);
    }
    Ok(())
}

/// Draws the LOS states, path losses and fading vectors for one Monte Carlo
/// iteration. The passive benchmark uses `passive_elements` per vector.
pub fn draw_realization<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<ChannelRealization> {
    let mut realization = ChannelRealization {
        h: Vec::new(),
        g: Vec::new(),
        los_h: false,
        los_g: false,
        lambda_h: 0.0,
        lambda_g: 0.0,
    };
    draw_realization_into(config, rng, &mut realization)?;
    Ok(realization)
}

/// Like [`draw_realization`], reusing the vectors in `out`.
pub fn draw_realization_into<R: Rng + ?Sized>(
    config: &SystemConfig,
    rng: &mut R,
    out: &mut ChannelRealization,
) -> Result<()> {
    let (d1, d2) = link_distances(&config.geometry)?;
    let fading = &config.fading;
    let n = match config.mode {
        Mode::Active => config.n,
        Mode::Passive => config.passive_elements,
    };

    let los_h = fading.los_h.draw(d1, rng)?;
    let los_g = fading.los_g.draw(d2, rng)?;
    let pl_h = path_loss_db(d1, fading.f_c, los_h)?;
    let pl_g = path_loss_db(d2, fading.f_c, los_g)?;
    let k_h = if los_h { fading.k1 } else { 0.0 };
    let k_g = if los_g { fading.k2 } else { 0.0 };

    fill_channel_vector(&mut out.h, n, k_h, pl_h, rng)?;
    fill_channel_vector(&mut out.g, n, k_g, pl_g, rng)?;
    out.los_h = los_h;
    out.los_g = los_g;
    out.lambda_h = db_to_linear(pl_h);
    out.lambda_g = db_to_linear(pl_g);
    Ok(())
}
