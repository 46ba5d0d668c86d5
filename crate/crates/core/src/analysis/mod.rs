//! Gamma model of the maximized SNR and the MGF-based error probabilities
//! that follow from it.

pub mod quadrature;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use quadrature::{integrate, Tolerance};

/// Maximum-likelihood Gamma fit of an SNR sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    /// Shape.
    pub k: f64,
    /// Scale, in linear SNR units.
    pub nu: f64,
    pub n_samples: usize,
    /// Log-likelihood of the samples at the fitted parameters, in nats.
    pub log_likelihood: f64,
}

impl GammaFit {
    pub fn mean(&self) -> f64 {
        self.k * self.nu
    }
}

pub const MIN_FIT_SAMPLES: usize = 100;
const NEWTON_MAX_STEPS: usize = 200;

/// Fits Gamma(k, ν) by maximum likelihood.
///
/// The scale follows from the shape as `ν = mean/k`; the shape solves
/// `ln k − ψ(k) = ln(mean) − mean(ln x)` by Newton's method started from the
/// moment estimate `mean²/variance`.
pub fn fit_gamma_mle(samples: &[f64]) -> Result<GammaFit> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::invalid(
            "samples",
            format!("need at least {MIN_FIT_SAMPLES} samples, got {}", samples.len()),
        ));
    }
    if let Some(bad) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::invalid(
            "samples",
            format!("all samples must be finite and positive, found {bad}"),
        ));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mean_log = samples.iter().map(|x| x.ln()).sum::<f64>() / n;
    let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let target = mean.ln() - mean_log;
    if variance == 0.0 || !(target > 0.0) {
        return Err(Error::invalid("samples", "zero spread; Gamma shape is undefined"));
    }

    let mut k = mean * mean / variance;
    let mut converged = false;
    for _ in 0..NEWTON_MAX_STEPS {
        let f = k.ln() - digamma(k) - target;
        let df = k.recip() - trigamma(k);
        let mut next = k - f / df;
        if !(next > 0.0) || !next.is_finite() {
            next = 0.5 * k;
        }
        let step = (next - k) / k;
        k = next;
        if step.abs() < 1e-10 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::invalid("samples", "Gamma shape iteration did not converge"));
    }

    let nu = mean / k;
    let sum_x = mean * n;
    let sum_log = mean_log * n;
    let log_likelihood = (k - 1.0) * sum_log - sum_x / nu - n * k * nu.ln() - n * ln_gamma(k);
    Ok(GammaFit {
        k,
        nu,
        n_samples: samples.len(),
        log_likelihood,
    })
}

/// ψ'(x) for x > 0: upward recurrence to x ≥ 10, then the asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    acc + inv
        + 0.5 * inv2
        + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))))
}

/// Gamma density, evaluated in log space.
pub fn gamma_pdf(x: f64, k: f64, nu: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match k.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => nu.recip(),
            _ => 0.0,
        };
    }
    ((k - 1.0) * x.ln() - x / nu - k * nu.ln() - ln_gamma(k)).exp()
}

/// `(1 − νs)^{−k}`, defined for `s < 1/ν`.
pub fn gamma_mgf(s: f64, k: f64, nu: f64) -> Result<f64> {
    if !(s * nu < 1.0) {
        return Err(Error::invalid(
            "s",
            format!("MGF diverges for s >= 1/nu (s = {s}, nu = {nu})"),
        ));
    }
    Ok((-k * (-nu * s).ln_1p()).exp())
}

fn validate_order(m: u32) -> Result<()> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::invalid(
            "M",
            format!("constellation order must be a power of two >= 2, got {m}"),
        ));
    }
    Ok(())
}

fn validate_shape_scale(k: f64, nu: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid("k", format!("shape must be positive, got {k}")));
    }
    if !(nu > 0.0) || nu.is_nan() {
        return Err(Error::invalid("nu", format!("scale must be positive, got {nu}")));
    }
    Ok(())
}

fn quadrature_tolerance() -> Tolerance {
    Tolerance::default()
}

/// Average M-PSK symbol error probability over Gamma(k, ν) SNR:
/// `(1/π)∫₀^{(M−1)π/M} M_γ(−sin²(π/M)/sin²x) dx`.
pub fn sep_mpsk(k: f64, nu: f64, m: u32) -> Result<f64> {
    validate_order(m)?;
    validate_shape_scale(k, nu)?;
    let s2 = (PI / m as f64).sin().powi(2);
    let upper = (m - 1) as f64 * PI / m as f64;
    let integrand = |x: f64| {
        let sx = x.sin();
        (-k * (nu * s2 / (sx * sx)).ln_1p()).exp()
    };
    let r = integrate(integrand, 0.0, upper, quadrature_tolerance())?;
    Ok((r.value / PI).clamp(0.0, (m - 1) as f64 / m as f64))
}

/// Bit error probability `P_s/log₂M` (Gray mapping).
pub fn bep(k: f64, nu: f64, m: u32) -> Result<f64> {
    Ok(sep_mpsk(k, nu, m)? / m.trailing_zeros() as f64)
}

/// BPSK bit error probability `(1/π)∫₀^{π/2} (1 + ν/sin²x)^{−k} dx`,
/// written out directly rather than through [`sep_mpsk`].
pub fn bep_bpsk(k: f64, nu: f64) -> Result<f64> {
    validate_shape_scale(k, nu)?;
    let integrand = |x: f64| {
        let sx2 = x.sin().powi(2);
        (1.0 + nu / sx2).powf(-k)
    };
    Ok(integrate(integrand, 0.0, PI / 2.0, quadrature_tolerance())?.value / PI)
}

/// M-PSK symbol error probability on an AWGN channel at SNR `gamma`:
/// `(1/π)∫₀^{(M−1)π/M} exp(−γ·sin²(π/M)/sin²x) dx`.
pub fn sep_mpsk_awgn(gamma: f64, m: u32) -> Result<f64> {
    validate_order(m)?;
    if !(gamma >= 0.0) {
        return Err(Error::invalid(
            "gamma",
            format!("SNR must be non-negative, got {gamma}"),
        ));
    }
    let full = (m - 1) as f64 / m as f64;
    if gamma == 0.0 {
        return Ok(full);
    }
    let s2 = (PI / m as f64).sin().powi(2);
    let upper = (m - 1) as f64 * PI / m as f64;
    let integrand = |x: f64| {
        let sx = x.sin();
        (-gamma * s2 / (sx * sx)).exp()
    };
    let r = integrate(integrand, 0.0, upper, quadrature_tolerance())?;
    Ok((r.value / PI).clamp(0.0, full))
}
