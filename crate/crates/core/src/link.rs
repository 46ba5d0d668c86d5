//! End-to-end SNR of the amplifying RIS link and the passive benchmark.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Limits of the inter-RIS power amplifier, all linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifierSpec {
    pub g_max: f64,
    /// Maximum output power in watts. `f64::INFINITY` removes the
    /// output-power limit, leaving the amplifier at `g_max`.
    pub p_max: f64,
    /// Noise figure.
    pub noise_figure: f64,
}

impl Default for AmplifierSpec {
    fn default() -> Self {
        AmplifierSpec {
            g_max: 1000.0,
            p_max: 1.0,
            noise_figure: 10f64.powf(0.5),
        }
    }
}

impl AmplifierSpec {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("G_max", self.g_max)?;
        ensure_finite("F", self.noise_figure)?;
        if self.g_max < 1.0 {
            return Err(Error::invalid("G_max", "must be at least 1 (0 dB)"));
        }
        if !(self.p_max > 0.0) {
            return Err(Error::invalid("P_max", "must be positive"));
        }
        if self.noise_figure < 1.0 {
            return Err(Error::invalid("F", "noise figure must be at least 1 (0 dB)"));
        }
        Ok(())
    }
}

/// Noise powers in watts at the PA input and at the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma2_tot: f64,
    pub sigma2_rx: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            sigma2_tot: 1e-13,
            sigma2_rx: 1e-13,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma2_tot", self.sigma2_tot), ("sigma2_rx", self.sigma2_rx)] {
            ensure_finite(name, v)?;
            if v <= 0.0 {
                return Err(Error::invalid(name, "noise power must be positive"));
            }
        }
        Ok(())
    }
}

/// Per-realization quantities of the optimized active link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSample {
    /// Σ|h_i|
    pub a: f64,
    /// Σ|g_i|
    pub b: f64,
    pub p_in: f64,
    pub g_opt: f64,
    pub p_out: f64,
    pub gamma: f64,
    pub rate: f64,
    /// `true` when the gain limit, not the output-power limit, binds.
    pub clipped: bool,
}

/// Co-phasing shifts `exp(-j∠c_i)`. Zero entries get phase 0.
pub fn optimal_phases(channel: &[Complex64]) -> Vec<Complex64> {
    channel
        .iter()
        .map(|c| {
            if *c == Complex64::new(0.0, 0.0) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, -c.arg())
            }
        })
        .collect()
}

/// Σ|c_i|, the combined amplitude after co-phasing.
pub fn amplitude_sum(channel: &[Complex64]) -> f64 {
    channel.iter().map(|c| c.norm()).sum()
}

/// Power entering the amplifier with RIS₁ co-phased: `P_t·(Σ|h_i|)²`.
pub fn input_power(p_t: f64, h: &[Complex64]) -> f64 {
    let a = amplitude_sum(h);
    p_t * a * a
}

/// Gain that drives the output to `P_max`, capped at `G_max`.
/// Returns `(G_opt, clipped)`; zero input power yields `(G_max, true)`.
pub fn optimal_gain(p_in: f64, amp: &AmplifierSpec) -> Result<(f64, bool)> {
    if !(p_in >= 0.0) {
        return Err(Error::invalid("P_in", format!("must be non-negative, got {p_in}")));
    }
    if p_in == 0.0 {
        return Ok((amp.g_max, true));
    }
    let unconstrained = amp.p_max / p_in;
    if amp.g_max < unconstrained {
        Ok((amp.g_max, true))
    } else {
        Ok((unconstrained, false))
    }
}

/// SNR for arbitrary phase vectors and gain:
/// `P_t·(G/N)·|φᵀh|²·|θᵀg|² / ((G·F/N)·|θᵀg|²·σ²_tot + σ²_rx)`.
#[allow(clippy::too_many_arguments)]
pub fn active_snr(
    p_t: f64,
    gain: f64,
    noise_figure: f64,
    phi: &[Complex64],
    theta: &[Complex64],
    h: &[Complex64],
    g: &[Complex64],
    noise: &NoiseSpec,
) -> f64 {
    let combine =
        |w: &[Complex64], c: &[Complex64]| -> f64 { w.iter().zip(c).map(|(w, c)| w * c).sum::<Complex64>().norm() };
    active_snr_aligned(
        p_t,
        gain,
        h.len(),
        noise_figure,
        combine(phi, h),
        combine(theta, g),
        noise,
    )
}

/// The SNR with both panels co-phased, so the combined amplitudes are the
/// plain sums `a = Σ|h_i|` and `b = Σ|g_i|`.
pub fn active_snr_aligned(p_t: f64, gain: f64, n: usize, noise_figure: f64, a: f64, b: f64, noise: &NoiseSpec) -> f64 {
    let n = n as f64;
    let b2 = b * b;
    let signal = p_t * (gain / n) * a * a * b2;
    if signal == 0.0 {
        return 0.0;
    }
    signal / ((gain * noise_figure / n) * b2 * noise.sigma2_tot + noise.sigma2_rx)
}

/// Closed-form maximized SNR when the output-power limit binds
/// (`G·P_in = P_max`).
pub fn max_active_snr_closed_form(
    p_t: f64,
    n: usize,
    p_max: f64,
    noise_figure: f64,
    a: f64,
    b: f64,
    noise: &NoiseSpec,
) -> f64 {
    let n = n as f64;
    let (a2, b2) = (a * a, b * b);
    let num = p_t * (p_max / n) * a2 * b2;
    if num == 0.0 {
        return 0.0;
    }
    num / ((p_max * noise_figure / n) * b2 * noise.sigma2_tot + p_t * a2 * noise.sigma2_rx)
}

/// Optimal phases and gain for one realization.
pub fn max_active_snr(
    p_t: f64,
    amp: &AmplifierSpec,
    h: &[Complex64],
    g: &[Complex64],
    noise: &NoiseSpec,
) -> Result<LinkSample> {
    if h.is_empty() || h.len() != g.len() {
        return Err(Error::invalid(
            "channel",
            format!(
                "h and g must be non-empty and equal length ({} vs {})",
                h.len(),
                g.len()
            ),
        ));
    }
    if !(p_t >= 0.0) {
        return Err(Error::invalid("P_t", "must be non-negative"));
    }
    let a = amplitude_sum(h);
    let b = amplitude_sum(g);
    let p_in = p_t * a * a;
    let (g_opt, clipped) = optimal_gain(p_in, amp)?;
    let gamma = active_snr_aligned(p_t, g_opt, h.len(), amp.noise_figure, a, b, noise);
    Ok(LinkSample {
        a,
        b,
        p_in,
        g_opt,
        p_out: if clipped {
            (g_opt * p_in).min(amp.p_max)
        } else {
            amp.p_max
        },
        gamma,
        rate: achievable_rate(gamma),
        clipped,
    })
}

/// Passive single-panel benchmark with co-phased elements:
/// `γ = P_t·(Σ|h_i||g_i|)²/σ²_rx`. Returns `(γ, rate)`.
pub fn passive_snr(p_t: f64, h_p: &[Complex64], g_p: &[Complex64], sigma2_rx: f64) -> Result<(f64, f64)> {
    if h_p.len() != g_p.len() {
        return Err(Error::invalid(
            "channel",
            format!("passive channels differ in length ({} vs {})", h_p.len(), g_p.len()),
        ));
    }
    if !(sigma2_rx > 0.0) {
        return Err(Error::invalid("sigma2_rx", "must be positive"));
    }
    let cascade: f64 = h_p.iter().zip(g_p).map(|(h, g)| h.norm() * g.norm()).sum();
    let gamma = p_t * cascade * cascade / sigma2_rx;
    Ok((gamma, achievable_rate(gamma)))
}

/// `log₂(1 + γ)` in bits/s/Hz.
#[inline]
pub fn achievable_rate(gamma: f64) -> f64 {
    gamma.ln_1p() / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Complex64> {
        (0..n)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * scale)
            .collect()
    }

    #[test]
    fn phases_single_and_real() {
        let phi = optimal_phases(&[c(1.0, 1.0)]);
        assert_relative_eq!(phi[0].arg(), -std::f64::consts::FRAC_PI_4, epsilon = 1e-15);
        assert_relative_eq!((phi[0] * c(1.0, 1.0)).re, 2f64.sqrt(), epsilon = 1e-15);

        let h = [c(2.0, 0.0), c(-3.0, 0.0)];
        let phi = optimal_phases(&h);
        assert_relative_eq!(phi[0].re, 1.0);
        assert_relative_eq!(phi[1].re, -1.0, epsilon = 1e-15);
        let s: Complex64 = phi.iter().zip(&h).map(|(p, h)| p * h).sum();
        assert_relative_eq!(s.re, 5.0, epsilon = 1e-15);
        assert!(s.im.abs() < 1e-15);

        assert_eq!(optimal_phases(&[c(0.0, 0.0)])[0], c(1.0, 0.0));
    }

    #[test]
    fn alignment_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_vec(&mut rng, 64, 1.0);
        let phi = optimal_phases(&h);
        let s: Complex64 = phi.iter().zip(&h).map(|(p, h)| p * h).sum();
        let a = amplitude_sum(&h);
        assert!((s - c(a, 0.0)).norm() < 1e-12 * a);
    }

    #[test]
    fn input_power_examples() {
        assert_eq!(input_power(1.0, &[c(0.5, 0.0), c(0.5, 0.0)]), 1.0);
        assert_eq!(input_power(0.0, &[c(3.0, 4.0)]), 0.0);
        assert_relative_eq!(input_power(2.0, &[c(3.0, 4.0)]), 50.0);
    }

    #[test]
    fn gain_selection() {
        let amp = AmplifierSpec {
            g_max: 1000.0,
            p_max: 10e-3,
            noise_figure: 1.0,
        };
        let (g, clipped) = optimal_gain(1e-3, &amp).unwrap();
        assert_relative_eq!(g, 10.0);
        assert!(!clipped);
        assert_eq!(optimal_gain(1e-6, &amp).unwrap(), (1000.0, true));
        assert_eq!(optimal_gain(10e-3, &amp).unwrap(), (1.0, false));
        assert_eq!(optimal_gain(0.0, &amp).unwrap(), (1000.0, true));
        assert!(optimal_gain(-1.0, &amp).is_err());
    }

    #[test]
    fn unlimited_output_stays_at_max_gain() {
        let amp = AmplifierSpec {
            g_max: 1000.0,
            p_max: f64::INFINITY,
            noise_figure: 1.0,
        };
        assert_eq!(optimal_gain(1e3, &amp).unwrap(), (1000.0, true));
    }

    #[test]
    fn aligned_snr_examples() {
        let noise = NoiseSpec {
            sigma2_tot: 0.1,
            sigma2_rx: 0.1,
        };
        assert_relative_eq!(
            active_snr_aligned(1.0, 1.0, 1, 1.0, 1.0, 1.0, &noise),
            5.0,
            epsilon = 1e-14
        );
        assert_eq!(active_snr_aligned(1.0, 1.0, 1, 1.0, 0.0, 1.0, &noise), 0.0);

        let (p_t, n, f, a, b) = (0.7, 8, 2.5, 1.3, 0.4);
        let limit = p_t * a * a / (f * noise.sigma2_tot);
        let big = active_snr_aligned(p_t, 1e9, n, f, a, b, &noise);
        assert_relative_eq!(big, limit, max_relative = 1e-6);
    }

    #[test]
    fn max_snr_unit_case() {
        let amp = AmplifierSpec {
            g_max: 1000.0,
            p_max: 1.0,
            noise_figure: 1.0,
        };
        let noise = NoiseSpec {
            sigma2_tot: 0.1,
            sigma2_rx: 0.1,
        };
        let s = max_active_snr(1.0, &amp, &[c(1.0, 0.0)], &[c(1.0, 0.0)], &noise).unwrap();
        assert!(!s.clipped);
        assert_relative_eq!(s.g_opt, 1.0);
        assert_relative_eq!(s.gamma, 5.0, epsilon = 1e-14);
        assert_relative_eq!(s.rate, 6f64.log2(), epsilon = 1e-14);
    }

    #[test]
    fn closed_form_matches_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let amp = AmplifierSpec {
            g_max: 1e12,
            p_max: 0.01,
            noise_figure: 3.16,
        };
        let noise = NoiseSpec {
            sigma2_tot: 1e-13,
            sigma2_rx: 1e-13,
        };
        for _ in 0..100 {
            let h = random_vec(&mut rng, 32, 1e-4);
            let g = random_vec(&mut rng, 32, 1e-5);
            let s = max_active_snr(1e-3, &amp, &h, &g, &noise).unwrap();
            assert!(!s.clipped);
            let closed = max_active_snr_closed_form(1e-3, 32, amp.p_max, amp.noise_figure, s.a, s.b, &noise);
            assert_relative_eq!(s.gamma, closed, max_relative = 1e-12);
        }
    }

    #[test]
    fn clipped_regime_uses_max_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let amp = AmplifierSpec {
            g_max: 1000.0,
            p_max: 0.01,
            noise_figure: 3.16,
        };
        let noise = NoiseSpec::default();
        let h = random_vec(&mut rng, 16, 1e-4);
        let g = random_vec(&mut rng, 16, 1e-5);
        let s = max_active_snr(1e-6, &amp, &h, &g, &noise).unwrap();
        assert!(s.clipped);
        assert_eq!(s.g_opt, amp.g_max);
        assert_eq!(
            s.gamma,
            active_snr_aligned(1e-6, amp.g_max, 16, amp.noise_figure, s.a, s.b, &noise)
        );
    }

    #[test]
    fn passive_examples() {
        let ones = [c(1.0, 0.0), c(0.0, 1.0)];
        assert_relative_eq!(passive_snr(1.0, &ones, &ones, 1.0).unwrap().0, 4.0);
        assert_eq!(passive_snr(0.0, &ones, &ones, 1.0).unwrap(), (0.0, 0.0));
        assert_relative_eq!(passive_snr(1.0, &[c(2.0, 0.0)], &[c(0.0, 3.0)], 1.0).unwrap().0, 36.0);
        assert!(passive_snr(1.0, &ones, &ones[..1], 1.0).is_err());
    }

    #[test]
    fn rates() {
        assert_eq!(achievable_rate(0.0), 0.0);
        assert_relative_eq!(achievable_rate(1.0), 1.0);
        assert_relative_eq!(achievable_rate(3.0), 2.0);
    }

    #[test]
    fn aligned_phases_beat_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let noise = NoiseSpec::default();
        let h = random_vec(&mut rng, 16, 1e-4);
        let g = random_vec(&mut rng, 16, 1e-5);
        let phi = optimal_phases(&h);
        let theta = optimal_phases(&g);
        let best = active_snr(1.0, 100.0, 3.0, &phi, &theta, &h, &g, &noise);
        assert_relative_eq!(
            best,
            active_snr_aligned(1.0, 100.0, 16, 3.0, amplitude_sum(&h), amplitude_sum(&g), &noise),
            max_relative = 1e-12
        );
        for _ in 0..1000 {
            let jitter = |rng: &mut ChaCha8Rng, v: &[Complex64]| -> Vec<Complex64> {
                v.iter()
                    .map(|p| p * Complex64::from_polar(1.0, (rng.random::<f64>() - 0.5) * 2.0))
                    .collect()
            };
            let p2 = jitter(&mut rng, &phi);
            let t2 = jitter(&mut rng, &theta);
            assert!(best >= active_snr(1.0, 100.0, 3.0, &p2, &t2, &h, &g, &noise));
        }
    }

    proptest! {
        #[test]
        fn monotone_in_amplifier_limits(
            seed in any::<u64>(),
            p_t_dbm in -20.0f64..40.0,
            p_max_dbm in 0.0f64..40.0,
            g_max_db in 0.0f64..50.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_vec(&mut rng, 8, 1e-4);
            let g = random_vec(&mut rng, 8, 1e-5);
            let noise = NoiseSpec::default();
            let p_t = 10f64.powf((p_t_dbm - 30.0) / 10.0);
            let amp = AmplifierSpec {
                g_max: 10f64.powf(g_max_db / 10.0),
                p_max: 10f64.powf((p_max_dbm - 30.0) / 10.0),
                noise_figure: 3.16,
            };
            let base = max_active_snr(p_t, &amp, &h, &g, &noise).unwrap();
            prop_assert!(base.g_opt <= amp.g_max);
            prop_assert!(base.p_out <= amp.p_max * (1.0 + 1e-12));
            prop_assert!((base.p_out - base.g_opt * base.p_in).abs() <= 1e-12 * base.p_out.max(1e-300));

            let more_p = AmplifierSpec { p_max: amp.p_max * 2.0, ..amp };
            let more_g = AmplifierSpec { g_max: amp.g_max * 2.0, ..amp };
            let tol = 1.0 - 1e-12;
            prop_assert!(max_active_snr(p_t, &more_p, &h, &g, &noise).unwrap().gamma >= base.gamma * tol);
            prop_assert!(max_active_snr(p_t, &more_g, &h, &g, &noise).unwrap().gamma >= base.gamma * tol);

            let doubled = max_active_snr(2.0 * p_t, &amp, &h, &g, &noise).unwrap();
            prop_assert!(doubled.gamma >= base.gamma * tol);
            let bound = p_t * base.a * base.a / (amp.noise_figure * noise.sigma2_tot);
            prop_assert!(base.gamma <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn scale_covariance(seed in any::<u64>(), scale_db in -30.0f64..30.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_vec(&mut rng, 8, 1e-4);
            let g = random_vec(&mut rng, 8, 1e-5);
            let s = 10f64.powf(scale_db / 10.0);
            let amp = AmplifierSpec { g_max: 1000.0, p_max: 0.01, noise_figure: 3.16 };
            let noise = NoiseSpec::default();
            let base = max_active_snr(0.1, &amp, &h, &g, &noise).unwrap().gamma;
            let scaled = max_active_snr(
                0.1 * s,
                &AmplifierSpec { p_max: amp.p_max * s, ..amp },
                &h,
                &g,
                &NoiseSpec { sigma2_tot: noise.sigma2_tot * s, sigma2_rx: noise.sigma2_rx * s },
            )
            .unwrap()
            .gamma;
            prop_assert!((scaled - base).abs() <= 1e-10 * base);
        }
    }
}
