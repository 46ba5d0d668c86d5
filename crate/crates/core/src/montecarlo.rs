//! Seeded Monte Carlo engine.
//!
//! Iteration `i` of a run with seed `s` draws everything from the ChaCha8
//! stream `(s, i)`, so results depend only on `(config, seed)` and never on
//! how iterations are scheduled across worker threads. Floating-point
//! reductions are done in iteration order by a fixed pairwise scheme.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::sep_mpsk_awgn;
use crate::channel::{draw_realization_into, ChannelRealization};
use crate::config::{Mode, SystemConfig};
use crate::error::Result;
use crate::link::{max_active_snr, passive_snr};
use crate::power::{energy_efficiency, total_power_active, total_power_passive};

/// Draws per BER batch; the stopping rule is checked between batches.
const BER_BATCH: usize = 1024;

/// Random stream for iteration `index` of the run seeded with `seed`.
pub fn iteration_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Sum in a fixed pairwise order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}

/// One Monte Carlo iteration of the configured link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationSample {
    pub gamma: f64,
    pub rate: f64,
    pub g_opt: f64,
    pub p_out: f64,
    pub clipped: bool,
}

fn empty_realization() -> ChannelRealization {
    ChannelRealization {
        h: Vec::new(),
        g: Vec::new(),
        los_h: false,
        los_g: false,
        lambda_h: 0.0,
        lambda_g: 0.0,
    }
}

fn draw_sample<R: Rng + ?Sized>(
    config: &SystemConfig,
    rng: &mut R,
    buf: &mut ChannelRealization,
) -> Result<IterationSample> {
    draw_realization_into(config, rng, buf)?;
    match config.mode {
        Mode::Active => {
            let s = max_active_snr(config.p_t, &config.effective_amp(), &buf.h, &buf.g, &config.noise)?;
            Ok(IterationSample {
                gamma: s.gamma,
                rate: s.rate,
                g_opt: s.g_opt,
                p_out: s.p_out,
                clipped: s.clipped,
            })
        }
        Mode::Passive => {
            let (gamma, rate) = passive_snr(config.p_t, &buf.h, &buf.g, config.noise.sigma2_rx)?;
            Ok(IterationSample {
                gamma,
                rate,
                g_opt: 1.0,
                p_out: 0.0,
                clipped: false,
            })
        }
    }
}

/// Per-iteration samples `0..count` in iteration order.
pub fn simulate_iterations(config: &SystemConfig, count: usize, seed: u64) -> Result<Vec<IterationSample>> {
    config.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map_init(empty_realization, |buf, i| {
            draw_sample(config, &mut iteration_rng(seed, i), buf)
        })
        .collect()
}

/// `count` independent SNR draws (optimized active or co-phased passive).
pub fn simulate_snr_samples(config: &SystemConfig, count: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(simulate_iterations(config, count, seed)?
        .into_iter()
        .map(|s| s.gamma)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerEstimate {
    pub ber: f64,
    pub bit_errors: u64,
    pub bits_simulated: u64,
    /// Normal-approximation 95% half-width from the spread of per-draw
    /// error fractions, so error clustering under fading is included.
    pub ci95_halfwidth: f64,
    pub draws: usize,
}

impl BerEstimate {
    fn new(bit_errors: u64, squared_errors: u128, bits_per_draw: u64, draws: usize) -> Self {
        let bits_simulated = bits_per_draw * draws as u64;
        let ber = if bits_simulated == 0 {
            0.0
        } else {
            bit_errors as f64 / bits_simulated as f64
        };
        let ci95_halfwidth = if draws < 2 {
            0.0
        } else {
            let n = draws as f64;
            let per_draw = bits_per_draw as f64;
            let mean_sq = squared_errors as f64 / (per_draw * per_draw * n);
            let var = (mean_sq - ber * ber).max(0.0) * n / (n - 1.0);
            1.96 * (var / n).sqrt()
        };
        BerEstimate {
            ber,
            bit_errors,
            bits_simulated,
            ci95_halfwidth,
            draws,
        }
    }

    /// Standard error of the mean per-draw error fraction.
    pub fn std_error(&self) -> f64 {
        self.ci95_halfwidth / 1.96
    }

    /// Fewer than 100 errors: treat the estimate as unreliable.
    pub fn low_confidence(&self) -> bool {
        self.bit_errors < 100
    }
}

#[inline]
fn gray(u: u32) -> u32 {
    u ^ (u >> 1)
}

/// Sends `symbols` Gray-mapped M-PSK symbols through AWGN at per-symbol SNR
/// `gamma` with nearest-angle detection; returns the bit error count.
pub fn count_bit_errors<R: Rng + ?Sized>(gamma: f64, m: u32, symbols: usize, rng: &mut R) -> u64 {
    let amplitude = gamma.sqrt();
    let noise_sd = std::f64::consts::FRAC_1_SQRT_2;
    let mut errors = 0u64;
    if m == 2 {
        for _ in 0..symbols {
            let positive = rng.random::<bool>();
            let n: f64 = rng.sample(StandardNormal);
            let r = if positive { amplitude } else { -amplitude } + noise_sd * n;
            if (r >= 0.0) != positive {
                errors += 1;
            }
        }
        return errors;
    }
    let step = TAU / m as f64;
    for _ in 0..symbols {
        let position = rng.random_range(0..m);
        let tx = Complex64::from_polar(amplitude, position as f64 * step);
        let n = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * noise_sd;
        let angle = (tx + n).arg().rem_euclid(TAU);
        let detected = ((angle / step).round() as u32) % m;
        errors += (gray(detected) ^ gray(position)).count_ones() as u64;
    }
    errors
}

/// Symbol-level BER with SNRs supplied by `draw_gamma`, which receives the
/// iteration stream before any symbols are drawn from it.
///
/// Draws run in batches until at least `min_bit_errors` errors and
/// `min_draws` draws have accumulated, or `n_iterations` draws are spent.
pub fn simulate_ber_with<F>(config: &SystemConfig, seed: u64, draw_gamma: F) -> Result<BerEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    config.validate()?;
    let m = config.modulation_order;
    let bits_per_symbol = config.bits_per_symbol() as u64;
    let symbols = config.ber.symbols_per_draw;
    let cap = config.n_iterations;

    let mut errors = 0u64;
    let mut squared = 0u128;
    let mut draws = 0usize;
    while draws < cap {
        let end = (draws + BER_BATCH).min(cap);
        let (batch, batch_sq) = (draws as u64..end as u64)
            .into_par_iter()
            .map(|i| -> Result<(u64, u128)> {
                let mut rng = iteration_rng(seed, i);
                let gamma = draw_gamma(&mut rng)?;
                let e = count_bit_errors(gamma, m, symbols, &mut rng);
                Ok((e, e as u128 * e as u128))
            })
            .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
        errors += batch;
        squared += batch_sq;
        draws = end;
        if errors >= config.ber.min_bit_errors && draws >= config.ber.min_draws {
            break;
        }
    }
    Ok(BerEstimate::new(
        errors,
        squared,
        symbols as u64 * bits_per_symbol,
        draws,
    ))
}

/// Symbol-level BER of the configured link.
pub fn simulate_ber(config: &SystemConfig, seed: u64) -> Result<BerEstimate> {
    simulate_ber_with(config, seed, |rng| {
        let mut buf = empty_realization();
        Ok(draw_sample(config, rng, &mut buf)?.gamma)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiAnalyticBer {
    pub ber: f64,
    /// Standard error of the mean over SNR draws.
    pub std_error: f64,
    pub samples: usize,
}

/// Mean of the conditional AWGN M-PSK bit error probability over the given
/// SNR samples.
pub fn semi_analytic_ber_from_samples(samples: &[f64], m: u32) -> Result<SemiAnalyticBer> {
    let bits = m.trailing_zeros() as f64;
    let per_sample: Vec<f64> = samples
        .par_iter()
        .map(|&g| sep_mpsk_awgn(g, m).map(|p| p / bits))
        .collect::<Result<_>>()?;
    let ber = mean(&per_sample);
    let n = per_sample.len() as f64;
    let var = if per_sample.len() > 1 {
        let sq: Vec<f64> = per_sample.iter().map(|p| (p - ber).powi(2)).collect();
        pairwise_sum(&sq) / (n - 1.0)
    } else {
        0.0
    };
    Ok(SemiAnalyticBer {
        ber,
        std_error: (var / n).sqrt(),
        samples: per_sample.len(),
    })
}

/// Conditional-SEP average over `n_iterations` simulated SNR draws.
pub fn semi_analytic_ber(config: &SystemConfig, seed: u64) -> Result<SemiAnalyticBer> {
    let samples = simulate_snr_samples(config, config.n_iterations, seed)?;
    semi_analytic_ber_from_samples(&samples, config.modulation_order)
}

/// Averages over `n_iterations` draws of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkStats {
    pub mean_gamma: f64,
    pub mean_rate: f64,
    /// Mean of the per-iteration bit-per-joule efficiency.
    pub mean_ee: f64,
    pub mean_total_power: f64,
    pub mean_g_opt: f64,
    pub mean_p_out: f64,
    /// Fraction of draws where `G_max` bound instead of `P_max`.
    pub clipped_fraction: f64,
    pub iterations: usize,
}

fn total_power(config: &SystemConfig, sample: &IterationSample) -> Result<f64> {
    Ok(match config.mode {
        Mode::Active => total_power_active(config.p_t, sample.p_out, config.amp.p_max, config.n, &config.power)?.total,
        Mode::Passive => total_power_passive(config.p_t, config.passive_elements, &config.power).total,
    })
}

/// Rate, power and efficiency statistics. Energy figures need a finite
/// output limit and are reported as NaN when `output_limit` is off.
pub fn simulate_link_stats(config: &SystemConfig, seed: u64) -> Result<LinkStats> {
    let samples = simulate_iterations(config, config.n_iterations, seed)?;
    let pick = |f: fn(&IterationSample) -> f64| -> Vec<f64> { samples.iter().map(f).collect() };
    let (mean_ee, mean_total_power) = if config.mode == Mode::Active && !config.output_limit {
        (f64::NAN, f64::NAN)
    } else {
        let totals: Vec<f64> = samples.iter().map(|s| total_power(config, s)).collect::<Result<_>>()?;
        let ees: Vec<f64> = samples
            .iter()
            .zip(&totals)
            .map(|(s, &t)| energy_efficiency(s.rate, config.bandwidth, t))
            .collect::<Result<_>>()?;
        (mean(&ees), mean(&totals))
    };
    Ok(LinkStats {
        mean_gamma: mean(&pick(|s| s.gamma)),
        mean_rate: mean(&pick(|s| s.rate)),
        mean_ee,
        mean_total_power,
        mean_g_opt: mean(&pick(|s| s.g_opt)),
        mean_p_out: mean(&pick(|s| s.p_out)),
        clipped_fraction: samples.iter().filter(|s| s.clipped).count() as f64 / samples.len() as f64,
        iterations: samples.len(),
    })
}

/// Mean achievable rate `E[log₂(1+γ)]`.
pub fn mean_rate(config: &SystemConfig, seed: u64) -> Result<f64> {
    let samples = simulate_iterations(config, config.n_iterations, seed)?;
    let rates: Vec<f64> = samples.iter().map(|s| s.rate).collect();
    Ok(mean(&rates))
}

/// Mean per-iteration energy efficiency in bits per joule.
pub fn mean_ee(config: &SystemConfig, seed: u64) -> Result<f64> {
    if config.mode == Mode::Active && !config.output_limit {
        return Err(crate::error::Error::invalid(
            "output_limit",
            "the power model needs a finite P_max",
        ));
    }
    Ok(simulate_link_stats(config, seed)?.mean_ee)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LinkLos;
    use approx::assert_relative_eq;
    use statrs::function::erf::erfc;

    fn small_config() -> SystemConfig {
        let mut c = SystemConfig::fixed_los_scenario();
        c.set_elements(32);
        c.n_iterations = 2000;
        c
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for u in 0..15u32 {
            assert_eq!((gray(u) ^ gray(u + 1)).count_ones(), 1);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_exact_values() {
        let v: Vec<f64> = (0..1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }

    #[test]
    fn snr_samples_are_deterministic() {
        let c = small_config();
        let a = simulate_snr_samples(&c, 500, 17).unwrap();
        let b = simulate_snr_samples(&c, 500, 17).unwrap();
        assert_eq!(a, b);
        let other = simulate_snr_samples(&c, 500, 18).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn snr_samples_independent_of_thread_count() {
        let c = small_config();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_snr_samples(&c, 3000, 5).unwrap())
        };
        assert_eq!(run(1), run(8));
    }

    #[test]
    fn prefix_stability() {
        let c = small_config();
        let long = simulate_snr_samples(&c, 400, 3).unwrap();
        let short = simulate_snr_samples(&c, 100, 3).unwrap();
        assert_eq!(&long[..100], &short[..]);
    }

    #[test]
    fn zero_snr_ber_is_one_half() {
        let mut c = small_config();
        c.p_t = 0.0;
        c.n_iterations = 2000;
        let est = simulate_ber(&c, 1).unwrap();
        assert!((est.ber - 0.5).abs() < 3.0 * est.std_error().max(1e-3), "{est:?}");
        c.modulation_order = 4;
        let est = simulate_ber(&c, 1).unwrap();
        assert!((est.ber - 0.5).abs() < 3.0 * est.std_error().max(1e-3), "{est:?}");
    }

    #[test]
    fn constant_snr_qpsk_is_two_independent_bpsk() {
        let mut c = small_config();
        c.ber.min_bit_errors = u64::MAX;
        c.n_iterations = 20_000;
        c.modulation_order = 4;
        let est = simulate_ber_with(&c, 9, |_| Ok(4.0)).unwrap();
        // Gray QPSK: each bit sees BPSK at half the symbol energy.
        let expected = 0.5 * erfc(2f64.sqrt());
        assert!(
            (est.ber - expected).abs() < 3.0 * est.std_error(),
            "{est:?} vs {expected}"
        );
    }

    #[test]
    fn constant_snr_8psk_approaches_sep_over_bits() {
        let mut c = small_config();
        c.ber.min_bit_errors = u64::MAX;
        c.n_iterations = 20_000;
        c.modulation_order = 8;
        let est = simulate_ber_with(&c, 9, |_| Ok(40.0)).unwrap();
        let expected = sep_mpsk_awgn(40.0, 8).unwrap() / 3.0;
        assert!(
            (est.ber - expected).abs() < 0.03 * expected + 3.0 * est.std_error(),
            "{est:?} vs {expected}"
        );
    }

    #[test]
    fn constant_snr_bpsk_matches_q_function() {
        let mut c = small_config();
        c.ber.min_bit_errors = u64::MAX;
        c.ber.symbols_per_draw = 100_000;
        c.n_iterations = 10_000;
        let est = simulate_ber_with(&c, 4, |_| Ok(10.0)).unwrap();
        assert_eq!(est.bits_simulated, 1_000_000_000);
        let q = 0.5 * erfc(10f64.sqrt());
        assert_relative_eq!(q, 3.8721e-6, max_relative = 1e-3);
        assert!(
            (est.ber - q).abs() < 3.0 * (q * (1.0 - q) / est.bits_simulated as f64).sqrt(),
            "{est:?}"
        );
    }

    #[test]
    fn ber_stopping_rule() {
        let mut c = small_config();
        c.p_t = 0.0;
        c.n_iterations = 100_000;
        c.ber.min_draws = 1000;
        let est = simulate_ber(&c, 2).unwrap();
        // The first batch already has far more than 200 errors.
        assert_eq!(est.draws, BER_BATCH);
        c.n_iterations = 10;
        assert_eq!(simulate_ber(&c, 2).unwrap().draws, 10);
    }

    #[test]
    fn semi_analytic_constant_snr() {
        let samples = vec![10.0; 50];
        let r = semi_analytic_ber_from_samples(&samples, 2).unwrap();
        assert!((r.ber - 0.5 * erfc(10f64.sqrt())).abs() < 1e-10);
        assert!(r.std_error < 1e-15);
    }

    #[test]
    fn zero_power_gives_zero_rate() {
        let mut c = small_config();
        c.p_t = 0.0;
        c.n_iterations = 50;
        assert_eq!(mean_rate(&c, 1).unwrap(), 0.0);
        c.mode = Mode::Passive;
        assert_eq!(mean_rate(&c, 1).unwrap(), 0.0);
    }

    #[test]
    fn receiver_noise_dominated_rate_gain() {
        // Passive link: gamma ∝ 1/σ²_rx exactly, so a 10⁻⁶ scale adds
        // log₂(10⁶) bits once the SNR is large.
        let mut c = SystemConfig::default();
        c.mode = Mode::Passive;
        c.n_iterations = 2000;
        c.noise.sigma2_rx *= 1e-3;
        let base = mean_rate(&c, 3).unwrap();
        c.noise.sigma2_rx *= 1e-6;
        c.noise.sigma2_tot *= 1e-6;
        let quiet = mean_rate(&c, 3).unwrap();
        assert!((quiet - base - 1e6f64.log2()).abs() < 0.05, "{base} -> {quiet}");
    }

    #[test]
    fn unlimited_output_reports_no_energy() {
        let mut c = small_config();
        c.output_limit = false;
        c.n_iterations = 10;
        assert!(mean_ee(&c, 1).is_err());
        let stats = simulate_link_stats(&c, 1).unwrap();
        assert!(stats.mean_ee.is_nan());
        assert_eq!(stats.clipped_fraction, 1.0);
    }

    #[test]
    fn forced_los_with_zero_k_matches_nlos_statistics() {
        let mut los = small_config();
        los.fading.k1 = 0.0;
        los.fading.k2 = 0.0;
        los.fading = los.fading.with_los_mode(LinkLos::Los);
        los.mode = Mode::Passive;
        los.n_iterations = 20_000;
        // Same distances and K = 0: only the path loss differs, and the
        // co-phased passive SNR scales by exactly the path-loss ratio.
        let mut nlos = los.clone();
        nlos.fading = nlos.fading.with_los_mode(LinkLos::Nlos);
        let a = simulate_snr_samples(&los, 20_000, 1).unwrap();
        let b = simulate_snr_samples(&nlos, 20_000, 1).unwrap();
        let (d1, d2) = crate::channel::link_distances(&los.geometry).unwrap();
        let pl = |d, l| crate::channel::path_loss_db(d, 28.0, l).unwrap();
        let ratio_db = pl(d1, false) + pl(d2, false) - pl(d1, true) - pl(d2, true);
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x / y, 10f64.powf(ratio_db / 10.0), max_relative = 1e-9);
        }
    }
}
