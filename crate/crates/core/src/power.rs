//! Power consumption of the active and passive designs and bit-per-joule
//! energy efficiency.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Power model parameters. Watts throughout; `alpha` and `beta` are the
/// inverse peak efficiencies of the transmit PA and the inter-RIS PA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub alpha: f64,
    pub beta: f64,
    /// Control power per RIS element at the configured phase resolution.
    pub p_element: f64,
    pub phase_bits: u32,
    pub p_tx_static: f64,
    pub p_rx_static: f64,
    /// PA class exponent; 0.5 gives `β·√(P_out·P_max)`.
    pub epsilon: f64,
    /// Panels whose elements are charged in the active design (1 or 2).
    pub panels_counted: u32,
}

impl Default for PowerParams {
    fn default() -> Self {
        PowerParams {
            alpha: 1.2,
            beta: 1.2,
            p_element: 7.8e-3,
            phase_bits: 6,
            p_tx_static: 10f64.powf(0.9),
            p_rx_static: 1e-2,
            epsilon: 0.5,
            panels_counted: 1,
        }
    }
}

impl PowerParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("P_n", self.p_element),
            ("P_Tx", self.p_tx_static),
            ("P_Rx", self.p_rx_static),
            ("epsilon", self.epsilon),
        ] {
            ensure_finite(name, v)?;
        }
        if self.alpha < 1.0 || self.beta < 1.0 {
            return Err(Error::invalid("alpha/beta", "PA inefficiency must be at least 1"));
        }
        if self.p_element < 0.0 || self.p_tx_static < 0.0 || self.p_rx_static < 0.0 {
            return Err(Error::invalid(
                "power",
                "static and per-element powers must be non-negative",
            ));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::invalid("epsilon", "must lie in [0, 1]"));
        }
        if !matches!(self.panels_counted, 1 | 2) {
            return Err(Error::invalid("panels_counted", "must be 1 or 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub transmit_pa: f64,
    pub static_tx: f64,
    pub static_rx: f64,
    pub ris_control: f64,
    pub inter_ris_pa: f64,
    pub total: f64,
}

impl PowerBreakdown {
    fn new(transmit_pa: f64, static_tx: f64, static_rx: f64, ris_control: f64, inter_ris_pa: f64) -> Self {
        PowerBreakdown {
            transmit_pa,
            static_tx,
            static_rx,
            ris_control,
            inter_ris_pa,
            total: transmit_pa + static_tx + static_rx + ris_control + inter_ris_pa,
        }
    }
}

/// Consumed PA power `β·P_out^{1−ε}·P_max^ε`.
pub fn pa_power_general(p_out: f64, p_max: f64, beta: f64, epsilon: f64) -> Result<f64> {
    if !(p_out >= 0.0) {
        return Err(Error::invalid("P_out", "must be non-negative"));
    }
    if p_out > p_max {
        return Err(Error::invalid(
            "P_out",
            format!("output {p_out} W exceeds P_max = {p_max} W (outside linear region)"),
        ));
    }
    if p_out == 0.0 {
        return Ok(0.0);
    }
    Ok(beta * p_out.powf(1.0 - epsilon) * p_max.powf(epsilon))
}

/// Consumed PA power at ε = 0.5: `β·√(P_out·P_max)`.
pub fn pa_power(p_out: f64, p_max: f64, beta: f64) -> Result<f64> {
    if p_out > p_max {
        return Err(Error::invalid(
            "P_out",
            format!("output {p_out} W exceeds P_max = {p_max} W (outside linear region)"),
        ));
    }
    if !(p_out >= 0.0) {
        return Err(Error::invalid("P_out", "must be non-negative"));
    }
    Ok(beta * (p_out * p_max).sqrt())
}

/// RIS control power `N·P_n(b)`.
pub fn ris_power(n: usize, params: &PowerParams) -> f64 {
    n as f64 * params.p_element
}

/// Total consumed power of the amplifying design with `n` elements per panel.
pub fn total_power_active(p_t: f64, p_out: f64, p_max: f64, n: usize, params: &PowerParams) -> Result<PowerBreakdown> {
    let inter = pa_power_general(p_out, p_max, params.beta, params.epsilon)?;
    Ok(PowerBreakdown::new(
        params.alpha * p_t,
        params.p_tx_static,
        params.p_rx_static,
        ris_power(n * params.panels_counted as usize, params),
        inter,
    ))
}

/// Total consumed power of the passive benchmark with `elements` elements.
pub fn total_power_passive(p_t: f64, elements: usize, params: &PowerParams) -> PowerBreakdown {
    PowerBreakdown::new(
        params.alpha * p_t,
        params.p_tx_static,
        params.p_rx_static,
        ris_power(elements, params),
        0.0,
    )
}

/// Bits per joule: `rate·BW/total`.
pub fn energy_efficiency(rate: f64, bandwidth: f64, total: f64) -> Result<f64> {
    if !(total > 0.0) {
        return Err(Error::invalid(
            "P_tot",
            format!("total power must be positive, got {total}"),
        ));
    }
    Ok(rate * bandwidth / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn pa_examples() {
        assert_relative_eq!(pa_power(1.0, 1.0, 1.2).unwrap(), 1.2);
        assert_eq!(pa_power(0.0, 1.0, 1.2).unwrap(), 0.0);
        assert_relative_eq!(pa_power(0.25, 1.0, 1.2).unwrap(), 0.6);
        assert!(pa_power(2.0, 1.0, 1.2).is_err());
        assert!(pa_power_general(2.0, 1.0, 1.2, 0.5).is_err());
    }

    #[test]
    fn ris_examples() {
        let p = PowerParams::default();
        assert_relative_eq!(ris_power(128, &p), 0.9984, max_relative = 1e-12);
        assert_eq!(ris_power(0, &p), 0.0);
        assert_relative_eq!(ris_power(256, &p), 1.9968, max_relative = 1e-12);
    }

    #[test]
    fn active_total() {
        let p = PowerParams::default();
        let b = total_power_active(1.0, 1.0, 1.0, 128, &p).unwrap();
        assert_relative_eq!(b.total, 11.3517, epsilon = 1e-4);
        assert_relative_eq!(b.static_tx, 7.9433, epsilon = 1e-4);

        let zero = total_power_active(1.0, 0.0, 1.0, 128, &p).unwrap();
        assert_eq!(zero.inter_ris_pa, 0.0);
        assert_eq!(zero.transmit_pa, b.transmit_pa);

        let doubled = total_power_active(1.0, 1.0, 1.0, 256, &p).unwrap();
        assert_relative_eq!(doubled.total - b.total, 128.0 * p.p_element, max_relative = 1e-12);

        let both = PowerParams { panels_counted: 2, ..p };
        assert_relative_eq!(
            total_power_active(1.0, 1.0, 1.0, 128, &both).unwrap().ris_control,
            256.0 * p.p_element
        );
    }

    #[test]
    fn passive_total() {
        let p = PowerParams::default();
        let b = total_power_passive(1.0, 256, &p);
        assert_relative_eq!(b.total, 11.1501, epsilon = 1e-4);
        assert_eq!(b.inter_ris_pa, 0.0);
        let act = total_power_active(0.3, 0.2, 1.0, 256, &p).unwrap();
        let pas = total_power_passive(0.3, 256, &p);
        assert_relative_eq!(act.total - pas.total, 1.2 * (0.2f64).sqrt(), max_relative = 1e-12);
        let idle = total_power_passive(0.0, 256, &p);
        assert_relative_eq!(idle.total, p.p_tx_static + p.p_rx_static + 256.0 * p.p_element);
    }

    #[test]
    fn efficiency_examples() {
        assert_relative_eq!(energy_efficiency(10.0, 180e3, 10.0).unwrap(), 180_000.0);
        assert_eq!(energy_efficiency(0.0, 180e3, 10.0).unwrap(), 0.0);
        assert_relative_eq!(
            energy_efficiency(3.0, 180e3, 20.0).unwrap(),
            0.5 * energy_efficiency(3.0, 180e3, 10.0).unwrap()
        );
        assert!(energy_efficiency(1.0, 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn efficiency_curve_consistency(frac in 1e-6f64..1.0, p_max in 1e-3f64..100.0) {
            let beta = 1.2;
            let p_out = frac * p_max;
            let p_amp = pa_power(p_out, p_max, beta).unwrap();
            let general = pa_power_general(p_out, p_max, beta, 0.5).unwrap();
            prop_assert!((p_amp - general).abs() <= 1e-12 * p_amp);
            let efficiency = p_out / p_amp;
            let expected = (1.0 / beta) * (p_out / p_max).powf(0.5);
            prop_assert!((efficiency - expected).abs() <= 1e-12 * expected);
        }

        #[test]
        fn pa_concave_increasing(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let f = |x: f64| pa_power(x, 1.0, 1.2).unwrap();
            prop_assert!(f(hi) >= f(lo));
            prop_assert!(f(0.5 * (lo + hi)) >= 0.5 * (f(lo) + f(hi)) - 1e-15);
        }
    }

    #[test]
    fn pa_at_full_output() {
        assert_relative_eq!(pa_power(3.0, 3.0, 1.2).unwrap(), 3.6, max_relative = 1e-15);
    }
}
