use super::Spectrum;
use crate::error::{Error, Result};

/// Which metrics to compute and how to weight them into one scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricConfig {
    pub gamma_sdr: f64,
    pub gamma_interarea: f64,
    pub gamma_alpha: f64,
    /// Mode index designated as the critical inter-area mode.
    pub interarea_mode: Option<usize>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { gamma_sdr: 1.0, gamma_interarea: 0.0, gamma_alpha: 0.0, interarea_mode: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityMetrics {
    /// Smallest damping ratio (fraction, not percent).
    pub sdr: f64,
    /// Mode attaining the smallest damping ratio.
    pub sdr_mode: usize,
    pub interarea: Option<f64>,
    /// Negated largest real part over the non-reference modes.
    pub alpha1: f64,
    /// `Σ γ_n S_n` over the configured metrics.
    pub combined: f64,
}

impl StabilityMetrics {
    pub fn sdr_percent(&self) -> f64 {
        100.0 * self.sdr
    }
}

pub fn metrics(spec: &Spectrum, config: &MetricConfig) -> Result<StabilityMetrics> {
    let sdr_mode = spec.sdr_mode().ok_or_else(|| Error::Precondition("spectrum has no modes".into()))?;
    let sdr = spec.modes[sdr_mode].damping();
    let alpha1 = -spec
        .modes
        .iter()
        .filter(|m| !m.reference)
        .map(|m| m.alpha())
        .fold(f64::NEG_INFINITY, f64::max);
    let interarea = match config.interarea_mode {
        Some(m) => {
            let mode = spec
                .modes
                .get(m)
                .ok_or_else(|| Error::Precondition(format!("inter-area mode {m} is not in the spectrum")))?;
            Some(mode.damping())
        }
        None if config.gamma_interarea != 0.0 => {
            return Err(Error::Precondition("inter-area damping requested without a designated mode".into()))
        }
        None => None,
    };
    let combined =
        config.gamma_sdr * sdr + config.gamma_interarea * interarea.unwrap_or(0.0) + config.gamma_alpha * alpha1;
    Ok(StabilityMetrics { sdr, sdr_mode, interarea, alpha1, combined })
}
