//! System geometry, ground-truth scenes and the far-field channel model.
//!
//! Ranges are expressed in carrier wavelengths (λc) throughout; the AoA is
//! carried as `sin(θ)` wherever estimation happens because both the FFT grid
//! and the resolution cell are uniform in that variable.

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Propagation speed used for every meter conversion (m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Default carrier. Only the ratio Δf/fc enters the estimator, so this only
/// affects meter-valued reporting.
pub const DEFAULT_CARRIER_FREQ: f64 = 3.5e9;

/// Upper limit on B/fc accepted as "narrowband".
pub const MAX_FRACTIONAL_BANDWIDTH: f64 = 0.1;

/// OFDM numerology and receive-array geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n_antennas: usize,
    /// Element spacing in carrier wavelengths.
    pub antenna_spacing: f64,
    pub n_subcarriers: usize,
    /// Hz.
    pub subcarrier_spacing: f64,
    /// Hz.
    pub carrier_freq: f64,
    pub n_pilot_symbols: usize,
    pub n_data_symbols: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_antennas: 16,
            antenna_spacing: 0.5,
            n_subcarriers: 256,
            subcarrier_spacing: 15e3,
            carrier_freq: DEFAULT_CARRIER_FREQ,
            n_pilot_symbols: 1,
            n_data_symbols: 32,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_antennas < 1 {
            return Err(Error::Config("n_antennas must be >= 1".into()));
        }
        if self.n_subcarriers < 1 {
            return Err(Error::Config("n_subcarriers must be >= 1".into()));
        }
        if self.n_pilot_symbols < 1 {
            return Err(Error::Config("n_pilot_symbols must be >= 1".into()));
        }
        if !(self.antenna_spacing.is_finite() && self.antenna_spacing > 0.0) {
            return Err(Error::Config("antenna_spacing must be > 0".into()));
        }
        if !(self.subcarrier_spacing.is_finite() && self.subcarrier_spacing > 0.0) {
            return Err(Error::Config("subcarrier_spacing must be > 0".into()));
        }
        if !(self.carrier_freq.is_finite() && self.carrier_freq > 0.0) {
            return Err(Error::Config("carrier_freq must be > 0".into()));
        }
        let frac = self.bandwidth() / self.carrier_freq;
        if frac >= MAX_FRACTIONAL_BANDWIDTH {
            return Err(Error::Config(format!(
                "bandwidth/carrier = {frac:.4} violates the narrowband condition (< {MAX_FRACTIONAL_BANDWIDTH})"
            )));
        }
        Ok(())
    }

    /// Carrier wavelength in meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    /// Occupied bandwidth QΔf in Hz.
    pub fn bandwidth(&self) -> f64 {
        self.n_subcarriers as f64 * self.subcarrier_spacing
    }

    /// Δf/fc, the per-subcarrier phase slope per wavelength of range.
    pub fn freq_ratio(&self) -> f64 {
        self.subcarrier_spacing / self.carrier_freq
    }

    pub fn lambda_to_meters(&self, r: f64) -> f64 {
        r * self.wavelength()
    }

    pub fn meters_to_lambda(&self, m: f64) -> f64 {
        m / self.wavelength()
    }
}

/// AoA resolution in `sin(θ)`: 1/(NΔd) with Δd in wavelengths.
pub fn aoa_resolution(cfg: &SystemConfig) -> f64 {
    1.0 / (cfg.n_antennas as f64 * cfg.antenna_spacing)
}

/// Range resolution fc/(QΔf), in wavelengths.
pub fn range_resolution(cfg: &SystemConfig) -> f64 {
    cfg.carrier_freq / cfg.bandwidth()
}

/// Range resolution c/(QΔf), in meters.
pub fn range_resolution_meters(cfg: &SystemConfig) -> f64 {
    SPEED_OF_LIGHT / cfg.bandwidth()
}

/// Maximum unambiguous range ½·fc/Δf, in wavelengths.
pub fn max_unambiguous_range(cfg: &SystemConfig) -> f64 {
    0.5 * cfg.carrier_freq / cfg.subcarrier_spacing
}

/// Far-field boundary 2(NΔd)², in wavelengths.
pub fn fraunhofer_distance(cfg: &SystemConfig) -> f64 {
    let aperture = cfg.n_antennas as f64 * cfg.antenna_spacing;
    2.0 * aperture * aperture
}

/// Ground truth for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneTruth {
    /// Range in wavelengths.
    pub range: f64,
    /// Angle of arrival in radians.
    pub aoa: f64,
    pub channel_coeff: Complex64,
}

impl SceneTruth {
    /// Builds a scene, rejecting anything outside the far-field, unambiguous
    /// and unit-gain region the channel model is valid for.
    pub fn new(cfg: &SystemConfig, range: f64, aoa: f64, channel_coeff: Complex64) -> Result<Self> {
        if !(aoa.is_finite() && aoa.abs() < FRAC_PI_2) {
            return Err(Error::Domain(format!("aoa {aoa} rad outside (-pi/2, pi/2)")));
        }
        let r_f = fraunhofer_distance(cfg);
        let r_max = max_unambiguous_range(cfg);
        if !(range.is_finite() && range > r_f) {
            return Err(Error::Domain(format!(
                "range {range} lambda not beyond the Fraunhofer distance {r_f}"
            )));
        }
        if range >= r_max {
            return Err(Error::Domain(format!(
                "range {range} lambda not below the unambiguous range {r_max}"
            )));
        }
        if (channel_coeff.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "channel coefficient modulus {} is not 1",
                channel_coeff.norm()
            )));
        }
        Ok(Self {
            range,
            aoa,
            channel_coeff,
        })
    }

    pub fn sin_aoa(&self) -> f64 {
        self.aoa.sin()
    }
}

/// Spatial steering vector for an angle given in radians.
pub fn steering_aoa(theta: f64, cfg: &SystemConfig) -> Result<Array1<Complex64>> {
    if !(theta.is_finite() && theta.abs() < FRAC_PI_2) {
        return Err(Error::Domain(format!("aoa {theta} rad outside (-pi/2, pi/2)")));
    }
    Ok(steering_aoa_sin(theta.sin(), cfg))
}

/// Spatial steering vector `exp(-j 2π Δd sinθ n)` parameterized by `sin(θ)`.
///
/// No domain check: the estimators probe the whole spatial-frequency axis.
pub fn steering_aoa_sin(sin_aoa: f64, cfg: &SystemConfig) -> Array1<Complex64> {
    let slope = -2.0 * PI * cfg.antenna_spacing * sin_aoa;
    Array1::from_iter((0..cfg.n_antennas).map(|n| Complex64::from_polar(1.0, slope * n as f64)))
}

/// Frequency-domain steering vector `exp(-j 2π (Δf/fc) R q)` for R in wavelengths.
pub fn steering_range(range: f64, cfg: &SystemConfig) -> Result<Array1<Complex64>> {
    if !(range.is_finite() && range >= 0.0) {
        return Err(Error::Domain(format!("range {range} must be finite and >= 0")));
    }
    Ok(steering_range_unchecked(range, cfg))
}

pub(crate) fn steering_range_unchecked(range: f64, cfg: &SystemConfig) -> Array1<Complex64> {
    let slope = -2.0 * PI * cfg.freq_ratio() * range;
    Array1::from_iter((0..cfg.n_subcarriers).map(|q| Complex64::from_polar(1.0, slope * q as f64)))
}

/// Rank-one LoS channel `a(θ)·γ·bᵀ(R)`, N×Q.
pub fn channel_matrix(scene: &SceneTruth, cfg: &SystemConfig) -> Array2<Complex64> {
    let a = steering_aoa_sin(scene.sin_aoa(), cfg);
    let b = steering_range_unchecked(scene.range, cfg);
    let gamma = scene.channel_coeff;
    Array2::from_shape_fn((cfg.n_antennas, cfg.n_subcarriers), |(n, q)| a[n] * gamma * b[q])
}
