//! Scene, frame and noisy observation generation.

use std::f64::consts::PI;

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constellation::{draw_symbols, ConstellationKind};
use crate::error::{Error, Result};
use crate::model::{channel_matrix, fraunhofer_distance, max_unambiguous_range, SceneTruth, SystemConfig};

/// One transmitted frame: P pilot rows then D data rows, each Q subcarriers wide.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub pilots: Array2<Complex64>,
    pub data: Array2<Complex64>,
    pub data_kind: ConstellationKind,
}

impl Frame {
    /// Random BPSK pilots and i.i.d. data symbols of `data_kind`.
    pub fn draw<R: Rng + ?Sized>(cfg: &SystemConfig, data_kind: ConstellationKind, rng: &mut R) -> Self {
        let pilots = draw_symbols(ConstellationKind::Bpsk, cfg.n_pilot_symbols, cfg.n_subcarriers, rng);
        let data = draw_symbols(data_kind, cfg.n_data_symbols, cfg.n_subcarriers, rng);
        Self {
            pilots,
            data,
            data_kind,
        }
    }

    fn check(&self, cfg: &SystemConfig) -> Result<()> {
        let want_p = (cfg.n_pilot_symbols, cfg.n_subcarriers);
        let want_d = (cfg.n_data_symbols, cfg.n_subcarriers);
        if self.pilots.dim() != want_p {
            return Err(Error::Dimension(format!("pilots {:?}, expected {want_p:?}", self.pilots.dim())));
        }
        if self.data.dim() != want_d {
            return Err(Error::Dimension(format!("data {:?}, expected {want_d:?}", self.data.dim())));
        }
        Ok(())
    }
}

/// Received tensors, indexed `[symbol, antenna, subcarrier]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub pilot: Array3<Complex64>,
    pub data: Array3<Complex64>,
    pub noise_var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: f64,
}

impl NoiseSpec {
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::NonFinite(format!("snr_db = {snr_db}")));
        }
        Ok(Self { snr_db })
    }

    /// Infinite SNR; only meaningful for exact-recovery checks.
    pub fn noiseless() -> Self {
        Self { snr_db: f64::INFINITY }
    }

    /// σn² = 10^(−SNR/10), with unit symbol energy and unit channel gain.
    pub fn noise_var(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

/// Scene sampling region for Monte-Carlo trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneBounds {
    /// sinθ is drawn uniformly on `[-sin_aoa_limit, sin_aoa_limit]`.
    pub sin_aoa_limit: f64,
    /// Lower range bound as a fraction of R_max (raised to the Fraunhofer distance if needed).
    pub range_min_fraction: f64,
    pub range_max_fraction: f64,
}

impl Default for SceneBounds {
    fn default() -> Self {
        Self {
            sin_aoa_limit: 0.9,
            range_min_fraction: 0.05,
            range_max_fraction: 0.9,
        }
    }
}

impl SceneBounds {
    pub fn range_interval(&self, cfg: &SystemConfig) -> Result<(f64, f64)> {
        let r_max = max_unambiguous_range(cfg);
        let r_f = fraunhofer_distance(cfg);
        let hi = self.range_max_fraction * r_max;
        let lo = r_f.max(self.range_min_fraction * r_max);
        if !(self.sin_aoa_limit > 0.0 && self.sin_aoa_limit < 1.0) {
            return Err(Error::Config(format!("sin_aoa_limit {} outside (0, 1)", self.sin_aoa_limit)));
        }
        if !(hi < r_max && hi > 0.0) {
            return Err(Error::Config(format!("range_max_fraction {} outside (0, 1)", self.range_max_fraction)));
        }
        if lo >= hi {
            return Err(Error::Config(format!(
                "infeasible geometry: range lower bound {lo} lambda >= upper bound {hi} lambda"
            )));
        }
        Ok((lo, hi))
    }
}

/// γ = e^{jφ}, φ ~ U[0, 2π).
pub fn draw_channel_coefficient<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let (s, c) = phi.sin_cos();
    Complex64::new(c, s)
}

pub fn draw_scene<R: Rng + ?Sized>(cfg: &SystemConfig, bounds: &SceneBounds, rng: &mut R) -> Result<SceneTruth> {
    let (lo, hi) = bounds.range_interval(cfg)?;
    let lim = bounds.sin_aoa_limit;
    let sin_aoa: f64 = rng.random_range(-lim..=lim);
    let range: f64 = rng.random_range(lo..hi);
    let gamma = draw_channel_coefficient(rng);
    let scene = SceneTruth::new(cfg, range, sin_aoa.asin(), gamma)?;
    Ok(scene)
}

/// One 𝒞𝒩(0, σ²) sample: σ²/2 per real component.
#[inline]
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, std_per_component: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * std_per_component, im * std_per_component)
}

/// Pass `frame` through the scene's channel and add white noise.
pub fn simulate<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    scene: &SceneTruth,
    frame: &Frame,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<Observations> {
    frame.check(cfg)?;
    let h = channel_matrix(scene, cfg);
    let noise_var = noise.noise_var();
    let sd = (noise_var / 2.0).sqrt();
    let (n_ant, n_sc) = (cfg.n_antennas, cfg.n_subcarriers);

    let mut render = |symbols: &Array2<Complex64>| -> Array3<Complex64> {
        let rows = symbols.nrows();
        let mut y = Array3::zeros((rows, n_ant, n_sc));
        for (mut slab, s_row) in y.outer_iter_mut().zip(symbols.rows()) {
            for (mut out_row, h_row) in slab.rows_mut().into_iter().zip(h.rows()) {
                for ((out, &hv), &sv) in out_row.iter_mut().zip(h_row.iter()).zip(s_row.iter()) {
                    let clean = hv * sv;
                    *out = if sd > 0.0 { clean + complex_gaussian(rng, sd) } else { clean };
                }
            }
        }
        y
    };
    let pilot = render(&frame.pilots);
    let data = render(&frame.data);
    Ok(Observations {
        pilot,
        data,
        noise_var,
    })
}
