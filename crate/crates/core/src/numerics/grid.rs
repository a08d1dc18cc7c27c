use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{max_unambiguous_range, SystemConfig};

/// Zero-padding factors of the coarse FFT search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub pad_range: usize,
    pub pad_aoa: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            pad_range: 8,
            pad_aoa: 8,
        }
    }
}

impl GridSpec {
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.pad_range < 1 || self.pad_aoa < 1 {
            return Err(Error::Config("padding factors must be >= 1".into()));
        }
        if self.range_fft_len(cfg) < 2 || self.aoa_fft_len(cfg) < 2 {
            return Err(Error::Config("coarse grid needs at least 2 bins per axis".into()));
        }
        Ok(())
    }

    /// G_r·Q, the full range-axis transform length.
    pub fn range_fft_len(&self, cfg: &SystemConfig) -> usize {
        self.pad_range * cfg.n_subcarriers
    }

    /// G_a·N.
    pub fn aoa_fft_len(&self, cfg: &SystemConfig) -> usize {
        self.pad_aoa * cfg.n_antennas
    }

    /// Range bins with R < R_max, i.e. the first half of the transform.
    pub fn n_range_bins(&self, cfg: &SystemConfig) -> usize {
        self.range_fft_len(cfg).div_ceil(2)
    }

    /// Range of bin `k_r`, in wavelengths.
    pub fn range_of_bin(&self, cfg: &SystemConfig, k_r: usize) -> f64 {
        k_r as f64 / self.range_fft_len(cfg) as f64 / cfg.freq_ratio()
    }

    /// Spatial frequency of aoa bin `k_a`, wrapped to (−1/2, 1/2].
    pub fn spatial_freq_of_bin(&self, cfg: &SystemConfig, k_a: usize) -> f64 {
        let m = self.aoa_fft_len(cfg);
        let k = k_a % m;
        if 2 * k > m {
            (k as f64 - m as f64) / m as f64
        } else {
            k as f64 / m as f64
        }
    }

    pub fn sin_aoa_of_bin(&self, cfg: &SystemConfig, k_a: usize) -> f64 {
        self.spatial_freq_of_bin(cfg, k_a) / cfg.antenna_spacing
    }

    /// Width of one coarse range cell, in wavelengths.
    pub fn range_step(&self, cfg: &SystemConfig) -> f64 {
        1.0 / (self.range_fft_len(cfg) as f64 * cfg.freq_ratio())
    }

    /// Width of one coarse cell in sinθ.
    pub fn sin_aoa_step(&self, cfg: &SystemConfig) -> f64 {
        1.0 / (self.aoa_fft_len(cfg) as f64 * cfg.antenna_spacing)
    }

    /// Inverse of [`range_of_bin`](Self::range_of_bin) for on-grid ranges.
    pub fn bin_of_range(&self, cfg: &SystemConfig, range: f64) -> Option<usize> {
        let k = (range / self.range_step(cfg)).round();
        (k >= 0.0 && (k as usize) < self.n_range_bins(cfg)).then_some(k as usize)
    }

    /// Inverse of [`sin_aoa_of_bin`](Self::sin_aoa_of_bin).
    pub fn bin_of_sin_aoa(&self, cfg: &SystemConfig, sin_aoa: f64) -> usize {
        let m = self.aoa_fft_len(cfg) as i64;
        let k = (sin_aoa * cfg.antenna_spacing * m as f64).round() as i64;
        k.rem_euclid(m) as usize
    }
}

/// Coarse likelihood values on the FFT grid, `[range bin, aoa bin]`.
///
/// Range bins cover [0, R_max); aoa bins are in transform order, so the
/// spatial frequency wraps at the midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSurface {
    pub values: Array2<f64>,
    pub range_axis: Vec<f64>,
    pub sin_aoa_axis: Vec<f64>,
}

impl MetricSurface {
    pub(crate) fn new(values: Array2<f64>, cfg: &SystemConfig, grid: &GridSpec) -> Self {
        let (n_r, n_a) = values.dim();
        let range_axis = (0..n_r).map(|k| grid.range_of_bin(cfg, k)).collect();
        let sin_aoa_axis = (0..n_a).map(|k| grid.sin_aoa_of_bin(cfg, k)).collect();
        debug_assert!(n_r == 0 || grid.range_of_bin(cfg, n_r - 1) < max_unambiguous_range(cfg));
        Self {
            values,
            range_axis,
            sin_aoa_axis,
        }
    }

    /// Aoa bins mapping to a physical direction (|sinθ| < 1).
    pub fn aoa_bin_is_visible(&self, k_a: usize) -> bool {
        self.sin_aoa_axis[k_a].abs() < 1.0
    }

    /// Largest value over visible bins; ties resolve to the smallest
    /// (k_r, k_a) in lexicographic order.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let visible: Vec<usize> = (0..self.sin_aoa_axis.len())
            .filter(|&k| self.aoa_bin_is_visible(k))
            .collect();
        let mut best: Option<((usize, usize), f64)> = None;
        for (k_r, row) in self.values.rows().into_iter().enumerate() {
            for &k_a in &visible {
                let v = row[k_a];
                match best {
                    Some((_, b)) if !(v > b) => {}
                    _ => best = Some(((k_r, k_a), v)),
                }
            }
        }
        best.map(|(k, _)| k)
    }
}
