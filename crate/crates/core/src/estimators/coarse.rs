//! FFT evaluation of the projection metric over the whole coarse grid.
//!
//! Pilot term: `w/(NQ)·|𝓕₂{Yᴴ}|²` on the padded (range, aoa) grid. Data term:
//! `aᴴ C a / N`, expanded over the lag sums of C so one length-G_a·N
//! transform covers every aoa bin.

use ndarray::Array2;
use num_complex::Complex64;

use super::combine::CombinedPilot;
use super::likelihood::DataCovariance;
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::numerics::{dft_forward_1d, dft_forward_2d_truncated, GridSpec, MetricSurface};

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseSearch {
    pub surface: MetricSurface,
    /// (range bin, aoa bin) of the surface maximum.
    pub peak: (usize, usize),
}

impl CoarseSearch {
    pub fn peak_value(&self) -> f64 {
        self.surface.values[self.peak]
    }
}

/// Pilot term on every (range bin, aoa bin) with R < R_max.
pub fn pilot_surface(pc: &CombinedPilot, cfg: &SystemConfig, grid: &GridSpec) -> Result<Array2<f64>> {
    grid.validate(cfg)?;
    if pc.y.dim() != (cfg.n_antennas, cfg.n_subcarriers) {
        return Err(Error::Dimension(format!(
            "combined pilot {:?} does not match N x Q = {} x {}",
            pc.y.dim(),
            cfg.n_antennas,
            cfg.n_subcarriers
        )));
    }
    // Q×N conjugate transpose
    let yh = pc.y.t().mapv(|z| z.conj());
    let spec = dft_forward_2d_truncated(
        yh.view(),
        grid.range_fft_len(cfg),
        grid.aoa_fft_len(cfg),
        grid.n_range_bins(cfg),
    )?;
    let scale = pc.weight / (cfg.n_antennas * cfg.n_subcarriers) as f64;
    Ok(spec.mapv(|z| scale * z.norm_sqr()))
}

/// Data term for every aoa bin (it carries no range dependence).
pub fn data_spectrum(cov: &DataCovariance, cfg: &SystemConfig, grid: &GridSpec) -> Result<Vec<f64>> {
    if cov.n_antennas() != cfg.n_antennas {
        return Err(Error::Dimension(format!(
            "data covariance for {} antennas, config has {}",
            cov.n_antennas(),
            cfg.n_antennas
        )));
    }
    let r = cov.lag_sums();
    // aᴴCa = r[0] + 2·Re Σ_{τ≥1} r[τ]·e^{+j2πfτ}; the forward DFT of conj(r)
    // yields the conjugate of that sum, which has the same real part.
    let mut x: Vec<Complex64> = r.iter().map(|z| z.conj()).collect();
    let r0 = r[0].re;
    x[0] = Complex64::new(0.0, 0.0);
    let spec = dft_forward_1d(&x, grid.aoa_fft_len(cfg))?;
    let n = cfg.n_antennas as f64;
    Ok(spec.iter().map(|z| ((r0 + 2.0 * z.re) / n).max(0.0)).collect())
}

/// Coarse grid search of the joint metric. With `data = None` only the
/// pilot term is used.
pub fn jpudl_coarse(
    pc: &CombinedPilot,
    data: Option<&DataCovariance>,
    cfg: &SystemConfig,
    grid: &GridSpec,
) -> Result<CoarseSearch> {
    let mut values = pilot_surface(pc, cfg, grid)?;
    if let Some(cov) = data {
        let d = data_spectrum(cov, cfg, grid)?;
        for mut row in values.rows_mut() {
            row.iter_mut().zip(&d).for_each(|(v, dv)| *v += dv);
        }
    }
    let surface = MetricSurface::new(values, cfg, grid);
    let peak = surface
        .argmax()
        .ok_or_else(|| Error::Config("coarse grid has no visible aoa bin".into()))?;
    Ok(CoarseSearch { surface, peak })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::likelihood::metric_direct;
    use ndarray::Array3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    #[test]
    fn surface_matches_direct_metric_on_every_bin() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let cfg = SystemConfig {
                n_antennas: rng.random_range(2..=6),
                n_subcarriers: rng.random_range(4..=12),
                n_data_symbols: rng.random_range(0..=3),
                ..SystemConfig::default()
            };
            let grid = GridSpec {
                pad_range: rng.random_range(1..=3),
                pad_aoa: rng.random_range(1..=3),
            };
            let pc = CombinedPilot {
                y: Array2::from_shape_simple_fn((cfg.n_antennas, cfg.n_subcarriers), || rand_c(&mut rng)),
                weight: 2.0,
            };
            let y_d = Array3::from_shape_simple_fn((cfg.n_data_symbols, cfg.n_antennas, cfg.n_subcarriers), || {
                rand_c(&mut rng)
            });
            let cov = DataCovariance::from_observations(&y_d);
            let coarse = jpudl_coarse(&pc, Some(&cov), &cfg, &grid).unwrap();
            let s = &coarse.surface;
            for ((k_r, k_a), v) in s.values.indexed_iter() {
                let want = metric_direct(&pc, Some(&cov), s.range_axis[k_r], s.sin_aoa_axis[k_a], &cfg);
                assert!((v - want).abs() <= 1e-9 * want, "bin ({k_r},{k_a}): {v} vs {want}");
            }
        }
    }

    #[test]
    fn lag_sum_spectrum_matches_per_symbol_ffts() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cfg = SystemConfig {
            n_antennas: 7,
            n_subcarriers: 5,
            n_data_symbols: 3,
            ..SystemConfig::default()
        };
        let grid = GridSpec {
            pad_range: 1,
            pad_aoa: 4,
        };
        let y_d = Array3::from_shape_simple_fn((3, 7, 5), || rand_c(&mut rng));
        let fast = data_spectrum(&DataCovariance::from_observations(&y_d), &cfg, &grid).unwrap();
        let m = grid.aoa_fft_len(&cfg);
        let mut slow = vec![0.0; m];
        for d in 0..3 {
            for q in 0..5 {
                let x: Vec<Complex64> = (0..7).map(|n| y_d[[d, n, q]].conj()).collect();
                for (k, z) in dft_forward_1d(&x, m).unwrap().iter().enumerate() {
                    slow[k] += z.norm_sqr() / 7.0;
                }
            }
        }
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-10 * b);
        }
    }

    #[test]
    fn data_term_is_flat_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = SystemConfig {
            n_antennas: 4,
            n_subcarriers: 8,
            n_data_symbols: 2,
            ..SystemConfig::default()
        };
        let grid = GridSpec::default();
        let pc = CombinedPilot {
            y: Array2::from_shape_simple_fn((4, 8), || rand_c(&mut rng)),
            weight: 1.0,
        };
        let cov = DataCovariance::from_observations(&Array3::from_shape_simple_fn((2, 4, 8), || rand_c(&mut rng)));
        let joint = jpudl_coarse(&pc, Some(&cov), &cfg, &grid).unwrap();
        let pilot = jpudl_coarse(&pc, None, &cfg, &grid).unwrap();
        let diff = &joint.surface.values - &pilot.surface.values;
        let first = diff.row(0).to_owned();
        for row in diff.rows() {
            for (a, b) in row.iter().zip(first.iter()) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
        assert!(joint.surface.values.iter().all(|&v| v >= 0.0));
    }
}
