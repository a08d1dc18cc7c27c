//! Position estimators: the joint pilot + unknown-data estimator and the
//! pilot-only, known-data and decision-directed baselines.
//!
//! Every estimator runs the same two stages: an FFT grid search of the
//! projection metric, then Powell refinement of the explicit metric within
//! one coarse cell of the grid peak, in (range, sinθ) coordinates.

mod coarse;
mod combine;
mod dd;
mod likelihood;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use coarse::{data_spectrum, jpudl_coarse, pilot_surface, CoarseSearch};
pub use combine::{pilot_combine, CombinedPilot};
pub use dd::{estimate_dd, lmmse_channel, lmmse_decode, zf_decode, DdVariant, DecodeOutput};
pub use likelihood::{metric_direct, nuisance_gamma_hat, DataCovariance, Likelihood};

use crate::error::{Error, Result};
use crate::model::{max_unambiguous_range, SystemConfig};
use crate::numerics::{powell_minimize, GridSpec, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::simulator::Observations;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Jpudl,
    PilotOnly,
    Bound,
    DdLmmse,
    DdZf,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [Self::Jpudl, Self::PilotOnly, Self::Bound, Self::DdLmmse, Self::DdZf];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Jpudl => "jpudl",
            Self::PilotOnly => "pilot_only",
            Self::Bound => "bound",
            Self::DdLmmse => "dd_lmmse",
            Self::DdZf => "dd_zf",
        }
    }

    pub fn is_decision_directed(self) -> bool {
        matches!(self, Self::DdLmmse | Self::DdZf)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown estimator '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Wavelengths.
    pub range_hat: f64,
    pub sin_aoa_hat: f64,
    pub coarse_bins: (usize, usize),
    /// Refined metric value.
    pub metric_at_peak: f64,
    pub estimator: EstimatorKind,
}

impl Estimate {
    pub fn aoa_hat(&self) -> f64 {
        self.sin_aoa_hat.asin()
    }
}

fn check_observations(obs: &Observations, cfg: &SystemConfig) -> Result<()> {
    let (p, n, q) = obs.pilot.dim();
    let (d, n2, q2) = obs.data.dim();
    if (p, n, q) != (cfg.n_pilot_symbols, cfg.n_antennas, cfg.n_subcarriers)
        || (d, n2, q2) != (cfg.n_data_symbols, cfg.n_antennas, cfg.n_subcarriers)
    {
        return Err(Error::Dimension(format!(
            "observations pilot {:?} / data {:?} do not match the configuration",
            obs.pilot.dim(),
            obs.data.dim()
        )));
    }
    Ok(())
}

/// Grid search then refinement. Shared by every estimator.
pub fn locate(
    pc: &CombinedPilot,
    data: Option<&DataCovariance>,
    cfg: &SystemConfig,
    grid: &GridSpec,
    label: EstimatorKind,
) -> Result<Estimate> {
    let coarse = jpudl_coarse(pc, data, cfg, grid)?;
    refine(&coarse, pc, data, cfg, grid, label)
}

/// Powell refinement of the explicit metric within ± one coarse cell of the
/// grid peak, clamped to [0, R_max) × (−1, 1).
pub fn refine(
    coarse: &CoarseSearch,
    pc: &CombinedPilot,
    data: Option<&DataCovariance>,
    cfg: &SystemConfig,
    grid: &GridSpec,
    label: EstimatorKind,
) -> Result<Estimate> {
    let lik = Likelihood::new(cfg, pc, data);
    lik.check()?;
    let (k_r, k_a) = coarse.peak;
    let r0 = grid.range_of_bin(cfg, k_r);
    let s0 = grid.sin_aoa_of_bin(cfg, k_a);
    let dr = grid.range_step(cfg);
    let ds = grid.sin_aoa_step(cfg);
    let r_hi = max_unambiguous_range(cfg) * (1.0 - 1e-12);
    let s_lim = 1.0 - 1e-9;

    // unit box in coarse-cell coordinates, trimmed to the physical domain
    let bounds = [
        ((-r0 / dr).max(-1.0), ((r_hi - r0) / dr).min(1.0)),
        (((-s_lim - s0) / ds).max(-1.0), ((s_lim - s0) / ds).min(1.0)),
    ];
    let to_params = |u: &[f64]| (r0 + u[0] * dr, s0 + u[1] * ds);
    let objective = |u: &[f64]| {
        let (r, s) = to_params(u);
        -lik.evaluate(r, s)
    };
    let start = [0.0f64.clamp(bounds[0].0, bounds[0].1), 0.0f64.clamp(bounds[1].0, bounds[1].1)];
    let res = powell_minimize(objective, start, bounds, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let (range_hat, sin_aoa_hat) = to_params(&res.x);
    Ok(Estimate {
        range_hat: range_hat.clamp(0.0, r_hi),
        sin_aoa_hat: sin_aoa_hat.clamp(-s_lim, s_lim),
        coarse_bins: coarse.peak,
        metric_at_peak: -res.f,
        estimator: label,
    })
}

/// Joint pilot + unknown-data estimator. Never looks at the transmitted data
/// symbols or their constellation.
pub fn estimate_jpudl(
    obs: &Observations,
    s_p: &Array2<Complex64>,
    cfg: &SystemConfig,
    grid: &GridSpec,
) -> Result<Estimate> {
    check_observations(obs, cfg)?;
    let pc = pilot_combine(&obs.pilot, s_p)?;
    let cov = (cfg.n_data_symbols > 0).then(|| DataCovariance::from_observations(&obs.data));
    locate(&pc, cov.as_ref(), cfg, grid, EstimatorKind::Jpudl)
}

/// Pilot term only.
pub fn estimate_pilot_only(
    obs: &Observations,
    s_p: &Array2<Complex64>,
    cfg: &SystemConfig,
    grid: &GridSpec,
) -> Result<Estimate> {
    check_observations(obs, cfg)?;
    let pc = pilot_combine(&obs.pilot, s_p)?;
    locate(&pc, None, cfg, grid, EstimatorKind::PilotOnly)
}

/// Every symbol treated as a pilot, with the true data supplied.
pub fn estimate_bound(
    obs: &Observations,
    s_p: &Array2<Complex64>,
    s_d: &Array2<Complex64>,
    cfg: &SystemConfig,
    grid: &GridSpec,
) -> Result<Estimate> {
    estimate_bound_with(obs, s_p, s_d, cfg, grid, EstimatorKind::Bound)
}

pub(crate) fn estimate_bound_with(
    obs: &Observations,
    s_p: &Array2<Complex64>,
    s_d: &Array2<Complex64>,
    cfg: &SystemConfig,
    grid: &GridSpec,
    label: EstimatorKind,
) -> Result<Estimate> {
    check_observations(obs, cfg)?;
    let pc = combine::combine_known(&[(&obs.pilot, s_p), (&obs.data, s_d)])?;
    locate(&pc, None, cfg, grid, label)
}
