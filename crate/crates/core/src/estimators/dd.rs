//! Decision-directed baseline: estimate the channel from the pilots, decode
//! the data, then treat the decisions as extra pilots.

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::combine::pilot_combine;
use super::{estimate_bound_with, Estimate, EstimatorKind};
use crate::constellation::{hard_decide, ConstellationKind};
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::numerics::GridSpec;
use crate::simulator::Observations;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DdVariant {
    /// Per-entry LMMSE channel, MMSE-scaled maximum-ratio decoding.
    #[default]
    Lmmse,
    /// ZF channel, `ĥᴴy/‖ĥ‖²` decoding.
    Zf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    /// D×Q hard decisions.
    pub symbols: Array2<Complex64>,
    /// D×Q combiner outputs before the decision.
    pub soft: Array2<Complex64>,
    /// Subcarriers whose channel estimate was identically zero.
    pub degenerate_subcarriers: usize,
}

impl DecodeOutput {
    /// Fraction of decisions that differ from `truth`.
    pub fn symbol_error_rate(&self, truth: &Array2<Complex64>) -> f64 {
        if self.symbols.is_empty() {
            return 0.0;
        }
        let errors = self.symbols.iter().zip(truth.iter()).filter(|(a, b)| a != b).count();
        errors as f64 / self.symbols.len() as f64
    }
}

/// `Ĥ[n,q] = E_q/(E_q + σ²)·Y_comb[n,q]` under a unit-power channel prior,
/// where `E_q` is the pilot energy on subcarrier q (P for unit pilots).
pub fn lmmse_channel(
    y_p: &Array3<Complex64>,
    s_p: &Array2<Complex64>,
    noise_var: f64,
    cfg: &SystemConfig,
) -> Result<Array2<Complex64>> {
    let pc = pilot_combine(y_p, s_p)?;
    check_channel(&pc.y, cfg)?;
    let energy: Vec<f64> = s_p
        .columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let mut h = pc.y;
    for ((_, q), v) in h.indexed_iter_mut() {
        *v *= energy[q] / (energy[q] + noise_var);
    }
    Ok(h)
}

fn check_channel(h: &Array2<Complex64>, cfg: &SystemConfig) -> Result<()> {
    if h.dim() != (cfg.n_antennas, cfg.n_subcarriers) {
        return Err(Error::Dimension(format!(
            "channel estimate {:?} does not match N x Q = {} x {}",
            h.dim(),
            cfg.n_antennas,
            cfg.n_subcarriers
        )));
    }
    Ok(())
}

/// `soft[d,q] = ĥ_qᴴ 𝒴[d,:,q] / (‖ĥ_q‖² + σ²)`, then minimum-distance decisions.
pub fn lmmse_decode(
    y_d: &Array3<Complex64>,
    h_hat: &Array2<Complex64>,
    noise_var: f64,
    cfg: &SystemConfig,
    kind: ConstellationKind,
) -> Result<DecodeOutput> {
    decode(y_d, h_hat, noise_var, cfg, kind)
}

/// ZF decoding, `ĥ_qᴴ 𝒴[d,:,q] / ‖ĥ_q‖²`.
pub fn zf_decode(
    y_d: &Array3<Complex64>,
    h_hat: &Array2<Complex64>,
    cfg: &SystemConfig,
    kind: ConstellationKind,
) -> Result<DecodeOutput> {
    decode(y_d, h_hat, 0.0, cfg, kind)
}

fn decode(
    y_d: &Array3<Complex64>,
    h_hat: &Array2<Complex64>,
    regularization: f64,
    cfg: &SystemConfig,
    kind: ConstellationKind,
) -> Result<DecodeOutput> {
    check_channel(h_hat, cfg)?;
    let (n_sym, n_ant, n_sc) = y_d.dim();
    if (n_ant, n_sc) != (cfg.n_antennas, cfg.n_subcarriers) {
        return Err(Error::Dimension(format!("data observations {:?}", y_d.dim())));
    }
    let gains: Vec<f64> = h_hat
        .columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let degenerate_subcarriers = gains.iter().filter(|&&g| g == 0.0).count();

    let mut soft = Array2::<Complex64>::zeros((n_sym, n_sc));
    for d in 0..n_sym {
        for n in 0..n_ant {
            for q in 0..n_sc {
                soft[[d, q]] += h_hat[[n, q]].conj() * y_d[[d, n, q]];
            }
        }
        for q in 0..n_sc {
            let den = gains[q] + regularization;
            soft[[d, q]] = if den > 0.0 {
                soft[[d, q]] / den
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }
    let symbols = soft
        .iter()
        .map(|&z| hard_decide(z, kind))
        .collect::<Result<Vec<_>>>()?;
    let symbols = Array2::from_shape_vec((n_sym, n_sc), symbols).expect("shape preserved");
    Ok(DecodeOutput {
        symbols,
        soft,
        degenerate_subcarriers,
    })
}

/// Channel estimate, decode, then the known-data estimator with the
/// decisions in place of the true symbols.
pub fn estimate_dd(
    obs: &Observations,
    s_p: &Array2<Complex64>,
    cfg: &SystemConfig,
    grid: &GridSpec,
    kind: ConstellationKind,
    variant: DdVariant,
) -> Result<(Estimate, DecodeOutput)> {
    let decoded = match variant {
        DdVariant::Lmmse => {
            let h = lmmse_channel(&obs.pilot, s_p, obs.noise_var, cfg)?;
            lmmse_decode(&obs.data, &h, obs.noise_var, cfg, kind)?
        }
        DdVariant::Zf => {
            let h = pilot_combine(&obs.pilot, s_p)?.y;
            zf_decode(&obs.data, &h, cfg, kind)?
        }
    };
    let label = match variant {
        DdVariant::Lmmse => EstimatorKind::DdLmmse,
        DdVariant::Zf => EstimatorKind::DdZf,
    };
    let est = estimate_bound_with(obs, s_p, &decoded.symbols, cfg, grid, label)?;
    Ok((est, decoded))
}
