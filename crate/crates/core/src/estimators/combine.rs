use ndarray::{Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Zero-forcing combination of all symbols known to the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedPilot {
    /// N×Q channel estimate.
    pub y: Array2<Complex64>,
    /// Number of combined symbol rows (P for pilots, P+D when data are known).
    pub weight: f64,
}

/// `Y[n,q] = Σ_p S*[p,q]·𝒴[p,n,q] / Σ_p |S[p,q]|²`.
pub fn pilot_combine(y_p: &Array3<Complex64>, s_p: &Array2<Complex64>) -> Result<CombinedPilot> {
    combine_known(&[(y_p, s_p)])
}

/// Same combination over several (observations, known symbols) blocks that
/// share the channel, as if the blocks were stacked along the symbol axis.
pub(crate) fn combine_known(parts: &[(&Array3<Complex64>, &Array2<Complex64>)]) -> Result<CombinedPilot> {
    let Some(&(first, _)) = parts.first() else {
        return Err(Error::Dimension("no symbol blocks to combine".into()));
    };
    let (_, n_ant, n_sc) = first.dim();
    let mut rows = 0usize;
    for (y, s) in parts {
        let (p, n, q) = y.dim();
        if (n, q) != (n_ant, n_sc) || s.dim() != (p, q) {
            return Err(Error::Dimension(format!(
                "observations {:?} do not match symbols {:?}",
                y.dim(),
                s.dim()
            )));
        }
        rows += p;
    }

    let mut energy = vec![0.0; n_sc];
    for (_, s) in parts {
        for ((_, q), v) in s.indexed_iter() {
            energy[q] += v.norm_sqr();
        }
    }
    if let Some(q) = energy.iter().position(|&e| !(e > 0.0)) {
        return Err(Error::ZeroPilotEnergy(q));
    }

    let mut acc = Array2::<Complex64>::zeros((n_ant, n_sc));
    for (y, s) in parts {
        for ((p, n, q), v) in y.indexed_iter() {
            acc[[n, q]] += s[[p, q]].conj() * v;
        }
    }
    for ((_, q), v) in acc.indexed_iter_mut() {
        *v /= energy[q];
    }
    Ok(CombinedPilot {
        y: acc,
        weight: rows as f64,
    })
}
