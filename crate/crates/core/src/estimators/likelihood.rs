//! Concentrated log-likelihood with γ and the relaxed data symbols
//! projected out.

use std::f64::consts::PI;

use ndarray::{Array2, Array3};
use num_complex::Complex64;

use super::combine::CombinedPilot;
use crate::error::{Error, Result};
use crate::model::{steering_aoa_sin, SystemConfig};

/// `C = Σ_{d,q} 𝒴[d,:,q]·𝒴[d,:,q]ᴴ`, the spatial covariance of the data block.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCovariance {
    pub matrix: Array2<Complex64>,
}

impl DataCovariance {
    pub fn from_observations(y_d: &Array3<Complex64>) -> Self {
        let (n_sym, n_ant, n_sc) = y_d.dim();
        let y = y_d.as_standard_layout();
        let flat = y.as_slice().expect("standard layout is contiguous");
        let row = |d: usize, n: usize| &flat[(d * n_ant + n) * n_sc..][..n_sc];
        let mut c = Array2::<Complex64>::zeros((n_ant, n_ant));
        for m in 0..n_ant {
            for n in 0..=m {
                // Σ_d Σ_q y_m·conj(y_n), split into real arithmetic so it vectorizes
                let (mut re, mut im) = (0.0, 0.0);
                for d in 0..n_sym {
                    for (x, z) in row(d, m).iter().zip(row(d, n)) {
                        re += x.re * z.re + x.im * z.im;
                        im += x.im * z.re - x.re * z.im;
                    }
                }
                c[[m, n]] = Complex64::new(re, if m == n { 0.0 } else { im });
                c[[n, m]] = Complex64::new(re, if m == n { 0.0 } else { -im });
            }
        }
        Self { matrix: c }
    }

    pub fn n_antennas(&self) -> usize {
        self.matrix.nrows()
    }

    /// Diagonal sums `r[τ] = Σ_n C[n+τ, n]` for τ = 0..N.
    pub fn lag_sums(&self) -> Vec<Complex64> {
        let n = self.n_antennas();
        (0..n)
            .map(|tau| (0..n - tau).map(|k| self.matrix[[k + tau, k]]).sum())
            .collect()
    }

    /// `aᴴ C a / N` at spatial direction `sin_aoa`.
    pub fn projected_energy(&self, sin_aoa: f64, cfg: &SystemConfig) -> f64 {
        let a = steering_aoa_sin(sin_aoa, cfg);
        let ca = self.matrix.dot(&a);
        let quad: Complex64 = a.iter().zip(ca.iter()).map(|(x, y)| x.conj() * y).sum();
        quad.re.max(0.0) / cfg.n_antennas as f64
    }
}

/// `vᴴ vec(Y)` with `v = a(sinθ) ⊗ b(R)`.
fn correlate(pc: &CombinedPilot, range: f64, sin_aoa: f64, cfg: &SystemConfig) -> Complex64 {
    let r_slope = 2.0 * PI * cfg.freq_ratio() * range;
    let a_slope = 2.0 * PI * cfg.antenna_spacing * sin_aoa;
    let b_conj: Vec<Complex64> = (0..cfg.n_subcarriers)
        .map(|q| Complex64::from_polar(1.0, r_slope * q as f64))
        .collect();
    pc.y
        .rows()
        .into_iter()
        .enumerate()
        .map(|(n, row)| {
            let inner: Complex64 = row.iter().zip(&b_conj).map(|(y, b)| y * b).sum();
            inner * Complex64::from_polar(1.0, a_slope * n as f64)
        })
        .sum()
}

/// Closed-form LS channel coefficient `vᴴy / (NQ)` at a candidate position.
pub fn nuisance_gamma_hat(pc: &CombinedPilot, range: f64, sin_aoa: f64, cfg: &SystemConfig) -> Complex64 {
    correlate(pc, range, sin_aoa, cfg) / (cfg.n_antennas * cfg.n_subcarriers) as f64
}

/// Direct evaluation of the projection metric
/// `w·|vᴴy|²/(NQ) + aᴴ C a / N` at one (range, sinθ) candidate.
pub fn metric_direct(
    pc: &CombinedPilot,
    data: Option<&DataCovariance>,
    range: f64,
    sin_aoa: f64,
    cfg: &SystemConfig,
) -> f64 {
    Likelihood::new(cfg, pc, data).evaluate(range, sin_aoa)
}

/// Borrowing evaluator reused across the many probes of one refinement.
#[derive(Debug, Clone, Copy)]
pub struct Likelihood<'a> {
    cfg: &'a SystemConfig,
    pilot: &'a CombinedPilot,
    data: Option<&'a DataCovariance>,
}

impl<'a> Likelihood<'a> {
    pub fn new(cfg: &'a SystemConfig, pilot: &'a CombinedPilot, data: Option<&'a DataCovariance>) -> Self {
        Self { cfg, pilot, data }
    }

    pub fn check(&self) -> Result<()> {
        let want = (self.cfg.n_antennas, self.cfg.n_subcarriers);
        if self.pilot.y.dim() != want {
            return Err(Error::Dimension(format!(
                "combined pilot {:?}, expected {want:?}",
                self.pilot.y.dim()
            )));
        }
        if let Some(c) = self.data {
            if c.n_antennas() != self.cfg.n_antennas {
                return Err(Error::Dimension(format!(
                    "data covariance is {}x{}, expected N = {}",
                    c.n_antennas(),
                    c.n_antennas(),
                    self.cfg.n_antennas
                )));
            }
        }
        Ok(())
    }

    pub fn pilot_term(&self, range: f64, sin_aoa: f64) -> f64 {
        let nq = (self.cfg.n_antennas * self.cfg.n_subcarriers) as f64;
        self.pilot.weight * correlate(self.pilot, range, sin_aoa, self.cfg).norm_sqr() / nq
    }

    pub fn data_term(&self, sin_aoa: f64) -> f64 {
        self.data.map_or(0.0, |c| c.projected_energy(sin_aoa, self.cfg))
    }

    pub fn evaluate(&self, range: f64, sin_aoa: f64) -> f64 {
        let p = self.pilot_term(range, sin_aoa);
        match self.data {
            Some(_) => p + self.data_term(sin_aoa),
            None => p,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{steering_range, SystemConfig};
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn small() -> SystemConfig {
        SystemConfig {
            n_antennas: 4,
            n_subcarriers: 8,
            n_pilot_symbols: 1,
            n_data_symbols: 2,
            ..SystemConfig::default()
        }
    }

    fn kron(cfg: &SystemConfig, range: f64, s: f64) -> Array1<Complex64> {
        let a = steering_aoa_sin(s, cfg);
        let b = steering_range(range, cfg).unwrap();
        Array1::from_iter(a.iter().flat_map(|x| b.iter().map(move |y| x * y)))
    }

    /// ‖P y‖² with the projector formed explicitly as a matrix.
    fn explicit_projection_energy(v: &Array1<Complex64>, y: &Array1<Complex64>) -> f64 {
        let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let proj = Array2::from_shape_fn((v.len(), v.len()), |(i, j)| v[i] * v[j].conj() / nv);
        proj.dot(y).iter().map(|z| z.norm_sqr()).sum()
    }

    #[test]
    fn gamma_hat_special_cases() {
        let cfg = small();
        let (r, s) = (3000.0, 0.37);
        let gamma = Complex64::from_polar(1.0, 0.8);
        let v = kron(&cfg, r, s);
        let y = Array2::from_shape_vec((4, 8), v.iter().map(|z| gamma * z).collect()).unwrap();
        let pc = CombinedPilot { y, weight: 1.0 };
        assert!((nuisance_gamma_hat(&pc, r, s, &cfg) - gamma).norm() < 1e-12);

        // a tone at a different spatial DFT bin is orthogonal
        let s_other = s + 1.0 / (cfg.n_antennas as f64 * cfg.antenna_spacing);
        assert!(nuisance_gamma_hat(&pc, r, s_other, &cfg).norm() < 1e-12);
    }

    #[test]
    fn gamma_hat_matches_real_least_squares() {
        let cfg = small();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let y = Array2::from_shape_simple_fn((4, 8), || rand_c(&mut rng));
            let (r, s) = (rng.random_range(0.0..1e5), rng.random_range(-1.0..1.0));
            let v = kron(&cfg, r, s);
            // min ‖y − (α + jβ) v‖² as a 2-parameter real problem: normal equations
            let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (vi, yi) in v.iter().zip(y.iter()) {
                let c1 = [vi.re, vi.im]; // column for α
                let c2 = [-vi.im, vi.re]; // column for β
                let t = [yi.re, yi.im];
                a11 += c1[0] * c1[0] + c1[1] * c1[1];
                a12 += c1[0] * c2[0] + c1[1] * c2[1];
                a22 += c2[0] * c2[0] + c2[1] * c2[1];
                b1 += c1[0] * t[0] + c1[1] * t[1];
                b2 += c2[0] * t[0] + c2[1] * t[1];
            }
            let det = a11 * a22 - a12 * a12;
            let alpha = (b1 * a22 - b2 * a12) / det;
            let beta = (a11 * b2 - a12 * b1) / det;
            let pc = CombinedPilot { y, weight: 1.0 };
            let got = nuisance_gamma_hat(&pc, r, s, &cfg);
            assert!((got - Complex64::new(alpha, beta)).norm() < 1e-12 * (1.0 + got.norm()));
        }
    }

    #[test]
    fn metric_matches_explicit_projectors() {
        let cfg = small();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..25 {
            let y = Array2::from_shape_simple_fn((4, 8), || rand_c(&mut rng));
            let y_d = Array3::from_shape_simple_fn((2, 4, 8), || rand_c(&mut rng));
            let w = rng.random_range(1.0..5.0);
            let (r, s) = (rng.random_range(0.0..1e5), rng.random_range(-1.0..1.0));

            let v = kron(&cfg, r, s);
            let yv = Array1::from_iter(y.iter().copied());
            let a = steering_aoa_sin(s, &cfg);
            let mut want = w * explicit_projection_energy(&v, &yv);
            for d in 0..2 {
                for q in 0..8 {
                    let col = Array1::from_iter((0..4).map(|n| y_d[[d, n, q]]));
                    want += explicit_projection_energy(&a, &col);
                }
            }

            let pc = CombinedPilot { y, weight: w };
            let cov = DataCovariance::from_observations(&y_d);
            let got = metric_direct(&pc, Some(&cov), r, s, &cfg);
            assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");

            // empty data block leaves only the pilot term
            let zero = DataCovariance::from_observations(&Array3::zeros((2, 4, 8)));
            let pilot_only = metric_direct(&pc, None, r, s, &cfg);
            assert_eq!(metric_direct(&pc, Some(&zero), r, s, &cfg), pilot_only);
        }
    }

    #[test]
    fn projector_identity_equals_ls_residual() {
        let cfg = small();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let y = Array2::from_shape_simple_fn((4, 8), || rand_c(&mut rng));
            let w = rng.random_range(1.0..5.0);
            let (r, s) = (rng.random_range(0.0..1e5), rng.random_range(-1.0..1.0));
            let pc = CombinedPilot { y: y.clone(), weight: w };
            let lik = Likelihood::new(&cfg, &pc, None);
            let energy: f64 = y.iter().map(|z| z.norm_sqr()).sum();
            let lhs = w * energy - lik.pilot_term(r, s);
            let gamma = nuisance_gamma_hat(&pc, r, s, &cfg);
            let v = kron(&cfg, r, s);
            let resid: f64 = y.iter().zip(v.iter()).map(|(yi, vi)| (yi - gamma * vi).norm_sqr()).sum();
            assert!((lhs - w * resid).abs() <= 1e-10 * w * resid);
        }
    }

    #[test]
    fn covariance_is_hermitian_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y_d = Array3::from_shape_simple_fn((3, 6, 10), || rand_c(&mut rng));
        let c = DataCovariance::from_observations(&y_d);
        let trace: f64 = (0..6).map(|i| c.matrix[[i, i]].re).sum();
        for i in 0..6 {
            for j in 0..6 {
                assert!((c.matrix[[i, j]] - c.matrix[[j, i]].conj()).norm() < 1e-12);
                let direct: Complex64 = (0..3)
                    .flat_map(|d| (0..10).map(move |q| (d, q)))
                    .map(|(d, q)| y_d[[d, i, q]] * y_d[[d, j, q]].conj())
                    .sum();
                assert!((c.matrix[[i, j]] - direct).norm() < 1e-12);
            }
        }
        // quadratic form stays non-negative on random probes
        for _ in 0..100 {
            let x = Array1::from_shape_simple_fn(6, || rand_c(&mut rng));
            let q: Complex64 = x.iter().zip(c.matrix.dot(&x).iter()).map(|(a, b)| a.conj() * b).sum();
            assert!(q.re >= -1e-9 * trace);
        }
    }
}
