//! Unit-energy symbol alphabets, random symbol draws and minimum-distance
//! decisions.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationKind {
    Bpsk,
    Qpsk,
    Qam16,
}

const BPSK: [Complex64; 2] = [Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)];

const QPSK: [Complex64; 4] = [
    Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
];

// 1/sqrt(10)
const Q16: f64 = 0.316_227_766_016_837_94;

const fn q16(a: f64, b: f64) -> Complex64 {
    Complex64::new(a * Q16, b * Q16)
}

// Sorted lexicographically by (re, im) so the first minimum-distance hit is
// also the tie-break winner.
const QAM16: [Complex64; 16] = [
    q16(-3.0, -3.0),
    q16(-3.0, -1.0),
    q16(-3.0, 1.0),
    q16(-3.0, 3.0),
    q16(-1.0, -3.0),
    q16(-1.0, -1.0),
    q16(-1.0, 1.0),
    q16(-1.0, 3.0),
    q16(1.0, -3.0),
    q16(1.0, -1.0),
    q16(1.0, 1.0),
    q16(1.0, 3.0),
    q16(3.0, -3.0),
    q16(3.0, -1.0),
    q16(3.0, 1.0),
    q16(3.0, 3.0),
];

impl ConstellationKind {
    pub const ALL: [ConstellationKind; 3] = [Self::Bpsk, Self::Qpsk, Self::Qam16];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bpsk => "bpsk",
            Self::Qpsk => "qpsk",
            Self::Qam16 => "qam16",
        }
    }
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstellationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bpsk" => Ok(Self::Bpsk),
            "qpsk" => Ok(Self::Qpsk),
            "qam16" => Ok(Self::Qam16),
            other => Err(Error::Config(format!(
                "unknown constellation '{other}' (expected bpsk, qpsk or qam16)"
            ))),
        }
    }
}

/// The alphabet of `kind`, normalized to unit average energy and ordered by
/// (real, imaginary).
pub fn alphabet(kind: ConstellationKind) -> &'static [Complex64] {
    match kind {
        ConstellationKind::Bpsk => &BPSK,
        ConstellationKind::Qpsk => &QPSK,
        ConstellationKind::Qam16 => &QAM16,
    }
}

/// `rows × cols` symbols drawn i.i.d. uniformly from the alphabet.
pub fn draw_symbols<R: Rng + ?Sized>(
    kind: ConstellationKind,
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Array2<Complex64> {
    let points = alphabet(kind);
    Array2::from_shape_simple_fn((rows, cols), || points[rng.random_range(0..points.len())])
}

/// Minimum Euclidean distance decision. Ties go to the lexicographically
/// smallest point.
pub fn hard_decide(point: Complex64, kind: ConstellationKind) -> Result<Complex64> {
    if !(point.re.is_finite() && point.im.is_finite()) {
        return Err(Error::NonFinite(format!("decision input {point}")));
    }
    let points = alphabet(kind);
    let mut best = points[0];
    let mut best_d = (point - best).norm_sqr();
    for &p in &points[1..] {
        let d = (point - p).norm_sqr();
        if d < best_d {
            best = p;
            best_d = d;
        }
    }
    Ok(best)
}
