//! FFT evaluation engine, coarse-grid bookkeeping and Powell refinement.

mod dft;
mod grid;
mod powell;

pub use dft::{dft_forward_1d, dft_forward_2d};
pub(crate) use dft::dft_forward_2d_truncated;
pub use grid::{GridSpec, MetricSurface};
pub use powell::{powell_minimize, PowellResult, DEFAULT_MAX_ITER, DEFAULT_TOL};
