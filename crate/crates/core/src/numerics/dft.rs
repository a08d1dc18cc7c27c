//! Zero-padded forward DFTs backed by `rustfft`.
//!
//! Plans are cached per thread, so every entry point here is reentrant.

use std::cell::RefCell;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

/// Unnormalized forward DFT of `x` zero-padded to `out_len`:
/// `X[k] = Σ_m x[m]·exp(−j2π·m·k/out_len)`.
pub fn dft_forward_1d(x: &[Complex64], out_len: usize) -> Result<Vec<Complex64>> {
    if out_len < x.len() {
        return Err(Error::OutputTooShort {
            in_len: x.len(),
            out_len,
        });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); out_len];
    buf[..x.len()].copy_from_slice(x);
    if out_len > 0 {
        plan(out_len).process(&mut buf);
    }
    Ok(buf)
}

/// Separable 2-D forward DFT with zero padding to `out_rows × out_cols`.
pub fn dft_forward_2d(x: ArrayView2<'_, Complex64>, out_rows: usize, out_cols: usize) -> Result<Array2<Complex64>> {
    dft_forward_2d_truncated(x, out_rows, out_cols, out_rows)
}

/// As [`dft_forward_2d`] but only the first `keep_rows` output rows are
/// produced. The column transforms run first, so dropped rows cost nothing
/// in the second pass.
pub(crate) fn dft_forward_2d_truncated(
    x: ArrayView2<'_, Complex64>,
    out_rows: usize,
    out_cols: usize,
    keep_rows: usize,
) -> Result<Array2<Complex64>> {
    let (rows, cols) = x.dim();
    if out_rows < rows {
        return Err(Error::OutputTooShort {
            in_len: rows,
            out_len: out_rows,
        });
    }
    if out_cols < cols {
        return Err(Error::OutputTooShort {
            in_len: cols,
            out_len: out_cols,
        });
    }
    let keep_rows = keep_rows.min(out_rows);
    let mut out = Array2::zeros((keep_rows, out_cols));
    if keep_rows == 0 || out_cols == 0 {
        return Ok(out);
    }

    // column pass, only over the non-zero input columns
    let col_plan = plan(out_rows);
    let mut col = vec![Complex64::new(0.0, 0.0); out_rows];
    let mut col_scratch = vec![Complex64::new(0.0, 0.0); col_plan.get_inplace_scratch_len()];
    for c in 0..cols {
        col.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (dst, src) in col.iter_mut().zip(x.column(c)) {
            *dst = *src;
        }
        col_plan.process_with_scratch(&mut col, &mut col_scratch);
        for (r, v) in col.iter().take(keep_rows).enumerate() {
            out[[r, c]] = *v;
        }
    }

    // row pass; rows are contiguous in standard layout
    let row_plan = plan(out_cols);
    let mut scratch = vec![Complex64::new(0.0, 0.0); row_plan.get_inplace_scratch_len()];
    for mut row in out.rows_mut() {
        let slice = row.as_slice_mut().expect("standard layout");
        row_plan.process_with_scratch(slice, &mut scratch);
    }
    Ok(out)
}
