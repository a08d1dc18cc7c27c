//! CSV output. Reals carry 9 significant digits; an empty `ser` field means
//! the estimator does not decode data.

use std::io::{Read, Write};

use serde::Deserialize;

use super::{MetricsRecord, PointResult};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 11] = [
    "experiment",
    "sweep_param",
    "sweep_value",
    "snr_db",
    "estimator",
    "n_trials",
    "hitrate_aoa",
    "rmse_sin_aoa",
    "hitrate_range",
    "rmse_range_lambda",
    "ser",
];

pub const TRIALS_HEADER: [&str; 14] = [
    "experiment",
    "sweep_param",
    "sweep_value",
    "snr_db",
    "trial",
    "estimator",
    "range_true",
    "sin_aoa_true",
    "range_hat",
    "sin_aoa_hat",
    "err_range_lambda",
    "err_sin_aoa",
    "ser",
    "failed",
];

/// `%.9g`-style formatting.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mant));
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("csv: {e}"))
}

pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.experiment.clone(),
            r.sweep_param.as_str().to_string(),
            format_sig9(r.sweep_value),
            format_sig9(r.snr_db),
            r.estimator.as_str().to_string(),
            r.n_trials.to_string(),
            format_sig9(r.hitrate_aoa),
            format_sig9(r.rmse_sin_aoa),
            format_sig9(r.hitrate_range),
            format_sig9(r.rmse_range_lambda),
            r.ser.map(format_sig9).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// One row per (point, trial, estimator).
pub fn write_trials_csv<W: Write>(experiment: &str, points: &[PointResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIALS_HEADER).map_err(csv_err)?;
    for p in points {
        for t in &p.trials {
            for o in &t.outcomes {
                let (r_hat, s_hat) = o
                    .estimate
                    .map(|e| (format_sig9(e.range_hat), format_sig9(e.sin_aoa_hat)))
                    .unwrap_or_default();
                w.write_record([
                    experiment.to_string(),
                    p.point.param.as_str().to_string(),
                    format_sig9(p.point.value),
                    format_sig9(p.point.snr_db),
                    t.trial.to_string(),
                    o.estimator.as_str().to_string(),
                    format_sig9(t.scene.range),
                    format_sig9(t.scene.sin_aoa()),
                    r_hat,
                    s_hat,
                    format_sig9(o.err_range),
                    format_sig9(o.err_sin_aoa),
                    o.ser.map(format_sig9).unwrap_or_default(),
                    u8::from(o.estimate.is_none()).to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(csv_err)
}

/// A parsed row of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub snr_db: f64,
    pub estimator: String,
    pub n_trials: usize,
    pub hitrate_aoa: f64,
    pub rmse_sin_aoa: f64,
    pub hitrate_range: f64,
    pub rmse_range_lambda: f64,
    pub ser: Option<f64>,
}

/// Parse a metrics CSV, rejecting any header other than [`CSV_HEADER`].
pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Config(format!("unexpected csv header: {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}
