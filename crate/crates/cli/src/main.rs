use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use oppradar_cli::{
    dump_surface, preset_fig3, resolve_spec, run_sweep, single_point_spec, Overrides, SweepKind, SEED_ENV,
};
use oppradar_core::estimators::EstimatorKind;
use oppradar_core::harness::{run_trial, ExperimentSpec};

#[derive(Parser)]
#[command(name = "oppradar", version, about = "OFDM opportunistic radar localization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// HitRate/RMSE against SNR (defaults to the baseline system).
    SweepSnr(SweepArgs),
    /// RMSE against the number of antennas.
    SweepN(SweepArgs),
    /// RMSE against the number of subcarriers.
    SweepQ(SweepArgs),
    /// One trial at one SNR; prints every estimate as JSON.
    Single(PointArgs),
    /// Write the coarse metric surface of one trial as CSV.
    DumpSurface(SurfaceArgs),
}

#[derive(Args)]
struct Common {
    /// Experiment spec (JSON). Defaults to the subcommand's preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated SNR values in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<EstimatorKind>>,
    /// Zero-padding factor for both grid axes.
    #[arg(long)]
    pad: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trials: Option<usize>,
    /// Metrics CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write one row per trial and estimator here.
    #[arg(long)]
    trials_out: Option<PathBuf>,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    common: Common,
    /// Target range in carrier wavelengths. Random when omitted.
    #[arg(long, requires = "aoa", allow_hyphen_values = true)]
    range: Option<f64>,
    /// Target angle in radians.
    #[arg(long, requires = "range", allow_hyphen_values = true)]
    aoa: Option<f64>,
    #[arg(long, default_value_t = 0)]
    trial: usize,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SurfaceArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, requires = "aoa", allow_hyphen_values = true)]
    range: Option<f64>,
    #[arg(long, requires = "range", allow_hyphen_values = true)]
    aoa: Option<f64>,
    /// Leave the data term out.
    #[arg(long)]
    pilot_only: bool,
    #[arg(long)]
    out: PathBuf,
}

fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => Ok(Some(s.trim().parse().map_err(|e| anyhow::anyhow!("{SEED_ENV}={s}: {e}"))?)),
        Err(_) => Ok(None),
    }
}

impl Common {
    fn overrides(&self, trials: Option<usize>) -> Result<Overrides> {
        Ok(Overrides {
            snr_db: self.snr.clone(),
            n_trials: trials,
            master_seed: match self.seed {
                Some(s) => Some(s),
                None => seed_from_env()?,
            },
            estimators: self.estimators.clone(),
            pad: self.pad,
        })
    }

    /// Single-point spec: first `--snr` value (0 dB if none).
    fn point_spec(&self, scene: Option<(f64, f64)>) -> Result<ExperimentSpec> {
        let mut base = match &self.config {
            Some(p) => oppradar_cli::load_spec(p)?,
            None => preset_fig3(),
        };
        let o = self.overrides(None)?;
        let snr = o.snr_db.as_ref().and_then(|v| v.first().copied()).unwrap_or(0.0);
        let seed = o.master_seed.unwrap_or(base.master_seed);
        Overrides {
            snr_db: None,
            master_seed: None,
            ..o
        }
        .apply(&mut base);
        let spec = single_point_spec(base, snr, seed, scene);
        spec.validate()?;
        Ok(spec)
    }
}

fn print_spec(spec: &ExperimentSpec) -> Result<()> {
    eprintln!("{}", serde_json::to_string_pretty(spec)?);
    Ok(())
}

fn sweep(kind: SweepKind, args: SweepArgs) -> Result<()> {
    let spec = resolve_spec(kind, args.common.config.as_deref(), &args.common.overrides(args.trials)?)?;
    print_spec(&spec)?;
    let records = run_sweep(&spec, &args.out, args.trials_out.as_deref())?;
    eprintln!("wrote {} rows to {}", records.len(), args.out.display());
    Ok(())
}

fn single(args: PointArgs) -> Result<()> {
    let scene = args.range.zip(args.aoa);
    let spec = args.common.point_spec(scene)?;
    print_spec(&spec)?;
    let point = spec.points()[0];
    let out = run_trial(&spec, &point, args.trial)?;
    let estimates: Vec<_> = out
        .outcomes
        .iter()
        .map(|o| {
            json!({
                "estimator": o.estimator,
                "range_hat": o.estimate.map(|e| e.range_hat),
                "sin_aoa_hat": o.estimate.map(|e| e.sin_aoa_hat),
                "coarse_bins": o.estimate.map(|e| e.coarse_bins),
                "err_range": o.err_range,
                "err_sin_aoa": o.err_sin_aoa,
                "ser": o.ser,
            })
        })
        .collect();
    let doc = json!({
        "snr_db": point.snr_db,
        "trial": args.trial,
        "scene": {
            "range": out.scene.range,
            "aoa": out.scene.aoa,
            "sin_aoa": out.scene.sin_aoa(),
        },
        "estimates": estimates,
    });
    let text = serde_json::to_string_pretty(&doc)?;
    match args.out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn surface(args: SurfaceArgs) -> Result<()> {
    let spec = args.common.point_spec(args.range.zip(args.aoa))?;
    print_spec(&spec)?;
    let (scene, coarse) = dump_surface(&spec, args.pilot_only, &args.out)?;
    eprintln!(
        "scene range {} sin_aoa {}; peak at bins {:?}",
        scene.range,
        scene.sin_aoa(),
        coarse.peak
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::SweepSnr(a) => sweep(SweepKind::Snr, a),
        Command::SweepN(a) => sweep(SweepKind::Antennas, a),
        Command::SweepQ(a) => sweep(SweepKind::Subcarriers, a),
        Command::Single(a) => single(a),
        Command::DumpSurface(a) => surface(a),
    }
}
