//! Presets, configuration overrides and file output for the `oppradar` binary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use oppradar_core::constellation::ConstellationKind;
use oppradar_core::estimators::{jpudl_coarse, pilot_combine, CoarseSearch, DataCovariance, EstimatorKind};
use oppradar_core::harness::{
    format_sig9, trial_observations, write_metrics_csv, write_trials_csv, ExperimentSpec, MetricsRecord, SceneMode,
    Sweep,
};
use oppradar_core::model::{SceneTruth, SystemConfig};
use oppradar_core::numerics::GridSpec;

/// Environment variable consulted for `--seed` when the flag is absent.
pub const SEED_ENV: &str = "OPPRADAR_SEED";

const DEFAULT_SEED: u64 = 20_240_601;
const DESK_TRIALS: usize = 1000;

/// Baseline SNR-sweep system: P=1 BPSK pilot, D=32 16QAM data, Q=256 at 15 kHz,
/// N=16 at half-wavelength spacing, 3.5 GHz carrier.
pub fn fig3_system() -> SystemConfig {
    SystemConfig {
        n_antennas: 16,
        antenna_spacing: 0.5,
        n_subcarriers: 256,
        subcarrier_spacing: 15e3,
        carrier_freq: 3.5e9,
        n_pilot_symbols: 1,
        n_data_symbols: 32,
    }
}

/// SNR sweep from −40 to 20 dB in 2 dB steps, every estimator.
pub fn preset_fig3() -> ExperimentSpec {
    ExperimentSpec {
        name: "fig3".into(),
        system: fig3_system(),
        sweep: Sweep::SnrDb((0..=30).map(|i| -40.0 + 2.0 * i as f64).collect()),
        snr_db: vec![],
        n_trials: DESK_TRIALS,
        master_seed: DEFAULT_SEED,
        estimators: EstimatorKind::ALL.to_vec(),
        grid: GridSpec::default(),
        data_constellation: ConstellationKind::Qam16,
        scene: SceneMode::default(),
    }
}

fn fig5_estimators() -> Vec<EstimatorKind> {
    vec![
        EstimatorKind::Jpudl,
        EstimatorKind::PilotOnly,
        EstimatorKind::Bound,
        EstimatorKind::DdLmmse,
    ]
}

/// N ∈ {2, 4, 8, 16, 32} at −20 and −10 dB, Q = 256.
pub fn preset_fig5a() -> ExperimentSpec {
    ExperimentSpec {
        name: "fig5a".into(),
        sweep: Sweep::NAntennas(vec![2, 4, 8, 16, 32]),
        snr_db: vec![-20.0, -10.0],
        estimators: fig5_estimators(),
        ..preset_fig3()
    }
}

/// Q ∈ {16, …, 512} (powers of two) at −20 and −10 dB, N = 16.
pub fn preset_fig5b() -> ExperimentSpec {
    ExperimentSpec {
        name: "fig5b".into(),
        sweep: Sweep::NSubcarriers(vec![16, 32, 64, 128, 256, 512]),
        snr_db: vec![-20.0, -10.0],
        estimators: fig5_estimators(),
        ..preset_fig3()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Snr,
    Antennas,
    Subcarriers,
}

impl SweepKind {
    pub fn preset(self) -> ExperimentSpec {
        match self {
            Self::Snr => preset_fig3(),
            Self::Antennas => preset_fig5a(),
            Self::Subcarriers => preset_fig5b(),
        }
    }

    fn matches(self, sweep: &Sweep) -> bool {
        matches!(
            (self, sweep),
            (Self::Snr, Sweep::SnrDb(_))
                | (Self::Antennas, Sweep::NAntennas(_))
                | (Self::Subcarriers, Sweep::NSubcarriers(_))
        )
    }
}

/// Command-line overrides, applied on top of a preset or config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub snr_db: Option<Vec<f64>>,
    pub n_trials: Option<usize>,
    pub master_seed: Option<u64>,
    pub estimators: Option<Vec<EstimatorKind>>,
    pub pad: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, spec: &mut ExperimentSpec) {
        if let Some(snr) = &self.snr_db {
            match &mut spec.sweep {
                Sweep::SnrDb(v) => *v = snr.clone(),
                _ => spec.snr_db = snr.clone(),
            }
        }
        if let Some(n) = self.n_trials {
            spec.n_trials = n;
        }
        if let Some(s) = self.master_seed {
            spec.master_seed = s;
        }
        if let Some(e) = &self.estimators {
            spec.estimators = e.clone();
        }
        if let Some(p) = self.pad {
            spec.grid = GridSpec {
                pad_range: p,
                pad_aoa: p,
            };
        }
    }
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Config file (or the sweep's preset), then overrides, then validation.
pub fn resolve_spec(kind: SweepKind, config: Option<&Path>, overrides: &Overrides) -> Result<ExperimentSpec> {
    let mut spec = match config {
        Some(p) => load_spec(p)?,
        None => kind.preset(),
    };
    if !kind.matches(&spec.sweep) {
        bail!("config sweeps '{}', which this subcommand does not run", spec.sweep.param().as_str());
    }
    overrides.apply(&mut spec);
    spec.validate()?;
    Ok(spec)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn save_metrics(records: &[MetricsRecord], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_metrics_csv(records, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Run a sweep, writing the metrics CSV and optionally the per-trial dump.
pub fn run_sweep(spec: &ExperimentSpec, out: &Path, trials_out: Option<&Path>) -> Result<Vec<MetricsRecord>> {
    let points = oppradar_core::harness::run_experiment_detailed(spec)?;
    let records: Vec<MetricsRecord> = points.iter().flat_map(|p| p.records.iter().cloned()).collect();
    save_metrics(&records, out)?;
    if let Some(path) = trials_out {
        let mut w = create(path)?;
        write_trials_csv(&spec.name, &points, &mut w)?;
        w.flush()?;
    }
    Ok(records)
}

/// Single-point spec used by `single` and `dump-surface`.
pub fn single_point_spec(mut base: ExperimentSpec, snr_db: f64, seed: u64, scene: Option<(f64, f64)>) -> ExperimentSpec {
    base.sweep = Sweep::SnrDb(vec![snr_db]);
    base.snr_db.clear();
    base.n_trials = 1;
    base.master_seed = seed;
    if let Some((range, aoa)) = scene {
        base.scene = SceneMode::Fixed { range, aoa };
    }
    base
}

/// Coarse metric surface of trial `trial` of a single-point spec.
pub fn surface_for(spec: &ExperimentSpec, trial: usize, pilot_only: bool) -> Result<(SceneTruth, CoarseSearch)> {
    spec.validate()?;
    let point = spec.points()[0];
    let (scene, frame, obs) = trial_observations(spec, &point, trial)?;
    let pc = pilot_combine(&obs.pilot, &frame.pilots)?;
    let cov = (!pilot_only && point.system.n_data_symbols > 0).then(|| DataCovariance::from_observations(&obs.data));
    let coarse = jpudl_coarse(&pc, cov.as_ref(), &point.system, &spec.grid)?;
    Ok((scene, coarse))
}

pub const SURFACE_HEADER: [&str; 5] = ["k_r", "k_a", "range_lambda", "sin_aoa", "value"];

/// One row per grid bin, range bins outer. Invisible aoa bins are kept.
pub fn write_surface<W: Write>(coarse: &CoarseSearch, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SURFACE_HEADER)?;
    let s = &coarse.surface;
    for ((k_r, k_a), v) in s.values.indexed_iter() {
        w.write_record([
            k_r.to_string(),
            k_a.to_string(),
            format_sig9(s.range_axis[k_r]),
            format_sig9(s.sin_aoa_axis[k_a]),
            format_sig9(*v),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn dump_surface(spec: &ExperimentSpec, pilot_only: bool, out: &Path) -> Result<(SceneTruth, CoarseSearch)> {
    let (scene, coarse) = surface_for(spec, 0, pilot_only)?;
    let mut w = create(out)?;
    write_surface(&coarse, &mut w)?;
    w.flush()?;
    Ok((scene, coarse))
}
