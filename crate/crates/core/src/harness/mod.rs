//! Monte-Carlo experiment runner.
//!
//! Every trial owns its random streams, keyed by `(master_seed, trial)` only.
//! Sweep points therefore reuse the same trial streams, which pairs them, and
//! results do not depend on how trials are scheduled across workers.

mod metrics;
mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use metrics::{hit_rate, rmse, rmse_of_hits};
pub use report::{format_sig9, read_metrics_csv, write_metrics_csv, write_trials_csv, CsvRow, CSV_HEADER, TRIALS_HEADER};

use crate::constellation::ConstellationKind;
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_bound, estimate_dd, estimate_jpudl, estimate_pilot_only, DdVariant, Estimate, EstimatorKind,
};
use crate::model::{aoa_resolution, max_unambiguous_range, range_resolution, SceneTruth, SystemConfig};
use crate::numerics::GridSpec;
use crate::simulator::{draw_channel_coefficient, draw_scene, simulate, Frame, NoiseSpec, Observations, SceneBounds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    SnrDb(Vec<f64>),
    NAntennas(Vec<usize>),
    NSubcarriers(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    SnrDb,
    NAntennas,
    NSubcarriers,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SnrDb => "snr_db",
            Self::NAntennas => "n_antennas",
            Self::NSubcarriers => "n_subcarriers",
        }
    }
}

impl Sweep {
    pub fn param(&self) -> SweepParam {
        match self {
            Self::SnrDb(_) => SweepParam::SnrDb,
            Self::NAntennas(_) => SweepParam::NAntennas,
            Self::NSubcarriers(_) => SweepParam::NSubcarriers,
        }
    }

    fn len(&self) -> usize {
        match self {
            Self::SnrDb(v) => v.len(),
            Self::NAntennas(v) => v.len(),
            Self::NSubcarriers(v) => v.len(),
        }
    }
}

/// How the target is placed in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneMode {
    /// Fresh uniform draw per trial.
    Random(SceneBounds),
    /// Same range (wavelengths) and angle (radians) every trial; γ is still drawn.
    Fixed { range: f64, aoa: f64 },
}

impl Default for SceneMode {
    fn default() -> Self {
        Self::Random(SceneBounds::default())
    }
}

fn default_constellation() -> ConstellationKind {
    ConstellationKind::Qam16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub system: SystemConfig,
    pub sweep: Sweep,
    /// SNR points for N and Q sweeps. Must be empty for an SNR sweep.
    #[serde(default)]
    pub snr_db: Vec<f64>,
    pub n_trials: usize,
    pub master_seed: u64,
    pub estimators: Vec<EstimatorKind>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_constellation")]
    pub data_constellation: ConstellationKind,
    #[serde(default)]
    pub scene: SceneMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub param: SweepParam,
    pub value: f64,
    pub snr_db: f64,
    pub system: SystemConfig,
}

impl ExperimentSpec {
    /// Sweep points in output order: SNR outer, swept parameter inner.
    pub fn points(&self) -> Vec<SweepPoint> {
        let param = self.sweep.param();
        let mut out = Vec::new();
        let mut push = |value: f64, snr_db: f64, system: SystemConfig| {
            out.push(SweepPoint {
                index: out.len(),
                param,
                value,
                snr_db,
                system,
            })
        };
        match &self.sweep {
            Sweep::SnrDb(v) => v.iter().for_each(|&s| push(s, s, self.system)),
            Sweep::NAntennas(v) => {
                for &s in &self.snr_db {
                    for &n in v {
                        push(n as f64, s, SystemConfig { n_antennas: n, ..self.system });
                    }
                }
            }
            Sweep::NSubcarriers(v) => {
                for &s in &self.snr_db {
                    for &q in v {
                        push(q as f64, s, SystemConfig { n_subcarriers: q, ..self.system });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be >= 1".into()));
        }
        if self.sweep.len() == 0 {
            return Err(Error::Config("sweep list is empty".into()));
        }
        match (&self.sweep, self.snr_db.is_empty()) {
            (Sweep::SnrDb(_), false) => {
                return Err(Error::Config("snr_db must be empty for an SNR sweep".into()));
            }
            (Sweep::NAntennas(_) | Sweep::NSubcarriers(_), true) => {
                return Err(Error::Config("parameter sweeps need at least one snr_db value".into()));
            }
            _ => {}
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators requested".into()));
        }
        for (i, k) in self.estimators.iter().enumerate() {
            if self.estimators[..i].contains(k) {
                return Err(Error::Config(format!("estimator '{k}' listed twice")));
            }
        }
        for p in self.points() {
            NoiseSpec::from_snr_db(p.snr_db)?;
            p.system.validate()?;
            self.grid.validate(&p.system)?;
            match self.scene {
                SceneMode::Random(b) => {
                    b.range_interval(&p.system)?;
                }
                SceneMode::Fixed { range, aoa } => {
                    SceneTruth::new(&p.system, range, aoa, num_complex::Complex64::new(1.0, 0.0))?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stream {
    Scene = 0,
    Symbols = 1,
    Noise = 2,
}

/// Independent ChaCha stream for one purpose within one trial.
fn trial_rng(master_seed: u64, trial: usize, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((trial as u64) * 4 + purpose as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOutcome {
    pub estimator: EstimatorKind,
    /// `None` when the estimator returned an error.
    pub estimate: Option<Estimate>,
    /// sinθ̂ − sinθ.
    pub err_sin_aoa: f64,
    /// R̂ − R, wavelengths.
    pub err_range: f64,
    /// Decision-directed estimators only.
    pub ser: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub scene: SceneTruth,
    pub outcomes: Vec<EstimatorOutcome>,
}

/// Scene, frame and observations of one trial, exactly as [`run_trial`] sees them.
pub fn trial_observations(
    spec: &ExperimentSpec,
    point: &SweepPoint,
    trial: usize,
) -> Result<(SceneTruth, Frame, Observations)> {
    let cfg = &point.system;
    let mut scene_rng = trial_rng(spec.master_seed, trial, Stream::Scene);
    let scene = match spec.scene {
        SceneMode::Random(b) => draw_scene(cfg, &b, &mut scene_rng)?,
        SceneMode::Fixed { range, aoa } => {
            SceneTruth::new(cfg, range, aoa, draw_channel_coefficient(&mut scene_rng))?
        }
    };
    let frame = Frame::draw(
        cfg,
        spec.data_constellation,
        &mut trial_rng(spec.master_seed, trial, Stream::Symbols),
    );
    let noise = NoiseSpec::from_snr_db(point.snr_db)?;
    let obs = simulate(cfg, &scene, &frame, &noise, &mut trial_rng(spec.master_seed, trial, Stream::Noise))?;
    Ok((scene, frame, obs))
}

/// Draw, simulate and run every requested estimator on one set of observations.
pub fn run_trial(spec: &ExperimentSpec, point: &SweepPoint, trial: usize) -> Result<TrialOutcome> {
    let cfg = &point.system;
    let (scene, frame, obs) = trial_observations(spec, point, trial)?;

    let span_sin = 2.0;
    let span_range = max_unambiguous_range(cfg);
    let outcomes = spec
        .estimators
        .iter()
        .map(|&k| {
            let (res, ser) = match k {
                EstimatorKind::Jpudl => (estimate_jpudl(&obs, &frame.pilots, cfg, &spec.grid), None),
                EstimatorKind::PilotOnly => (estimate_pilot_only(&obs, &frame.pilots, cfg, &spec.grid), None),
                EstimatorKind::Bound => (estimate_bound(&obs, &frame.pilots, &frame.data, cfg, &spec.grid), None),
                EstimatorKind::DdLmmse | EstimatorKind::DdZf => {
                    let variant = if k == EstimatorKind::DdZf {
                        DdVariant::Zf
                    } else {
                        DdVariant::Lmmse
                    };
                    match estimate_dd(&obs, &frame.pilots, cfg, &spec.grid, spec.data_constellation, variant) {
                        Ok((est, dec)) => (Ok(est), Some(dec.symbol_error_rate(&frame.data))),
                        Err(e) => (Err(e), None),
                    }
                }
            };
            match res {
                Ok(est) => EstimatorOutcome {
                    estimator: k,
                    estimate: Some(est),
                    err_sin_aoa: est.sin_aoa_hat - scene.sin_aoa(),
                    err_range: est.range_hat - scene.range,
                    ser,
                },
                Err(_) => EstimatorOutcome {
                    estimator: k,
                    estimate: None,
                    err_sin_aoa: span_sin,
                    err_range: span_range,
                    ser,
                },
            }
        })
        .collect();
    Ok(TrialOutcome { trial, scene, outcomes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub experiment: String,
    pub point: usize,
    pub sweep_param: SweepParam,
    pub sweep_value: f64,
    pub snr_db: f64,
    pub estimator: EstimatorKind,
    pub n_trials: usize,
    pub hitrate_aoa: f64,
    /// Over all trials, misses included.
    pub rmse_sin_aoa: f64,
    pub hitrate_range: f64,
    pub rmse_range_lambda: f64,
    pub rmse_sin_aoa_hits: Option<f64>,
    pub rmse_range_hits: Option<f64>,
    /// Mean symbol error rate, decision-directed estimators only.
    pub ser: Option<f64>,
    /// Trials where the estimator returned an error.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: SweepPoint,
    pub trials: Vec<TrialOutcome>,
    pub records: Vec<MetricsRecord>,
}

fn aggregate(spec: &ExperimentSpec, point: &SweepPoint, trials: &[TrialOutcome]) -> Vec<MetricsRecord> {
    let res_sin = aoa_resolution(&point.system);
    let res_range = range_resolution(&point.system);
    spec.estimators
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let outs: Vec<&EstimatorOutcome> = trials.iter().map(|t| &t.outcomes[i]).collect();
            let e_sin: Vec<f64> = outs.iter().map(|o| o.err_sin_aoa).collect();
            let e_range: Vec<f64> = outs.iter().map(|o| o.err_range).collect();
            let sers: Vec<f64> = outs.iter().filter_map(|o| o.ser).collect();
            MetricsRecord {
                experiment: spec.name.clone(),
                point: point.index,
                sweep_param: point.param,
                sweep_value: point.value,
                snr_db: point.snr_db,
                estimator: k,
                n_trials: trials.len(),
                hitrate_aoa: hit_rate(&e_sin, res_sin),
                rmse_sin_aoa: rmse(&e_sin),
                hitrate_range: hit_rate(&e_range, res_range),
                rmse_range_lambda: rmse(&e_range),
                rmse_sin_aoa_hits: rmse_of_hits(&e_sin, res_sin),
                rmse_range_hits: rmse_of_hits(&e_range, res_range),
                ser: (k.is_decision_directed() && !sers.is_empty())
                    .then(|| sers.iter().sum::<f64>() / sers.len() as f64),
                failures: outs.iter().filter(|o| o.estimate.is_none()).count(),
            }
        })
        .collect()
}

/// Run every point; trials within a point are spread over the current rayon
/// pool and collected in trial order.
pub fn run_experiment_detailed(spec: &ExperimentSpec) -> Result<Vec<PointResult>> {
    spec.validate()?;
    spec.points()
        .into_iter()
        .map(|point| {
            let trials = (0..spec.n_trials)
                .into_par_iter()
                .map(|t| run_trial(spec, &point, t))
                .collect::<Result<Vec<_>>>()?;
            let records = aggregate(spec, &point, &trials);
            Ok(PointResult { point, trials, records })
        })
        .collect()
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<MetricsRecord>> {
    Ok(run_experiment_detailed(spec)?.into_iter().flat_map(|p| p.records).collect())
}

/// [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(spec: &ExperimentSpec, workers: usize) -> Result<Vec<MetricsRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentSpec {
        ExperimentSpec {
            name: "tiny".into(),
            system: SystemConfig {
                n_antennas: 4,
                n_subcarriers: 16,
                n_data_symbols: 4,
                ..SystemConfig::default()
            },
            sweep: Sweep::SnrDb(vec![f64::INFINITY]),
            snr_db: vec![],
            n_trials: 3,
            master_seed: 11,
            estimators: EstimatorKind::ALL.to_vec(),
            grid: GridSpec::default(),
            data_constellation: ConstellationKind::Qpsk,
            scene: SceneMode::default(),
        }
    }

    #[test]
    fn noiseless_run_hits_everything() {
        let recs = run_experiment(&tiny()).unwrap();
        assert_eq!(recs.len(), 5);
        for r in &recs {
            assert_eq!((r.hitrate_aoa, r.hitrate_range), (1.0, 1.0), "{r:?}");
            assert_eq!(r.failures, 0);
            assert_eq!(r.ser.is_some(), r.estimator.is_decision_directed());
        }
    }

    #[test]
    fn points_order_and_configs() {
        let spec = ExperimentSpec {
            sweep: Sweep::NAntennas(vec![2, 4]),
            snr_db: vec![-20.0, -10.0],
            ..tiny()
        };
        let pts = spec.points();
        let got: Vec<(f64, f64, usize)> = pts.iter().map(|p| (p.snr_db, p.value, p.system.n_antennas)).collect();
        assert_eq!(got, vec![(-20.0, 2.0, 2), (-20.0, 4.0, 4), (-10.0, 2.0, 2), (-10.0, 4.0, 4)]);
        assert!(pts.iter().enumerate().all(|(i, p)| p.index == i));
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let bad = [
            ExperimentSpec { n_trials: 0, ..tiny() },
            ExperimentSpec { sweep: Sweep::SnrDb(vec![]), ..tiny() },
            ExperimentSpec { snr_db: vec![0.0], ..tiny() },
            ExperimentSpec { sweep: Sweep::NSubcarriers(vec![16]), ..tiny() },
            ExperimentSpec { estimators: vec![], ..tiny() },
            ExperimentSpec {
                estimators: vec![EstimatorKind::Jpudl, EstimatorKind::Jpudl],
                ..tiny()
            },
            ExperimentSpec { sweep: Sweep::SnrDb(vec![f64::NAN]), ..tiny() },
            ExperimentSpec {
                sweep: Sweep::NAntennas(vec![0]),
                snr_db: vec![0.0],
                ..tiny()
            },
            ExperimentSpec {
                scene: SceneMode::Fixed { range: -1.0, aoa: 0.0 },
                ..tiny()
            },
        ];
        for s in bad {
            assert!(s.validate().is_err(), "{s:?}");
        }
        tiny().validate().unwrap();
    }

    #[test]
    fn trial_streams_are_distinct_and_stable() {
        use rand::RngCore;
        let a = trial_rng(5, 0, Stream::Scene).next_u64();
        assert_eq!(a, trial_rng(5, 0, Stream::Scene).next_u64());
        assert_ne!(a, trial_rng(5, 0, Stream::Noise).next_u64());
        assert_ne!(a, trial_rng(5, 1, Stream::Scene).next_u64());
        assert_ne!(a, trial_rng(6, 0, Stream::Scene).next_u64());
    }

    #[test]
    fn fixed_scene_is_used() {
        let spec = ExperimentSpec {
            scene: SceneMode::Fixed { range: 3000.0, aoa: 0.2 },
            ..tiny()
        };
        let pts = spec.points();
        for t in 0..3 {
            let out = run_trial(&spec, &pts[0], t).unwrap();
            assert_eq!((out.scene.range, out.scene.aoa), (3000.0, 0.2));
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ExperimentSpec {
            sweep: Sweep::NSubcarriers(vec![16, 32]),
            snr_db: vec![-10.0],
            ..tiny()
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentSpec>(&s).unwrap(), spec);
        let with_extra = s.replacen('{', "{\"bogus\":1,", 1);
        assert!(serde_json::from_str::<ExperimentSpec>(&with_extra).is_err());
    }
}
