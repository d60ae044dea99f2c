//! Multiuser drop ensembles.
//!
//! Each trial drops `L` terminals uniformly in the sector, computes every
//! user's exact interference total and its mainlobe-only (effective) total,
//! and counts the effective interferers. Trial `t` draws from generator
//! stream `t`, so results are identical for any worker count.

use rand::distr::{Distribution, Uniform};
use serde::Serialize;
use statrs::statistics::{Data, OrderStatistics};

use crate::array_model::LensArrayConfig;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Parallelism};
use crate::interference::{interference_matrix, pairwise_interference_closed, AngularPair};
use crate::stochastic::{substream, SectorModel};

/// Every `AUDIT_STRIDE`-th trial re-derives its totals from the closed form.
pub const AUDIT_STRIDE: usize = 100;

/// Minimum number of empirical CDF grid points.
pub const CDF_POINTS: usize = 200;

pub const SUMMARY_QUANTILES: [f64; 9] = [0.001, 0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99, 0.999];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub array: LensArrayConfig,
    pub user_count: usize,
    pub trial_count: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(
        array: LensArrayConfig,
        user_count: usize,
        trial_count: usize,
        seed: u64,
    ) -> Result<Self> {
        let config = Self {
            array,
            user_count,
            trial_count,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.user_count == 0 {
            return Err(Error::InvalidParameter(
                "user count must be at least 1".into(),
            ));
        }
        if self.trial_count == 0 {
            return Err(Error::InvalidParameter(
                "trial count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub spatial_freqs: Vec<f64>,
    pub exact: Vec<f64>,
    pub effective: Vec<f64>,
    pub effective_count: Vec<u32>,
    /// Largest relative gap between the channel-vector totals and the
    /// closed-form pairwise sums, when this trial was audited.
    pub audit: Option<f64>,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-6 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Evaluates one drop with the given spatial frequencies.
pub fn evaluate_trial(
    array: &LensArrayConfig,
    spatial_freqs: &[f64],
    audit: bool,
) -> Result<TrialOutcome> {
    let n = spatial_freqs.len();
    if n == 0 {
        return Err(Error::Empty("user list"));
    }
    let matrix = interference_matrix(array, spatial_freqs)?;
    let d = array.d_tilde();
    let mut exact = vec![0.0; n];
    let mut effective = vec![0.0; n];
    let mut effective_count = vec![0u32; n];
    for l in 0..n {
        for k in (0..n).filter(|&k| k != l) {
            let power = matrix[l * n + k];
            exact[l] += power;
            if AngularPair::new(d, spatial_freqs[l], spatial_freqs[k])?.is_effective() {
                effective[l] += power;
                effective_count[l] += 1;
            }
        }
    }

    let audit = if audit {
        let mut worst: f64 = 0.0;
        for l in 0..n {
            let mut by_pairs = 0.0;
            for k in (0..n).filter(|&k| k != l) {
                by_pairs +=
                    pairwise_interference_closed(array, spatial_freqs[l], spatial_freqs[k])?;
            }
            worst = worst.max(relative_gap(exact[l], by_pairs));
        }
        Some(worst)
    } else {
        None
    };

    Ok(TrialOutcome {
        spatial_freqs: spatial_freqs.to_vec(),
        exact,
        effective,
        effective_count,
        audit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_error: f64,
    pub median: f64,
    /// `(level, value)` pairs for [`SUMMARY_QUANTILES`].
    pub quantiles: Vec<(f64, f64)>,
}

impl Summary {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std_error = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        let mut data = Data::new(values.to_vec());
        let quantiles = SUMMARY_QUANTILES
            .iter()
            .map(|&q| (q, data.quantile(q)))
            .collect();
        Self {
            count: values.len(),
            mean,
            std_error,
            median: data.median(),
            quantiles,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    pub power_linear: f64,
    pub probability: f64,
}

/// Empirical CDF of `values` on a log-spaced grid between the 0.1% and
/// 99.9% quantiles.
pub fn empirical_cdf(values: &[f64]) -> Vec<CdfPoint> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let cdf_at = |x: f64| sorted.partition_point(|&v| v <= x) as f64 / n;

    let mut data = Data::new(sorted.clone());
    let smallest_positive = sorted.iter().copied().find(|&v| v > 0.0);
    let Some(smallest_positive) = smallest_positive else {
        return vec![
            CdfPoint {
                power_linear: 0.0,
                probability: cdf_at(0.0),
            };
            CDF_POINTS
        ];
    };
    let lo = data.quantile(0.001).max(smallest_positive);
    let hi = data.quantile(0.999).max(lo);
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    (0..CDF_POINTS)
        .map(|i| {
            let t = i as f64 / (CDF_POINTS - 1) as f64;
            let x = if i + 1 == CDF_POINTS {
                hi
            } else {
                (log_lo + t * (log_hi - log_lo)).exp()
            };
            CdfPoint {
                power_linear: x,
                probability: cdf_at(x),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub config: ScenarioConfig,
    pub exact: Summary,
    pub effective: Summary,
    pub captured_fraction: f64,
    pub mean_effective_count: f64,
    pub effective_count_std_error: f64,
    pub audited_trials: usize,
    pub audit_max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub summary: ScenarioSummary,
    pub trials: Vec<TrialOutcome>,
    pub cdf: Vec<CdfPoint>,
}

impl ScenarioResult {
    /// Aggregates trial outcomes in trial order.
    pub fn from_trials(config: ScenarioConfig, trials: Vec<TrialOutcome>) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::Empty("trials"));
        }
        let exact_all: Vec<f64> = trials
            .iter()
            .flat_map(|t| t.exact.iter().copied())
            .collect();
        let effective_all: Vec<f64> = trials
            .iter()
            .flat_map(|t| t.effective.iter().copied())
            .collect();
        let per_trial_count: Vec<f64> = trials
            .iter()
            .map(|t| {
                t.effective_count.iter().map(|&c| c as f64).sum::<f64>()
                    / t.effective_count.len() as f64
            })
            .collect();

        let exact = Summary::from_values(&exact_all);
        let effective = Summary::from_values(&effective_all);
        let counts = Summary::from_values(&per_trial_count);
        let captured_fraction = if exact.mean > 0.0 {
            effective.mean / exact.mean
        } else {
            1.0
        };
        let audits: Vec<f64> = trials.iter().filter_map(|t| t.audit).collect();

        Ok(Self {
            cdf: empirical_cdf(&exact_all),
            summary: ScenarioSummary {
                config,
                exact,
                effective,
                captured_fraction,
                mean_effective_count: counts.mean,
                effective_count_std_error: counts.std_error,
                audited_trials: audits.len(),
                audit_max_rel_error: audits.iter().copied().fold(0.0, f64::max),
            },
            trials,
        })
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    run_scenario_with(config, Parallelism::default())
}

pub fn run_scenario_with(config: &ScenarioConfig, par: Parallelism) -> Result<ScenarioResult> {
    config.validate()?;
    let sector = SectorModel::default();
    let dist = Uniform::new_inclusive(-sector.half_width(), sector.half_width())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let trials = map_indexed(config.trial_count, par, |t| {
        let mut rng = substream(config.seed, t as u64);
        let freqs: Vec<f64> = (0..config.user_count)
            .map(|_| dist.sample(&mut rng).sin())
            .collect();
        evaluate_trial(&config.array, &freqs, t % AUDIT_STRIDE == 0)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    ScenarioResult::from_trials(config.clone(), trials)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproximationReport {
    pub mean_exact: f64,
    pub mean_effective: f64,
    pub captured_fraction: f64,
}

impl From<&ScenarioSummary> for ApproximationReport {
    fn from(s: &ScenarioSummary) -> Self {
        Self {
            mean_exact: s.exact.mean,
            mean_effective: s.effective.mean,
            captured_fraction: s.captured_fraction,
        }
    }
}

/// Share of the ensemble-mean interference carried by mainlobe interferers.
pub fn approximation_quality(config: &ScenarioConfig) -> Result<ApproximationReport> {
    approximation_quality_with(config, Parallelism::default())
}

pub fn approximation_quality_with(
    config: &ScenarioConfig,
    par: Parallelism,
) -> Result<ApproximationReport> {
    if config.user_count < 2 {
        return Err(Error::InvalidParameter(
            "approximation quality needs at least two users".into(),
        ));
    }
    Ok(ApproximationReport::from(
        &run_scenario_with(config, par)?.summary,
    ))
}
