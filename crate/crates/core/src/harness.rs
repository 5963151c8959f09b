//! Monte-Carlo and split-sample validation of the false-alarm guarantees.
//!
//! Each trial estimates a threshold from `N` training samples using the
//! method's index rule and records the empirical false alarm rate on data
//! the threshold never saw. A report collects the `N_T` rates, the fraction
//! outside the closed band `[1 - gamma - eps, 1 - gamma + eps]`, a histogram
//! and summary quantiles.
//!
//! Every trial draws from its own substream `(master_seed, role, trial)`, so
//! reports are bit-identical for any number of worker threads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{threshold_by_selection, EstimatorError, SampleSet};
use crate::guarantee::{EstimatorRule, GuaranteeError, GuaranteeParams, Method};
use crate::rational::RationalLevel;
use crate::rng::{SampleStream, StreamRole};
use crate::sources::{Source, SourceError, SourceSpec};

pub const DEFAULT_BIN_WIDTH: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Guarantee(#[from] GuaranteeError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("inconsistent trial plan: {0}")]
    Plan(String),
    #[error("data set too small: {method} needs at least {required} points (N = {n_samples} plus a test remainder), got {available}")]
    DatasetTooSmall {
        method: Method,
        n_samples: u64,
        required: u64,
        available: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// Fresh i.i.d. draws for every trial.
    IidFresh,
    /// The first `N` points of a fresh trajectory for every trial.
    SequentialTrajectory,
    /// `N` points drawn without replacement from one stored data set.
    RandomSubsample,
}

/// A Monte-Carlo experiment.
///
/// In `RandomSubsample` mode `validation_size` is the length of the stored
/// data set generated from `source` (training and test points together).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub source: SourceSpec,
    pub guarantee: GuaranteeParams,
    pub method: Method,
    pub n_trials: usize,
    pub validation_size: usize,
    pub sampling_mode: SamplingMode,
    pub beta_weight: f64,
    pub master_seed: u64,
    pub bin_width: f64,
}

impl TrialPlan {
    /// A plan with `beta = 0` and the default histogram bin width.
    pub fn new(
        source: SourceSpec,
        guarantee: GuaranteeParams,
        method: Method,
        n_trials: usize,
        validation_size: usize,
        sampling_mode: SamplingMode,
        master_seed: u64,
    ) -> Self {
        Self {
            source,
            guarantee,
            method,
            n_trials,
            validation_size,
            sampling_mode,
            beta_weight: 0.0,
            master_seed,
            bin_width: DEFAULT_BIN_WIDTH,
        }
    }
}

/// Settings for repeated training/test splits over a fixed data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub guarantee: GuaranteeParams,
    pub method: Method,
    pub n_trials: usize,
    pub beta_weight: f64,
    pub master_seed: u64,
    pub bin_width: f64,
    /// Free-form description of the data set, echoed into the report.
    pub dataset_label: String,
}

/// Closed band of acceptable false alarm rates, clipped to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn new(gamma: RationalLevel, epsilon: f64) -> Self {
        let target = gamma.complement().as_f64();
        Self {
            lower: (target - epsilon).max(0.0),
            upper: (target + epsilon).min(1.0),
        }
    }

    pub fn contains(&self, far: f64) -> bool {
        // absorbs the decimal rounding of the endpoints only
        let slack = 1e-12 * self.upper;
        far >= self.lower - slack && far <= self.upper + slack
    }
}

/// Fraction of rates outside the closed `epsilon`-band around `1 - gamma`.
/// An empty input yields 0.
pub fn outside_band_fraction(fars: &[f64], gamma: RationalLevel, epsilon: f64) -> f64 {
    if fars.is_empty() {
        return 0.0;
    }
    let band = Band::new(gamma, epsilon);
    fars.iter().filter(|&&f| !band.contains(f)).count() as f64 / fars.len() as f64
}

/// Fixed-width histogram with bins `[i w, (i + 1) w)` aligned to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Lower edge of the most populated bin.
    pub fn mode_bin(&self) -> Option<f64> {
        let (i, _) = self
            .counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
        Some(self.edges[i])
    }
}

pub fn histogram(fars: &[f64], bin_width: f64) -> Histogram {
    assert!(bin_width > 0.0 && bin_width.is_finite(), "bin width must be positive");
    // FAR values are ratios like k/M; the offset keeps exact multiples of the
    // bin width from landing one bin low.
    let bin = |f: f64| (f / bin_width + 1e-9).floor() as i64;
    let (Some(first), Some(last)) = (fars.iter().map(|&f| bin(f)).min(), fars.iter().map(|&f| bin(f)).max()) else {
        return Histogram {
            bin_width,
            edges: Vec::new(),
            counts: Vec::new(),
        };
    };
    let mut counts = vec![0u64; (last - first + 1) as usize];
    for &f in fars {
        counts[(bin(f) - first) as usize] += 1;
    }
    let edges = (first..=last + 1).map(|i| i as f64 * bin_width).collect();
    Histogram {
        bin_width,
        edges,
        counts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl Summary {
    /// Quartiles by linear interpolation between order statistics.
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantile = |p: f64| {
            if sorted.is_empty() {
                return f64::NAN;
            }
            let h = p * (sorted.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        };
        Self {
            min: quantile(0.0),
            q1: quantile(0.25),
            median: quantile(0.5),
            q3: quantile(0.75),
            max: quantile(1.0),
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        }
    }
}

/// Everything needed to rerun a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub source: String,
    pub sampling_mode: SamplingMode,
    pub guarantee: GuaranteeParams,
    pub method: Method,
    pub n_samples: u64,
    pub estimator_rule: EstimatorRule,
    pub n_trials: usize,
    /// Validation set size, or the stored data set size for split runs.
    pub validation_size: usize,
    pub beta_weight: f64,
    pub master_seed: u64,
    pub bin_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub metadata: RunMetadata,
    pub band: Band,
    pub fraction_outside: f64,
    pub summary: Summary,
    pub histogram: Histogram,
    pub thresholds: Vec<f64>,
    pub empirical_fars: Vec<f64>,
}

impl ValidationReport {
    fn assemble(metadata: RunMetadata, trials: Vec<(f64, f64)>) -> Self {
        let (thresholds, empirical_fars): (Vec<f64>, Vec<f64>) = trials.into_iter().unzip();
        let gamma = metadata.guarantee.gamma;
        let epsilon = metadata.guarantee.epsilon;
        Self {
            band: Band::new(gamma, epsilon),
            fraction_outside: outside_band_fraction(&empirical_fars, gamma, epsilon),
            summary: Summary::of(&empirical_fars),
            histogram: histogram(&empirical_fars, metadata.bin_width),
            thresholds,
            empirical_fars,
            metadata,
        }
    }
}

#[cfg(feature = "parallel")]
fn map_trials<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n as u64).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n as u64).map(f).collect()
}

fn check_common(n_trials: usize, beta_weight: f64, bin_width: f64) -> Result<(), HarnessError> {
    if n_trials == 0 {
        return Err(HarnessError::Plan("n_trials must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&beta_weight) {
        return Err(HarnessError::Estimator(EstimatorError::BetaWeight(beta_weight)));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(HarnessError::Plan(format!("bin width must be positive, got {bin_width}")));
    }
    Ok(())
}

/// Runs `plan` in `IidFresh` or `SequentialTrajectory` mode.
///
/// A single validation set of `validation_size` fresh samples (a fresh
/// trajectory for CUSUM sources) is sorted once and shared by all trials.
pub fn run_monte_carlo(plan: &TrialPlan) -> Result<ValidationReport, HarnessError> {
    check_common(plan.n_trials, plan.beta_weight, plan.bin_width)?;
    let source = Source::new(plan.source.clone())?;
    match (plan.sampling_mode, source.is_trajectory()) {
        (SamplingMode::RandomSubsample, _) => {
            return Err(HarnessError::Plan(
                "random subsampling runs on a stored data set; use run_plan or run_repeated_splits".into(),
            ))
        }
        (SamplingMode::IidFresh, true) => {
            return Err(HarnessError::Plan(format!(
                "{} is a trajectory source; use sequential-trajectory or random-subsample",
                plan.source
            )))
        }
        (SamplingMode::SequentialTrajectory, false) => {
            return Err(HarnessError::Plan(format!("{} is not a trajectory source", plan.source)))
        }
        _ => {}
    }
    if plan.validation_size == 0 {
        return Err(HarnessError::Plan("validation_size must be >= 1".into()));
    }

    let size = plan.method.sample_size(&plan.guarantee)?;
    let n = size.n_samples as usize;
    let rule = &size.estimator_rule;
    if rule.lower_index < 1 || rule.upper_index > size.n_samples {
        return Err(HarnessError::Plan(format!("estimator indices outside 1..={n}")));
    }

    let mut validation_stream = SampleStream::substream(plan.master_seed, StreamRole::Validation, 0);
    let validation = SampleSet::new(source.generate(&mut validation_stream, plan.validation_size, plan.master_seed))?;
    let m = validation.len() as f64;

    let trials = map_trials(plan.n_trials, |t| {
        let mut stream = SampleStream::substream(plan.master_seed, StreamRole::Training, t);
        let mut training = source.generate(&mut stream, n, plan.master_seed);
        let threshold = threshold_by_selection(&mut training, rule, plan.beta_weight);
        (threshold, validation.count_above(threshold) as f64 / m)
    });

    let metadata = RunMetadata {
        source: plan.source.to_string(),
        sampling_mode: plan.sampling_mode,
        guarantee: plan.guarantee,
        method: plan.method,
        n_samples: size.n_samples,
        estimator_rule: size.estimator_rule.clone(),
        n_trials: plan.n_trials,
        validation_size: plan.validation_size,
        beta_weight: plan.beta_weight,
        master_seed: plan.master_seed,
        bin_width: plan.bin_width,
    };
    Ok(ValidationReport::assemble(metadata, trials))
}

/// Repeated training/test splits: each trial draws `N` indices without
/// replacement for training and evaluates the rate on all other points.
pub fn run_repeated_splits(dataset: &SampleSet, plan: &SplitPlan) -> Result<ValidationReport, HarnessError> {
    check_common(plan.n_trials, plan.beta_weight, plan.bin_width)?;
    let size = plan.method.sample_size(&plan.guarantee)?;
    let n = size.n_samples as usize;
    if dataset.len() <= n {
        return Err(HarnessError::DatasetTooSmall {
            method: plan.method,
            n_samples: size.n_samples,
            required: size.n_samples + 1,
            available: dataset.len(),
        });
    }
    let rule = &size.estimator_rule;
    let values = dataset.values();
    let remainder = (dataset.len() - n) as f64;

    let trials = map_trials(plan.n_trials, |t| {
        let mut stream = SampleStream::substream(plan.master_seed, StreamRole::Selection, t);
        let picked = rand::seq::index::sample(stream.rng_mut(), values.len(), n);
        let mut training: Vec<f64> = picked.iter().map(|i| values[i]).collect();
        let threshold = threshold_by_selection(&mut training, rule, plan.beta_weight);
        let train_above = training.iter().filter(|&&y| y > threshold).count();
        let test_above = dataset.count_above(threshold) - train_above;
        (threshold, test_above as f64 / remainder)
    });

    let metadata = RunMetadata {
        source: plan.dataset_label.clone(),
        sampling_mode: SamplingMode::RandomSubsample,
        guarantee: plan.guarantee,
        method: plan.method,
        n_samples: size.n_samples,
        estimator_rule: size.estimator_rule.clone(),
        n_trials: plan.n_trials,
        validation_size: dataset.len(),
        beta_weight: plan.beta_weight,
        master_seed: plan.master_seed,
        bin_width: plan.bin_width,
    };
    Ok(ValidationReport::assemble(metadata, trials))
}

/// Generates the stored data set a `RandomSubsample` plan runs on.
pub fn stored_dataset(plan: &TrialPlan) -> Result<SampleSet, HarnessError> {
    let source = Source::new(plan.source.clone())?;
    let mut stream = SampleStream::substream(plan.master_seed, StreamRole::Dataset, 0);
    Ok(SampleSet::new(source.generate(&mut stream, plan.validation_size, plan.master_seed))?)
}

/// Runs a plan in any sampling mode.
pub fn run_plan(plan: &TrialPlan) -> Result<ValidationReport, HarnessError> {
    if plan.sampling_mode != SamplingMode::RandomSubsample {
        return run_monte_carlo(plan);
    }
    let dataset = stored_dataset(plan)?;
    let split = SplitPlan {
        guarantee: plan.guarantee,
        method: plan.method,
        n_trials: plan.n_trials,
        beta_weight: plan.beta_weight,
        master_seed: plan.master_seed,
        bin_width: plan.bin_width,
        dataset_label: format!("{} (stored, {} points)", plan.source, dataset.len()),
    };
    run_repeated_splits(&dataset, &split)
}

/// What a gamma sweep evaluates.
#[derive(Debug, Clone)]
pub enum SweepTarget<'a> {
    /// Repeated splits over a fixed data set; `plan.guarantee` supplies epsilon
    /// and rho, its gamma is replaced per sweep point.
    Dataset { data: &'a SampleSet, plan: SplitPlan },
    /// A Monte-Carlo plan template; gamma is replaced per sweep point.
    Plan(TrialPlan),
}

/// One report per level, errors kept per level.
pub fn sweep_gammas(
    target: &SweepTarget<'_>,
    gammas: &[RationalLevel],
) -> Vec<(RationalLevel, Result<ValidationReport, HarnessError>)> {
    gammas
        .iter()
        .map(|&gamma| {
            let result = match target {
                SweepTarget::Dataset { data, plan } => GuaranteeParams::new(gamma, plan.guarantee.epsilon, plan.guarantee.rho)
                    .map_err(HarnessError::from)
                    .and_then(|guarantee| {
                        let plan = SplitPlan {
                            guarantee,
                            ..plan.clone()
                        };
                        run_repeated_splits(data, &plan)
                    }),
                SweepTarget::Plan(template) => GuaranteeParams::new(gamma, template.guarantee.epsilon, template.guarantee.rho)
                    .map_err(HarnessError::from)
                    .and_then(|guarantee| {
                        let plan = TrialPlan {
                            guarantee,
                            ..template.clone()
                        };
                        run_plan(&plan)
                    }),
            };
            (gamma, result)
        })
        .collect()
}
