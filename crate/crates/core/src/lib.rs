//! Sample-size guarantees and order-statistic threshold estimation for
//! detectors with a prescribed false alarm rate.
//!
//! A detector alarms when its output exceeds a threshold `J`. Choosing `J`
//! as the `gamma`-quantile of the output distribution under normal operation
//! fixes the false alarm rate at `1 - gamma`. That quantile is estimated from
//! `N` training outputs; the [`guarantee`] module gives the `N` that keeps the
//! estimate's true level within `epsilon` of `gamma` with probability at
//! least `1 - rho`, under three bounds of increasing sharpness.
//!
//! ```
//! use quantune::{GuaranteeParams, Method, RationalLevel};
//!
//! let gamma: RationalLevel = "0.95".parse().unwrap();
//! let params = GuaranteeParams::new(gamma, 0.01, 0.05).unwrap();
//! let n: Vec<u64> = Method::ALL
//!     .iter()
//!     .map(|m| m.sample_size(&params).unwrap().n_samples)
//!     .collect();
//! assert_eq!(n, [18460, 4239, 2180]);
//! ```

pub mod estimator;
pub mod guarantee;
pub mod harness;
pub mod rational;
pub mod rng;
pub mod sources;
pub mod special;

pub use estimator::{
    empirical_false_alarm_rate, estimate_threshold, estimate_with_rule, EstimatorError, SampleSet, ThresholdEstimate,
};
pub use guarantee::{
    audit_coverage, beta_confidence_bounds, beta_sample_size, coverage_probability, dkw_sample_size,
    order_statistic_cdf_moments, vp_sample_size, BetaMoments, Condition, ConfidenceBounds, EstimatorRule,
    GuaranteeError, GuaranteeParams, Method, SampleSizeResult,
};
pub use harness::{
    histogram, outside_band_fraction, run_monte_carlo, run_plan, run_repeated_splits, stored_dataset, sweep_gammas,
    Band, HarnessError, Histogram, RunMetadata, SamplingMode, SplitPlan, Summary, SweepTarget, TrialPlan,
    ValidationReport,
};
pub use rational::{LevelError, RationalLevel};
pub use rng::{SampleStream, StreamRole};
pub use sources::{Source, SourceError, SourceSpec};
