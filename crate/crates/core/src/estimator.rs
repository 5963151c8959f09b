//! Order statistics and the interpolated quantile (threshold) estimator
//!
//! ```text
//! J = b * y(floor(N g)) + (1 - b) * y(floor(N g) + 1),   b in [0, 1)
//! ```
//!
//! An alarm fires when the detector output strictly exceeds the threshold, so
//! the empirical false alarm rate is `#{y > J} / M`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guarantee::EstimatorRule;
use crate::rational::RationalLevel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("sample set is empty")]
    Empty,
    #[error("sample {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("order statistic index {index} outside 1..={n}")]
    Index { index: u64, n: usize },
    #[error("insufficient samples: N = {n} gives order statistics ({lower}, {upper}) for gamma = {gamma}")]
    InsufficientSamples {
        n: usize,
        lower: u64,
        upper: u64,
        gamma: RationalLevel,
    },
    #[error("beta weight must lie in [0, 1), got {0}")]
    BetaWeight(f64),
}

/// An immutable set of detector outputs together with its order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl SampleSet {
    /// Rejects empty input and any NaN or infinite value.
    pub fn new(values: Vec<f64>) -> Result<Self, EstimatorError> {
        if values.is_empty() {
            return Err(EstimatorError::Empty);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(EstimatorError::NonFinite { index, value });
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { values, sorted })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// The `i`-th smallest value, 1-based.
    pub fn order_statistic(&self, i: u64) -> Result<f64, EstimatorError> {
        if i == 0 || i as usize > self.len() {
            return Err(EstimatorError::Index { index: i, n: self.len() });
        }
        Ok(self.sorted[i as usize - 1])
    }

    /// `#{y_i <= x}`.
    pub fn count_at_or_below(&self, x: f64) -> usize {
        self.sorted.partition_point(|&v| v <= x)
    }

    /// `#{y_i > x}`.
    pub fn count_above(&self, x: f64) -> usize {
        self.len() - self.count_at_or_below(x)
    }

    /// Empirical CDF `F_N(x) = #{y_i <= x} / N`.
    pub fn empirical_cdf(&self, x: f64) -> f64 {
        self.count_at_or_below(x) as f64 / self.len() as f64
    }
}

/// Estimated threshold with the order statistics that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub value: f64,
    pub lower_index: u64,
    pub upper_index: u64,
    pub beta_weight: f64,
    pub n_samples: u64,
    pub gamma: RationalLevel,
}

fn check_beta(beta_weight: f64) -> Result<(), EstimatorError> {
    if (0.0..1.0).contains(&beta_weight) {
        Ok(())
    } else {
        Err(EstimatorError::BetaWeight(beta_weight))
    }
}

fn interpolate(beta: f64, lower: f64, upper: f64) -> f64 {
    if beta == 0.0 {
        upper
    } else {
        beta * lower + (1.0 - beta) * upper
    }
}

/// Interpolated order-statistic estimate of the `gamma`-quantile.
pub fn estimate_threshold(
    samples: &SampleSet,
    gamma: RationalLevel,
    beta_weight: f64,
) -> Result<ThresholdEstimate, EstimatorError> {
    check_beta(beta_weight)?;
    let n = samples.len();
    let lower = gamma.floor_mul(n as u64);
    let upper = lower + 1;
    if n < 2 || lower < 1 || upper as usize > n {
        return Err(EstimatorError::InsufficientSamples { n, lower, upper, gamma });
    }
    let value = interpolate(
        beta_weight,
        samples.order_statistic(lower)?,
        samples.order_statistic(upper)?,
    );
    Ok(ThresholdEstimate {
        value,
        lower_index: lower,
        upper_index: upper,
        beta_weight,
        n_samples: n as u64,
        gamma,
    })
}

/// Estimate following a guarantee's index rule. Single-index rules ignore
/// `beta_weight` and report it as 0.
pub fn estimate_with_rule(
    samples: &SampleSet,
    rule: &EstimatorRule,
    gamma: RationalLevel,
    beta_weight: f64,
) -> Result<ThresholdEstimate, EstimatorError> {
    check_beta(beta_weight)?;
    let n = samples.len();
    let (lower, upper) = (rule.lower_index, rule.upper_index);
    if lower < 1 || upper as usize > n {
        return Err(EstimatorError::InsufficientSamples { n, lower, upper, gamma });
    }
    let (value, beta_weight) = if rule.is_single() {
        (samples.order_statistic(upper)?, 0.0)
    } else {
        (
            interpolate(
                beta_weight,
                samples.order_statistic(lower)?,
                samples.order_statistic(upper)?,
            ),
            beta_weight,
        )
    };
    Ok(ThresholdEstimate {
        value,
        lower_index: lower,
        upper_index: upper,
        beta_weight,
        n_samples: n as u64,
        gamma,
    })
}

/// Threshold from an unsorted scratch buffer by selection, O(N).
///
/// Returns the same value as [`estimate_with_rule`] on the same data; the
/// buffer is permuted.
pub(crate) fn threshold_by_selection(
    scratch: &mut [f64],
    rule: &EstimatorRule,
    beta_weight: f64,
) -> f64 {
    let upper = rule.upper_index as usize - 1;
    let (below, &mut upper_value, _) = scratch.select_nth_unstable_by(upper, f64::total_cmp);
    if rule.is_single() || beta_weight == 0.0 {
        return upper_value;
    }
    // y(lower) is the largest element left of the upper order statistic.
    let lower_value = below.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    interpolate(beta_weight, lower_value, upper_value)
}

/// `#{y > threshold} / M`, the fraction of validation outputs that alarm.
pub fn empirical_false_alarm_rate(validation: &SampleSet, threshold: f64) -> f64 {
    validation.count_above(threshold) as f64 / validation.len() as f64
}
