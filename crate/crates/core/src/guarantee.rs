//! Sample sizes for distribution-free `(epsilon, rho)` false-alarm guarantees.
//!
//! Given a target no-alarm level `gamma = n1/n2`, a band half-width `epsilon`
//! and a failure probability `rho`, each method returns the number of i.i.d.
//! detector-output samples `N` such that the estimated threshold `J` satisfies
//!
//! ```text
//! P( |F(J) - gamma| <= epsilon ) >= 1 - rho
//! ```
//!
//! together with the order-statistic rule the guarantee assumes:
//!
//! | method | N            | estimator                                     |
//! |--------|--------------|-----------------------------------------------|
//! | DKW    | `k n2`       | `b y(floor(N g)) + (1-b) y(floor(N g)+1)`, `b in [0,1)` |
//! | VP     | `k n2 - 1`   | `y(floor(N g) + 1)`                           |
//! | BETA   | `k n2`       | `y(N g)`                                      |
//!
//! The exact law `F(y(m)) ~ Beta(m, N + 1 - m)` makes every guarantee
//! checkable without simulation; see [`coverage_probability`].
//!
//! For DKW with `b = 0` the estimator is `y(floor(N g)+1)`, where the
//! empirical CDF equals `gamma + 1/N` rather than `gamma`. The bound is still
//! applied as stated for every `b in [0, 1)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::RationalLevel;
use crate::special::{self, SpecialError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GuaranteeError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("rho must lie in (0, 1), got {0}")]
    Rho(f64),
    #[error("condition {condition} violated: {detail}")]
    ConditionViolated {
        condition: &'static str,
        detail: String,
    },
    #[error("order statistic index {m} outside 1..={n}")]
    Index { m: u64, n: u64 },
    #[error("required sample size overflows: k = {k}, n2 = {n2}")]
    Overflow { k: f64, n2: u64 },
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// Which finite-sample guarantee to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dkw,
    Vp,
    Beta,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dkw, Method::Vp, Method::Beta];

    pub fn sample_size(self, params: &GuaranteeParams) -> Result<SampleSizeResult, GuaranteeError> {
        match self {
            Method::Dkw => dkw_sample_size(params),
            Method::Vp => vp_sample_size(params),
            Method::Beta => beta_sample_size(params),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Dkw => "dkw",
            Method::Vp => "vp",
            Method::Beta => "beta",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dkw" => Ok(Method::Dkw),
            "vp" => Ok(Method::Vp),
            "beta" => Ok(Method::Beta),
            other => Err(format!("unknown method {other:?} (expected dkw, vp or beta)")),
        }
    }
}

/// The `(gamma, epsilon, rho)` accuracy/confidence contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeParams {
    pub gamma: RationalLevel,
    pub epsilon: f64,
    pub rho: f64,
}

impl GuaranteeParams {
    pub fn new(gamma: RationalLevel, epsilon: f64, rho: f64) -> Result<Self, GuaranteeError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(GuaranteeError::Epsilon(epsilon));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(GuaranteeError::Rho(rho));
        }
        Ok(Self {
            gamma,
            epsilon,
            rho,
        })
    }

    /// Set when `epsilon > min(gamma, 1 - gamma)`, i.e. the band leaves [0, 1].
    pub fn epsilon_warning(&self) -> bool {
        !epsilon_reasonableness(self)
    }
}

/// True iff `epsilon <= min(gamma, 1 - gamma)`.
pub fn epsilon_reasonableness(params: &GuaranteeParams) -> bool {
    let lo = params.gamma.as_f64().min(params.gamma.complement().as_f64());
    params.epsilon <= lo
}

/// Order statistics the guarantee is stated for.
///
/// When `lower_index == upper_index` the estimator is that single order
/// statistic; otherwise it interpolates between the two with a weight
/// constrained as described by `beta_weight_constraint`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorRule {
    pub lower_index: u64,
    pub upper_index: u64,
    pub beta_weight_constraint: String,
    /// BETA only: `gamma < 1/2` handled through the `gamma <-> 1 - gamma` symmetry.
    pub symmetry_mapped: bool,
}

impl EstimatorRule {
    pub fn is_single(&self) -> bool {
        self.lower_index == self.upper_index
    }

    /// Indices whose Beta law bounds the coverage of this rule.
    pub fn audit_indices(&self) -> Vec<u64> {
        if self.is_single() {
            vec![self.upper_index]
        } else {
            vec![self.lower_index, self.upper_index]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub satisfied: bool,
}

impl Condition {
    fn new(name: &str, satisfied: bool) -> Self {
        Self {
            name: name.to_owned(),
            satisfied,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeResult {
    pub method: Method,
    pub n_samples: u64,
    pub k: u64,
    pub estimator_rule: EstimatorRule,
    pub conditions_checked: Vec<Condition>,
    pub epsilon_warning: bool,
}

fn ceil_multiplier(raw: f64, n2: u64) -> Result<u64, GuaranteeError> {
    let k = raw.ceil().max(1.0);
    // 2^53 keeps the float-to-integer step exact.
    if !k.is_finite() || k > 9_007_199_254_740_992.0 {
        return Err(GuaranteeError::Overflow { k, n2 });
    }
    Ok(k as u64)
}

fn checked_n(k: u64, n2: u64) -> Result<u64, GuaranteeError> {
    k.checked_mul(n2).ok_or(GuaranteeError::Overflow { k: k as f64, n2 })
}

const GCD_CONDITION: &str = "gamma = n1/n2 irreducible";

/// Sample size from the Dvoretzky-Kiefer-Wolfowitz inequality
/// `P(|F - F_N| <= eps) >= 1 - 2 exp(-2 N eps^2)`, evaluated at the estimate.
pub fn dkw_sample_size(params: &GuaranteeParams) -> Result<SampleSizeResult, GuaranteeError> {
    let n2 = params.gamma.denom();
    let eps = params.epsilon;
    let raw = (2.0 / params.rho).ln() / (2.0 * eps * eps * n2 as f64);
    let k = ceil_multiplier(raw, n2)?;
    let n = checked_n(k, n2)?;
    let lower = params.gamma.floor_mul(n);
    Ok(SampleSizeResult {
        method: Method::Dkw,
        n_samples: n,
        k,
        estimator_rule: EstimatorRule {
            lower_index: lower,
            upper_index: lower + 1,
            beta_weight_constraint: "0 <= beta < 1".to_owned(),
            symmetry_mapped: false,
        },
        conditions_checked: vec![Condition::new(GCD_CONDITION, true)],
        epsilon_warning: params.epsilon_warning(),
    })
}

const VP_VACUOUS: &str = "4*gamma*(1-gamma) > 9*rho*epsilon^2";
const VP_VARIANCE: &str = "6*rho <= 1";

/// Sample size from the Vysochanskij-Petunin inequality applied to the Beta
/// law of `F(y(m))` with `m = floor(N gamma) + 1`.
pub fn vp_sample_size(params: &GuaranteeParams) -> Result<SampleSizeResult, GuaranteeError> {
    let g = params.gamma.as_f64();
    let (eps, rho) = (params.epsilon, params.rho);
    let spread = 4.0 * g * (1.0 - g);
    let floor = 9.0 * rho * eps * eps;
    let vacuous_ok = spread > floor;
    let variance_ok = 6.0 * rho <= 1.0;
    if !variance_ok {
        return Err(GuaranteeError::ConditionViolated {
            condition: VP_VARIANCE,
            detail: format!("6*rho = {}", 6.0 * rho),
        });
    }
    if !vacuous_ok {
        return Err(GuaranteeError::ConditionViolated {
            condition: VP_VACUOUS,
            detail: format!("4*gamma*(1-gamma) = {spread} <= 9*rho*epsilon^2 = {floor}"),
        });
    }

    let n2 = params.gamma.denom();
    let raw = (spread / floor - 1.0) / n2 as f64;
    let k = ceil_multiplier(raw, n2)?;
    let n = checked_n(k, n2)? - 1;
    let index = params.gamma.floor_mul(n) + 1;
    Ok(SampleSizeResult {
        method: Method::Vp,
        n_samples: n,
        k,
        estimator_rule: EstimatorRule {
            lower_index: index,
            upper_index: index,
            beta_weight_constraint: "single order statistic floor(N*gamma)+1 (beta = 0)".to_owned(),
            symmetry_mapped: false,
        },
        conditions_checked: vec![
            Condition::new(GCD_CONDITION, true),
            Condition::new(VP_VACUOUS, vacuous_ok),
            Condition::new(VP_VARIANCE, variance_ok),
        ],
        epsilon_warning: params.epsilon_warning(),
    })
}

/// Sample size from the beta confidence interval, solving `eps_l = epsilon`
/// at `N = k n2`. Levels below 1/2 reuse the multiplier of `1 - gamma`.
pub fn beta_sample_size(params: &GuaranteeParams) -> Result<SampleSizeResult, GuaranteeError> {
    let mapped = !params.gamma.is_upper_half();
    let level = if mapped {
        params.gamma.complement()
    } else {
        params.gamma
    };
    let g = level.as_f64();
    let n2 = level.denom();
    let n2f = n2 as f64;
    let eps = params.epsilon;
    let z = special::upper_gaussian_quantile(params.rho / 2.0)?;

    let lead = z * (g - g * g).sqrt() / (2.0 * eps * n2f.sqrt());
    let inner = lead * lead
        + 2.0 * (g - 0.5) * z * z / (3.0 * n2f * eps)
        + (1.0 + g) / (3.0 * n2f * eps);
    let root = lead + inner.sqrt();
    let k = ceil_multiplier(root * root, n2)?;
    let n = checked_n(k, n2)?;
    // n2 divides N, so N * gamma is an integer.
    let index = params
        .gamma
        .exact_mul(n)
        .expect("N is a multiple of the level denominator");
    Ok(SampleSizeResult {
        method: Method::Beta,
        n_samples: n,
        k,
        estimator_rule: EstimatorRule {
            lower_index: index,
            upper_index: index,
            beta_weight_constraint: "single order statistic N*gamma".to_owned(),
            symmetry_mapped: mapped,
        },
        conditions_checked: vec![
            Condition::new(GCD_CONDITION, true),
            Condition::new("gamma >= 1/2 (otherwise symmetry-mapped)", !mapped),
        ],
        epsilon_warning: params.epsilon_warning(),
    })
}

/// Mean and variance of `F(y(m)) ~ Beta(m, N + 1 - m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn order_statistic_cdf_moments(m: u64, n: u64) -> Result<BetaMoments, GuaranteeError> {
    if m == 0 || m > n {
        return Err(GuaranteeError::Index { m, n });
    }
    let (m, n) = (m as f64, n as f64);
    Ok(BetaMoments {
        mean: m / (n + 1.0),
        variance: m * (n + 1.0 - m) / ((n + 1.0) * (n + 1.0) * (n + 2.0)),
    })
}

/// Asymmetric deviations around `gamma_hat` covering a `Beta(m, N+1-m)`
/// variable with probability `1 - rho`, accurate to `O(N^{-3/2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBounds {
    pub eps_lower: f64,
    pub eps_upper: f64,
}

pub fn beta_confidence_bounds(gamma_hat: f64, rho: f64, n: u64) -> Result<ConfidenceBounds, GuaranteeError> {
    if !(gamma_hat > 0.0 && gamma_hat < 1.0) {
        return Err(SpecialError::Domain {
            name: "gamma_hat",
            value: gamma_hat,
            domain: "(0, 1)",
        }
        .into());
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(GuaranteeError::Rho(rho));
    }
    if n == 0 {
        return Err(GuaranteeError::Index { m: 0, n });
    }
    let z = special::upper_gaussian_quantile(rho / 2.0)?;
    let nf = n as f64;
    let lead = (gamma_hat - gamma_hat * gamma_hat).sqrt() / nf.sqrt() * z;
    let skew = (2.0 * (0.5 - gamma_hat) * z * z - 1.0 - gamma_hat) / (3.0 * nf);
    Ok(ConfidenceBounds {
        eps_lower: lead - skew,
        eps_upper: lead + skew,
    })
}

/// `P(|F(y(m)) - gamma| <= epsilon)` for `N = n` i.i.d. samples from any
/// continuous distribution, computed exactly from the Beta law.
pub fn coverage_probability(m: u64, n: u64, gamma: f64, epsilon: f64) -> Result<f64, GuaranteeError> {
    if m == 0 || m > n {
        return Err(GuaranteeError::Index { m, n });
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(SpecialError::Domain {
            name: "gamma",
            value: gamma,
            domain: "[0, 1]",
        }
        .into());
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(GuaranteeError::Epsilon(epsilon));
    }
    let hi = (gamma + epsilon).min(1.0);
    let lo = (gamma - epsilon).max(0.0);
    let (a, b) = (m as f64, (n + 1 - m) as f64);
    let upper = special::regularized_incomplete_beta(a, b, hi)?;
    let lower = special::regularized_incomplete_beta(a, b, lo)?;
    Ok((upper - lower).clamp(0.0, 1.0))
}

/// Smallest coverage over the order statistics the result's rule may use.
pub fn audit_coverage(result: &SampleSizeResult, params: &GuaranteeParams) -> Result<f64, GuaranteeError> {
    let mut worst = 1.0_f64;
    for m in result.estimator_rule.audit_indices() {
        let c = coverage_probability(m, result.n_samples, params.gamma.as_f64(), params.epsilon)?;
        worst = worst.min(c);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n1: u64, n2: u64, eps: f64, rho: f64) -> GuaranteeParams {
        GuaranteeParams::new(RationalLevel::new(n1, n2).unwrap(), eps, rho).unwrap()
    }

    #[test]
    fn dkw_operating_point() {
        let r = dkw_sample_size(&params(19, 20, 0.01, 0.05)).unwrap();
        assert_eq!((r.k, r.n_samples), (923, 18460));
        assert_eq!(r.estimator_rule.lower_index, 17537);
        assert_eq!(r.estimator_rule.upper_index, 17538);
    }

    #[test]
    fn dkw_smallest_multiplier() {
        let r = dkw_sample_size(&params(1, 2, 0.99, 0.99)).unwrap();
        assert_eq!((r.k, r.n_samples), (1, 2));
        assert!(r.epsilon_warning);
    }

    #[test]
    fn dkw_halving_epsilon() {
        let r = dkw_sample_size(&params(19, 20, 0.005, 0.05)).unwrap();
        // ln(40) / (2 * 25e-6 * 20) = 3688.88..., ceil 3689
        assert_eq!((r.k, r.n_samples), (3689, 73780));
    }

    #[test]
    fn vp_operating_point() {
        let r = vp_sample_size(&params(19, 20, 0.01, 0.05)).unwrap();
        assert_eq!((r.k, r.n_samples), (212, 4239));
        assert_eq!(r.estimator_rule.upper_index, 4028);
        assert!(r.conditions_checked.iter().all(|c| c.satisfied));
    }

    #[test]
    fn vp_condition_failures() {
        let err = vp_sample_size(&params(19, 20, 0.3, 0.3)).unwrap_err();
        assert!(matches!(err, GuaranteeError::ConditionViolated { condition, .. } if condition == VP_VARIANCE));
        // 4 * 0.05 * 0.95 = 0.19 <= 9 * 0.1 * 0.25
        let err = vp_sample_size(&params(19, 20, 0.5, 0.1)).unwrap_err();
        assert!(matches!(err, GuaranteeError::ConditionViolated { condition, .. } if condition == VP_VACUOUS));
    }

    #[test]
    fn vp_half_level() {
        let r = vp_sample_size(&params(1, 2, 0.5, 0.1)).unwrap();
        assert_eq!((r.k, r.n_samples), (2, 3));
        assert_eq!(r.estimator_rule.upper_index, 2);
    }

    #[test]
    fn beta_operating_points() {
        let r = beta_sample_size(&params(19, 20, 0.01, 0.05)).unwrap();
        assert_eq!((r.k, r.n_samples), (109, 2180));
        assert_eq!(r.estimator_rule.upper_index, 2071);
        let r = beta_sample_size(&params(99, 100, 0.01, 0.05)).unwrap();
        assert_eq!((r.k, r.n_samples), (8, 800));
    }

    #[test]
    fn beta_symmetry_mapping() {
        let r = beta_sample_size(&params(1, 20, 0.01, 0.05)).unwrap();
        assert_eq!(r.n_samples, 2180);
        assert!(r.estimator_rule.symmetry_mapped);
        assert_eq!(r.estimator_rule.upper_index, 109);
    }

    #[test]
    fn params_validation() {
        let g = RationalLevel::new(1, 2).unwrap();
        assert!(GuaranteeParams::new(g, 0.0, 0.1).is_err());
        assert!(GuaranteeParams::new(g, 1.0, 0.1).is_err());
        assert!(GuaranteeParams::new(g, 0.1, 1.0).is_err());
        assert!(GuaranteeParams::new(g, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn reasonableness() {
        assert!(epsilon_reasonableness(&params(19, 20, 0.01, 0.05)));
        assert!(!epsilon_reasonableness(&params(19, 20, 0.06, 0.05)));
        assert!(epsilon_reasonableness(&params(1, 2, 0.5, 0.05)));
    }

    #[test]
    fn moments() {
        let m = order_statistic_cdf_moments(1, 1).unwrap();
        assert_eq!(m.mean, 0.5);
        assert!((m.variance - 1.0 / 12.0).abs() < 1e-16);
        let m = order_statistic_cdf_moments(19, 19).unwrap();
        assert!((m.mean - 0.95).abs() < 1e-16);
        // m = k n1, N = k n2 - 1 gives mean gamma exactly.
        let m = order_statistic_cdf_moments(212 * 19, 212 * 20 - 1).unwrap();
        assert_eq!(m.mean, 4028.0 / 4240.0);
        assert!(order_statistic_cdf_moments(0, 3).is_err());
        assert!(order_statistic_cdf_moments(4, 3).is_err());
    }

    #[test]
    fn bounds_at_half() {
        for n in [10, 100, 2180] {
            let b = beta_confidence_bounds(0.5, 0.05, n).unwrap();
            assert!((b.eps_lower - b.eps_upper - 1.0 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn bounds_solve_beta_sample_size() {
        let at = |n| beta_confidence_bounds(0.95, 0.05, n).unwrap();
        assert!(at(2180).eps_lower <= 0.01);
        assert!(at(2160).eps_lower > 0.01);
        assert!(at(2180).eps_lower >= at(2180).eps_upper);
    }

    #[test]
    fn coverage_edges() {
        assert_eq!(coverage_probability(3, 10, 0.5, 1.0).unwrap(), 1.0);
        assert!((coverage_probability(1, 1, 0.5, 0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!(coverage_probability(0, 1, 0.5, 0.1).is_err());
        assert!(coverage_probability(2, 1, 0.5, 0.1).is_err());
        assert!(coverage_probability(1, 1, 1.5, 0.1).is_err());
        assert!(coverage_probability(1, 1, 0.5, -0.1).is_err());
    }

    #[test]
    fn coverage_audits_beta_operating_point() {
        let c = coverage_probability(2071, 2180, 0.95, 0.01).unwrap();
        assert!(c >= 0.948, "{c}");
    }

    #[test]
    fn method_parsing() {
        assert_eq!("DKW".parse::<Method>().unwrap(), Method::Dkw);
        assert_eq!(Method::Beta.to_string(), "beta");
        assert!("chebyshev".parse::<Method>().is_err());
    }
}
