//! Seedable detector-output sources.
//!
//! Canonical text forms (keys separated by `,`, vector entries by `;`,
//! matrices row-major):
//!
//! ```text
//! uniform
//! chi2:dof=4
//! levy
//! cusum:delta=6,dim=4
//! gauss:dim=2,mean=1;2,cov=2;0.5;0.5;1
//! wcusum:delta=3,dim=2,mean=1;2,cov=2;0.5;0.5;1,calib=1000,burn=0
//! ```
//!
//! `uniform`, `chi2`, `levy` and `gauss` are i.i.d. sources. `gauss` emits the
//! squared Mahalanobis norm of a residual under its true parameters.
//! `cusum` and `wcusum` are trajectories of the non-resetting CUSUM
//! `y(k+1) = max(0, y(k) + |r(k)|^2 - delta)`, `y(0) = 0`, driven by standard
//! normal residuals (`cusum`) or by Gaussian residuals whitened with a mean
//! and covariance estimated from `calib` calibration residuals (`wcusum`).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{SampleStream, StreamRole};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SourceError {
    #[error("malformed source spec {spec:?}: {reason}")]
    Parse { spec: String, reason: String },
    #[error("invalid source parameter: {0}")]
    Invalid(String),
    #[error("covariance is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("sample covariance is singular: eigenvalue ratio {ratio:e} <= 1e-12")]
    Singular { ratio: f64 },
    #[error("need at least {needed} residual vectors of dimension {dim}, got {got}")]
    TooFewResiduals { needed: usize, dim: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Mean and row-major covariance of a Gaussian residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussParams {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
}

impl GaussParams {
    pub fn standard(dim: usize) -> Self {
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = 1.0;
        }
        Self {
            mean: vec![0.0; dim],
            cov,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn is_standard(&self) -> bool {
        *self == Self::standard(self.dim())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SourceSpec {
    Uniform,
    ChiSquare { dof: u32 },
    Levy,
    Cusum { delta: f64, dim: usize },
    Gauss(GaussParams),
    WhitenedCusum {
        delta: f64,
        residual: GaussParams,
        calibration: usize,
        burn_in: usize,
    },
}

impl SourceSpec {
    /// Trajectory sources produce serially correlated samples.
    pub fn is_trajectory(&self) -> bool {
        matches!(self, SourceSpec::Cusum { .. } | SourceSpec::WhitenedCusum { .. })
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::Uniform => f.write_str("uniform"),
            SourceSpec::ChiSquare { dof } => write!(f, "chi2:dof={dof}"),
            SourceSpec::Levy => f.write_str("levy"),
            SourceSpec::Cusum { delta, dim } => write!(f, "cusum:delta={delta},dim={dim}"),
            SourceSpec::Gauss(p) => {
                write!(f, "gauss:dim={}", p.dim())?;
                if !p.is_standard() {
                    write!(f, ",mean={},cov={}", fmt_vec(&p.mean), fmt_vec(&p.cov))?;
                }
                Ok(())
            }
            SourceSpec::WhitenedCusum {
                delta,
                residual,
                calibration,
                burn_in,
            } => {
                write!(f, "wcusum:delta={delta},dim={}", residual.dim())?;
                if !residual.is_standard() {
                    write!(f, ",mean={},cov={}", fmt_vec(&residual.mean), fmt_vec(&residual.cov))?;
                }
                write!(f, ",calib={calibration},burn={burn_in}")
            }
        }
    }
}

impl From<SourceSpec> for String {
    fn from(spec: SourceSpec) -> Self {
        spec.to_string()
    }
}

impl TryFrom<String> for SourceSpec {
    type Error = SourceError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

struct Fields<'a> {
    spec: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn parse(spec: &'a str, body: &'a str) -> Result<Self, SourceError> {
        let mut pairs = Vec::new();
        if !body.is_empty() {
            for item in body.split(',') {
                let (k, v) = item.split_once('=').ok_or_else(|| SourceError::Parse {
                    spec: spec.to_owned(),
                    reason: format!("expected key=value, got {item:?}"),
                })?;
                if pairs.iter().any(|(seen, _)| *seen == k.trim()) {
                    return Err(SourceError::Parse {
                        spec: spec.to_owned(),
                        reason: format!("duplicate key {k:?}"),
                    });
                }
                pairs.push((k.trim(), v.trim()));
            }
        }
        Ok(Self { spec, pairs })
    }

    fn err(&self, reason: String) -> SourceError {
        SourceError::Parse {
            spec: self.spec.to_owned(),
            reason,
        }
    }

    fn take(&mut self, key: &str) -> Option<&'a str> {
        let pos = self.pairs.iter().position(|(k, _)| *k == key)?;
        Some(self.pairs.remove(pos).1)
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Result<T, SourceError> {
        let raw = self.take(key).ok_or_else(|| self.err(format!("missing {key}")))?;
        raw.parse()
            .map_err(|_| self.err(format!("bad value {raw:?} for {key}")))
    }

    fn optional<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, SourceError> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| self.err(format!("bad value {raw:?} for {key}"))),
        }
    }

    fn vector(&mut self, key: &str) -> Result<Option<Vec<f64>>, SourceError> {
        let Some(raw) = self.take(key) else {
            return Ok(None);
        };
        raw.split(';')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
            .map_err(|_| self.err(format!("bad vector {raw:?} for {key}")))
    }

    fn finish(self) -> Result<(), SourceError> {
        match self.pairs.first() {
            None => Ok(()),
            Some((k, _)) => Err(self.err(format!("unknown key {k:?}"))),
        }
    }

    fn gauss(&mut self) -> Result<GaussParams, SourceError> {
        let dim: usize = self.required("dim")?;
        let mut params = GaussParams::standard(dim);
        if let Some(mean) = self.vector("mean")? {
            params.mean = mean;
        }
        if let Some(cov) = self.vector("cov")? {
            params.cov = cov;
        }
        Ok(params)
    }
}

impl FromStr for SourceSpec {
    type Err = SourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        let mut fields = Fields::parse(s, body)?;
        let spec = match kind {
            "uniform" => SourceSpec::Uniform,
            "levy" => SourceSpec::Levy,
            "chi2" => SourceSpec::ChiSquare {
                dof: fields.required("dof")?,
            },
            "cusum" => SourceSpec::Cusum {
                delta: fields.required("delta")?,
                dim: fields.required("dim")?,
            },
            "gauss" => SourceSpec::Gauss(fields.gauss()?),
            "wcusum" => {
                let delta = fields.required("delta")?;
                let residual = fields.gauss()?;
                SourceSpec::WhitenedCusum {
                    delta,
                    residual,
                    calibration: fields.optional("calib")?.unwrap_or(1000),
                    burn_in: fields.optional("burn")?.unwrap_or(0),
                }
            }
            other => return Err(fields.err(format!("unknown source kind {other:?}"))),
        };
        fields.finish()?;
        validate(&spec)?;
        Ok(spec)
    }
}

fn validate(spec: &SourceSpec) -> Result<(), SourceError> {
    let check_delta = |delta: f64| {
        if delta > 0.0 && delta.is_finite() {
            Ok(())
        } else {
            Err(SourceError::Invalid(format!("delta must be positive, got {delta}")))
        }
    };
    match spec {
        SourceSpec::Uniform | SourceSpec::Levy => Ok(()),
        SourceSpec::ChiSquare { dof } if *dof == 0 => Err(SourceError::Invalid("dof must be >= 1".into())),
        SourceSpec::ChiSquare { .. } => Ok(()),
        SourceSpec::Cusum { delta, dim } => {
            check_delta(*delta)?;
            if *dim == 0 {
                return Err(SourceError::Invalid("dim must be >= 1".into()));
            }
            Ok(())
        }
        SourceSpec::Gauss(p) => GaussianResidual::new(p).map(|_| ()),
        SourceSpec::WhitenedCusum {
            delta,
            residual,
            calibration,
            ..
        } => {
            check_delta(*delta)?;
            GaussianResidual::new(residual)?;
            if *calibration <= residual.dim() {
                return Err(SourceError::Invalid(format!(
                    "calib must exceed dim = {}, got {calibration}",
                    residual.dim()
                )));
            }
            Ok(())
        }
    }
}

/// Sum of `dof` squared standard normals.
pub fn chi_square_sample(dof: u32, stream: &mut SampleStream) -> f64 {
    (0..dof).map(|_| {
        let z = stream.standard_normal();
        z * z
    })
    .sum()
}

/// Standard Levy (location 0, scale 1) as `1 / Z^2`.
pub fn levy_sample(stream: &mut SampleStream) -> f64 {
    loop {
        let z = stream.standard_normal();
        if z != 0.0 {
            return 1.0 / (z * z);
        }
    }
}

/// Non-resetting CUSUM state; never negative.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CusumState {
    y: f64,
}

impl CusumState {
    pub fn value(&self) -> f64 {
        self.y
    }

    pub fn step(&mut self, squared_norm: f64, delta: f64) -> f64 {
        self.y = (self.y + squared_norm - delta).max(0.0);
        self.y
    }
}

/// `(y(1), ..., y(length))` for standard normal residuals of dimension `dim`.
pub fn cusum_trajectory(delta: f64, dim: usize, length: usize, stream: &mut SampleStream) -> Vec<f64> {
    let mut state = CusumState::default();
    (0..length)
        .map(|_| state.step(chi_square_sample(dim as u32, stream), delta))
        .collect()
}

/// Gaussian residual sampler `mean + L z` with `L L^T = cov`.
#[derive(Debug, Clone)]
pub struct GaussianResidual {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
    whitener: DMatrix<f64>,
}

impl GaussianResidual {
    pub fn new(params: &GaussParams) -> Result<Self, SourceError> {
        let dim = params.dim();
        if dim == 0 {
            return Err(SourceError::Invalid("dim must be >= 1".into()));
        }
        if params.cov.len() != dim * dim {
            return Err(SourceError::Dimension {
                expected: dim * dim,
                got: params.cov.len(),
            });
        }
        if params.mean.iter().chain(&params.cov).any(|v| !v.is_finite()) {
            return Err(SourceError::Invalid("non-finite mean or covariance".into()));
        }
        let cov = DMatrix::from_row_slice(dim, dim, &params.cov);
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        if (&cov - cov.transpose()).amax() > 1e-12 * scale {
            return Err(SourceError::NotPositiveDefinite);
        }
        let chol = cov.clone().cholesky().ok_or(SourceError::NotPositiveDefinite)?;
        let l = chol.l();
        let whitener = l
            .clone()
            .try_inverse()
            .ok_or(SourceError::NotPositiveDefinite)?;
        Ok(Self {
            mean: DVector::from_column_slice(&params.mean),
            chol: l,
            whitener,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample(&self, stream: &mut SampleStream) -> DVector<f64> {
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| stream.standard_normal()));
        &self.mean + &self.chol * z
    }

    /// `|L^{-1}(r - mean)|^2`, chi-square with `dim` degrees of freedom.
    pub fn mahalanobis_sq(&self, r: &DVector<f64>) -> f64 {
        (&self.whitener * (r - &self.mean)).norm_squared()
    }
}

/// Estimated residual statistics and the symmetric whitening matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningModel {
    pub mu_hat: DVector<f64>,
    pub sigma_hat: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
}

/// Sample mean, unbiased covariance and `Sigma^{-1/2}` via eigendecomposition.
pub fn estimate_mean_cov(residuals: &[DVector<f64>]) -> Result<WhiteningModel, SourceError> {
    let dim = residuals.first().map_or(0, |r| r.len());
    if dim == 0 || residuals.len() < dim + 1 {
        return Err(SourceError::TooFewResiduals {
            needed: dim.max(1) + 1,
            dim,
            got: residuals.len(),
        });
    }
    if let Some(bad) = residuals.iter().find(|r| r.len() != dim) {
        return Err(SourceError::Dimension {
            expected: dim,
            got: bad.len(),
        });
    }
    let n = residuals.len() as f64;
    let mu_hat = residuals.iter().fold(DVector::zeros(dim), |acc, r| acc + r) / n;
    let mut sigma_hat = DMatrix::zeros(dim, dim);
    for r in residuals {
        let d = r - &mu_hat;
        sigma_hat += &d * d.transpose();
    }
    sigma_hat /= n - 1.0;

    let eigen = sigma_hat.clone().symmetric_eigen();
    let max = eigen.eigenvalues.max();
    let min = eigen.eigenvalues.min();
    if max.is_nan() || max <= 0.0 || min <= 1e-12 * max {
        return Err(SourceError::Singular {
            ratio: if max > 0.0 { min / max } else { 0.0 },
        });
    }
    let inv_root = eigen.eigenvalues.map(|l| 1.0 / l.sqrt());
    let v = &eigen.eigenvectors;
    let m = v * DMatrix::from_diagonal(&inv_root) * v.transpose();
    let inv_sqrt = (&m + m.transpose()) * 0.5;
    Ok(WhiteningModel {
        mu_hat,
        sigma_hat,
        inv_sqrt,
    })
}

/// `Sigma^{-1/2} (r - mu)`.
pub fn whiten(model: &WhiteningModel, residual: &DVector<f64>) -> Result<DVector<f64>, SourceError> {
    if residual.len() != model.mu_hat.len() {
        return Err(SourceError::Dimension {
            expected: model.mu_hat.len(),
            got: residual.len(),
        });
    }
    Ok(&model.inv_sqrt * (residual - &model.mu_hat))
}

/// A validated source ready to draw from.
#[derive(Debug, Clone)]
pub struct Source {
    spec: SourceSpec,
    residual: Option<GaussianResidual>,
}

impl Source {
    pub fn new(spec: SourceSpec) -> Result<Self, SourceError> {
        validate(&spec)?;
        let residual = match &spec {
            SourceSpec::Gauss(p) => Some(GaussianResidual::new(p)?),
            SourceSpec::WhitenedCusum { residual, .. } => Some(GaussianResidual::new(residual)?),
            _ => None,
        };
        Ok(Self { spec, residual })
    }

    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    pub fn is_trajectory(&self) -> bool {
        self.spec.is_trajectory()
    }

    fn draw_iid(&self, stream: &mut SampleStream) -> f64 {
        match &self.spec {
            SourceSpec::Uniform => stream.next_f64(),
            SourceSpec::ChiSquare { dof } => chi_square_sample(*dof, stream),
            SourceSpec::Levy => levy_sample(stream),
            SourceSpec::Gauss(_) => {
                let g = self.residual.as_ref().expect("gauss source has a sampler");
                g.mahalanobis_sq(&g.sample(stream))
            }
            SourceSpec::Cusum { .. } | SourceSpec::WhitenedCusum { .. } => {
                unreachable!("trajectory sources are generated as a whole")
            }
        }
    }

    /// `length` samples from `stream`: i.i.d. draws, or a fresh trajectory
    /// `y(1..=length)` for CUSUM sources.
    ///
    /// `wcusum` draws its calibration residuals from a separate substream
    /// keyed by `calibration_seed`, so the whitening model is shared by all
    /// trajectories of one run.
    pub fn generate(&self, stream: &mut SampleStream, length: usize, calibration_seed: u64) -> Vec<f64> {
        match &self.spec {
            SourceSpec::Cusum { delta, dim } => cusum_trajectory(*delta, *dim, length, stream),
            SourceSpec::WhitenedCusum {
                delta,
                calibration,
                burn_in,
                ..
            } => {
                let residual = self.residual.as_ref().expect("wcusum source has a sampler");
                let mut calib_stream = SampleStream::substream(calibration_seed, StreamRole::Calibration, 0);
                let calib: Vec<_> = (0..*calibration)
                    .map(|_| residual.sample(&mut calib_stream))
                    .collect();
                // Calibration residuals from a PD covariance are almost surely full rank.
                let model = estimate_mean_cov(&calib).expect("calibration covariance is nonsingular");
                let mut state = CusumState::default();
                (0..burn_in + length)
                    .map(|_| {
                        let r = whiten(&model, &residual.sample(stream)).expect("dimensions match");
                        state.step(r.norm_squared(), *delta)
                    })
                    .skip(*burn_in)
                    .collect()
            }
            _ => (0..length).map(|_| self.draw_iid(stream)).collect(),
        }
    }
}
