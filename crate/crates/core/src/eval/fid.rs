use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::fcn::{FcnClassifier, FCN_FEATURES};
use crate::error::{Error, Result};

/// Regularizer added to both covariances when either is numerically
/// singular.
pub const FID_EPS: f64 = 1e-6;
/// Largest tolerated asymmetry, relative to the largest entry (or absolute
/// below 1).
pub const SYMMETRY_TOL: f64 = 1e-4;

/// Sample mean and unbiased covariance of feature rows.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub count: usize,
}

pub fn feature_moments(rows: &[Vec<f32>]) -> Result<GaussianMoments> {
    let Some(first) = rows.first() else {
        return Err(Error::Eval("no feature rows".into()));
    };
    let d = first.len();
    let n = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Eval("feature rows differ in width".into()));
    }
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j] as f64);
    let mean = DVector::from_fn(d, |j, _| x.column(j).sum() / n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = if n > 1 {
        centered.transpose() * &centered / (n - 1) as f64
    } else {
        DMatrix::zeros(d, d)
    };
    Ok(GaussianMoments { mean, cov, count: n })
}

fn check_symmetric(name: &str, s: &DMatrix<f64>) -> Result<()> {
    if !s.is_square() {
        return Err(Error::Eval(format!("{name} is {}x{}, not square", s.nrows(), s.ncols())));
    }
    let scale = s.amax().max(1.0);
    let asym = (s - s.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Eval(format!("{name} is not symmetric (max asymmetry {asym:e})")));
    }
    Ok(())
}

fn symmetrize(s: &DMatrix<f64>) -> DMatrix<f64> {
    (s + s.transpose()) * 0.5
}

/// Principal square root of a symmetric positive semi-definite matrix;
/// negative round-off eigenvalues are treated as zero.
fn sqrt_psd(s: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(s.clone());
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

fn min_eigenvalue(s: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(s.clone()).eigenvalues.min()
}

/// `‖μ₁−μ₂‖² + Tr(Σ₁ + Σ₂ − 2(Σ₁Σ₂)^½)`.
///
/// The trace of `(Σ₁Σ₂)^½` is taken as the trace of the square root of
/// the symmetric matrix `Σ₁^½ Σ₂ Σ₁^½`, which has the same eigenvalues.
/// When either covariance has an eigenvalue below `FID_EPS`, `FID_EPS·I` is
/// added to both first. Tiny negative results are clamped to zero.
pub fn frechet_distance(mu1: &DVector<f64>, s1: &DMatrix<f64>, mu2: &DVector<f64>, s2: &DMatrix<f64>) -> Result<f64> {
    let d = mu1.len();
    if mu2.len() != d || s1.shape() != (d, d) || s2.shape() != (d, d) {
        return Err(Error::Eval("mean and covariance dimensions disagree".into()));
    }
    check_symmetric("first covariance", s1)?;
    check_symmetric("second covariance", s2)?;
    if mu1.iter().chain(mu2.iter()).chain(s1.iter()).chain(s2.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Eval("non-finite moments".into()));
    }
    let (mut s1, mut s2) = (symmetrize(s1), symmetrize(s2));
    if d > 0 && min_eigenvalue(&s1).min(min_eigenvalue(&s2)) < FID_EPS {
        let eps = DMatrix::identity(d, d) * FID_EPS;
        s1 += &eps;
        s2 += &eps;
    }
    let r1 = sqrt_psd(&s1);
    let inner = symmetrize(&(&r1 * &s2 * &r1));
    let tr_covmean: f64 = SymmetricEigen::new(inner).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    let diff = mu1 - mu2;
    let fid = diff.dot(&diff) + s1.trace() + s2.trace() - 2.0 * tr_covmean;
    Ok(fid.max(0.0))
}

/// Moment summary kept in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub count: usize,
    pub mean: Vec<f64>,
    pub cov_trace: f64,
}

impl From<&GaussianMoments> for MomentSummary {
    fn from(m: &GaussianMoments) -> Self {
        MomentSummary {
            count: m.count,
            mean: m.mean.iter().copied().collect(),
            cov_trace: m.cov.trace(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidReport {
    pub dataset: String,
    pub model: String,
    pub fid: f64,
    pub real: MomentSummary,
    pub synthetic: MomentSummary,
    /// Set when either side has no more samples than feature dimensions,
    /// so its covariance is necessarily singular.
    pub low_sample: bool,
}

/// Fréchet distance between Gaussian fits of the classifier's pooled
/// features on real and synthetic series.
pub fn fid_1d(clf: &FcnClassifier, dataset: &str, model: &str, real: &[&[f32]], synthetic: &[&[f32]]) -> Result<FidReport> {
    if real.is_empty() || synthetic.is_empty() {
        return Err(Error::Eval(format!("FID for {model} on {dataset} needs series on both sides")));
    }
    let a = feature_moments(&clf.extract_features(real)?)?;
    let b = feature_moments(&clf.extract_features(synthetic)?)?;
    let fid = frechet_distance(&a.mean, &a.cov, &b.mean, &b.cov)?;
    Ok(FidReport {
        dataset: dataset.to_string(),
        model: model.to_string(),
        fid,
        low_sample: a.count <= FCN_FEATURES || b.count <= FCN_FEATURES,
        real: MomentSummary::from(&a),
        synthetic: MomentSummary::from(&b),
    })
}
