//! Leave-one-out log-likelihood deltas `y_j = ℓ(X \ x_j) - ℓ(X)` and the
//! one-point mean/covariance downdates behind them.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{OclustError, Result};
use crate::gmm::{
    cluster_stats, em_fit, em_refine, ClusterStat, FitConfig, GmmFit, HardAssignment, MixtureModel,
};
use crate::linalg::{symmetrize, SpdFactor};
use crate::reference::delta_shift;

/// Iteration cap for warm-started subset refits.
pub const REFIT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMode {
    /// Re-run EM on every subset and difference the true mixture log-likelihoods.
    Refit,
    /// Hold the full-data cluster statistics fixed and use the closed-form delta.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DowndateVariant {
    /// `[(n-1) S - d d'] / (n-2)`, ignoring the mean shift.
    Approx,
    /// Exact leave-one-out covariance, `[(n-1) S - n/(n-1) d d'] / (n-2)`.
    Exact,
}

/// The realized deltas of one dataset, in input row order.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetDeltaSet {
    pub values: Vec<f64>,
    /// Full-data cluster of each removed point.
    pub source_labels: Vec<usize>,
    pub mode: DeltaMode,
    /// `ℓ(X)` the deltas are measured against.
    pub full_loglik: f64,
}

impl SubsetDeltaSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `ℓ(X \ x_j)` for every `j`.
    pub fn subset_logliks(&self) -> Vec<f64> {
        self.values.iter().map(|y| self.full_loglik + y).collect()
    }
}

/// `(x - mu)' Σ^{-1} (x - mu)`.
pub fn mahalanobis_sq(x: &[f64], mu: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    if x.len() != mu.len() || sigma.nrows() != x.len() {
        return Err(OclustError::DimensionMismatch { expected: sigma.nrows(), actual: x.len() });
    }
    Ok(SpdFactor::new(sigma)?.mahalanobis_sq(x, mu))
}

/// Closed-form delta for removing `x_j` from its cluster:
/// `-log π_h + (p/2) log 2π + (1/2) log|S_h| + t_j / 2`.
pub fn delta_formula(x_j: &[f64], stat: &ClusterStat) -> Result<f64> {
    if stat.count < 2 {
        return Err(OclustError::InsufficientPoints { cluster: usize::MAX, count: stat.count, required: 2 });
    }
    let factor = SpdFactor::new(&stat.cov)?;
    if x_j.len() != factor.dim() {
        return Err(OclustError::DimensionMismatch { expected: factor.dim(), actual: x_j.len() });
    }
    let t = factor.mahalanobis_sq(x_j, stat.mean.as_slice());
    Ok(delta_shift(stat.proportion, x_j.len(), factor.log_det()) + 0.5 * t)
}

/// Mean and covariance of a cluster after removing `x_j`.
pub fn downdate_stats(
    stat: &ClusterStat,
    x_j: &[f64],
    variant: DowndateVariant,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = stat.count;
    if n < 3 {
        return Err(OclustError::InsufficientPoints { cluster: usize::MAX, count: n, required: 3 });
    }
    if x_j.len() != stat.mean.len() {
        return Err(OclustError::DimensionMismatch { expected: stat.mean.len(), actual: x_j.len() });
    }
    let nf = n as f64;
    let x = DVector::from_column_slice(x_j);
    let d = &x - &stat.mean;
    let mean = (&stat.mean * nf - &x) / (nf - 1.0);
    let outer = &d * d.transpose();
    let weight = match variant {
        DowndateVariant::Approx => 1.0,
        DowndateVariant::Exact => nf / (nf - 1.0),
    };
    let mut cov = (&stat.cov * (nf - 1.0) - outer * weight) / (nf - 2.0);
    symmetrize(&mut cov);
    Ok((mean, cov))
}

/// Fit `g` components to `data`, then compute every leave-one-out delta.
pub fn subset_loglik_set(
    data: &DataMatrix,
    g: usize,
    config: &FitConfig,
    mode: DeltaMode,
) -> Result<SubsetDeltaSet> {
    let fit = em_fit(data, g, config)?;
    deltas_for_fit(data, &fit, config, mode)
}

/// Leave-one-out deltas around an existing full-data fit.
pub fn deltas_for_fit(
    data: &DataMatrix,
    fit: &GmmFit,
    config: &FitConfig,
    mode: DeltaMode,
) -> Result<SubsetDeltaSet> {
    let values = match mode {
        DeltaMode::Frozen => frozen_deltas(data, &fit.labels)?,
        DeltaMode::Refit => refit_deltas(data, &fit.model, fit.loglik, config)?,
    };
    Ok(SubsetDeltaSet {
        values,
        source_labels: fit.labels.labels().to_vec(),
        mode,
        full_loglik: fit.loglik,
    })
}

/// Closed-form deltas with the hard-cluster statistics of `data` held fixed.
pub fn frozen_deltas(data: &DataMatrix, labels: &HardAssignment) -> Result<Vec<f64>> {
    let stats = cluster_stats(data, labels)?;
    let prepared = stats
        .clusters
        .iter()
        .map(|s| {
            let f = SpdFactor::new(&s.cov)?;
            Ok((delta_shift(s.proportion, data.p(), f.log_det()), f))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(data
        .rows()
        .zip(labels.labels())
        .map(|(x, &h)| {
            let (shift, f) = &prepared[h];
            shift + 0.5 * f.mahalanobis_sq(x, stats.clusters[h].mean.as_slice())
        })
        .collect())
}

fn refit_deltas(
    data: &DataMatrix,
    model: &MixtureModel,
    full_loglik: f64,
    config: &FitConfig,
) -> Result<Vec<f64>> {
    (0..data.n())
        .into_par_iter()
        .map(|j| {
            let subset = data.without_row(j)?;
            em_refine(&subset, model, config, REFIT_MAX_ITER)
                .map(|fit| fit.loglik - full_loglik)
                .map_err(|e| OclustError::SubsetRefit { index: j, source: Box::new(e) })
        })
        .collect()
}

/// Deltas under known parameters, `-log π_h - log φ(x_j | μ_h, Σ_h)`.
pub fn population_deltas(
    data: &DataMatrix,
    model: &MixtureModel,
    labels: &HardAssignment,
) -> Result<Vec<f64>> {
    if labels.len() != data.n() {
        return Err(OclustError::DimensionMismatch { expected: data.n(), actual: labels.len() });
    }
    data.rows()
        .zip(labels.labels())
        .map(|(x, &h)| {
            let c = model.components().get(h).ok_or(OclustError::LabelOutOfRange {
                label: h,
                clusters: model.num_components(),
            })?;
            Ok(-model.weights()[h].ln() - crate::gmm::log_gaussian_density(x, c)?)
        })
        .collect()
}
