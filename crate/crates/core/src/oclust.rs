//! The trimming loop: refit, measure how far the leave-one-out deltas sit from the
//! beta-mixture reference, drop the most likely outlier, repeat. The outlier count is the
//! location of the global minimum of the recorded divergences.

use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::divergence::{build_bins, kl_divergence, BinPolicy, KlEstimate};
use crate::error::{OclustError, Result};
use crate::gmm::{cluster_stats, em_fit_with_candidates, FitConfig, GmmFit, HardAssignment, MixtureModel};
use crate::reference::ReferenceMixture;
use crate::subset::{deltas_for_fit, DeltaMode};

/// Default upper bound on outliers: `ceil(0.125 n)`.
pub fn default_max_outliers(n: usize) -> usize {
    (0.125 * n as f64).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OclustConfig {
    pub clusters: usize,
    /// `F`; `None` means [`default_max_outliers`].
    pub max_outliers: Option<usize>,
    pub fit: FitConfig,
    pub bins: BinPolicy,
    pub delta_mode: DeltaMode,
}

impl OclustConfig {
    pub fn new(clusters: usize) -> Self {
        Self {
            clusters,
            max_outliers: None,
            fit: FitConfig::default(),
            bins: BinPolicy::default(),
            delta_mode: DeltaMode::Refit,
        }
    }

    pub fn resolved_max_outliers(&self, n: usize) -> usize {
        self.max_outliers.unwrap_or_else(|| default_max_outliers(n))
    }

    /// Checks `1 <= F < n - G (p + 2)`.
    pub fn validate(&self, n: usize, p: usize) -> Result<usize> {
        self.fit.validate()?;
        if self.clusters == 0 {
            return Err(OclustError::Config("need at least one cluster".into()));
        }
        let f = self.resolved_max_outliers(n);
        let floor = self.clusters * (p + 2);
        if f == 0 || n <= floor || f >= n - floor {
            return Err(OclustError::Config(format!(
                "max outliers {f} must satisfy 1 <= F < n - G(p+2) = {}",
                n as i64 - floor as i64
            )));
        }
        if let BinPolicy::Fixed(b, _) = self.bins {
            if b < 2 {
                return Err(OclustError::Config("need at least 2 bins".into()));
            }
        }
        Ok(f)
    }
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Original row removed just before this measurement; `None` at iteration 0.
    pub removed_point: Option<usize>,
    pub kl: KlEstimate,
    pub loglik: f64,
    pub n_remaining: usize,
    pub cluster_sizes: Vec<usize>,
    pub model: MixtureModel,
}

#[derive(Debug, Clone)]
pub struct OclustResult {
    pub n: usize,
    pub trace: Vec<IterationRecord>,
    pub chosen_num_outliers: usize,
    /// Original row indices, in removal order.
    pub outlier_indices: Vec<usize>,
    /// Original row indices of the retained points, ascending.
    pub retained_indices: Vec<usize>,
    /// Labels of the retained points, aligned with `retained_indices`.
    pub final_labels: HardAssignment,
    pub final_model: MixtureModel,
    pub final_loglik: f64,
    pub alpha_hat: f64,
}

impl OclustResult {
    /// Per original row: `Some(cluster)` for retained points, `None` for outliers.
    pub fn row_labels(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.n];
        for (&row, &l) in self.retained_indices.iter().zip(self.final_labels.labels()) {
            out[row] = Some(l);
        }
        out
    }

    pub fn outlier_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for &i in &self.outlier_indices {
            mask[i] = true;
        }
        mask
    }

    pub fn kl_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.kl.value).collect()
    }
}

/// Index maximising the subset log-likelihood; ties go to the lowest index.
pub fn most_likely_outlier(subset_logliks: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, &v) in subset_logliks.iter().enumerate() {
        if best.map_or(true, |b| v > subset_logliks[b]) {
            best = Some(j);
        }
    }
    best
}

/// First index of the minimum; ties go to the smaller count.
pub fn argmin_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, &v) in values.iter().enumerate() {
        if best.map_or(true, |b| v < values[b]) {
            best = Some(j);
        }
    }
    best
}

struct Step {
    fit: GmmFit,
    kl: KlEstimate,
    next_removal: Option<usize>,
}

fn measure(data: &DataMatrix, config: &OclustConfig, warm: Option<&MixtureModel>, want_removal: bool) -> Result<Step> {
    let warm: Vec<&MixtureModel> = warm.into_iter().collect();
    let fit = em_fit_with_candidates(data, config.clusters, &config.fit, &warm)?;
    let stats = cluster_stats(data, &fit.labels)?;
    let deltas = deltas_for_fit(data, &fit, &config.fit, config.delta_mode)?;
    let reference = ReferenceMixture::from_stats(&stats)?;
    let bins = build_bins(&reference, config.bins.bins_for(data.n()), config.bins.method())?;
    let kl = kl_divergence(&deltas.values, &bins)?;
    let next_removal = if want_removal { most_likely_outlier(&deltas.subset_logliks()) } else { None };
    Ok(Step { fit, kl, next_removal })
}

/// Run `F + 1` measure-and-trim iterations and pick the outlier count at the KL minimum.
pub fn oclust_run(data: &DataMatrix, config: &OclustConfig) -> Result<OclustResult> {
    let n = data.n();
    let max_outliers = config.validate(n, data.p())?;
    let mut active: Vec<usize> = (0..n).collect();
    let mut trace: Vec<IterationRecord> = Vec::with_capacity(max_outliers + 1);
    let mut removed_last = None;
    let mut warm: Option<MixtureModel> = None;

    for m in 0..=max_outliers {
        let current = data.select_rows(&active)?;
        let step = match measure(&current, config, warm.as_ref(), m < max_outliers) {
            Ok(s) => s,
            Err(source) => {
                return Err(OclustError::Aborted { iteration: m, source: Box::new(source), partial_trace: trace })
            }
        };
        trace.push(IterationRecord {
            iteration: m,
            removed_point: removed_last,
            kl: step.kl,
            loglik: step.fit.loglik,
            n_remaining: current.n(),
            cluster_sizes: step.fit.labels.counts(),
            model: step.fit.model.clone(),
        });
        if let Some(k) = step.next_removal {
            removed_last = Some(active.remove(k));
        }
        warm = Some(step.fit.model);
    }

    let kls: Vec<f64> = trace.iter().map(|r| r.kl.value).collect();
    let chosen = argmin_first(&kls).expect("trace is nonempty");
    let outlier_indices: Vec<usize> = trace[1..=chosen].iter().filter_map(|r| r.removed_point).collect();
    let mut retained_indices: Vec<usize> = {
        let mask: std::collections::HashSet<usize> = outlier_indices.iter().copied().collect();
        (0..n).filter(|i| !mask.contains(i)).collect()
    };
    retained_indices.sort_unstable();
    let retained = data.select_rows(&retained_indices)?;
    let final_fit = em_fit_with_candidates(&retained, config.clusters, &config.fit, &[&trace[chosen].model])
        .map_err(|source| OclustError::Aborted {
            iteration: max_outliers + 1,
            source: Box::new(source),
            partial_trace: trace.clone(),
        })?;

    Ok(OclustResult {
        n,
        chosen_num_outliers: chosen,
        alpha_hat: chosen as f64 / n as f64,
        outlier_indices,
        retained_indices,
        final_labels: final_fit.labels,
        final_model: final_fit.model,
        final_loglik: final_fit.loglik,
        trace,
    })
}

/// Error rates of a predicted outlier mask against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    /// Share of regular points flagged as outliers.
    pub good_as_outlier: f64,
    /// Share of true outliers kept as regular points.
    pub outlier_as_good: f64,
    /// All mislabelled points over `n`.
    pub misclassification: f64,
}

pub fn error_rates(predicted: &[bool], truth: &[bool]) -> Result<ErrorRates> {
    if predicted.len() != truth.len() {
        return Err(OclustError::DimensionMismatch { expected: truth.len(), actual: predicted.len() });
    }
    if truth.is_empty() {
        return Err(OclustError::EmptyData);
    }
    let (mut good, mut bad, mut g_as_o, mut o_as_g) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in predicted.iter().zip(truth) {
        match (t, p) {
            (false, false) => good += 1,
            (false, true) => {
                good += 1;
                g_as_o += 1;
            }
            (true, false) => {
                bad += 1;
                o_as_g += 1;
            }
            (true, true) => bad += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(ErrorRates {
        good_as_outlier: ratio(g_as_o, good),
        outlier_as_good: ratio(o_as_g, bad),
        misclassification: ratio(g_as_o + o_as_g, truth.len()),
    })
}

pub fn classify_errors(result: &OclustResult, truth: &[bool]) -> Result<ErrorRates> {
    error_rates(&result.outlier_mask(), truth)
}
