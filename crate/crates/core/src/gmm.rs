//! Gaussian densities, mixture likelihoods and EM fitting.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{OclustError, Result};
use crate::linalg::{symmetrize, SpdFactor};
use crate::rng::{substream, Domain};

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Mean and covariance of one Gaussian component, with its Cholesky factor cached.
#[derive(Debug, Clone)]
pub struct GaussianParams {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    factor: SpdFactor,
}

impl GaussianParams {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(OclustError::DimensionMismatch { expected: mean.len(), actual: cov.nrows() });
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-9 * cov.amax().max(1.0) {
            return Err(OclustError::InvalidArgument("covariance is not symmetric".into()));
        }
        let factor = SpdFactor::new(&cov)?;
        Ok(Self { mean, cov, factor })
    }

    /// Like [`GaussianParams::new`], applying the diagonal ridge when the factorisation fails.
    pub fn regularized(mean: DVector<f64>, cov: DMatrix<f64>, reg_eps: f64) -> Result<Self> {
        let (factor, cov) = SpdFactor::regularized(&cov, reg_eps)?;
        Ok(Self { mean, cov, factor })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    pub(crate) fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        self.factor.mahalanobis_sq(x, self.mean.as_slice())
    }

    /// `-(p/2) log 2π - (1/2) log|Σ|`.
    #[inline]
    fn log_norm(&self) -> f64 {
        -0.5 * self.dim() as f64 * LN_2PI - 0.5 * self.factor.log_det()
    }
}

/// Mixing weights plus components.
#[derive(Debug, Clone)]
pub struct MixtureModel {
    weights: Vec<f64>,
    components: Vec<GaussianParams>,
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, components: Vec<GaussianParams>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(OclustError::InvalidArgument(
                "need one weight per component and at least one component".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(OclustError::InvalidArgument("mixing weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(OclustError::InvalidArgument(format!("mixing weights sum to {total}")));
        }
        let p = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != p) {
            return Err(OclustError::DimensionMismatch { expected: p, actual: c.dim() });
        }
        Ok(Self { weights, components })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[GaussianParams] {
        &self.components
    }

    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// Per-component `log π_g + log φ(x | μ_g, Σ_g)`, written into `out`.
    #[inline]
    fn joint_log_densities(&self, consts: &[f64], x: &[f64], out: &mut [f64]) {
        for ((o, c), k) in out.iter_mut().zip(&self.components).zip(consts) {
            *o = k - 0.5 * c.mahalanobis_sq(x);
        }
    }

    fn log_consts(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.components).map(|(w, c)| w.ln() + c.log_norm()).collect()
    }
}

/// Hard cluster membership, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardAssignment {
    labels: Vec<usize>,
    clusters: usize,
}

impl HardAssignment {
    pub fn new(labels: Vec<usize>, clusters: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= clusters) {
            return Err(OclustError::LabelOutOfRange { label: bad, clusters });
        }
        Ok(Self { labels, clusters })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.clusters];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Clusters that received no points.
    pub fn empty_clusters(&self) -> Vec<usize> {
        self.counts().iter().enumerate().filter(|(_, &c)| c == 0).map(|(g, _)| g).collect()
    }

    pub fn without_row(&self, skip: usize) -> Self {
        let mut labels = self.labels.clone();
        labels.remove(skip);
        Self { labels, clusters: self.clusters }
    }
}

/// Sample statistics of one hard cluster.
#[derive(Debug, Clone)]
pub struct ClusterStat {
    pub count: usize,
    pub proportion: f64,
    pub mean: DVector<f64>,
    /// Sample covariance with divisor `count - 1`.
    pub cov: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct ClusterStats {
    pub n: usize,
    pub p: usize,
    pub clusters: Vec<ClusterStat>,
}

/// EM settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub reg_eps: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { restarts: 10, max_iter: 1000, rel_tol: 1e-8, reg_eps: 1e-8, seed: 0 }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iter == 0 {
            return Err(OclustError::Config("restarts and max_iter must be positive".into()));
        }
        if !(self.rel_tol > 0.0) || !(self.reg_eps >= 0.0) {
            return Err(OclustError::Config("rel_tol must be positive and reg_eps nonnegative".into()));
        }
        Ok(())
    }
}

/// Outcome of an EM fit.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: MixtureModel,
    pub labels: HardAssignment,
    pub loglik: f64,
    pub iterations: usize,
    /// Log-likelihood evaluated at the start of each iteration.
    pub history: Vec<f64>,
    /// Index of the restart that produced this fit.
    pub run: usize,
}

/// `log φ(x | μ, Σ)`.
pub fn log_gaussian_density(x: &[f64], params: &GaussianParams) -> Result<f64> {
    if x.len() != params.dim() {
        return Err(OclustError::DimensionMismatch { expected: params.dim(), actual: x.len() });
    }
    Ok(params.log_norm() - 0.5 * params.mahalanobis_sq(x))
}

fn check_dims(data: &DataMatrix, model: &MixtureModel) -> Result<()> {
    if data.p() != model.dim() {
        return Err(OclustError::DimensionMismatch { expected: model.dim(), actual: data.p() });
    }
    Ok(())
}

#[inline]
fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Mixture log-likelihood `Σ_i log Σ_g π_g φ(x_i | μ_g, Σ_g)`.
pub fn mixture_log_likelihood(data: &DataMatrix, model: &MixtureModel) -> Result<f64> {
    check_dims(data, model)?;
    let consts = model.log_consts();
    let mut buf = vec![0.0; model.num_components()];
    Ok(data
        .rows()
        .map(|x| {
            model.joint_log_densities(&consts, x, &mut buf);
            log_sum_exp(&buf)
        })
        .sum())
}

/// Hard-assignment approximation `Σ_{x_i ∈ C_g} [log π_g + log φ(x_i | μ_g, Σ_g)]`.
pub fn approx_log_likelihood(
    data: &DataMatrix,
    model: &MixtureModel,
    labels: &HardAssignment,
) -> Result<f64> {
    check_dims(data, model)?;
    if labels.len() != data.n() {
        return Err(OclustError::DimensionMismatch { expected: data.n(), actual: labels.len() });
    }
    if labels.num_clusters() > model.num_components() {
        return Err(OclustError::LabelOutOfRange {
            label: labels.num_clusters() - 1,
            clusters: model.num_components(),
        });
    }
    let consts = model.log_consts();
    Ok(data
        .rows()
        .zip(labels.labels())
        .map(|(x, &g)| consts[g] - 0.5 * model.components[g].mahalanobis_sq(x))
        .sum())
}

/// Per-cluster counts, proportions, means and unbiased covariances.
pub fn cluster_stats(data: &DataMatrix, labels: &HardAssignment) -> Result<ClusterStats> {
    if labels.len() != data.n() {
        return Err(OclustError::DimensionMismatch { expected: data.n(), actual: labels.len() });
    }
    let p = data.p();
    let g = labels.num_clusters();
    let counts = labels.counts();
    if let Some((cluster, &count)) = counts.iter().enumerate().find(|(_, &c)| c < 2) {
        return Err(OclustError::InsufficientPoints { cluster, count, required: 2 });
    }
    let mut means = vec![vec![0.0; p]; g];
    for (x, &l) in data.rows().zip(labels.labels()) {
        for (m, v) in means[l].iter_mut().zip(x) {
            *m += v;
        }
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= c as f64);
    }
    let mut covs = vec![DMatrix::<f64>::zeros(p, p); g];
    let mut d = vec![0.0; p];
    for (x, &l) in data.rows().zip(labels.labels()) {
        for k in 0..p {
            d[k] = x[k] - means[l][k];
        }
        let c = &mut covs[l];
        for a in 0..p {
            for b in 0..=a {
                c[(a, b)] += d[a] * d[b];
            }
        }
    }
    let n = data.n();
    let clusters = covs
        .into_iter()
        .zip(means)
        .zip(&counts)
        .map(|((mut cov, mean), &count)| {
            for a in 0..p {
                for b in 0..=a {
                    let v = cov[(a, b)] / (count - 1) as f64;
                    cov[(a, b)] = v;
                    cov[(b, a)] = v;
                }
            }
            ClusterStat {
                count,
                proportion: count as f64 / n as f64,
                mean: DVector::from_vec(mean),
                cov,
            }
        })
        .collect();
    Ok(ClusterStats { n, p, clusters })
}

/// True when `n > G (p + 1)`, the rough threshold below which full-covariance EM is ill-posed.
pub fn is_well_posed(n: usize, p: usize, g: usize) -> bool {
    n > g * (p + 1)
}

/// Fit a `g`-component full-covariance mixture with `config.restarts` k-means++ seeded runs,
/// keeping the highest log-likelihood (ties go to the lowest run index).
pub fn em_fit(data: &DataMatrix, g: usize, config: &FitConfig) -> Result<GmmFit> {
    em_fit_with_candidates(data, g, config, &[])
}

/// [`em_fit`] with extra starting models tried after the seeded restarts.
pub fn em_fit_with_candidates(
    data: &DataMatrix,
    g: usize,
    config: &FitConfig,
    warm_starts: &[&MixtureModel],
) -> Result<GmmFit> {
    config.validate()?;
    if g == 0 {
        return Err(OclustError::InvalidArgument("need at least one component".into()));
    }
    if data.n() < g {
        return Err(OclustError::InvalidArgument(format!(
            "{} observations cannot support {g} components",
            data.n()
        )));
    }
    let seeded = (0..config.restarts).into_par_iter().map(|run| {
        let mut rng = substream(config.seed, Domain::EmRestart, run as u64);
        kmeanspp_init(data, g, &mut rng, config.reg_eps)
            .map_err(|e| degenerate(run, e))
            .and_then(|init| run_em(data, init, config, config.max_iter, run))
    });
    let warm = warm_starts.par_iter().enumerate().map(|(k, init)| {
        let run = config.restarts + k;
        check_dims(data, init)?;
        if init.num_components() != g {
            return Err(OclustError::InvalidArgument("warm start has wrong component count".into()));
        }
        run_em(data, (*init).clone(), config, config.max_iter, run)
    });
    let outcomes: Vec<Result<GmmFit>> = seeded.chain(warm).collect();
    select_best(outcomes)
}

fn select_best(outcomes: Vec<Result<GmmFit>>) -> Result<GmmFit> {
    let mut best: Option<GmmFit> = None;
    let mut first_err = None;
    for outcome in outcomes {
        match outcome {
            Ok(fit) => {
                if best.as_ref().map_or(true, |b| fit.loglik > b.loglik) {
                    best = Some(fit);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one run"))
}

/// Single EM run from `init`, at most `max_iter` iterations.
pub fn em_refine(
    data: &DataMatrix,
    init: &MixtureModel,
    config: &FitConfig,
    max_iter: usize,
) -> Result<GmmFit> {
    check_dims(data, init)?;
    run_em(data, init.clone(), config, max_iter.max(1), 0)
}

fn degenerate(run: usize, e: OclustError) -> OclustError {
    match e {
        OclustError::DegenerateFit { .. } => e,
        other => OclustError::DegenerateFit { run, reason: other.to_string() },
    }
}

fn kmeanspp_init<R: Rng>(
    data: &DataMatrix,
    g: usize,
    rng: &mut R,
    reg_eps: f64,
) -> Result<MixtureModel> {
    let n = data.n();
    let p = data.p();
    let mut centers: Vec<usize> = vec![rng.random_range(0..n)];
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut d2: Vec<f64> = data.rows().map(|x| sq(x, data.row(centers[0]))).collect();
    while centers.len() < g {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(next);
        for (i, x) in data.rows().enumerate() {
            d2[i] = d2[i].min(sq(x, data.row(next)));
        }
    }

    // Pooled within-cluster covariance of the nearest-seed partition.
    let mut pooled = DMatrix::<f64>::zeros(p, p);
    for x in data.rows() {
        let c = centers
            .iter()
            .map(|&c| data.row(c))
            .min_by(|a, b| sq(x, a).total_cmp(&sq(x, b)))
            .expect("nonempty");
        for a in 0..p {
            for b in 0..p {
                pooled[(a, b)] += (x[a] - c[a]) * (x[b] - c[b]);
            }
        }
    }
    pooled /= (n.saturating_sub(g)).max(1) as f64;
    symmetrize(&mut pooled);
    let weights = vec![1.0 / g as f64; g];
    let weights = normalize(weights);
    let components = centers
        .iter()
        .map(|&c| GaussianParams::regularized(DVector::from_column_slice(data.row(c)), pooled.clone(), reg_eps))
        .collect::<Result<Vec<_>>>()?;
    MixtureModel::new(weights, components)
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// E-step: responsibilities into `resp` (row-major n x g), returns the log-likelihood.
fn e_step(data: &DataMatrix, model: &MixtureModel, resp: &mut [f64]) -> f64 {
    let g = model.num_components();
    let consts = model.log_consts();
    let mut ll = 0.0;
    for (x, r) in data.rows().zip(resp.chunks_exact_mut(g)) {
        model.joint_log_densities(&consts, x, r);
        let lse = log_sum_exp(r);
        ll += lse;
        r.iter_mut().for_each(|v| *v = (*v - lse).exp());
    }
    ll
}

fn m_step(data: &DataMatrix, resp: &[f64], g: usize, reg_eps: f64, run: usize) -> Result<MixtureModel> {
    let n = data.n();
    let p = data.p();
    let mut nk = vec![0.0; g];
    let mut means = vec![0.0; g * p];
    for (x, r) in data.rows().zip(resp.chunks_exact(g)) {
        for k in 0..g {
            nk[k] += r[k];
            for (m, v) in means[k * p..(k + 1) * p].iter_mut().zip(x) {
                *m += r[k] * v;
            }
        }
    }
    for k in 0..g {
        if !(nk[k] > 1e-10) {
            return Err(OclustError::DegenerateFit {
                run,
                reason: format!("component {k} lost all responsibility"),
            });
        }
        means[k * p..(k + 1) * p].iter_mut().for_each(|m| *m /= nk[k]);
    }
    let mut covs = vec![0.0; g * p * p];
    let mut d = vec![0.0; p];
    for (x, r) in data.rows().zip(resp.chunks_exact(g)) {
        for k in 0..g {
            let mu = &means[k * p..(k + 1) * p];
            for a in 0..p {
                d[a] = x[a] - mu[a];
            }
            let c = &mut covs[k * p * p..(k + 1) * p * p];
            for a in 0..p {
                let ra = r[k] * d[a];
                for b in 0..=a {
                    c[a * p + b] += ra * d[b];
                }
            }
        }
    }
    let weights = normalize(nk.iter().map(|v| v / n as f64).collect());
    let components = (0..g)
        .map(|k| {
            let c = &covs[k * p * p..(k + 1) * p * p];
            let cov = DMatrix::from_fn(p, p, |a, b| {
                let (i, j) = if a >= b { (a, b) } else { (b, a) };
                c[i * p + j] / nk[k]
            });
            GaussianParams::regularized(DVector::from_column_slice(&means[k * p..(k + 1) * p]), cov, reg_eps)
                .map_err(|e| OclustError::DegenerateFit {
                    run,
                    reason: format!("component {k}: {e}"),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    MixtureModel::new(weights, components)
}

fn hard_labels(data: &DataMatrix, model: &MixtureModel) -> HardAssignment {
    let consts = model.log_consts();
    let mut buf = vec![0.0; model.num_components()];
    let labels = data
        .rows()
        .map(|x| {
            model.joint_log_densities(&consts, x, &mut buf);
            let mut best = 0;
            for k in 1..buf.len() {
                if buf[k] > buf[best] {
                    best = k;
                }
            }
            best
        })
        .collect();
    HardAssignment { labels, clusters: model.num_components() }
}

fn run_em(
    data: &DataMatrix,
    init: MixtureModel,
    config: &FitConfig,
    max_iter: usize,
    run: usize,
) -> Result<GmmFit> {
    let g = init.num_components();
    let mut model = init;
    let mut resp = vec![0.0; data.n() * g];
    let mut history = Vec::new();
    let mut loglik = e_step(data, &model, &mut resp);
    history.push(loglik);
    let mut iterations = 0;
    while iterations < max_iter {
        let next = m_step(data, &resp, g, config.reg_eps, run)?;
        let next_ll = e_step(data, &next, &mut resp);
        if !next_ll.is_finite() {
            return Err(OclustError::DegenerateFit { run, reason: "log-likelihood diverged".into() });
        }
        iterations += 1;
        model = next;
        history.push(next_ll);
        let change = (next_ll - loglik).abs();
        loglik = next_ll;
        if change < config.rel_tol * loglik.abs() {
            break;
        }
    }
    let labels = hard_labels(data, &model);
    if let Some((k, &c)) = labels.counts().iter().enumerate().find(|(_, &c)| c < 2) {
        return Err(OclustError::DegenerateFit {
            run,
            reason: format!("cluster {k} collapsed to {c} points"),
        });
    }
    Ok(GmmFit { model, labels, loglik, iterations, history, run })
}
