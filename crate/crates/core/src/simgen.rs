//! Synthetic benchmark data.
//!
//! Three Gaussian clusters with means `(0,8,0,…)`, `(8,0,0,…)`, `(-8,-8,0,…)` and one of five
//! covariance settings, plus outliers drawn uniformly in the bounding box of the regular points
//! and kept only when they are far from every cluster. Also the quantile-based separation
//! index and the study relating separation to the hard-assignment likelihood gap.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{OclustError, Result};
use crate::gmm::{
    approx_log_likelihood, em_fit, mixture_log_likelihood, FitConfig, GaussianParams, HardAssignment,
    MixtureModel,
};
use crate::linalg::SpdFactor;
use crate::rng::{substream, Domain};
use crate::special::chi_squared_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimModel {
    I,
    II,
    III,
    IV,
    V,
}

impl SimModel {
    pub const ALL: [SimModel; 5] = [SimModel::I, SimModel::II, SimModel::III, SimModel::IV, SimModel::V];

    /// `(a, b, c, d, e, f)` of the covariance templates.
    pub fn tuple(self) -> [f64; 6] {
        match self {
            SimModel::I => [1.0, 1.0, 1.0, 1.0, 0.0, 1.0],
            SimModel::II => [5.0, 1.0, 5.0, 1.0, 0.0, 5.0],
            SimModel::III => [5.0, 5.0, 1.0, 3.0, -2.0, 3.0],
            SimModel::IV => [1.0, 20.0, 5.0, 15.0, -10.0, 15.0],
            SimModel::V => [1.0, 45.0, 30.0, 15.0, -10.0, 15.0],
        }
    }
}

impl fmt::Display for SimModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SimModel::I => "I",
            SimModel::II => "II",
            SimModel::III => "III",
            SimModel::IV => "IV",
            SimModel::V => "V",
        };
        f.write_str(s)
    }
}

impl FromStr for SimModel {
    type Err = OclustError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(SimModel::I),
            "II" | "2" => Ok(SimModel::II),
            "III" | "3" => Ok(SimModel::III),
            "IV" | "4" => Ok(SimModel::IV),
            "V" | "5" => Ok(SimModel::V),
            other => Err(OclustError::InvalidArgument(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proportions {
    /// 1/3 each.
    Equal,
    /// 1/5, 2/5, 2/5.
    Unequal,
}

impl Proportions {
    pub fn weights(self) -> [f64; 3] {
        match self {
            Proportions::Equal => [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            Proportions::Unequal => [0.2, 0.4, 0.4],
        }
    }
}

/// Which Mahalanobis distance a candidate outlier must exceed `χ²_{p,0.995}` in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionRule {
    /// Beyond the threshold for every cluster.
    #[default]
    AllClusters,
    /// Beyond the threshold for the cluster with the nearest mean (Euclidean).
    NearestCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimModelSpec {
    pub model: SimModel,
    pub p: usize,
    pub proportions: Proportions,
    pub n_good: usize,
    pub n_outliers: usize,
    pub seed: u64,
    #[serde(default)]
    pub rejection: RejectionRule,
}

impl SimModelSpec {
    pub fn new(model: SimModel, p: usize, proportions: Proportions, n_good: usize, n_outliers: usize, seed: u64) -> Self {
        Self { model, p, proportions, n_good, n_outliers, seed, rejection: RejectionRule::AllClusters }
    }
}

#[derive(Debug, Clone)]
pub struct SimDataset {
    pub data: DataMatrix,
    /// 1..=3 for regular points, 0 for outliers.
    pub true_labels: Vec<usize>,
    pub outlier_mask: Vec<bool>,
    pub generating: MixtureModel,
}

pub fn model_means(p: usize) -> [DVector<f64>; 3] {
    let mk = |a: f64, b: f64| {
        let mut v = DVector::zeros(p);
        v[0] = a;
        v[1] = b;
        v
    };
    [mk(0.0, 8.0), mk(8.0, 0.0), mk(-8.0, -8.0)]
}

pub fn model_covariances(model: SimModel, p: usize) -> Result<[DMatrix<f64>; 3]> {
    if p < 2 {
        return Err(OclustError::InvalidArgument("simulation models need p >= 2".into()));
    }
    let [a, b, c, d, e, f] = model.tuple();
    let mut s1 = DMatrix::identity(p, p);
    s1[(1, 1)] = a;
    let mut s2 = DMatrix::identity(p, p);
    s2[(0, 0)] = b;
    s2[(1, 1)] = c;
    let mut s3 = DMatrix::identity(p, p);
    s3[(0, 0)] = d;
    s3[(0, 1)] = e;
    s3[(1, 0)] = e;
    s3[(1, 1)] = f;
    Ok([s1, s2, s3])
}

pub fn cluster_sizes(proportions: Proportions, n_good: usize) -> Result<[usize; 3]> {
    match proportions {
        Proportions::Equal if n_good % 3 == 0 => Ok([n_good / 3; 3]),
        Proportions::Unequal if n_good % 5 == 0 => Ok([n_good / 5, 2 * n_good / 5, 2 * n_good / 5]),
        _ => Err(OclustError::InvalidArgument(format!(
            "n_good = {n_good} does not split into {proportions:?} proportions"
        ))),
    }
}

pub fn generating_model(model: SimModel, p: usize, proportions: Proportions) -> Result<MixtureModel> {
    let covs = model_covariances(model, p)?;
    let means = model_means(p);
    let comps = means
        .into_iter()
        .zip(covs)
        .map(|(m, s)| GaussianParams::new(m, s))
        .collect::<Result<Vec<_>>>()?;
    MixtureModel::new(proportions.weights().to_vec(), comps)
}

const STALL_MIN_DRAWS: u64 = 1_000_000;
const STALL_MIN_RATE: f64 = 1e-4;

fn normal_vec<R: Rng>(rng: &mut R, p: usize) -> Vec<f64> {
    (0..p).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gen_dataset(spec: &SimModelSpec) -> Result<SimDataset> {
    let p = spec.p;
    let sizes = cluster_sizes(spec.proportions, spec.n_good)?;
    let generating = generating_model(spec.model, p, spec.proportions)?;
    let n = spec.n_good + spec.n_outliers;
    if n == 0 {
        return Err(OclustError::EmptyData);
    }

    let mut labels = Vec::with_capacity(n);
    for (g, &size) in sizes.iter().enumerate() {
        labels.extend(std::iter::repeat(g).take(size));
    }
    let good: Vec<Vec<f64>> = labels
        .par_iter()
        .enumerate()
        .map(|(i, &g)| {
            let mut rng = substream(spec.seed, Domain::GoodPoint, i as u64);
            let z = normal_vec(&mut rng, p);
            let comp = &generating.components()[g];
            let mut x = vec![0.0; p];
            comp.factor().mul_lower(&z, &mut x);
            x.iter_mut().zip(comp.mean().iter()).for_each(|(v, m)| *v += m);
            x
        })
        .collect();

    let mut values: Vec<f64> = good.iter().flatten().copied().collect();
    if spec.n_outliers > 0 {
        if good.is_empty() {
            return Err(OclustError::InvalidArgument("outliers need regular points to bound them".into()));
        }
        let threshold = chi_squared_quantile(p, 0.995)?;
        let mut lo = vec![f64::INFINITY; p];
        let mut hi = vec![f64::NEG_INFINITY; p];
        for x in &good {
            for k in 0..p {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        let (mut drawn, mut accepted) = (0u64, 0u64);
        for k in 0..spec.n_outliers {
            let mut rng = substream(spec.seed, Domain::OutlierPoint, k as u64);
            loop {
                let x: Vec<f64> = (0..p).map(|d| lo[d] + (hi[d] - lo[d]) * rng.random::<f64>()).collect();
                drawn += 1;
                if is_outlying(&x, &generating, threshold, spec.rejection) {
                    accepted += 1;
                    values.extend_from_slice(&x);
                    break;
                }
                if drawn >= STALL_MIN_DRAWS && (accepted as f64) < STALL_MIN_RATE * drawn as f64 {
                    return Err(OclustError::GenerationStall { drawn, accepted });
                }
            }
        }
    }

    let data = DataMatrix::new(n, p, values)?;
    let mut true_labels: Vec<usize> = labels.iter().map(|g| g + 1).collect();
    true_labels.extend(std::iter::repeat(0).take(spec.n_outliers));
    let mut outlier_mask = vec![false; spec.n_good];
    outlier_mask.extend(std::iter::repeat(true).take(spec.n_outliers));
    Ok(SimDataset { data, true_labels, outlier_mask, generating })
}

/// Smallest squared Mahalanobis distance from `x` to any component.
pub fn min_mahalanobis_sq(x: &[f64], model: &MixtureModel) -> f64 {
    model
        .components()
        .iter()
        .map(|c| c.factor().mahalanobis_sq(x, c.mean().as_slice()))
        .fold(f64::INFINITY, f64::min)
}

fn is_outlying(x: &[f64], model: &MixtureModel, threshold: f64, rule: RejectionRule) -> bool {
    match rule {
        RejectionRule::AllClusters => min_mahalanobis_sq(x, model) > threshold,
        RejectionRule::NearestCluster => {
            let nearest = model
                .components()
                .iter()
                .min_by(|a, b| {
                    let da: f64 = a.mean().iter().zip(x).map(|(m, v)| (m - v) * (m - v)).sum();
                    let db: f64 = b.mean().iter().zip(x).map(|(m, v)| (m - v) * (m - v)).sum();
                    da.total_cmp(&db)
                })
                .expect("components");
            nearest.factor().mahalanobis_sq(x, nearest.mean().as_slice()) > threshold
        }
    }
}

/// Sample quantile with linear interpolation between order statistics.
pub fn sample_quantile(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `J* = [L_2 - U_1] / [U_2 - L_1]` from the lower/upper `α/2` sample quantiles, with the
/// lower-mean sample taken as cluster 1.
pub fn separation_index_univariate(a: &[f64], b: &[f64], alpha: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(OclustError::EmptyData);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(OclustError::InvalidArgument(format!("alpha {alpha} not in (0,1)")));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (first, second) = if mean(a) <= mean(b) { (a, b) } else { (b, a) };
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    let (s1, s2) = (sorted(first), sorted(second));
    let l1 = sample_quantile(&s1, alpha / 2.0);
    let u1 = sample_quantile(&s1, 1.0 - alpha / 2.0);
    let l2 = sample_quantile(&s2, alpha / 2.0);
    let u2 = sample_quantile(&s2, 1.0 - alpha / 2.0);
    let denom = u2 - l1;
    if !(denom.abs() > 0.0) {
        return Err(OclustError::InvalidArgument("degenerate samples: zero quantile range".into()));
    }
    Ok((l2 - u1) / denom)
}

struct Group {
    rows: Vec<usize>,
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
}

fn groups(data: &DataMatrix, labels: &HardAssignment) -> Result<Vec<Group>> {
    let p = data.p();
    let mut out: Vec<Group> = (0..labels.num_clusters())
        .map(|_| Group { rows: Vec::new(), mean: DVector::zeros(p), scatter: DMatrix::zeros(p, p) })
        .collect();
    for (i, &l) in labels.labels().iter().enumerate() {
        out[l].rows.push(i);
    }
    for (g, grp) in out.iter_mut().enumerate() {
        if grp.rows.len() < 2 {
            return Err(OclustError::InsufficientPoints { cluster: g, count: grp.rows.len(), required: 2 });
        }
        for &i in &grp.rows {
            grp.mean += DVector::from_column_slice(data.row(i));
        }
        grp.mean /= grp.rows.len() as f64;
        for &i in &grp.rows {
            let d = DVector::from_column_slice(data.row(i)) - &grp.mean;
            grp.scatter += &d * d.transpose();
        }
    }
    Ok(out)
}

/// Top eigendirection of the between-vs-within discriminant problem over all clusters.
fn discriminant_direction(gs: &[Group], p: usize) -> Option<DVector<f64>> {
    let n: usize = gs.iter().map(|g| g.rows.len()).sum();
    let overall = gs.iter().fold(DVector::zeros(p), |acc, g| acc + &g.mean * g.rows.len() as f64) / n as f64;
    let mut within = DMatrix::zeros(p, p);
    let mut between = DMatrix::zeros(p, p);
    for g in gs {
        within += &g.scatter;
        let d = &g.mean - &overall;
        between += &d * d.transpose() * g.rows.len() as f64;
    }
    let chol = nalgebra::Cholesky::new(within)?;
    let l = chol.l();
    let linv = l.clone().try_inverse()?;
    let m = &linv * between * linv.transpose();
    let eig = m.symmetric_eigen();
    let (k, _) = eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let v = eig.eigenvectors.column(k).into_owned();
    Some(linv.transpose() * v)
}

fn project(data: &DataMatrix, rows: &[usize], dir: &DVector<f64>) -> Vec<f64> {
    rows.iter().map(|&i| data.row(i).iter().zip(dir.iter()).map(|(x, d)| x * d).sum()).collect()
}

/// Minimum over cluster pairs of the best univariate `J*` along a few candidate directions:
/// the mean difference, the pooled-covariance whitened mean difference and the leading
/// discriminant direction.
pub fn separation_index_pairwise(data: &DataMatrix, labels: &HardAssignment, alpha: f64) -> Result<f64> {
    if labels.len() != data.n() {
        return Err(OclustError::DimensionMismatch { expected: data.n(), actual: labels.len() });
    }
    if labels.num_clusters() < 2 {
        return Err(OclustError::InvalidArgument("separation needs at least two clusters".into()));
    }
    let p = data.p();
    let gs = groups(data, labels)?;
    let lda = discriminant_direction(&gs, p);
    let mut worst = f64::INFINITY;
    for a in 0..gs.len() {
        for b in (a + 1)..gs.len() {
            let (ga, gb) = (&gs[a], &gs[b]);
            let diff = &gb.mean - &ga.mean;
            let pooled = (&ga.scatter + &gb.scatter) / (ga.rows.len() + gb.rows.len() - 2) as f64;
            let whitened = pooled.lu().solve(&diff);
            let mut best = f64::NEG_INFINITY;
            for dir in [Some(diff.clone()), whitened, lda.clone()].into_iter().flatten() {
                let norm = dir.norm();
                if !(norm > 0.0) || !norm.is_finite() {
                    continue;
                }
                let dir = dir / norm;
                if let Ok(j) = separation_index_univariate(&project(data, &ga.rows, &dir), &project(data, &gb.rows, &dir), alpha) {
                    best = best.max(j);
                }
            }
            if best == f64::NEG_INFINITY {
                return Err(OclustError::InvalidArgument(format!("degenerate projection for clusters {a} and {b}")));
            }
            worst = worst.min(best);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationConfig {
    pub n: usize,
    pub clusters: usize,
    pub alpha: f64,
    /// Accepted distance between achieved and target `J*`.
    pub tolerance: f64,
    pub eigen_range: (f64, f64),
    pub fit: FitConfig,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        Self {
            n: 1800,
            clusters: 3,
            alpha: 0.05,
            tolerance: 0.02,
            eigen_range: (1.0, 10.0),
            fit: FitConfig { restarts: 3, ..FitConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub p: usize,
    pub target: f64,
    /// Mean achieved `J*` over replicates.
    pub achieved: f64,
    /// Mean of `(Q - ℓ) / ℓ`.
    pub relative_gap: f64,
    pub replicates: usize,
    pub gaps: Vec<f64>,
}

/// Uniformly random orthogonal matrix (QR of a Gaussian matrix, sign-corrected).
fn random_orthogonal<R: Rng>(rng: &mut R, p: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Clusters whose means are scaled by a free factor; the noise is fixed so the achieved
/// separation is a deterministic function of the scale.
struct Calibrator {
    p: usize,
    labels: HardAssignment,
    directions: Vec<DVector<f64>>,
    noise: Vec<f64>,
}

impl Calibrator {
    fn new<R: Rng>(rng: &mut R, p: usize, cfg: &SeparationConfig) -> Result<Self> {
        let g = cfg.clusters;
        let (lo, hi) = cfg.eigen_range;
        let basis = random_orthogonal(rng, p);
        let directions: Vec<DVector<f64>> = (0..g)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / g as f64;
                basis.column(0) * t.cos() + basis.column(1 % p) * t.sin()
            })
            .collect();
        let factors = (0..g)
            .map(|_| {
                let q = random_orthogonal(rng, p);
                let lambdas = DVector::from_fn(p, |_, _| rng.random_range(lo..=hi));
                let sigma = &q * DMatrix::from_diagonal(&lambdas) * q.transpose();
                let sigma = (&sigma + sigma.transpose()) * 0.5;
                SpdFactor::new(&sigma)
            })
            .collect::<Result<Vec<_>>>()?;
        let per = cfg.n / g;
        let mut labels = Vec::with_capacity(per * g);
        let mut noise = Vec::with_capacity(per * g * p);
        let mut z = vec![0.0; p];
        let mut x = vec![0.0; p];
        for (k, f) in factors.iter().enumerate() {
            for _ in 0..per {
                z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                f.mul_lower(&z, &mut x);
                noise.extend_from_slice(&x);
                labels.push(k);
            }
        }
        Ok(Self { p, labels: HardAssignment::new(labels, g)?, directions, noise })
    }

    fn data(&self, scale: f64) -> Result<DataMatrix> {
        let p = self.p;
        let mut values = self.noise.clone();
        for (i, &k) in self.labels.labels().iter().enumerate() {
            for d in 0..p {
                values[i * p + d] += scale * self.directions[k][d];
            }
        }
        DataMatrix::new(self.labels.len(), p, values)
    }

    fn index(&self, scale: f64, alpha: f64) -> Result<f64> {
        separation_index_pairwise(&self.data(scale)?, &self.labels, alpha)
    }

    /// Bisection on the mean scale until `|J* - target| <= tol`.
    fn calibrate(&self, target: f64, cfg: &SeparationConfig) -> Result<(f64, f64)> {
        let fail = |reason: String| OclustError::Calibration { target, reason };
        let tol = cfg.tolerance;
        let at_zero = self.index(0.0, cfg.alpha)?;
        if (at_zero - target).abs() <= tol / 4.0 {
            return Ok((0.0, at_zero));
        }
        if at_zero > target {
            return Err(fail(format!("coincident means already give J* = {at_zero:.4}")));
        }
        let mut hi = 1.0;
        let mut j_hi = self.index(hi, cfg.alpha)?;
        while j_hi < target {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(fail("separation never reached the target".into()));
            }
            j_hi = self.index(hi, cfg.alpha)?;
        }
        let mut lo = 0.0;
        let mut best = (hi, j_hi);
        for _ in 0..80 {
            if (best.1 - target).abs() <= tol / 4.0 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let j = self.index(mid, cfg.alpha)?;
            if (j - target).abs() < (best.1 - target).abs() {
                best = (mid, j);
            }
            if j < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (best.1 - target).abs() > tol {
            return Err(fail(format!("closest achieved J* = {:.4}", best.1)));
        }
        Ok(best)
    }
}

/// One replicate: achieved `J*` and `(Q - ℓ) / ℓ` of the fitted mixture.
pub fn separation_replicate(p: usize, target: f64, seed: u64, replicate: usize, cfg: &SeparationConfig) -> Result<(f64, f64)> {
    if p < 2 {
        return Err(OclustError::InvalidArgument("separation study needs p >= 2".into()));
    }
    let mut rng = substream(seed, Domain::SeparationReplicate, replicate as u64);
    let cal = Calibrator::new(&mut rng, p, cfg)?;
    let (scale, achieved) = cal.calibrate(target, cfg)?;
    let data = cal.data(scale)?;
    let fit_cfg = FitConfig { seed: seed ^ (replicate as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15), ..cfg.fit };
    let fit = em_fit(&data, cfg.clusters, &fit_cfg)?;
    let ll = mixture_log_likelihood(&data, &fit.model)?;
    let q = approx_log_likelihood(&data, &fit.model, &fit.labels)?;
    Ok((achieved, (q - ll) / ll))
}

pub fn separation_experiment(p: usize, target: f64, replicates: usize, seed: u64) -> Result<SeparationReport> {
    separation_experiment_with(p, target, replicates, seed, &SeparationConfig::default())
}

pub fn separation_experiment_with(
    p: usize,
    target: f64,
    replicates: usize,
    seed: u64,
    cfg: &SeparationConfig,
) -> Result<SeparationReport> {
    if !(-0.9 - 1e-12..=0.9 + 1e-12).contains(&target) {
        return Err(OclustError::InvalidArgument(format!("target J* {target} outside [-0.9, 0.9]")));
    }
    if replicates == 0 {
        return Err(OclustError::InvalidArgument("need at least one replicate".into()));
    }
    let results = (0..replicates)
        .into_par_iter()
        .map(|r| separation_replicate(p, target, seed, r, cfg))
        .collect::<Result<Vec<_>>>()?;
    let achieved = results.iter().map(|r| r.0).sum::<f64>() / replicates as f64;
    let gaps: Vec<f64> = results.iter().map(|r| r.1).collect();
    let relative_gap = gaps.iter().sum::<f64>() / replicates as f64;
    Ok(SeparationReport { p, target, achieved, relative_gap, replicates, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_templates() {
        let [s1, s2, s3] = model_covariances(SimModel::I, 2).unwrap();
        let id = DMatrix::<f64>::identity(2, 2);
        assert_eq!((s1, s2, s3.clone()), (id.clone(), id.clone(), id));
        let [_, _, s3] = model_covariances(SimModel::III, 2).unwrap();
        assert_eq!(s3, DMatrix::from_row_slice(2, 2, &[3.0, -2.0, -2.0, 3.0]));
        let mut eig: Vec<f64> = s3.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert!((eig[0] - 1.0).abs() < 1e-12 && (eig[1] - 5.0).abs() < 1e-12);
        let [_, s2, _] = model_covariances(SimModel::V, 6).unwrap();
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![45.0, 30.0, 1.0, 1.0, 1.0, 1.0]));
        assert_eq!(s2, want);
        assert!(model_covariances(SimModel::I, 1).is_err());
        for m in SimModel::ALL {
            for c in model_covariances(m, 4).unwrap() {
                assert!(SpdFactor::new(&c).is_ok(), "{m} not PD");
            }
        }
    }

    #[test]
    fn model_names_round_trip() {
        for m in SimModel::ALL {
            assert_eq!(m.to_string().parse::<SimModel>().unwrap(), m);
        }
        assert!("VI".parse::<SimModel>().is_err());
    }

    #[test]
    fn allocations() {
        assert_eq!(cluster_sizes(Proportions::Equal, 900).unwrap(), [300, 300, 300]);
        assert_eq!(cluster_sizes(Proportions::Unequal, 900).unwrap(), [180, 360, 360]);
        assert!(cluster_sizes(Proportions::Equal, 100).is_err());
    }

    #[test]
    fn univariate_index_formula() {
        // Quantiles of two-point samples at α/2 ≈ 0 are the extremes.
        let j = separation_index_univariate(&[0.0, 4.0], &[6.0, 10.0], 1e-9).unwrap();
        assert!((j - 0.2).abs() < 1e-6);
        let touching = separation_index_univariate(&[0.0, 4.0], &[4.0, 10.0], 1e-9).unwrap();
        assert!(touching.abs() < 1e-6);
        let overlap = separation_index_univariate(&[0.0, 5.0], &[4.0, 10.0], 1e-9).unwrap();
        assert!(overlap < 0.0);
        // Order of arguments does not matter.
        let swapped = separation_index_univariate(&[6.0, 10.0], &[0.0, 4.0], 1e-9).unwrap();
        assert!((swapped - j).abs() < 1e-12);
        assert!(separation_index_univariate(&[1.0, 1.0], &[1.0, 1.0], 0.05).is_err());
        assert!(separation_index_univariate(&[], &[1.0], 0.05).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(sample_quantile(&s, 0.5), 2.0);
        assert_eq!(sample_quantile(&s, 0.125), 0.5);
        assert_eq!(sample_quantile(&s, 1.0), 4.0);
    }
}
