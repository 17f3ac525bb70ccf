//! Reference laws for subset log-likelihood deltas.
//!
//! With sample estimates, a point of cluster `h` has delta `y = c_h + t/2` where the scaled
//! Mahalanobis distance `2 n_h / (n_h - 1)^2 (y - c_h)` is Beta(p/2, (n_h - p - 1)/2). The
//! deltas of the whole dataset then follow the `π`-weighted mixture of these shifted, scaled
//! betas. With population parameters the same delta is `c_h + Gamma(p/2, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{OclustError, Result};
use crate::gmm::{ClusterStat, ClusterStats, MixtureModel, LN_2PI};
use crate::linalg::SpdFactor;
use crate::special::{beta_cdf, beta_pdf, gamma_cdf, gamma_pdf};

/// `-log π + (p/2) log 2π + (1/2) log|Σ|`, the minimum possible delta of a cluster.
pub fn delta_shift(weight: f64, p: usize, log_det: f64) -> f64 {
    -weight.ln() + 0.5 * p as f64 * LN_2PI + 0.5 * log_det
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaComponent {
    pub shift: f64,
    /// `2 n_h / (n_h - 1)^2`.
    pub scale: f64,
    pub alpha: f64,
    pub beta: f64,
    pub weight: f64,
}

impl BetaComponent {
    pub fn new(shift: f64, scale: f64, alpha: f64, beta: f64, weight: f64) -> Result<Self> {
        if !(scale > 0.0 && alpha > 0.0 && beta > 0.0) || !shift.is_finite() {
            return Err(OclustError::InvalidArgument(format!(
                "beta component needs positive scale and shapes, got scale={scale}, alpha={alpha}, beta={beta}"
            )));
        }
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(OclustError::InvalidArgument(format!("component weight {weight} not in (0,1]")));
        }
        Ok(Self { shift, scale, alpha, beta, weight })
    }

    /// Component for a cluster of `n_h` points in `p` dimensions. Requires `n_h > p + 1`.
    pub fn for_cluster(n_h: usize, p: usize, weight: f64, log_det: f64) -> Result<Self> {
        if n_h <= p + 1 {
            return Err(OclustError::InsufficientPoints { cluster: usize::MAX, count: n_h, required: p + 2 });
        }
        let nf = n_h as f64;
        Self::new(
            delta_shift(weight, p, log_det),
            2.0 * nf / ((nf - 1.0) * (nf - 1.0)),
            p as f64 / 2.0,
            (nf - p as f64 - 1.0) / 2.0,
            weight,
        )
    }

    /// Upper end of the support, `c + (n_h - 1)^2 / (2 n_h)`.
    pub fn upper(&self) -> f64 {
        self.shift + 1.0 / self.scale
    }

    pub fn mean(&self) -> f64 {
        self.shift + self.alpha / (self.alpha + self.beta) / self.scale
    }

    pub fn cdf(&self, y: f64) -> f64 {
        beta_cdf(self.scale * (y - self.shift), self.alpha, self.beta)
    }
}

/// `scale · f_beta(scale · (y - c) | α, β)` inside `(c, c + 1/scale)`, zero outside.
pub fn beta_component_density(y: f64, comp: &BetaComponent) -> f64 {
    let u = comp.scale * (y - comp.shift);
    if !(u > 0.0 && u < 1.0) {
        return 0.0;
    }
    comp.scale * beta_pdf(u, comp.alpha, comp.beta)
}

/// Weighted mixture of shifted, scaled beta laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMixture {
    components: Vec<BetaComponent>,
    support_lo: f64,
    support_hi: f64,
}

impl ReferenceMixture {
    pub fn new(components: Vec<BetaComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(OclustError::InvalidArgument("reference needs a component".into()));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(OclustError::InvalidArgument(format!("reference weights sum to {total}")));
        }
        let support_lo = components.iter().map(|c| c.shift).fold(f64::INFINITY, f64::min);
        let support_hi = components.iter().map(BetaComponent::upper).fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { components, support_lo, support_hi })
    }

    /// Reference built from hard-cluster sample statistics (weights `n_g / n`, covariances `S_g`).
    pub fn from_stats(stats: &ClusterStats) -> Result<Self> {
        let comps = stats
            .clusters
            .iter()
            .enumerate()
            .map(|(g, s)| component_from_stat(s, stats.p).map_err(|e| name_cluster(e, g)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub fn components(&self) -> &[BetaComponent] {
        &self.components
    }

    pub fn support(&self) -> (f64, f64) {
        (self.support_lo, self.support_hi)
    }

    pub fn support_lo(&self) -> f64 {
        self.support_lo
    }

    pub fn support_hi(&self) -> f64 {
        self.support_hi
    }

    /// Clamp `y` into the closed support; the flag is set when clamping moved it.
    pub fn clamp(&self, y: f64) -> (f64, bool) {
        if y < self.support_lo {
            (self.support_lo, true)
        } else if y > self.support_hi {
            (self.support_hi, true)
        } else {
            (y, false)
        }
    }

    /// The `prob` quantile, by bisection on the mixture CDF.
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(OclustError::Inversion(prob));
        }
        if prob == 0.0 {
            return Ok(self.support_lo);
        }
        if prob == 1.0 {
            return Ok(self.support_hi);
        }
        let (mut lo, mut hi) = (self.support_lo, self.support_hi);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if reference_mixture_cdf(mid, self) < prob {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = 0.5 * (lo + hi);
        if (reference_mixture_cdf(q, self) - prob).abs() > 1e-9 {
            return Err(OclustError::Inversion(prob));
        }
        Ok(q)
    }
}

fn name_cluster(e: OclustError, g: usize) -> OclustError {
    match e {
        OclustError::InsufficientPoints { count, required, .. } => {
            OclustError::InsufficientPoints { cluster: g, count, required }
        }
        other => other,
    }
}

fn component_from_stat(s: &ClusterStat, p: usize) -> Result<BetaComponent> {
    let factor = SpdFactor::new(&s.cov)?;
    BetaComponent::for_cluster(s.count, p, s.proportion, factor.log_det())
}

pub fn reference_mixture_density(y: f64, reference: &ReferenceMixture) -> f64 {
    reference.components.iter().map(|c| c.weight * beta_component_density(y, c)).sum()
}

pub fn reference_mixture_cdf(y: f64, reference: &ReferenceMixture) -> f64 {
    if y <= reference.support_lo {
        return 0.0;
    }
    if y >= reference.support_hi {
        return 1.0;
    }
    let v: f64 = reference.components.iter().map(|c| c.weight * c.cdf(y)).sum();
    v.clamp(0.0, 1.0)
}

/// Gamma law of one cluster's deltas under population parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaComponent {
    pub shift: f64,
    pub shape: f64,
    pub scale: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReference {
    pub components: Vec<GammaComponent>,
}

impl GammaComponent {
    pub fn new(shift: f64, p: usize, weight: f64) -> Result<Self> {
        if p == 0 {
            return Err(OclustError::InvalidArgument("gamma shape requires p >= 1".into()));
        }
        Ok(Self { shift, shape: p as f64 / 2.0, scale: 1.0, weight })
    }

    pub fn cdf(&self, y: f64) -> f64 {
        gamma_cdf(y - self.shift, self.shape, self.scale)
    }
}

impl GammaReference {
    /// Reference from known mixture parameters (`Σ_h` rather than `S_h`).
    pub fn from_population(model: &MixtureModel) -> Result<Self> {
        let p = model.dim();
        let components = model
            .weights()
            .iter()
            .zip(model.components())
            .map(|(&w, c)| GammaComponent::new(delta_shift(w, p, c.factor().log_det()), p, w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    pub fn density(&self, y: f64) -> f64 {
        self.components.iter().map(|c| c.weight * gamma_reference_density(y, c)).sum()
    }
}

/// `f_gamma(y - c | p/2, 1)`, zero for `y <= c`.
pub fn gamma_reference_density(y: f64, comp: &GammaComponent) -> f64 {
    gamma_pdf(y - comp.shift, comp.shape, comp.scale)
}
