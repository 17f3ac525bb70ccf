//! Binned Kullback–Leibler divergence of observed deltas from the reference mixture.

use serde::{Deserialize, Serialize};

use crate::error::{OclustError, Result};
use crate::reference::{reference_mixture_cdf, ReferenceMixture};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinMethod {
    /// Edges at reference quantiles `k / B`.
    EqualProbability,
    /// Uniform partition of the reference support.
    EqualWidth,
}

/// How many bins to use for a sample of a given size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BinPolicy {
    /// `max(10, ceil(sqrt(n)))`.
    Auto(BinMethod),
    Fixed(usize, BinMethod),
}

impl Default for BinPolicy {
    fn default() -> Self {
        BinPolicy::Auto(BinMethod::EqualProbability)
    }
}

impl BinPolicy {
    pub fn bins_for(&self, n: usize) -> usize {
        match *self {
            BinPolicy::Auto(_) => default_bin_count(n),
            BinPolicy::Fixed(b, _) => b,
        }
    }

    pub fn method(&self) -> BinMethod {
        match *self {
            BinPolicy::Auto(m) | BinPolicy::Fixed(_, m) => m,
        }
    }
}

pub fn default_bin_count(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(10)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinningScheme {
    edges: Vec<f64>,
    /// Reference mass of each bin.
    masses: Vec<f64>,
    method: BinMethod,
}

impl BinningScheme {
    pub fn num_bins(&self) -> usize {
        self.masses.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn method(&self) -> BinMethod {
        self.method
    }

    /// Bin of `y`, plus whether `y` lay outside the outer edges and was clamped.
    pub fn locate(&self, y: f64) -> (usize, bool) {
        let b = self.num_bins();
        if y < self.edges[0] {
            return (0, true);
        }
        if y > self.edges[b] {
            return (b - 1, true);
        }
        // First interior edge strictly greater than y.
        let inner = &self.edges[1..b];
        (inner.partition_point(|&e| e <= y), false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate {
    pub value: f64,
    pub bins_used: usize,
    pub clamped_count: usize,
}

pub fn build_bins(reference: &ReferenceMixture, bins: usize, method: BinMethod) -> Result<BinningScheme> {
    if bins < 2 {
        return Err(OclustError::InvalidArgument(format!("need at least 2 bins, got {bins}")));
    }
    let (lo, hi) = reference.support();
    let mut edges = Vec::with_capacity(bins + 1);
    let masses = match method {
        BinMethod::EqualProbability => {
            edges.push(lo);
            for k in 1..bins {
                edges.push(reference.quantile(k as f64 / bins as f64)?);
            }
            edges.push(hi);
            vec![1.0 / bins as f64; bins]
        }
        BinMethod::EqualWidth => {
            let w = (hi - lo) / bins as f64;
            edges.extend((0..bins).map(|k| lo + k as f64 * w));
            edges.push(hi);
            edges.windows(2).map(|e| reference_mixture_cdf(e[1], reference) - reference_mixture_cdf(e[0], reference)).collect()
        }
    };
    if edges.windows(2).any(|e| !(e[1] > e[0])) {
        return Err(OclustError::InvalidArgument("bin edges are not strictly increasing".into()));
    }
    Ok(BinningScheme { edges, masses, method })
}

/// Bin occupancy of `samples`, with the count of clamped out-of-range samples.
pub fn bin_counts(samples: &[f64], bins: &BinningScheme) -> (Vec<usize>, usize) {
    let mut counts = vec![0usize; bins.num_bins()];
    let mut clamped = 0;
    for &y in samples {
        let (b, c) = bins.locate(y);
        counts[b] += 1;
        clamped += c as usize;
    }
    (counts, clamped)
}

/// `Σ_b p̂_b log(p̂_b / q_b)` from relative frequencies, with `0 · log 0 = 0`.
pub fn kl_divergence(samples: &[f64], bins: &BinningScheme) -> Result<KlEstimate> {
    if samples.is_empty() {
        return Err(OclustError::EmptyData);
    }
    let (counts, clamped_count) = bin_counts(samples, bins);
    let n = samples.len() as f64;
    let mut value = 0.0;
    for (b, (&c, &q)) in counts.iter().zip(bins.masses()).enumerate() {
        if c == 0 {
            continue;
        }
        if !(q > 0.0) {
            return Err(OclustError::EmptyReferenceBin { bin: b });
        }
        let phat = c as f64 / n;
        value += phat * (phat / q).ln();
    }
    Ok(KlEstimate { value, bins_used: bins.num_bins(), clamped_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::BetaComponent;

    fn uniform_reference() -> ReferenceMixture {
        // p = 2, n = 4 gives Beta(1, 0.5); p = 2 with beta = 1 needs n = 5 → Beta(1, 1).
        let mut c = BetaComponent::for_cluster(5, 2, 1.0, 0.0).unwrap();
        c.shift = 0.0;
        c.scale = 1.0;
        ReferenceMixture::new(vec![c]).unwrap()
    }

    #[test]
    fn equal_width_on_unit_support() {
        let r = uniform_reference();
        let b = build_bins(&r, 2, BinMethod::EqualWidth).unwrap();
        assert_eq!(b.edges(), &[0.0, 0.5, 1.0]);
        assert!((b.masses()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn equal_probability_masses() {
        let r = uniform_reference();
        let b = build_bins(&r, 4, BinMethod::EqualProbability).unwrap();
        for w in b.edges().windows(2) {
            let m = reference_mixture_cdf(w[1], &r) - reference_mixture_cdf(w[0], &r);
            assert!((m - 0.25).abs() < 1e-8);
        }
        assert!(build_bins(&r, 1, BinMethod::EqualProbability).is_err());
    }

    #[test]
    fn point_mass_against_uniform_bins() {
        let r = uniform_reference();
        let b = build_bins(&r, 4, BinMethod::EqualProbability).unwrap();
        let kl = kl_divergence(&[0.1; 37], &b).unwrap();
        assert_eq!(kl.value, 4.0f64.ln());
        assert_eq!(kl.clamped_count, 0);
        assert!(kl_divergence(&[], &b).is_err());
    }

    #[test]
    fn clamping_is_counted() {
        let r = uniform_reference();
        let b = build_bins(&r, 4, BinMethod::EqualProbability).unwrap();
        assert_eq!(b.locate(-1.0), (0, true));
        assert_eq!(b.locate(2.0), (3, true));
        assert_eq!(b.locate(0.6), (2, false));
        let kl = kl_divergence(&[-1.0, 0.1, 0.4, 0.6, 5.0], &b).unwrap();
        assert_eq!(kl.clamped_count, 2);
    }

    #[test]
    fn matched_quantile_samples_give_zero() {
        let r = uniform_reference();
        let b = build_bins(&r, 5, BinMethod::EqualProbability).unwrap();
        let samples: Vec<f64> = (0..50).map(|i| (i as f64 + 0.5) / 50.0).collect();
        assert!(kl_divergence(&samples, &b).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn empty_reference_bin_is_an_error() {
        let mut c = BetaComponent::for_cluster(5, 2, 1.0, 0.0).unwrap();
        c.shift = 0.0;
        c.scale = 1.0;
        let r = ReferenceMixture::new(vec![c]).unwrap();
        let mut b = build_bins(&r, 2, BinMethod::EqualWidth).unwrap();
        b.masses[1] = 0.0;
        assert!(matches!(kl_divergence(&[0.9], &b), Err(OclustError::EmptyReferenceBin { bin: 1 })));
    }
}
