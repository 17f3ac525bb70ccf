//! Outlier identification for Gaussian mixture clustering.
//!
//! Removing one point from a well-fitted cluster changes the (hard-assignment) log-likelihood by
//! an amount whose distribution is a shifted, scaled beta. [`oclust_run`] trims the most likely
//! outlier one point at a time and keeps the count at which the observed changes look most like
//! that reference, measured by a binned Kullback–Leibler divergence.

pub mod data;
pub mod divergence;
pub mod error;
pub mod gmm;
pub mod linalg;
pub mod oclust;
pub mod reference;
pub mod rng;
pub mod simgen;
pub mod special;
pub mod subset;

pub use data::DataMatrix;
pub use divergence::{build_bins, default_bin_count, kl_divergence, BinMethod, BinPolicy, BinningScheme, KlEstimate};
pub use error::{OclustError, Result};
pub use gmm::{
    approx_log_likelihood, cluster_stats, em_fit, em_fit_with_candidates, em_refine, log_gaussian_density,
    mixture_log_likelihood, ClusterStat, ClusterStats, FitConfig, GaussianParams, GmmFit, HardAssignment,
    MixtureModel,
};
pub use oclust::{
    classify_errors, default_max_outliers, error_rates, most_likely_outlier, oclust_run, ErrorRates,
    IterationRecord, OclustConfig, OclustResult,
};
pub use reference::{
    beta_component_density, gamma_reference_density, reference_mixture_cdf, reference_mixture_density,
    BetaComponent, GammaComponent, GammaReference, ReferenceMixture,
};
pub use rng::{substream, Domain};
pub use simgen::{
    gen_dataset, separation_experiment, separation_experiment_with, separation_index_pairwise,
    separation_index_univariate, Proportions, RejectionRule, SeparationConfig, SeparationReport, SimDataset,
    SimModel, SimModelSpec,
};
pub use subset::{
    delta_formula, deltas_for_fit, downdate_stats, frozen_deltas, population_deltas, subset_loglik_set, DeltaMode,
    DowndateVariant, SubsetDeltaSet,
};
