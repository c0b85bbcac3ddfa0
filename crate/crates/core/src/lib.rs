//! Model selection for generalized linear models under possible
//! misspecification.
//!
//! Fits GLMs by quasi-maximum likelihood, estimates the model-based and
//! sampling covariance matrices of the score, and scores candidate models
//! with AIC, BIC, GAIC, GBIC, and the SIC family. The `simlab` module runs
//! seeded Monte-Carlo selection campaigns over polynomial-order and
//! best-subset candidate families.

pub mod criteria;
pub mod data;
pub mod error;
pub mod family;
pub mod qmle;
pub mod rng;
pub mod sandwich;
pub mod search;
pub mod simlab;

pub use criteria::{
    aic, bic, criterion_report, gaic, gbic, sic, sic_half_decomposition, CriterionReport,
    SicDecomposition, DEFAULT_GAMMA_GRID,
};
pub use data::Dataset;
pub use error::{Error, Result};
pub use family::{b_sum, evaluate_link, DispersionPolicy, Family, FamilyKind, LinkValues};
pub use qmle::{fit_qmle, quasi_log_likelihood, FitOptions, FitResult};
pub use sandwich::{estimate_sandwich, SandwichPair};
pub use search::{
    all_subsets, best_subset_per_size, build_design, select, CandidateKind, CandidateModel,
    Criterion, RawData, SelectionResult,
};
pub use rng::{replicate_rng, standard_normal, NORMAL_METHOD};
pub use simlab::{
    gen_hetero_poly, gen_interaction, gen_poly_cubic, gen_single_index, gen_subset_linear,
    run_campaign, CandidateSpec, Experiment, FrequencyTable, SimConfig,
};
