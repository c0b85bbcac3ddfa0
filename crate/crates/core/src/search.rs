//! Candidate enumeration and per-criterion model selection.
//!
//! Candidates are either polynomial orders over a single covariate or
//! covariate subsets of a multi-column pool. Every candidate is fitted and
//! scored with the requested criteria; each criterion picks its argmin with
//! ties broken toward the smaller model dimension, then the lower candidate
//! index.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::criteria::{criterion_report, sic, CriterionReport, DEFAULT_GAMMA_GRID};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::qmle::{fit_qmle, FitOptions};
use crate::sandwich::estimate_sandwich;

/// Exhaustive subset enumeration is capped at this many pool columns.
pub const MAX_SUBSET_PREDICTORS: usize = 20;

/// Raw covariates before design construction: y plus an n x p covariate pool.
#[derive(Debug, Clone)]
pub struct RawData {
    pub y: DVector<f64>,
    pub covariates: DMatrix<f64>,
}

impl RawData {
    pub fn new(y: DVector<f64>, covariates: DMatrix<f64>) -> Result<Self> {
        if y.len() != covariates.nrows() {
            return Err(Error::InvalidArgument(format!(
                "response length {} does not match {} covariate rows",
                y.len(),
                covariates.nrows()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) || covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonfiniteInput);
        }
        Ok(RawData { y, covariates })
    }

    pub fn n(&self) -> usize {
        self.covariates.nrows()
    }

    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateKind {
    /// Powers 1..=order of a single covariate.
    PolynomialOrder { order: usize },
    /// 1-based covariate indices, strictly increasing.
    Subset { indices: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateModel {
    #[serde(flatten)]
    pub kind: CandidateKind,
    pub include_intercept: bool,
}

impl CandidateModel {
    pub fn polynomial(order: usize, include_intercept: bool) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidArgument("polynomial order must be >= 1".into()));
        }
        Ok(CandidateModel {
            kind: CandidateKind::PolynomialOrder { order },
            include_intercept,
        })
    }

    pub fn subset(indices: Vec<usize>, include_intercept: bool) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("subset must be nonempty".into()));
        }
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "subset indices must be strictly increasing".into(),
            ));
        }
        if indices[0] < 1 {
            return Err(Error::InvalidArgument("subset indices are 1-based".into()));
        }
        Ok(CandidateModel {
            kind: CandidateKind::Subset { indices },
            include_intercept,
        })
    }

    /// Number of design columns this candidate produces.
    pub fn dim(&self) -> usize {
        let base = match &self.kind {
            CandidateKind::PolynomialOrder { order } => *order,
            CandidateKind::Subset { indices } => indices.len(),
        };
        base + usize::from(self.include_intercept)
    }

    /// The "model size" as tabulated: polynomial order, or subset cardinality.
    pub fn reported_size(&self) -> usize {
        match &self.kind {
            CandidateKind::PolynomialOrder { order } => *order,
            CandidateKind::Subset { indices } => indices.len(),
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            CandidateKind::PolynomialOrder { order } => format!("poly({order})"),
            CandidateKind::Subset { indices } => {
                format!("subset({})", indices.iter().join(","))
            }
        }
    }
}

/// Materialize a candidate's design matrix over the raw covariates.
pub fn build_design(raw: &RawData, cand: &CandidateModel) -> Result<Dataset> {
    let n = raw.n();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(cand.dim());
    if cand.include_intercept {
        cols.push(DVector::from_element(n, 1.0));
    }
    match &cand.kind {
        CandidateKind::PolynomialOrder { order } => {
            if raw.p() != 1 {
                return Err(Error::InvalidArgument(format!(
                    "polynomial candidates need a single raw covariate, got {}",
                    raw.p()
                )));
            }
            let x = raw.covariates.column(0);
            let mut power = DVector::from_element(n, 1.0);
            for _ in 0..*order {
                power.component_mul_assign(&x);
                cols.push(power.clone());
            }
        }
        CandidateKind::Subset { indices } => {
            for &j in indices {
                if j > raw.p() {
                    return Err(Error::InvalidArgument(format!(
                        "subset index {j} out of bounds for {} covariates",
                        raw.p()
                    )));
                }
                cols.push(raw.covariates.column(j - 1).into_owned());
            }
        }
    }
    let x = DMatrix::from_columns(&cols);
    Dataset::new(raw.y.clone(), x)
}

/// For each size, the subset with the highest quasi-log-likelihood
/// (minimum RSS for the linear family), found by exhaustive enumeration.
pub fn best_subset_per_size(
    raw: &RawData,
    sizes: impl IntoIterator<Item = usize>,
    family: &Family,
    include_intercept: bool,
) -> Result<Vec<CandidateModel>> {
    let p = raw.p();
    if p > MAX_SUBSET_PREDICTORS {
        return Err(Error::TooManyPredictors {
            p,
            max: MAX_SUBSET_PREDICTORS,
        });
    }
    let opts = FitOptions::default();
    let mut winners = Vec::new();
    for size in sizes {
        if size < 1 || size > p {
            return Err(Error::InvalidArgument(format!(
                "subset size {size} out of range 1..={p}"
            )));
        }
        let mut best: Option<(f64, CandidateModel)> = None;
        for combo in (1..=p).combinations(size) {
            let cand = CandidateModel::subset(combo, include_intercept)?;
            let data = match build_design(raw, &cand) {
                Ok(d) => d,
                Err(_) => continue,
            };
            let Ok(fit) = fit_qmle(&data, family, &opts) else {
                continue;
            };
            if best.as_ref().map_or(true, |(ll, _)| fit.loglik > *ll) {
                best = Some((fit.loglik, cand));
            }
        }
        if let Some((_, cand)) = best {
            winners.push(cand);
        }
    }
    Ok(winners)
}

/// All nonempty subsets of the given sizes, ordered by size then
/// lexicographically.
pub fn all_subsets(p: usize, sizes: &[usize], include_intercept: bool) -> Result<Vec<CandidateModel>> {
    if p > MAX_SUBSET_PREDICTORS {
        return Err(Error::TooManyPredictors {
            p,
            max: MAX_SUBSET_PREDICTORS,
        });
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out = Vec::new();
    for size in sorted {
        for combo in (1..=p).combinations(size) {
            out.push(CandidateModel::subset(combo, include_intercept)?);
        }
    }
    Ok(out)
}

/// Which criterion a selection run scores with. `Sic` is the gamma = 1/2 form
/// used throughout the selection experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Criterion {
    Aic,
    Bic,
    Gaic,
    Gbic,
    Sic,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Aic,
        Criterion::Bic,
        Criterion::Gaic,
        Criterion::Gbic,
        Criterion::Sic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Aic => "AIC",
            Criterion::Bic => "BIC",
            Criterion::Gaic => "GAIC",
            Criterion::Gbic => "GBIC",
            Criterion::Sic => "SIC",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "AIC" => Ok(Criterion::Aic),
            "BIC" => Ok(Criterion::Bic),
            "GAIC" => Ok(Criterion::Gaic),
            "GBIC" => Ok(Criterion::Gbic),
            "SIC" => Ok(Criterion::Sic),
            other => Err(Error::InvalidArgument(format!("unknown criterion {other:?}"))),
        }
    }
}

/// One fitted and scored candidate.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateScore {
    pub candidate: CandidateModel,
    pub dim: usize,
    pub loglik: f64,
    pub dispersion: f64,
    pub converged: bool,
    pub report: CriterionReport,
    /// Requested criterion values, in criterion order.
    pub scores: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateFailure {
    pub candidate: CandidateModel,
    pub reason: String,
}

/// Per-criterion winner over the fitted candidates.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionResult {
    pub per_candidate: Vec<CandidateScore>,
    pub failures: Vec<CandidateFailure>,
    /// criterion name -> index into `per_candidate`
    pub chosen: Vec<(String, usize)>,
    /// criterion name -> tabulated model size of the winner
    pub reported_size: Vec<(String, usize)>,
}

impl SelectionResult {
    pub fn chosen_candidate(&self, criterion: Criterion) -> Option<&CandidateScore> {
        self.chosen
            .iter()
            .find(|(name, _)| name == criterion.name())
            .map(|&(_, idx)| &self.per_candidate[idx])
    }
}

fn criterion_value(c: Criterion, score: &CandidateScore) -> f64 {
    score
        .scores
        .iter()
        .find(|(name, _)| name == c.name())
        .map(|&(_, v)| v)
        .unwrap_or(f64::INFINITY)
}

/// Fit and score every candidate, then record each criterion's argmin.
pub fn select(
    candidates: &[CandidateModel],
    raw: &RawData,
    family: &Family,
    criteria: &[Criterion],
    gamma_grid: &[f64],
) -> Result<SelectionResult> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates given".into()));
    }
    let grid: Vec<f64> = if gamma_grid.is_empty() {
        DEFAULT_GAMMA_GRID.to_vec()
    } else {
        gamma_grid.to_vec()
    };
    let opts = FitOptions::default();

    let mut per_candidate = Vec::new();
    let mut failures = Vec::new();
    for cand in candidates {
        match score_candidate(cand, raw, family, criteria, &grid, &opts) {
            Ok(score) => per_candidate.push(score),
            Err(e) => failures.push(CandidateFailure {
                candidate: cand.clone(),
                reason: e.to_string(),
            }),
        }
    }
    if per_candidate.is_empty() {
        return Err(Error::SelectionImpossible);
    }

    let mut chosen = Vec::new();
    let mut reported_size = Vec::new();
    for &c in criteria {
        let mut best: Option<(usize, f64, usize)> = None; // (idx, score, dim)
        for (idx, cs) in per_candidate.iter().enumerate() {
            let v = criterion_value(c, cs);
            let better = match &best {
                None => true,
                Some((_, bv, bd)) => v < *bv || (v == *bv && cs.dim < *bd),
            };
            if better {
                best = Some((idx, v, cs.dim));
            }
        }
        let (idx, _, _) = best.expect("nonempty per_candidate");
        chosen.push((c.name().to_string(), idx));
        reported_size.push((
            c.name().to_string(),
            per_candidate[idx].candidate.reported_size(),
        ));
    }

    Ok(SelectionResult {
        per_candidate,
        failures,
        chosen,
        reported_size,
    })
}

fn score_candidate(
    cand: &CandidateModel,
    raw: &RawData,
    family: &Family,
    criteria: &[Criterion],
    gamma_grid: &[f64],
    opts: &FitOptions,
) -> Result<CandidateScore> {
    let data = build_design(raw, cand)?;
    let fit = fit_qmle(&data, family, opts)?;
    let sw = estimate_sandwich(&data, family, &fit)?;
    let dim = data.d();
    let n = data.n();
    let report = criterion_report(fit.loglik, &sw, dim, n, gamma_grid)?;
    let scores = criteria
        .iter()
        .map(|&c| {
            let v = match c {
                Criterion::Aic => report.aic,
                Criterion::Bic => report.bic,
                Criterion::Gaic => report.gaic,
                Criterion::Gbic => report.gbic,
                Criterion::Sic => sic(fit.loglik, &sw, dim, n, 0.5)?,
            };
            Ok((c.name().to_string(), v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CandidateScore {
        candidate: cand.clone(),
        dim,
        loglik: fit.loglik,
        dispersion: fit.dispersion,
        converged: fit.converged,
        report,
        scores,
    })
}
