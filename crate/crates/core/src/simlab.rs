//! Seeded Monte-Carlo selection campaigns.
//!
//! A campaign repeatedly generates data from one of five experiment designs,
//! runs model selection on each replicate, and tallies how often each
//! criterion picks each model size. Replicates use independent RNG streams
//! keyed by (seed, replicate), so the tally is byte-for-byte identical no
//! matter how many threads run it.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{DispersionPolicy, Family};
use crate::rng::{replicate_rng, standard_normal, NORMAL_METHOD};
use crate::search::{all_subsets, select, CandidateModel, Criterion, RawData};

/// True coefficient vector shared by the subset-style experiments.
const BETA0: [f64; 6] = [1.0, -1.25, 0.75, 0.0, 0.0, 0.0];

/// Rows whose single-index denominator is closer to zero than this are
/// redrawn.
const SINGLE_INDEX_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    /// Cubic polynomial in one standard-normal covariate; candidates are
    /// polynomial orders.
    PolyCubic,
    /// Linear model over six AR(0.5)-correlated predictors; candidates are
    /// covariate subsets.
    BestSubsetLinear,
    /// Linear model plus a hidden interaction 0.5 x1 x2; predictors are
    /// independent; candidates are covariate subsets.
    Interaction,
    /// Single-index model y = z^2/(a+z) + eps with z = x' beta0; candidates
    /// are covariate subsets.
    SingleIndex,
    /// Cubic polynomial with |x|^(1/2) noise scaling; candidates are
    /// polynomial orders.
    HeteroPoly,
}

impl Experiment {
    pub fn uses_curvature(self) -> bool {
        matches!(self, Experiment::SingleIndex)
    }
}

/// Candidate family for a campaign: polynomial orders (fit with intercept)
/// or subset sizes over the six-predictor pool (fit without intercept).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSpec {
    Orders(Vec<usize>),
    Sizes(Vec<usize>),
}

fn default_replicates() -> usize {
    100
}

fn default_criteria() -> Vec<Criterion> {
    Criterion::ALL.to_vec()
}

/// A full campaign description; serializable as the packaged config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub experiment: Experiment,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_criteria")]
    pub criteria: Vec<Criterion>,
    pub candidates: CandidateSpec,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument("n must be at least 2".into()));
        }
        if self.replicates < 1 {
            return Err(Error::InvalidArgument("replicates must be >= 1".into()));
        }
        if self.criteria.is_empty() {
            return Err(Error::InvalidArgument("criteria list is empty".into()));
        }
        if self.experiment.uses_curvature() {
            let a = self
                .a
                .ok_or_else(|| Error::InvalidArgument("single-index runs need `a`".into()))?;
            if !a.is_finite() {
                return Err(Error::InvalidArgument("`a` must be finite".into()));
            }
        } else {
            let sigma = self
                .sigma
                .ok_or_else(|| Error::InvalidArgument("this experiment needs `sigma`".into()))?;
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::InvalidArgument("`sigma` must be positive".into()));
            }
        }
        match (&self.experiment, &self.candidates) {
            (Experiment::PolyCubic | Experiment::HeteroPoly, CandidateSpec::Orders(orders)) => {
                if orders.is_empty() || orders.iter().any(|&o| o < 1) {
                    return Err(Error::InvalidArgument("orders must be nonempty, >= 1".into()));
                }
            }
            (
                Experiment::BestSubsetLinear | Experiment::Interaction | Experiment::SingleIndex,
                CandidateSpec::Sizes(sizes),
            ) => {
                if sizes.is_empty() || sizes.iter().any(|&s| s < 1 || s > BETA0.len()) {
                    return Err(Error::InvalidArgument(format!(
                        "sizes must be nonempty within 1..={}",
                        BETA0.len()
                    )));
                }
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "candidate spec does not match the experiment (orders for polynomial \
                     experiments, sizes for subset experiments)"
                        .into(),
                ));
            }
        }
        Ok(())
    }

    fn build_candidates(&self) -> Result<Vec<CandidateModel>> {
        match &self.candidates {
            CandidateSpec::Orders(orders) => orders
                .iter()
                .map(|&o| CandidateModel::polynomial(o, true))
                .collect(),
            CandidateSpec::Sizes(sizes) => all_subsets(BETA0.len(), sizes, false),
        }
    }

    /// The tabulated model-size columns, in ascending order.
    fn columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = match &self.candidates {
            CandidateSpec::Orders(orders) => orders.clone(),
            CandidateSpec::Sizes(sizes) => sizes.clone(),
        };
        cols.sort_unstable();
        cols.dedup();
        cols
    }
}

/// Campaign provenance recorded alongside the tally.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignMeta {
    pub experiment: Experiment,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub normal_method: String,
}

/// Criteria-by-size frequency table, the shape the campaigns report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencyTable {
    /// Criterion names, one row each.
    pub criteria: Vec<String>,
    /// Model-size columns, ascending.
    pub columns: Vec<usize>,
    /// counts[row][col]: how often criterion `row` picked size `columns[col]`.
    pub counts: Vec<Vec<u64>>,
    /// Replicates where selection failed outright (no row increment).
    pub failures: u64,
    pub meta: CampaignMeta,
}

impl FrequencyTable {
    pub fn count(&self, criterion: Criterion, size: usize) -> Option<u64> {
        let row = self.criteria.iter().position(|c| c == criterion.name())?;
        let col = self.columns.iter().position(|&s| s == size)?;
        Some(self.counts[row][col])
    }
}

fn draw_x_vec<R: rand::RngCore>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| standard_normal(rng))
}

fn ar_half_cholesky(p: usize) -> DMatrix<f64> {
    let sigma = DMatrix::from_fn(p, p, |i, j| 0.5f64.powi((i as i32 - j as i32).abs()));
    Cholesky::new(sigma)
        .expect("AR(0.5) covariance is positive definite")
        .l()
}

fn draw_rows<R: rand::RngCore>(
    n: usize,
    p: usize,
    chol_l: Option<&DMatrix<f64>>,
    rng: &mut R,
) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, p);
    let mut z = DVector::zeros(p);
    for i in 0..n {
        for k in 0..p {
            z[k] = standard_normal(rng);
        }
        let row = match chol_l {
            Some(l) => l * &z,
            None => z.clone(),
        };
        for j in 0..p {
            x[(i, j)] = row[j];
        }
    }
    x
}

fn xbeta0(x: &DMatrix<f64>) -> DVector<f64> {
    let beta = DVector::from_row_slice(&BETA0);
    x * beta
}

pub fn gen_poly_cubic<R: rand::RngCore>(n: usize, sigma: f64, rng: &mut R) -> RawData {
    let x = draw_x_vec(n, rng);
    let eps = draw_x_vec(n, rng);
    let y = DVector::from_fn(n, |i, _| {
        let v = x[i];
        1.0 + 5.0 * v - 1.25 * v * v + 0.55 * v * v * v + sigma * eps[i]
    });
    RawData::new(y, DMatrix::from_column_slice(n, 1, x.as_slice())).expect("finite draws")
}

pub fn gen_hetero_poly<R: rand::RngCore>(n: usize, sigma: f64, rng: &mut R) -> RawData {
    let x = draw_x_vec(n, rng);
    let eps = draw_x_vec(n, rng);
    let y = DVector::from_fn(n, |i, _| {
        let v = x[i];
        1.0 + 5.0 * v - 1.25 * v * v + 1.55 * v * v * v + v.abs().sqrt() * sigma * eps[i]
    });
    RawData::new(y, DMatrix::from_column_slice(n, 1, x.as_slice())).expect("finite draws")
}

pub fn gen_subset_linear<R: rand::RngCore>(n: usize, sigma: f64, rng: &mut R) -> RawData {
    let l = ar_half_cholesky(BETA0.len());
    let x = draw_rows(n, BETA0.len(), Some(&l), rng);
    let eps = draw_x_vec(n, rng);
    let y = xbeta0(&x) + sigma * eps;
    RawData::new(y, x).expect("finite draws")
}

pub fn gen_interaction<R: rand::RngCore>(n: usize, sigma: f64, rng: &mut R) -> RawData {
    let x = draw_rows(n, BETA0.len(), None, rng);
    let eps = draw_x_vec(n, rng);
    let mut y = xbeta0(&x) + sigma * eps;
    for i in 0..n {
        y[i] += 0.5 * x[(i, 0)] * x[(i, 1)];
    }
    RawData::new(y, x).expect("finite draws")
}

pub fn gen_single_index<R: rand::RngCore>(n: usize, a: f64, rng: &mut R) -> RawData {
    let p = BETA0.len();
    let mut x = DMatrix::zeros(n, p);
    let mut z = DVector::zeros(n);
    for i in 0..n {
        // redraw any row whose index lands on the pole of z^2 / (a + z)
        loop {
            for j in 0..p {
                x[(i, j)] = standard_normal(rng);
            }
            let zi: f64 = (0..p).map(|j| BETA0[j] * x[(i, j)]).sum();
            if (a + zi).abs() >= SINGLE_INDEX_GUARD {
                z[i] = zi;
                break;
            }
        }
    }
    let eps = draw_x_vec(n, rng);
    let y = DVector::from_fn(n, |i, _| z[i] * z[i] / (a + z[i]) + eps[i]);
    RawData::new(y, x).expect("finite draws")
}

fn generate<R: rand::RngCore>(cfg: &SimConfig, rng: &mut R) -> RawData {
    match cfg.experiment {
        Experiment::PolyCubic => gen_poly_cubic(cfg.n, cfg.sigma.unwrap(), rng),
        Experiment::HeteroPoly => gen_hetero_poly(cfg.n, cfg.sigma.unwrap(), rng),
        Experiment::BestSubsetLinear => gen_subset_linear(cfg.n, cfg.sigma.unwrap(), rng),
        Experiment::Interaction => gen_interaction(cfg.n, cfg.sigma.unwrap(), rng),
        Experiment::SingleIndex => gen_single_index(cfg.n, cfg.a.unwrap(), rng),
    }
}

/// One replicate: generate, select, and report each criterion's chosen size.
/// `None` marks a replicate whose selection failed entirely.
fn run_replicate(cfg: &SimConfig, candidates: &[CandidateModel], r: u64) -> Option<Vec<usize>> {
    let mut rng = replicate_rng(cfg.seed, r);
    let raw = generate(cfg, &mut rng);
    let fam = Family::linear(DispersionPolicy::EstimateFromRss).expect("valid policy");
    let result = select(candidates, &raw, &fam, &cfg.criteria, &[]).ok()?;
    Some(
        cfg.criteria
            .iter()
            .map(|c| {
                result
                    .chosen_candidate(*c)
                    .map(|cs| cs.candidate.reported_size())
                    .unwrap_or(0)
            })
            .collect(),
    )
}

/// Run a campaign. `threads = None` uses the process-wide default pool;
/// `Some(k)` with k >= 1 pins a pool of k threads. The resulting table is
/// identical either way.
pub fn run_campaign(cfg: &SimConfig, threads: Option<usize>) -> Result<FrequencyTable> {
    cfg.validate()?;
    let candidates = cfg.build_candidates()?;
    let columns = cfg.columns();
    let reps = cfg.replicates as u64;

    let picks: Vec<Option<Vec<usize>>> = match threads {
        Some(k) if k >= 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            pool.install(|| {
                (0..reps)
                    .into_par_iter()
                    .map(|r| run_replicate(cfg, &candidates, r))
                    .collect()
            })
        }
        _ => (0..reps)
            .into_par_iter()
            .map(|r| run_replicate(cfg, &candidates, r))
            .collect(),
    };

    // deterministic sequential tally over the ordered replicate results
    let mut counts = vec![vec![0u64; columns.len()]; cfg.criteria.len()];
    let mut failures = 0u64;
    for pick in picks {
        match pick {
            Some(sizes) => {
                for (row, size) in sizes.iter().enumerate() {
                    if let Some(col) = columns.iter().position(|s| s == size) {
                        counts[row][col] += 1;
                    }
                }
            }
            None => failures += 1,
        }
    }

    Ok(FrequencyTable {
        criteria: cfg.criteria.iter().map(|c| c.name().to_string()).collect(),
        columns,
        counts,
        failures,
        meta: CampaignMeta {
            experiment: cfg.experiment,
            n: cfg.n,
            sigma: cfg.sigma,
            a: cfg.a,
            replicates: cfg.replicates,
            seed: cfg.seed,
            normal_method: NORMAL_METHOD.to_string(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_cfg(n: usize, sigma: f64, replicates: usize, seed: u64) -> SimConfig {
        SimConfig {
            experiment: Experiment::PolyCubic,
            n,
            sigma: Some(sigma),
            a: None,
            replicates,
            seed,
            criteria: Criterion::ALL.to_vec(),
            candidates: CandidateSpec::Orders((1..=6).collect()),
        }
    }

    #[test]
    fn config_parses_from_packaged_schema() {
        let json = r#"{
            "experiment": "PolyCubic",
            "n": 200,
            "sigma": 0.5,
            "replicates": 100,
            "seed": 20260823,
            "criteria": ["AIC", "BIC", "GAIC", "GBIC", "SIC"],
            "candidates": {"orders": [1, 2, 3, 4, 5, 6]}
        }"#;
        let cfg: SimConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.experiment, Experiment::PolyCubic);
        assert_eq!(cfg.candidates, CandidateSpec::Orders(vec![1, 2, 3, 4, 5, 6]));

        let sub = r#"{
            "experiment": "SingleIndex",
            "n": 50,
            "a": 0.25,
            "seed": 1,
            "candidates": {"sizes": [1, 2, 3, 4, 5, 6]}
        }"#;
        let cfg: SimConfig = serde_json::from_str(sub).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.replicates, 100);
        assert_eq!(cfg.criteria, Criterion::ALL.to_vec());
    }

    #[test]
    fn config_validation_rejects_mismatches() {
        let mut cfg = poly_cfg(50, 0.5, 10, 1);
        cfg.candidates = CandidateSpec::Sizes(vec![1, 2]);
        assert!(cfg.validate().is_err());

        let mut cfg = poly_cfg(50, 0.5, 10, 1);
        cfg.sigma = None;
        assert!(cfg.validate().is_err());

        let mut cfg = poly_cfg(50, 0.5, 10, 1);
        cfg.sigma = Some(-1.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn generators_hit_their_design() {
        let mut rng = replicate_rng(7, 0);
        let raw = gen_subset_linear(4000, 0.5, &mut rng);
        assert_eq!(raw.p(), 6);
        // adjacent predictors should correlate near 0.5 under AR(0.5)
        let c0 = raw.covariates.column(0);
        let c1 = raw.covariates.column(1);
        let n = raw.n() as f64;
        let corr = (c0.dot(&c1) / n - c0.mean() * c1.mean())
            / (c0.variance().sqrt() * c1.variance().sqrt());
        assert!((corr - 0.5).abs() < 0.05, "corr = {corr}");

        let mut rng = replicate_rng(7, 1);
        let raw = gen_interaction(2000, 1.0, &mut rng);
        // the hidden interaction is uncorrelated with each predictor
        let y = &raw.y;
        let c2 = raw.covariates.column(2);
        let slope = c2.dot(y) / c2.norm_squared();
        assert!((slope - BETA0[2]).abs() < 0.15, "slope = {slope}");

        let mut rng = replicate_rng(7, 2);
        let raw = gen_single_index(500, 0.25, &mut rng);
        assert!(raw.y.iter().all(|v| v.is_finite()));

        let mut rng = replicate_rng(7, 3);
        let raw = gen_hetero_poly(500, 1.0, &mut rng);
        assert_eq!(raw.p(), 1);
        assert!(raw.y.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn low_noise_campaign_finds_the_cubic() {
        let cfg = poly_cfg(100, 0.05, 5, 99);
        let table = run_campaign(&cfg, Some(1)).unwrap();
        assert_eq!(table.failures, 0);
        assert_eq!(table.count(Criterion::Sic, 3), Some(5));
        assert_eq!(table.count(Criterion::Bic, 3), Some(5));
    }

    #[test]
    fn campaign_is_thread_count_invariant() {
        let cfg = SimConfig {
            experiment: Experiment::BestSubsetLinear,
            n: 40,
            sigma: Some(1.0),
            a: None,
            replicates: 8,
            seed: 4242,
            criteria: Criterion::ALL.to_vec(),
            candidates: CandidateSpec::Sizes((1..=6).collect()),
        };
        let serial = serde_json::to_string(&run_campaign(&cfg, Some(1)).unwrap()).unwrap();
        let parallel = serde_json::to_string(&run_campaign(&cfg, Some(4)).unwrap()).unwrap();
        assert_eq!(serial, parallel);
        let again = serde_json::to_string(&run_campaign(&cfg, None).unwrap()).unwrap();
        assert_eq!(serial, again);
    }

    #[test]
    fn rows_sum_to_replicates() {
        let cfg = poly_cfg(60, 1.0, 12, 3);
        let table = run_campaign(&cfg, Some(2)).unwrap();
        for row in &table.counts {
            let total: u64 = row.iter().sum();
            assert_eq!(total + table.failures, 12);
        }
    }
}
