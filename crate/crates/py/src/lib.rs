//! Python bindings: fit a model, run selection, or execute a campaign.
//!
//! Data crosses the boundary as plain lists (row-major design matrices) and
//! results come back as dictionaries, so no Python-side dependencies are
//! needed.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use miscrit::{
    all_subsets, build_design, criterion_report, estimate_sandwich, fit_qmle, run_campaign,
    select, CandidateModel, Criterion, Dataset, DispersionPolicy, Error as CoreError, Family,
    FitOptions, RawData, SimConfig, DEFAULT_GAMMA_GRID,
};

fn to_py_err(e: CoreError) -> PyErr {
    match e {
        CoreError::InvalidArgument(_)
        | CoreError::InvalidResponse { .. }
        | CoreError::NonfiniteInput
        | CoreError::TooManyPredictors { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_family(name: &str) -> PyResult<Family> {
    match name.to_ascii_lowercase().as_str() {
        "linear" => Family::linear(DispersionPolicy::EstimateFromRss).map_err(to_py_err),
        "logistic" => Ok(Family::logistic()),
        "poisson" => Ok(Family::poisson()),
        other => Err(PyValueError::new_err(format!("unknown family {other:?}"))),
    }
}

fn parse_matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("x must have at least one row"));
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("x rows have unequal lengths"));
    }
    let mut m = DMatrix::zeros(rows.len(), p);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Fit one model on the full design and report criteria.
#[pyfunction]
#[pyo3(signature = (y, x, family="linear", intercept=true))]
fn fit(
    py: Python<'_>,
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    family: &str,
    intercept: bool,
) -> PyResult<Py<PyDict>> {
    let fam = parse_family(family)?;
    let raw = RawData::new(DVector::from_vec(y), parse_matrix(x)?).map_err(to_py_err)?;
    let indices: Vec<usize> = (1..=raw.p()).collect();
    let cand = CandidateModel::subset(indices, intercept).map_err(to_py_err)?;
    let design: Dataset = build_design(&raw, &cand).map_err(to_py_err)?;
    design.validate_responses(&fam).map_err(to_py_err)?;

    let fitres = fit_qmle(&design, &fam, &FitOptions::default()).map_err(to_py_err)?;
    let sw = estimate_sandwich(&design, &fam, &fitres).map_err(to_py_err)?;
    let report = criterion_report(
        fitres.loglik,
        &sw,
        design.d(),
        design.n(),
        &DEFAULT_GAMMA_GRID,
    )
    .map_err(to_py_err)?;

    let out = PyDict::new_bound(py);
    out.set_item("beta_hat", &fitres.beta_hat)?;
    out.set_item("loglik", fitres.loglik)?;
    out.set_item("dispersion", fitres.dispersion)?;
    out.set_item("converged", fitres.converged)?;
    out.set_item("score_norm", fitres.score_norm)?;
    out.set_item("trace_h", sw.trace_h)?;
    out.set_item("logdet_h", sw.logdet_h)?;
    out.set_item("aic", report.aic)?;
    out.set_item("bic", report.bic)?;
    out.set_item("gaic", report.gaic)?;
    out.set_item("gbic", report.gbic)?;
    out.set_item("sic", report.sic.clone())?;
    if let Some(dec) = report.decomposition_half {
        let d = PyDict::new_bound(py);
        d.set_item("neg_loglik", dec.neg_loglik)?;
        d.set_item("complexity", dec.complexity)?;
        d.set_item("misspec_kl", dec.misspec_kl)?;
        out.set_item("decomposition_half", d)?;
    }
    Ok(out.into())
}

/// Score candidates (polynomial `orders` over one covariate or subset
/// `sizes` over the pool) and report per-criterion winners.
#[pyfunction]
#[pyo3(signature = (y, x, family="linear", orders=None, sizes=None, intercept=false))]
fn select_models(
    py: Python<'_>,
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    family: &str,
    orders: Option<Vec<usize>>,
    sizes: Option<Vec<usize>>,
    intercept: bool,
) -> PyResult<Py<PyDict>> {
    let fam = parse_family(family)?;
    let raw = RawData::new(DVector::from_vec(y), parse_matrix(x)?).map_err(to_py_err)?;

    let candidates: Vec<CandidateModel> = match (orders, sizes) {
        (Some(orders), None) => orders
            .iter()
            .map(|&o| CandidateModel::polynomial(o, true))
            .collect::<Result<_, _>>()
            .map_err(to_py_err)?,
        (None, Some(sizes)) => all_subsets(raw.p(), &sizes, intercept).map_err(to_py_err)?,
        _ => {
            return Err(PyValueError::new_err(
                "pass exactly one of orders= or sizes=",
            ))
        }
    };

    let result = select(&candidates, &raw, &fam, &Criterion::ALL, &[]).map_err(to_py_err)?;

    let cands = PyList::empty_bound(py);
    for cs in &result.per_candidate {
        let d = PyDict::new_bound(py);
        d.set_item("label", cs.candidate.label())?;
        d.set_item("size", cs.candidate.reported_size())?;
        d.set_item("dim", cs.dim)?;
        d.set_item("loglik", cs.loglik)?;
        let scores = PyDict::new_bound(py);
        for (name, v) in &cs.scores {
            scores.set_item(name, v)?;
        }
        d.set_item("scores", scores)?;
        cands.append(d)?;
    }
    let chosen = PyDict::new_bound(py);
    for (name, idx) in &result.chosen {
        let win = &result.per_candidate[*idx];
        let d = PyDict::new_bound(py);
        d.set_item("index", idx)?;
        d.set_item("label", win.candidate.label())?;
        d.set_item("size", win.candidate.reported_size())?;
        chosen.set_item(name, d)?;
    }
    let failures = PyList::empty_bound(py);
    for f in &result.failures {
        failures.append((f.candidate.label(), f.reason.clone()))?;
    }

    let out = PyDict::new_bound(py);
    out.set_item("candidates", cands)?;
    out.set_item("chosen", chosen)?;
    out.set_item("failures", failures)?;
    Ok(out.into())
}

/// Run a simulation campaign from a config JSON string; returns the frequency
/// table as a JSON string (stable key order, reproducible bytes).
#[pyfunction]
#[pyo3(signature = (config_json, threads=None))]
fn simulate(config_json: &str, threads: Option<usize>) -> PyResult<String> {
    let cfg: SimConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let table = run_campaign(&cfg, threads).map_err(to_py_err)?;
    serde_json::to_string(&table).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn miscrit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(select_models, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
