//! `miscrit` command line: fit one model, select among candidates, or run a
//! seeded simulation campaign.
//!
//! Exit codes: 0 success, 2 usage/input error, 3 numerical/model failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use serde::Serialize;
use serde_json::json;

use miscrit::{
    all_subsets, build_design, criterion_report, estimate_sandwich, fit_qmle, run_campaign,
    select, CandidateModel, Criterion, Dataset, DispersionPolicy, Error as CoreError, Family,
    FitOptions, FrequencyTable, RawData, SelectionResult, SimConfig, DEFAULT_GAMMA_GRID,
};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "miscrit",
    about = "GLM model selection under misspecification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Linear,
    Logistic,
    Poisson,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row; all non-response columns are covariates
    input: PathBuf,
    /// Response column, by header name or zero-based index
    #[arg(long, default_value = "y")]
    response: String,
    #[arg(long, value_enum, default_value = "linear")]
    family: FamilyArg,
    /// Prepend an intercept column to every fitted design
    #[arg(long)]
    intercept: bool,
    /// SIC indices to report, each in [0, 1]
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a single model and report all criteria
    Fit {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Enumerate candidates, score each, and report per-criterion winners
    Select {
        #[command(flatten)]
        data: DataArgs,
        /// Polynomial orders over a single covariate (fits include an intercept)
        #[arg(long, value_delimiter = ',', conflicts_with = "sizes")]
        orders: Vec<usize>,
        /// Subset sizes over the covariate pool
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
    /// Run a seeded simulation campaign from a JSON config
    Simulate {
        /// Campaign config JSON
        config: PathBuf,
        /// Override the config's seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

/// Error carrying its destination exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::InvalidArgument(_)
            | CoreError::InvalidResponse { .. }
            | CoreError::NonfiniteInput
            | CoreError::TooManyPredictors { .. } => EXIT_INPUT,
            _ => EXIT_NUMERIC,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    // die quietly when a downstream pager/head closes the pipe
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit { data } => cmd_fit(&data),
        Command::Select {
            data,
            orders,
            sizes,
        } => cmd_select(&data, &orders, &sizes),
        Command::Simulate {
            config,
            seed,
            format,
        } => cmd_simulate(&config, seed, format),
    }
}

fn family_of(arg: FamilyArg) -> Family {
    match arg {
        FamilyArg::Linear => {
            Family::linear(DispersionPolicy::EstimateFromRss).expect("valid policy")
        }
        FamilyArg::Logistic => Family::logistic(),
        FamilyArg::Poisson => Family::poisson(),
    }
}

fn gamma_grid(data: &DataArgs) -> Result<Vec<f64>, CliError> {
    if data.gamma.is_empty() {
        return Ok(DEFAULT_GAMMA_GRID.to_vec());
    }
    for &g in &data.gamma {
        if !(0.0..=1.0).contains(&g) {
            return Err(CliError::input(format!("gamma {g} outside [0, 1]")));
        }
    }
    Ok(data.gamma.clone())
}

/// Parse the CSV into a response vector and the remaining covariate columns.
fn load_csv(data: &DataArgs) -> Result<(RawData, Vec<String>), CliError> {
    let mut reader = csv::Reader::from_path(&data.input)
        .map_err(|e| CliError::input(format!("{}: {e}", data.input.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::input(format!("header row: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() {
        return Err(CliError::input("CSV has no columns"));
    }

    let response_idx = match headers.iter().position(|h| h == &data.response) {
        Some(i) => i,
        None => data
            .response
            .parse::<usize>()
            .ok()
            .filter(|&i| i < headers.len())
            .ok_or_else(|| {
                CliError::input(format!(
                    "response column {:?} not found among {:?}",
                    data.response, headers
                ))
            })?,
    };

    let mut y = Vec::new();
    let mut cov_rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::input(format!("row {}: {e}", line + 2)))?;
        if record.len() != headers.len() {
            return Err(CliError::input(format!(
                "row {}: expected {} fields, found {}",
                line + 2,
                headers.len(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                CliError::input(format!(
                    "row {}, column {:?}: {:?} is not a number",
                    line + 2,
                    headers[col],
                    field
                ))
            })?;
            if col == response_idx {
                y.push(value);
            } else {
                row.push(value);
            }
        }
        cov_rows.push(row);
    }
    if y.is_empty() {
        return Err(CliError::input("CSV has no data rows"));
    }

    let n = y.len();
    let p = headers.len() - 1;
    let mut x = DMatrix::zeros(n, p);
    for (i, row) in cov_rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    let covariate_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != response_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let raw = RawData::new(DVector::from_vec(y), x).map_err(CliError::from)?;
    Ok((raw, covariate_names))
}

/// Everything reported about one fitted candidate.
#[derive(Serialize)]
struct CandidateReport {
    label: String,
    size: usize,
    dim: usize,
    beta_hat: Vec<f64>,
    loglik: f64,
    dispersion: f64,
    converged: bool,
    trace_h: f64,
    logdet_h: f64,
    scores: Vec<(String, f64)>,
    sic_grid: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decomposition_half: Option<miscrit::SicDecomposition>,
}

fn cmd_fit(data: &DataArgs) -> Result<(), CliError> {
    let grid = gamma_grid(data)?;
    let (raw, names) = load_csv(data)?;
    let family = family_of(data.family);

    let design = full_design(&raw, data.intercept)?;
    design.validate_responses(&family).map_err(|e| {
        // surface the offending row for response-domain problems
        CliError {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    })?;
    let fit = fit_qmle(&design, &family, &FitOptions::default())?;
    let sw = estimate_sandwich(&design, &family, &fit)?;
    let report = criterion_report(fit.loglik, &sw, design.d(), design.n(), &grid)?;
    let sic_half = miscrit::sic(fit.loglik, &sw, design.d(), design.n(), 0.5)?;

    let cand = CandidateReport {
        label: format!("full({})", names.join(",")),
        size: raw.p(),
        dim: design.d(),
        beta_hat: fit.beta_hat.clone(),
        loglik: fit.loglik,
        dispersion: fit.dispersion,
        converged: fit.converged,
        trace_h: sw.trace_h,
        logdet_h: sw.logdet_h,
        scores: vec![
            ("AIC".into(), report.aic),
            ("BIC".into(), report.bic),
            ("GAIC".into(), report.gaic),
            ("GBIC".into(), report.gbic),
            ("SIC".into(), sic_half),
        ],
        sic_grid: report.sic.clone(),
        decomposition_half: report.decomposition_half,
    };

    let criteria: Vec<String> = cand.scores.iter().map(|(k, _)| k.clone()).collect();
    let chosen: Vec<(String, usize)> = criteria.iter().map(|c| (c.clone(), 0)).collect();
    let meta = json!({
        "command": "fit",
        "input": data.input.display().to_string(),
        "family": family_name(data.family),
        "intercept": data.intercept,
        "n": design.n(),
        "gamma_grid": grid,
    });

    match data.format {
        Format::Json => {
            print_json(&json!({
                "criteria": criteria,
                "candidates": [cand],
                "chosen": chosen,
                "meta": meta,
            }));
        }
        Format::Text => {
            println!("model: {} (dim {})", cand.label, cand.dim);
            println!("beta_hat: {:?}", cand.beta_hat);
            println!("loglik: {:.6}", cand.loglik);
            println!("dispersion: {:.6}", cand.dispersion);
            println!("trace_h: {:.6}  logdet_h: {:.6}", cand.trace_h, cand.logdet_h);
            for (name, v) in &cand.scores {
                println!("{name}: {v:.6}");
            }
            for (g, v) in &cand.sic_grid {
                println!("SIC[gamma={g}]: {v:.6}");
            }
            if let Some(dec) = &cand.decomposition_half {
                println!(
                    "SIC[1/2] split: -loglik {:.6} + complexity {:.6} + misspec_kl {:.6}",
                    dec.neg_loglik, dec.complexity, dec.misspec_kl
                );
            }
        }
        Format::Csv => {
            println!("criterion,value");
            for (name, v) in &cand.scores {
                println!("{name},{v}");
            }
            for (g, v) in &cand.sic_grid {
                println!("SIC_gamma_{g},{v}");
            }
        }
    }
    Ok(())
}

/// Design for `fit`: every covariate column, optionally behind an intercept.
fn full_design(raw: &RawData, intercept: bool) -> Result<Dataset, CliError> {
    let indices: Vec<usize> = (1..=raw.p()).collect();
    let cand = CandidateModel::subset(indices, intercept)?;
    Ok(build_design(raw, &cand)?)
}

fn family_name(f: FamilyArg) -> &'static str {
    match f {
        FamilyArg::Linear => "linear",
        FamilyArg::Logistic => "logistic",
        FamilyArg::Poisson => "poisson",
    }
}

fn cmd_select(data: &DataArgs, orders: &[usize], sizes: &[usize]) -> Result<(), CliError> {
    let grid = gamma_grid(data)?;
    let (raw, _names) = load_csv(data)?;
    let family = family_of(data.family);

    let candidates: Vec<CandidateModel> = if !orders.is_empty() {
        if raw.p() != 1 {
            return Err(CliError::input(format!(
                "--orders needs exactly one covariate column, found {}",
                raw.p()
            )));
        }
        orders
            .iter()
            .map(|&o| CandidateModel::polynomial(o, true))
            .collect::<Result<_, _>>()?
    } else if !sizes.is_empty() {
        all_subsets(raw.p(), sizes, data.intercept)?
    } else {
        return Err(CliError::input("select needs --orders or --sizes"));
    };

    let result = select(&candidates, &raw, &family, &Criterion::ALL, &grid)?;
    render_selection(&result, data, &grid)
}

fn render_selection(
    result: &SelectionResult,
    data: &DataArgs,
    grid: &[f64],
) -> Result<(), CliError> {
    match data.format {
        Format::Json => {
            let meta = json!({
                "command": "select",
                "input": data.input.display().to_string(),
                "family": family_name(data.family),
                "intercept": data.intercept,
                "gamma_grid": grid,
                "failures": result.failures,
            });
            print_json(&json!({
                "criteria": result.chosen.iter().map(|(c, _)| c.clone()).collect::<Vec<_>>(),
                "candidates": result.per_candidate,
                "chosen": result.chosen,
                "meta": meta,
            }));
        }
        Format::Text => {
            println!(
                "{:<18} {:>4} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
                "candidate", "dim", "loglik", "AIC", "BIC", "GAIC", "GBIC", "SIC"
            );
            for cs in &result.per_candidate {
                print!(
                    "{:<18} {:>4} {:>12.4}",
                    cs.candidate.label(),
                    cs.dim,
                    cs.loglik
                );
                for (_, v) in &cs.scores {
                    print!(" {v:>12.4}");
                }
                println!();
            }
            for f in &result.failures {
                println!("{:<18} failed: {}", f.candidate.label(), f.reason);
            }
            println!();
            for (c, idx) in &result.chosen {
                let win = &result.per_candidate[*idx];
                println!(
                    "{c}: {} (size {})",
                    win.candidate.label(),
                    win.candidate.reported_size()
                );
            }
        }
        Format::Csv => {
            println!("candidate,dim,loglik,AIC,BIC,GAIC,GBIC,SIC");
            for cs in &result.per_candidate {
                print!("{},{},{}", cs.candidate.label(), cs.dim, cs.loglik);
                for (_, v) in &cs.scores {
                    print!(",{v}");
                }
                println!();
            }
        }
    }
    Ok(())
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("MISCRIT_THREADS") {
        Ok(v) => {
            let k: usize = v
                .trim()
                .parse()
                .map_err(|_| CliError::input(format!("MISCRIT_THREADS={v:?} is not an integer")))?;
            Ok(if k == 0 { None } else { Some(k) })
        }
        Err(_) => Ok(None),
    }
}

fn cmd_simulate(config: &PathBuf, seed: Option<u64>, format: Format) -> Result<(), CliError> {
    let text = fs::read_to_string(config)
        .map_err(|e| CliError::input(format!("{}: {e}", config.display())))?;
    let mut cfg: SimConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", config.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    } else if cfg.seed == 0 {
        // seedless configs get a fresh seed, printed so the run is replayable
        let s = rand::rngs::OsRng.next_u64();
        eprintln!("seed: {s}");
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| CliError {
        code: EXIT_INPUT,
        message: e.to_string(),
    })?;

    let threads = threads_from_env()?;
    let table = run_campaign(&cfg, threads)?;
    render_table(&table, format);
    Ok(())
}

fn render_table(table: &FrequencyTable, format: Format) {
    match format {
        Format::Json => {
            print_json(&json!({
                "criteria": table.criteria,
                "candidates": table.columns,
                "chosen": table.counts,
                "meta": {
                    "experiment": table.meta.experiment,
                    "n": table.meta.n,
                    "sigma": table.meta.sigma,
                    "a": table.meta.a,
                    "replicates": table.meta.replicates,
                    "seed": table.meta.seed,
                    "normal_method": table.meta.normal_method,
                    "failures": table.failures,
                },
            }));
        }
        Format::Text => {
            print!("{:>6}", "crit");
            for c in &table.columns {
                print!("{c:>6}");
            }
            println!("{:>6}", "fail");
            for (i, name) in table.criteria.iter().enumerate() {
                print!("{name:>6}");
                for v in &table.counts[i] {
                    print!("{v:>6}");
                }
                println!("{:>6}", table.failures);
            }
        }
        Format::Csv => {
            let cols: Vec<String> = table.columns.iter().map(|c| c.to_string()).collect();
            println!("criterion,{},failures", cols.join(","));
            for (i, name) in table.criteria.iter().enumerate() {
                let row: Vec<String> = table.counts[i].iter().map(|v| v.to_string()).collect();
                println!("{name},{},{}", row.join(","), table.failures);
            }
        }
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}
