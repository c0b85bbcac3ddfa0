//! Quasi-maximum likelihood fitting.
//!
//! Solves the score equation X^T [y - mu(X beta)] = 0. Linear models are
//! solved in closed form through a QR factorization; logistic and Poisson
//! models use damped Newton iteration with step halving. The objective is
//! strictly concave whenever the design has full column rank, so Newton from
//! beta = 0 reaches the unique maximizer.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{b_sum, evaluate_link, DispersionPolicy, Family, FamilyKind};

/// Norm bound beyond which a still-unconverged logistic fit is flagged as
/// complete separation.
const SEPARATION_NORM: f64 = 1e6;
/// A logistic fit whose largest residual is below this classifies the sample
/// perfectly, which means the data are separated and the maximizer diverges.
const SEPARATION_RESID: f64 = 1e-6;
const MAX_HALVINGS: u32 = 30;

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub tol_score: f64,
    pub max_iter: usize,
    /// Ridge added to the Newton Hessian only if its Cholesky fails; 0 disables.
    pub ridge_on_singular: f64,
    /// Starting point for Newton families; defaults to the zero vector.
    pub init: Option<DVector<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol_score: 1e-8,
            max_iter: 100,
            ridge_on_singular: 0.0,
            init: None,
        }
    }
}

/// Result of a quasi-maximum likelihood fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    /// Maximized quasi-log-likelihood. For the linear family this is the
    /// Gaussian log-likelihood with the dispersion profiled in, so criteria
    /// stay comparable across model sizes.
    pub loglik: f64,
    pub dispersion: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm of the score X^T [y - mu(X beta)] at exit.
    pub score_norm: f64,
    /// Set when a logistic fit diverges in norm with the score still large.
    pub separation: bool,
}

impl FitResult {
    pub fn beta(&self) -> DVector<f64> {
        DVector::from_row_slice(&self.beta_hat)
    }
}

/// Quasi-log-likelihood y^T X beta - 1^T b(X beta), constant term dropped.
pub fn quasi_log_likelihood(data: &Dataset, family: &Family, beta: &DVector<f64>) -> Result<f64> {
    if beta.len() != data.d() {
        return Err(Error::InvalidArgument(format!(
            "beta length {} does not match {} design columns",
            beta.len(),
            data.d()
        )));
    }
    let theta = data.x() * beta;
    Ok(data.y().dot(&theta) - b_sum(family, &theta)?)
}

/// Column rank from the pivoted QR of the design.
fn design_rank(x: &DMatrix<f64>) -> usize {
    let (n, d) = x.shape();
    let qr = x.clone().col_piv_qr();
    let r = qr.r();
    let rmax = (0..d).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if rmax == 0.0 {
        return 0;
    }
    let tol = rmax * (n.max(d) as f64) * f64::EPSILON;
    (0..d).filter(|&i| r[(i, i)].abs() > tol).count()
}

/// Least squares via thin QR: gamma = R^{-1} Q^T y.
fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let qr = x.clone().qr();
    let qty = qr.q().tr_mul(y);
    qr.r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::ModelDegenerate("upper-triangular solve failed".into()))
}

fn newton_hessian(x: &DMatrix<f64>, sigma_diag: &DVector<f64>) -> DMatrix<f64> {
    let mut sx = x.clone();
    for i in 0..x.nrows() {
        let s = sigma_diag[i];
        sx.row_mut(i).scale_mut(s);
    }
    let h = x.tr_mul(&sx);
    // exact symmetry helps the Cholesky downstream
    let ht = h.transpose();
    (h + ht) * 0.5
}

/// Fit the QMLE for `family` on `data`.
pub fn fit_qmle(data: &Dataset, family: &Family, opts: &FitOptions) -> Result<FitResult> {
    data.validate_responses(family)?;
    let (n, d) = (data.n(), data.d());
    let rank = design_rank(data.x());
    if rank < d {
        return Err(Error::DesignRank { rank, cols: d });
    }

    match family.kind {
        FamilyKind::Linear => fit_linear(data, family),
        FamilyKind::Logistic | FamilyKind::Poisson => fit_newton(data, family, opts, n, d),
    }
}

fn fit_linear(data: &Dataset, family: &Family) -> Result<FitResult> {
    let (n, d) = (data.n(), data.d());
    let gamma = least_squares(data.x(), data.y())?;
    let resid = data.y() - data.x() * &gamma;
    let rss = resid.norm_squared();

    let sigma2 = match family.dispersion_policy {
        DispersionPolicy::Fixed(s) => s,
        DispersionPolicy::EstimateFromRss => {
            if n <= d {
                return Err(Error::DispersionUndefined { n, d });
            }
            let s = rss / (n - d) as f64;
            if !(s > 1e-20 * data.y().norm_squared().max(f64::MIN_POSITIVE)) {
                return Err(Error::DispersionDegenerate);
            }
            s
        }
    };

    let beta = &gamma / sigma2;
    // Gaussian log-likelihood with the dispersion profiled in (constant kept
    // so values are comparable across model sizes).
    let loglik = -rss / (2.0 * sigma2)
        - (n as f64 / 2.0) * sigma2.ln()
        - (n as f64 / 2.0) * (2.0 * std::f64::consts::PI).ln();
    let score = data.x().tr_mul(&resid);
    let score_norm = score.amax();

    Ok(FitResult {
        beta_hat: beta.iter().copied().collect(),
        loglik,
        dispersion: sigma2,
        iterations: 0,
        converged: score_norm <= FitOptions::default().tol_score,
        score_norm,
        separation: false,
    })
}

fn fit_newton(
    data: &Dataset,
    family: &Family,
    opts: &FitOptions,
    _n: usize,
    d: usize,
) -> Result<FitResult> {
    let mut beta = match &opts.init {
        Some(b) => {
            if b.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "init length {} does not match {} design columns",
                    b.len(),
                    d
                )));
            }
            b.clone()
        }
        None => DVector::zeros(d),
    };
    let mut loglik = quasi_log_likelihood(data, family, &beta)?;
    let mut converged = false;
    let mut separation = false;
    let mut iterations = 0;
    let mut score_norm;

    loop {
        let link = evaluate_link(family, &(data.x() * &beta))?;
        let score = data.x().tr_mul(&(data.y() - &link.mu));
        score_norm = score.amax();
        if score_norm <= opts.tol_score {
            // a vanishing logistic score with a perfect classification means
            // the objective has no finite maximizer, not that we found it
            if family.kind == FamilyKind::Logistic
                && (data.y() - &link.mu).amax() <= SEPARATION_RESID
            {
                separation = true;
            } else {
                converged = true;
            }
            break;
        }
        if beta.norm() > SEPARATION_NORM {
            separation = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }

        let mut hessian = newton_hessian(data.x(), &link.sigma_diag);
        let chol = match Cholesky::new(hessian.clone()) {
            Some(c) => Some(c),
            None if opts.ridge_on_singular > 0.0 => {
                for i in 0..d {
                    hessian[(i, i)] += opts.ridge_on_singular;
                }
                Cholesky::new(hessian)
            }
            None => None,
        }
        .ok_or_else(|| Error::ModelDegenerate("Newton Hessian is not positive definite".into()))?;
        let direction = chol.solve(&score);

        // step halving: accept the first step on which the objective does not
        // decrease (nonfinite trial objectives count as decreases)
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &beta + &direction * step;
            match quasi_log_likelihood(data, family, &trial) {
                Ok(ll) if ll >= loglik => {
                    accepted = Some((trial, ll));
                    break;
                }
                _ => step *= 0.5,
            }
        }
        match accepted {
            Some((trial, ll)) => {
                beta = trial;
                loglik = ll;
                iterations += 1;
            }
            None => break, // no acceptable step; report non-convergence
        }
    }

    Ok(FitResult {
        beta_hat: beta.iter().copied().collect(),
        loglik,
        dispersion: 1.0,
        iterations,
        converged,
        score_norm,
        separation,
    })
}
