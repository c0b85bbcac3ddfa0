//! Model-based and sampling covariance estimates of the score, and the
//! misspecification contrast between them.
//!
//! `A_hat = X^T Sigma(X beta_hat) X` is the covariance of the score under the
//! fitted working model; `B_hat = X^T diag(r o r) X` with residuals
//! `r = y - mu(X beta_hat)` is its empirical covariance under the data. Their
//! contrast `H_hat = A_hat^{-1} B_hat` has trace d and log-determinant 0 when
//! the working model is correct.

use nalgebra::{Cholesky, DMatrix};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{evaluate_link, Family};
use crate::qmle::FitResult;

#[derive(Debug, Clone, Serialize)]
pub struct SandwichPair {
    #[serde(skip)]
    pub a_hat: DMatrix<f64>,
    #[serde(skip)]
    pub b_hat: DMatrix<f64>,
    /// tr(A_hat^{-1} B_hat), always >= 0 up to roundoff.
    pub trace_h: f64,
    /// log |A_hat^{-1} B_hat| = logdet B_hat - logdet A_hat;
    /// -inf when B_hat is numerically singular.
    pub logdet_h: f64,
    /// Whether B_hat admitted a Cholesky factorization.
    pub b_rank_ok: bool,
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    (m + mt) * 0.5
}

fn weighted_gram(x: &DMatrix<f64>, weights: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let mut wx = x.clone();
    for i in 0..x.nrows() {
        let w = weights(i);
        wx.row_mut(i).scale_mut(w);
    }
    symmetrize(x.tr_mul(&wx))
}

fn logdet_from_cholesky(chol: &Cholesky<f64, nalgebra::Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Estimate the sandwich pair at the fitted parameters.
pub fn estimate_sandwich(data: &Dataset, family: &Family, fit: &FitResult) -> Result<SandwichPair> {
    let resolved = family.with_dispersion(fit.dispersion);
    let link = evaluate_link(&resolved, &(data.x() * fit.beta()))?;
    let resid = data.y() - &link.mu;

    let a_hat = weighted_gram(data.x(), |i| link.sigma_diag[i]);
    let b_hat = weighted_gram(data.x(), |i| resid[i] * resid[i]);

    let chol_a = Cholesky::new(a_hat.clone()).ok_or_else(|| {
        Error::ModelDegenerate("A-hat is not positive definite".into())
    })?;
    let trace_h = chol_a.solve(&b_hat).trace();

    let (logdet_h, b_rank_ok) = match Cholesky::new(b_hat.clone()) {
        Some(chol_b) => (
            logdet_from_cholesky(&chol_b) - logdet_from_cholesky(&chol_a),
            true,
        ),
        None => (f64::NEG_INFINITY, false),
    };

    Ok(SandwichPair {
        a_hat,
        b_hat,
        trace_h,
        logdet_h,
        b_rank_ok,
    })
}
