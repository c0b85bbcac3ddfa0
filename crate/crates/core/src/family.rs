//! Exponential-family building blocks for the three supported GLMs.
//!
//! Each family is defined through its cumulant function `b` and its first two
//! derivatives: the mean function `mu(theta) = b'(theta)` and the variance
//! function `b''(theta)`, applied componentwise to the linear predictor.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the linear family's dispersion parameter is obtained.
///
/// Logistic and Poisson families always use a fixed unit dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DispersionPolicy {
    /// Dispersion known a priori.
    Fixed(f64),
    /// Estimate sigma^2 = RSS / (n - d) after least squares.
    EstimateFromRss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Linear,
    Logistic,
    Poisson,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Linear => "linear",
            FamilyKind::Logistic => "logistic",
            FamilyKind::Poisson => "poisson",
        }
    }
}

/// A working exponential-family specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub kind: FamilyKind,
    pub dispersion_policy: DispersionPolicy,
}

impl Family {
    /// Gaussian working model with the given dispersion policy.
    pub fn linear(policy: DispersionPolicy) -> Result<Self> {
        if let DispersionPolicy::Fixed(s) = policy {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "fixed dispersion must be a positive real, got {s}"
                )));
            }
        }
        Ok(Family {
            kind: FamilyKind::Linear,
            dispersion_policy: policy,
        })
    }

    pub fn logistic() -> Self {
        Family {
            kind: FamilyKind::Logistic,
            dispersion_policy: DispersionPolicy::Fixed(1.0),
        }
    }

    pub fn poisson() -> Self {
        Family {
            kind: FamilyKind::Poisson,
            dispersion_policy: DispersionPolicy::Fixed(1.0),
        }
    }

    /// The dispersion value, if already resolved.
    pub fn dispersion(&self) -> Option<f64> {
        match self.dispersion_policy {
            DispersionPolicy::Fixed(s) => Some(s),
            DispersionPolicy::EstimateFromRss => None,
        }
    }

    /// A copy of this family with its dispersion pinned to `sigma2`.
    pub fn with_dispersion(&self, sigma2: f64) -> Self {
        Family {
            kind: self.kind,
            dispersion_policy: DispersionPolicy::Fixed(sigma2),
        }
    }

    fn resolved_dispersion(&self) -> Result<f64> {
        self.dispersion().ok_or(Error::DispersionUnresolved)
    }
}

/// Componentwise link evaluations over a linear predictor vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkValues {
    /// The linear predictor theta = X beta.
    pub theta: DVector<f64>,
    /// mu(theta) = b'(theta), componentwise.
    pub mu: DVector<f64>,
    /// b''(theta), componentwise; strictly positive.
    pub sigma_diag: DVector<f64>,
}

/// Logistic mean e^t / (1 + e^t), computed through the branch that never
/// exponentiates a positive argument.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Logistic variance e^t / (1 + e^t)^2 as p(1-p) with both factors formed
/// from the smaller tail probability, so it stays positive far into the tails.
fn sigmoid_var(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    let small = e / (1.0 + e);
    small * (1.0 - small)
}

/// Evaluate b'(theta) and b''(theta) componentwise.
pub fn evaluate_link(family: &Family, theta: &DVector<f64>) -> Result<LinkValues> {
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonfiniteInput);
    }
    let n = theta.len();
    let (mu, sigma_diag) = match family.kind {
        FamilyKind::Linear => {
            let s2 = family.resolved_dispersion()?;
            (theta * s2, DVector::from_element(n, s2))
        }
        FamilyKind::Logistic => (theta.map(sigmoid), theta.map(sigmoid_var)),
        FamilyKind::Poisson => {
            let mu = theta.map(f64::exp);
            if let Some(i) = mu.iter().position(|m| !m.is_finite()) {
                return Err(Error::NonfiniteLink { theta: theta[i] });
            }
            (mu.clone(), mu)
        }
    };
    Ok(LinkValues {
        theta: theta.clone(),
        mu,
        sigma_diag,
    })
}

/// Cumulant b(theta) for a single component.
pub fn b_scalar(family: &Family, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::NonfiniteInput);
    }
    let v = match family.kind {
        FamilyKind::Linear => family.resolved_dispersion()? * t * t / 2.0,
        // log(1 + e^t) = max(t, 0) + log1p(e^{-|t|})
        FamilyKind::Logistic => t.max(0.0) + (-t.abs()).exp().ln_1p(),
        FamilyKind::Poisson => {
            let e = t.exp();
            if !e.is_finite() {
                return Err(Error::NonfiniteLink { theta: t });
            }
            e
        }
    };
    Ok(v)
}

/// Sum of b(theta_i) over the components of `theta`.
pub fn b_sum(family: &Family, theta: &DVector<f64>) -> Result<f64> {
    let mut acc = 0.0;
    for &t in theta.iter() {
        acc += b_scalar(family, t)?;
    }
    Ok(acc)
}
