//! Information criteria: AIC, BIC, and their misspecification-aware
//! generalizations GAIC, GBIC, and the SIC family indexed by gamma in [0, 1].
//!
//! SIC_gamma = -2 gamma* loglik + gamma (log n) d - gamma log|H| + gamma** tr(H)
//! with gamma* = max(gamma, 1-gamma) and gamma** = max(2 - 3 gamma, 1 - gamma).
//! gamma = 0 recovers GAIC, gamma = 1 recovers GBIC. At gamma = 1/2 the score
//! splits into goodness of fit, complexity, and a Gaussian KL misspecification
//! penalty.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sandwich::SandwichPair;

fn check_dim(dim: usize) -> Result<()> {
    if dim < 1 {
        return Err(Error::InvalidArgument("model dimension must be >= 1".into()));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument("sample size must be >= 2".into()));
    }
    Ok(())
}

/// -2 loglik + 2 dim
pub fn aic(loglik: f64, dim: usize) -> Result<f64> {
    check_dim(dim)?;
    Ok(-2.0 * loglik + 2.0 * dim as f64)
}

/// -2 loglik + (log n) dim
pub fn bic(loglik: f64, dim: usize, n: usize) -> Result<f64> {
    check_dim(dim)?;
    check_n(n)?;
    Ok(-2.0 * loglik + (n as f64).ln() * dim as f64)
}

/// -2 loglik + 2 tr(H)
pub fn gaic(loglik: f64, sw: &SandwichPair) -> f64 {
    -2.0 * loglik + 2.0 * sw.trace_h
}

/// -2 loglik + (log n) dim - log|H|; +inf when B-hat is singular.
pub fn gbic(loglik: f64, sw: &SandwichPair, dim: usize, n: usize) -> Result<f64> {
    check_dim(dim)?;
    check_n(n)?;
    if !sw.b_rank_ok {
        return Ok(f64::INFINITY);
    }
    Ok(-2.0 * loglik + (n as f64).ln() * dim as f64 - sw.logdet_h)
}

/// The SIC family. gamma = 0 equals GAIC, gamma = 1 equals GBIC.
pub fn sic(loglik: f64, sw: &SandwichPair, dim: usize, n: usize, gamma: f64) -> Result<f64> {
    check_dim(dim)?;
    check_n(n)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    let gamma_star = gamma.max(1.0 - gamma);
    let gamma_dstar = (2.0 - 3.0 * gamma).max(1.0 - gamma);
    if !sw.b_rank_ok {
        if gamma > 0.0 {
            return Ok(f64::INFINITY);
        }
        // gamma = 0: the logdet term has coefficient zero and is skipped,
        // keeping the GAIC endpoint finite under the -inf sentinel
        return Ok(-2.0 * gamma_star * loglik + gamma_dstar * sw.trace_h);
    }
    Ok(-2.0 * gamma_star * loglik + gamma * (n as f64).ln() * dim as f64 - gamma * sw.logdet_h
        + gamma_dstar * sw.trace_h)
}

/// The three-part split of SIC at gamma = 1/2.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SicDecomposition {
    /// -loglik
    pub neg_loglik: f64,
    /// ((1 + log n) / 2) dim
    pub complexity: f64,
    /// (tr(H) - log|H| - dim) / 2, the Gaussian KL misspecification penalty.
    pub misspec_kl: f64,
}

impl SicDecomposition {
    pub fn total(&self) -> f64 {
        self.neg_loglik + self.complexity + self.misspec_kl
    }
}

pub fn sic_half_decomposition(
    loglik: f64,
    sw: &SandwichPair,
    dim: usize,
    n: usize,
) -> Result<SicDecomposition> {
    check_dim(dim)?;
    check_n(n)?;
    if !sw.b_rank_ok {
        return Err(Error::DecompositionUndefined);
    }
    Ok(SicDecomposition {
        neg_loglik: -loglik,
        complexity: (1.0 + (n as f64).ln()) / 2.0 * dim as f64,
        misspec_kl: 0.5 * (sw.trace_h - sw.logdet_h - dim as f64),
    })
}

/// All criteria for one fitted candidate.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub aic: f64,
    pub bic: f64,
    pub gaic: f64,
    pub gbic: f64,
    /// SIC evaluated on the gamma grid, as (gamma, value) pairs.
    pub sic: Vec<(f64, f64)>,
    /// Three-part split at gamma = 1/2; absent when B-hat is singular.
    pub decomposition_half: Option<SicDecomposition>,
    pub model_dim: usize,
    pub n: usize,
}

/// Default reporting grid for the SIC index.
pub const DEFAULT_GAMMA_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

pub fn criterion_report(
    loglik: f64,
    sw: &SandwichPair,
    dim: usize,
    n: usize,
    gamma_grid: &[f64],
) -> Result<CriterionReport> {
    let sic_grid = gamma_grid
        .iter()
        .map(|&g| Ok((g, sic(loglik, sw, dim, n, g)?)))
        .collect::<Result<Vec<_>>>()?;
    let decomposition_half = if sw.b_rank_ok {
        Some(sic_half_decomposition(loglik, sw, dim, n)?)
    } else {
        None
    };
    Ok(CriterionReport {
        aic: aic(loglik, dim)?,
        bic: bic(loglik, dim, n)?,
        gaic: gaic(loglik, sw),
        gbic: gbic(loglik, sw, dim, n)?,
        sic: sic_grid,
        decomposition_half,
        model_dim: dim,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    pub(crate) fn pair(trace_h: f64, logdet_h: f64) -> SandwichPair {
        SandwichPair {
            a_hat: DMatrix::identity(1, 1),
            b_hat: DMatrix::identity(1, 1),
            trace_h,
            logdet_h,
            b_rank_ok: logdet_h.is_finite(),
        }
    }

    #[test]
    fn aic_examples() {
        assert_eq!(aic(-100.0, 3).unwrap(), 206.0);
        assert_eq!(aic(0.0, 1).unwrap(), 2.0);
        let ll = 0.5 - 2.0 * (1.0 + 0.5f64.exp()).ln();
        assert_relative_eq!(aic(ll, 1).unwrap(), -2.0 * ll + 2.0, max_relative = 1e-15);
        assert!(aic(0.0, 0).is_err());
    }

    #[test]
    fn bic_examples() {
        // n = e^2 is not an integer; check the formula at log n = ln 50 instead
        assert_relative_eq!(
            bic(-100.0, 3, 50).unwrap(),
            200.0 + 3.0 * 50f64.ln(),
            max_relative = 1e-15
        );
        assert!((bic(-100.0, 3, 50).unwrap() - 211.736).abs() < 1e-3);
        assert!(bic(0.0, 0, 50).is_err());
        assert!(bic(0.0, 1, 1).is_err());
    }

    #[test]
    fn gaic_identity_h_reduces_to_aic() {
        let sw = pair(3.0, 0.0);
        assert_eq!(gaic(-100.0, &sw), aic(-100.0, 3).unwrap());
        assert_eq!(gaic(-100.0, &pair(3.5, 0.0)), 207.0);
    }

    #[test]
    fn gbic_identity_h_reduces_to_bic() {
        let sw = pair(3.0, 0.0);
        assert_eq!(
            gbic(-100.0, &sw, 3, 50).unwrap(),
            bic(-100.0, 3, 50).unwrap()
        );
        assert!((gbic(-100.0, &sw, 3, 50).unwrap() - 211.736).abs() < 1e-3);
        let singular = pair(3.0, f64::NEG_INFINITY);
        assert_eq!(gbic(-100.0, &singular, 3, 50).unwrap(), f64::INFINITY);
    }

    #[test]
    fn sic_endpoints_and_half() {
        let sw = pair(3.5, 0.2);
        assert_eq!(
            sic(-100.0, &sw, 3, 50, 0.0).unwrap(),
            gaic(-100.0, &sw)
        );
        assert_eq!(
            sic(-100.0, &sw, 3, 50, 1.0).unwrap(),
            gbic(-100.0, &sw, 3, 50).unwrap()
        );
        let half = sic(-100.0, &sw, 3, 50, 0.5).unwrap();
        assert_relative_eq!(
            half,
            100.0 + 1.5 * 50f64.ln() - 0.1 + 0.5 * 3.5,
            max_relative = 1e-14
        );
        // must also agree with the three-part split at gamma = 1/2
        assert!((half - 107.518).abs() < 1e-3);
        assert!(sic(-100.0, &sw, 3, 50, 1.5).is_err());
        assert!(sic(-100.0, &sw, 3, 50, -0.1).is_err());
    }

    #[test]
    fn sic_singular_sentinel() {
        let singular = pair(3.0, f64::NEG_INFINITY);
        assert_eq!(sic(-100.0, &singular, 3, 50, 0.5).unwrap(), f64::INFINITY);
        // gamma = 0 stays finite: the logdet term has zero weight
        assert_eq!(
            sic(-100.0, &singular, 3, 50, 0.0).unwrap(),
            gaic(-100.0, &singular)
        );
        assert!(sic_half_decomposition(-100.0, &singular, 3, 50).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let sw = pair(3.0, 0.0);
        let dec = sic_half_decomposition(-100.0, &sw, 3, 50).unwrap();
        assert_eq!(dec.misspec_kl, 0.0);

        let dec = sic_half_decomposition(-100.0, &pair(3.5, 0.2), 3, 50).unwrap();
        assert_relative_eq!(dec.misspec_kl, 0.15, max_relative = 1e-14);
        assert_relative_eq!(
            dec.total(),
            sic(-100.0, &pair(3.5, 0.2), 3, 50, 0.5).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn monotone_in_dim_for_identity_h() {
        for n in [3usize, 10, 100, 10_000] {
            for &g in &DEFAULT_GAMMA_GRID {
                let mut last = f64::NEG_INFINITY;
                for dim in 1..=8 {
                    let sw = pair(dim as f64, 0.0);
                    let v = sic(-50.0, &sw, dim, n, g).unwrap();
                    assert!(v >= last, "n={n} gamma={g} dim={dim}");
                    last = v;
                }
            }
        }
    }

    proptest! {
        // shared shift of loglik across candidates shifts every criterion by
        // -2 gamma* c and cannot change which candidate attains the minimum
        #[test]
        fn constant_shift_preserves_ordering(
            ll1 in -500.0..0.0f64,
            ll2 in -500.0..0.0f64,
            shift in -50.0..50.0f64,
            tr in 0.1..20.0f64,
            ld in -3.0..3.0f64,
            gamma in 0.0..=1.0f64,
        ) {
            let sw = pair(tr, ld);
            let n = 100;
            let a = sic(ll1, &sw, 3, n, gamma).unwrap();
            let b = sic(ll2, &sw, 3, n, gamma).unwrap();
            let a_s = sic(ll1 + shift, &sw, 3, n, gamma).unwrap();
            let b_s = sic(ll2 + shift, &sw, 3, n, gamma).unwrap();
            prop_assert_eq!(a < b, a_s < b_s);
            let gamma_star = gamma.max(1.0 - gamma);
            prop_assert!((a_s - a - (-2.0 * gamma_star * shift)).abs() < 1e-8);
        }

        #[test]
        fn endpoint_and_decomposition_identities(
            ll in -1e4..1e4f64,
            tr in 1e-3..100.0f64,
            ld in -10.0..10.0f64,
            dim in 1usize..10,
            n in 2usize..100_000,
        ) {
            let sw = pair(tr, ld);
            let g0 = sic(ll, &sw, dim, n, 0.0).unwrap();
            let g1 = sic(ll, &sw, dim, n, 1.0).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
            prop_assert!(rel(g0, gaic(ll, &sw)) <= 1e-12);
            prop_assert!(rel(g1, gbic(ll, &sw, dim, n).unwrap()) <= 1e-12);
            let dec = sic_half_decomposition(ll, &sw, dim, n).unwrap();
            let half = sic(ll, &sw, dim, n, 0.5).unwrap();
            prop_assert!(rel(dec.total(), half) <= 1e-12);
        }
    }
}
