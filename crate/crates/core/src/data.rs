//! Response and design-matrix containers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::family::{Family, FamilyKind};

/// A response vector paired with an n x d design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
}

impl Dataset {
    /// Requires n >= 1 and 1 <= d <= n. Column rank is checked at fit time.
    pub fn new(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        let (n, d) = x.shape();
        if y.len() != n {
            return Err(Error::InvalidArgument(format!(
                "response length {} does not match {} design rows",
                y.len(),
                n
            )));
        }
        if n == 0 || d == 0 || d > n {
            return Err(Error::InvalidArgument(format!(
                "design shape {n} x {d} violates 1 <= d <= n"
            )));
        }
        if y.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonfiniteInput);
        }
        Ok(Dataset { y, x })
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Family-specific response validation: {0,1} for logistic,
    /// nonnegative integers for Poisson.
    pub fn validate_responses(&self, family: &Family) -> Result<()> {
        match family.kind {
            FamilyKind::Linear => Ok(()),
            FamilyKind::Logistic => {
                for (i, &v) in self.y.iter().enumerate() {
                    if v != 0.0 && v != 1.0 {
                        return Err(Error::InvalidResponse {
                            index: i,
                            value: v,
                            family: "logistic",
                        });
                    }
                }
                Ok(())
            }
            FamilyKind::Poisson => {
                for (i, &v) in self.y.iter().enumerate() {
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(Error::InvalidResponse {
                            index: i,
                            value: v,
                            family: "poisson",
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_validation() {
        let y = DVector::from_row_slice(&[1.0, 2.0]);
        let x = DMatrix::from_row_slice(2, 3, &[1.0; 6]);
        assert!(Dataset::new(y, x).is_err()); // d > n

        let y = DVector::from_row_slice(&[1.0, 2.0]);
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        assert!(Dataset::new(y, x).is_ok());
    }

    #[test]
    fn response_validation() {
        let y = DVector::from_row_slice(&[0.0, 0.5]);
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let data = Dataset::new(y, x).unwrap();
        let err = data.validate_responses(&Family::logistic()).unwrap_err();
        assert!(matches!(err, Error::InvalidResponse { index: 1, .. }));

        let y = DVector::from_row_slice(&[3.0, -1.0]);
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let data = Dataset::new(y, x).unwrap();
        assert!(data.validate_responses(&Family::poisson()).is_err());
        assert!(data
            .validate_responses(&Family::linear(crate::family::DispersionPolicy::Fixed(1.0)).unwrap())
            .is_ok());
    }
}
