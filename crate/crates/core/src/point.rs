//! State-space points and unit directions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite point in `R^d`, `d >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyPoint);
        }
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index, value });
        }
        Ok(Point(coords))
    }

    /// Builds a point without the finiteness check. Callers guarantee the invariant.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|v| v.is_finite()));
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1);
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `self + scale * dir`, or an error if a coordinate overflows.
    pub fn offset(&self, dir: &[f64], scale: f64) -> Result<Point> {
        let coords: Vec<f64> = self
            .0
            .iter()
            .zip(dir)
            .map(|(x, d)| x + scale * d)
            .collect();
        Point::new(coords)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Checks that `phi` has unit Euclidean norm within `1e-12`.
pub fn check_unit(phi: &[f64]) -> Result<()> {
    let n = norm(phi);
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnitVector(n));
    }
    Ok(())
}

/// Representative of the antipodal pair `{phi, -phi}`: the one whose first
/// nonzero coordinate is positive.
pub fn canonical_axis(phi: &[f64]) -> Vec<f64> {
    match phi.iter().find(|v| **v != 0.0) {
        Some(v) if *v < 0.0 => phi.iter().map(|x| -x).collect(),
        _ => phi.to_vec(),
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert_eq!(Point::new(vec![]), Err(Error::EmptyPoint));
        assert!(matches!(
            Point::new(vec![0.0, f64::NAN]),
            Err(Error::NonFiniteCoordinate { index: 1, .. })
        ));
        assert!(Point::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn offset_overflow_is_an_error() {
        let p = Point::new(vec![f64::MAX]).unwrap();
        assert!(p.offset(&[1.0], f64::MAX).is_err());
    }

    #[test]
    fn canonical_axis_identifies_antipodes() {
        let phi = [0.0, -0.6, 0.8];
        let neg: Vec<f64> = phi.iter().map(|x| -x).collect();
        assert_eq!(canonical_axis(&phi), canonical_axis(&neg));
        assert_eq!(canonical_axis(&phi), vec![0.0, 0.6, -0.8]);
    }

    #[test]
    fn serde_rejects_non_finite() {
        assert!(serde_json::from_str::<Point>("[]").is_err());
        let p: Point = serde_json::from_str("[1.5,-2.0]").unwrap();
        assert_eq!(p.coords(), &[1.5, -2.0]);
    }
}
