use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A radial potential given on a grid of radii, linearly interpolated.
///
/// Below the first radius the first value is used; beyond the last radius
/// the potential is zero. Entries may be `+inf` (hard core); an interval with
/// an infinite end takes its left value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedPotential {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl TabulatedPotential {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let t = Self { radii, values };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.radii.len() != self.values.len() {
            return Err(Error::invalid("tabulated", "radii and values must be non-empty and of equal length"));
        }
        if self.radii[0] < 0.0 || self.radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("tabulated", "radii must be >= 0 and strictly increasing"));
        }
        if self.values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::invalid("tabulated", "values must be finite or +inf"));
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        let last = self.radii.len() - 1;
        if r > self.radii[last] {
            return 0.0;
        }
        if r <= self.radii[0] {
            return self.values[0];
        }
        let i = self.radii.partition_point(|&x| x <= r) - 1;
        if i == last {
            return self.values[last];
        }
        let (r0, r1) = (self.radii[i], self.radii[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if !(v0.is_finite() && v1.is_finite()) {
            return v0;
        }
        v0 + (v1 - v0) * (r - r0) / (r1 - r0)
    }

    /// Radius beyond which the potential vanishes.
    pub fn range(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_non_negative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0]) && self.values[self.values.len() - 1] >= 0.0
    }

    /// Radii where the interpolant has kinks, for piecewise quadrature.
    pub fn breakpoints(&self) -> &[f64] {
        &self.radii
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_and_vanishes_beyond_range() {
        let t = TabulatedPotential::new(vec![0.0, 1.0, 2.0], vec![2.0, 1.0, 0.5]).unwrap();
        assert_eq!(t.eval(0.5), 1.5);
        assert_eq!(t.eval(2.0), 0.5);
        assert_eq!(t.eval(2.0001), 0.0);
        assert_eq!(t.sup_abs(), 2.0);
        assert!(t.is_non_increasing());
    }

    #[test]
    fn hard_core_entries() {
        let t = TabulatedPotential::new(vec![0.0, 0.1, 0.2], vec![f64::INFINITY, f64::INFINITY, 0.0]).unwrap();
        assert_eq!(t.eval(0.05), f64::INFINITY);
        assert_eq!(t.eval(0.15), f64::INFINITY);
        assert!(TabulatedPotential::new(vec![1.0, 0.5], vec![0.0, 0.0]).is_err());
    }
}
