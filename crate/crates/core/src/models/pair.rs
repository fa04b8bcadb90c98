use serde::{Deserialize, Serialize};

use super::potential::TabulatedPotential;
use crate::error::{Error, Result};
use crate::geometry::{Configuration, Position};

/// Truncation level used for the default cutoff of power-law potentials.
pub const DEFAULT_TRUNCATION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairPotential {
    /// `1` within distance `range`, `0` beyond.
    Strauss {
        range: f64,
    },
    /// `r^{-s}`.
    Riesz {
        s: f64,
    },
    /// `a r^{-alpha1} - b r^{-alpha2}`.
    LennardJones {
        a: f64,
        b: f64,
        alpha1: f64,
        alpha2: f64,
    },
    Tabulated(TabulatedPotential),
}

impl PairPotential {
    fn is_singular_at_zero(&self) -> bool {
        matches!(self, PairPotential::Riesz { .. } | PairPotential::LennardJones { .. })
    }

    pub(crate) fn may_be_infinite(&self) -> bool {
        match self {
            PairPotential::Tabulated(t) => t.values.iter().any(|v| v.is_infinite()),
            _ => false,
        }
    }

    pub(crate) fn is_non_negative(&self) -> bool {
        match self {
            PairPotential::Strauss { .. } | PairPotential::Riesz { .. } => true,
            PairPotential::LennardJones { .. } => false,
            PairPotential::Tabulated(t) => t.is_non_negative(),
        }
    }

    /// Radii at which the potential is discontinuous or has a kink.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match self {
            PairPotential::Strauss { range } => vec![*range],
            PairPotential::Tabulated(t) => t.breakpoints().to_vec(),
            _ => Vec::new(),
        }
    }
}

/// A pairwise-interaction Gibbs model:
/// `lambda*(x, gamma) = z exp(-beta sum_y phi(|x - y|))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairPotentialSpec {
    pub potential: PairPotential,
    pub z: f64,
    pub beta: f64,
    /// Distance beyond which the potential is treated as zero. Defaults to
    /// the Strauss range, the table end, or the radius where `|phi|` drops
    /// below [`DEFAULT_TRUNCATION`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
}

impl PairPotentialSpec {
    pub fn strauss(z: f64, beta: f64, range: f64) -> Self {
        Self { potential: PairPotential::Strauss { range }, z, beta, cutoff: None }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        super::check_activity(self.z, self.beta)?;
        let d = dim as f64;
        match &self.potential {
            PairPotential::Strauss { range } => {
                if !(range.is_finite() && *range >= 0.0) {
                    return Err(Error::invalid("range", format!("must be finite and >= 0, got {range}")));
                }
            }
            PairPotential::Riesz { s } => {
                if !(*s > d) {
                    return Err(Error::invalid(
                        "s",
                        format!("riesz exponent must exceed the dimension {dim} to be integrable, got {s}"),
                    ));
                }
            }
            PairPotential::LennardJones { a, b, alpha1, alpha2 } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(Error::invalid("lennard_jones", "a and b must be > 0"));
                }
                if !(alpha1 > alpha2 && *alpha2 > d) {
                    return Err(Error::invalid(
                        "lennard_jones",
                        format!("need alpha1 > alpha2 > {dim}, got {alpha1}, {alpha2}"),
                    ));
                }
            }
            PairPotential::Tabulated(t) => t.validate()?,
        }
        if let Some(c) = self.cutoff {
            if !(c >= 0.0) {
                return Err(Error::invalid("cutoff", format!("must be >= 0, got {c}")));
            }
        }
        Ok(())
    }

    pub fn cutoff(&self) -> f64 {
        if let Some(c) = self.cutoff {
            return c;
        }
        match &self.potential {
            PairPotential::Strauss { range } => *range,
            PairPotential::Riesz { s } => DEFAULT_TRUNCATION.powf(-1.0 / s),
            PairPotential::LennardJones { a, b, alpha1, alpha2 } => {
                let ra = (a / DEFAULT_TRUNCATION).powf(1.0 / alpha1);
                let rb = (b / DEFAULT_TRUNCATION).powf(1.0 / alpha2);
                ra.max(rb)
            }
            PairPotential::Tabulated(t) => t.range(),
        }
    }

    /// The potential at distance `r`, zero beyond the cutoff.
    pub fn phi(&self, r: f64) -> Result<f64> {
        if r == 0.0 && self.potential.is_singular_at_zero() {
            return Err(Error::SingularPotential);
        }
        if r > self.cutoff() {
            return Ok(0.0);
        }
        Ok(self.phi_untruncated(r))
    }

    pub(crate) fn phi_untruncated(&self, r: f64) -> f64 {
        match &self.potential {
            PairPotential::Strauss { range } => {
                if r <= *range {
                    1.0
                } else {
                    0.0
                }
            }
            PairPotential::Riesz { s } => r.powf(-s),
            PairPotential::LennardJones { a, b, alpha1, alpha2 } => a * r.powf(-alpha1) - b * r.powf(-alpha2),
            PairPotential::Tabulated(t) => t.eval(r),
        }
    }

    /// `sum_{y in gamma} phi(|x - y|)` over points within the cutoff.
    /// May be `+inf` for hard-core tables.
    pub fn local_energy(&self, x: &Position, config: &Configuration) -> Result<f64> {
        let mut sum = 0.0;
        let mut singular = false;
        config.for_each_within(x, self.cutoff(), |_, r, _| {
            if r == 0.0 && self.potential.is_singular_at_zero() {
                singular = true;
            } else {
                sum += self.phi_untruncated(r);
            }
        });
        if singular {
            return Err(Error::SingularPotential);
        }
        Ok(sum)
    }

    /// `sum_{pairs} phi(|x - y|)` computed from scratch.
    pub fn total_energy(&self, config: &Configuration) -> Result<f64> {
        let w = config.window();
        let pts = config.points();
        let mut sum = 0.0;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                sum += self.phi(w.distance(&pts[i].pos, &pts[j].pos))?;
            }
        }
        Ok(sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MarkedPoint, Window};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn strauss_indicator() {
        let s = PairPotentialSpec::strauss(1.0, 1.0, 1.0);
        assert_eq!(s.phi(0.5).unwrap(), 1.0);
        assert_eq!(s.phi(1.5).unwrap(), 0.0);
        assert_eq!(s.phi(0.0).unwrap(), 1.0);
    }

    #[test]
    fn riesz_value_and_singularity() {
        let s = PairPotentialSpec { potential: PairPotential::Riesz { s: 3.0 }, z: 1.0, beta: 1.0, cutoff: None };
        s.validate(2).unwrap();
        assert_eq!(s.phi(2.0).unwrap(), 0.125);
        assert!(matches!(s.phi(0.0), Err(Error::SingularPotential)));
        // default cutoff sits where phi falls to 1e-12
        assert!((s.phi_untruncated(s.cutoff()) - 1e-12).abs() < 1e-20);
    }

    #[test]
    fn validation_rejects_non_integrable() {
        let riesz = |s| PairPotentialSpec { potential: PairPotential::Riesz { s }, z: 1.0, beta: 1.0, cutoff: None };
        assert!(riesz(2.0).validate(2).is_err());
        assert!(riesz(2.5).validate(2).is_ok());
        let lj = PairPotentialSpec {
            potential: PairPotential::LennardJones { a: 1.0, b: 1.0, alpha1: 6.0, alpha2: 12.0 },
            z: 1.0,
            beta: 1.0,
            cutoff: None,
        };
        assert!(lj.validate(3).is_err());
    }

    #[test]
    fn local_energy_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w = Window::periodic(3.0, 2).unwrap();
        let lj = PairPotentialSpec {
            potential: PairPotential::LennardJones { a: 1.0, b: 2.0, alpha1: 8.0, alpha2: 4.0 },
            z: 1.0,
            beta: 1.0,
            cutoff: None,
        };
        let strauss = PairPotentialSpec::strauss(1.0, 1.0, 0.4);
        for spec in [strauss, lj] {
            let pts = (0..50).map(|_| {
                MarkedPoint::unmarked(Position::new(&[rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)]).unwrap())
            });
            let config = Configuration::from_points(w, false, spec.cutoff().min(3.0), pts).unwrap();
            let x = Position::new(&[1.1, 2.2]).unwrap();
            let brute: f64 = config.points().iter().map(|p| spec.phi_untruncated(w.distance(&x, &p.pos))).sum();
            let fast = spec.local_energy(&x, &config).unwrap();
            assert!((fast - brute).abs() <= 1e-12 * brute.abs().max(1.0));
        }
    }
}
