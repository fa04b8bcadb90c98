//! Local energies `h(x, gamma)` and Papangelou intensities
//! `lambda*(x, gamma) = z exp(-beta h(x, gamma))`.

mod knn;
mod pair;
mod potential;
mod voronoi;
mod widom_rowlinson;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, Configuration, MarkedPoint, Position, Window};

pub use knn::{knn_envelope, knn_neighbors, KnnInsertion, KnnSpec, RadialPotential};
pub use pair::{PairPotential, PairPotentialSpec, DEFAULT_TRUNCATION};
pub use potential::TabulatedPotential;
pub use voronoi::{
    insertion as voronoi_insertion, stabilization_radius, voronoi_cell, voronoi_envelope, CellFunctional, VoronoiCell,
    VoronoiInsertion, VoronoiSpec,
};
pub use widom_rowlinson::{AreaDelta, RadiusLaw, WidomRowlinsonSpec, DEFAULT_ROWS_PER_RADIUS};

pub(crate) fn check_activity(z: f64, beta: f64) -> Result<()> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::invalid("z", format!("activity must be finite and > 0, got {z}")));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", format!("must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

/// One of the supported model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    Pair(PairPotentialSpec),
    WidomRowlinson(WidomRowlinsonSpec),
    Voronoi(VoronoiSpec),
    Knn(KnnSpec),
}

/// Law of the marks carried by the points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarkDistribution {
    Unmarked,
    Uniform { min: f64, max: f64 },
}

impl MarkDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        match *self {
            MarkDistribution::Unmarked => None,
            MarkDistribution::Uniform { min, max } if min == max => Some(min),
            MarkDistribution::Uniform { min, max } => Some(rng.random_range(min..=max)),
        }
    }
}

/// A validated model in a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PapangelouModel {
    dim: usize,
    spec: ModelSpec,
}

impl PapangelouModel {
    pub fn new(spec: ModelSpec, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        match &spec {
            ModelSpec::Pair(s) => s.validate(dim)?,
            ModelSpec::WidomRowlinson(s) => s.validate(dim)?,
            ModelSpec::Voronoi(s) => s.validate(dim)?,
            ModelSpec::Knn(s) => s.validate(dim)?,
        }
        Ok(Self { dim, spec })
    }

    /// Poisson process of intensity `z`, as a pair model with `beta = 0`.
    pub fn poisson(z: f64, dim: usize) -> Result<Self> {
        Self::new(ModelSpec::Pair(PairPotentialSpec::strauss(z, 0.0, 0.0)), dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn name(&self) -> &'static str {
        match &self.spec {
            ModelSpec::Pair(s) => match s.potential {
                PairPotential::Strauss { .. } if s.beta == 0.0 => "poisson",
                PairPotential::Strauss { .. } => "strauss",
                PairPotential::Riesz { .. } => "riesz",
                PairPotential::LennardJones { .. } => "lennard_jones",
                PairPotential::Tabulated(_) => "pair_tabulated",
            },
            ModelSpec::WidomRowlinson(_) => "widom_rowlinson",
            ModelSpec::Voronoi(_) => "voronoi",
            ModelSpec::Knn(_) => "knn",
        }
    }

    pub fn z(&self) -> f64 {
        match &self.spec {
            ModelSpec::Pair(s) => s.z,
            ModelSpec::WidomRowlinson(s) => s.z,
            ModelSpec::Voronoi(s) => s.z,
            ModelSpec::Knn(s) => s.z,
        }
    }

    pub fn beta(&self) -> f64 {
        match &self.spec {
            ModelSpec::Pair(s) => s.beta,
            ModelSpec::WidomRowlinson(s) => s.beta,
            ModelSpec::Voronoi(s) => s.beta,
            ModelSpec::Knn(s) => s.beta,
        }
    }

    /// The same model with activity `z`.
    pub fn with_activity(&self, z: f64) -> Result<Self> {
        let mut spec = self.spec.clone();
        match &mut spec {
            ModelSpec::Pair(s) => s.z = z,
            ModelSpec::WidomRowlinson(s) => s.z = z,
            ModelSpec::Voronoi(s) => s.z = z,
            ModelSpec::Knn(s) => s.z = z,
        }
        Self::new(spec, self.dim)
    }

    pub fn is_marked(&self) -> bool {
        matches!(&self.spec, ModelSpec::WidomRowlinson(s) if s.is_marked())
    }

    pub fn mark_distribution(&self) -> MarkDistribution {
        match &self.spec {
            ModelSpec::WidomRowlinson(WidomRowlinsonSpec { radii: RadiusLaw::Uniform { min, max }, .. }) => {
                MarkDistribution::Uniform { min: *min, max: *max }
            }
            _ => MarkDistribution::Unmarked,
        }
    }

    /// Distance beyond which a point cannot influence `lambda*`, when the
    /// model has a deterministic range.
    pub fn interaction_cutoff(&self) -> Option<f64> {
        match &self.spec {
            ModelSpec::Pair(s) => Some(s.cutoff()),
            ModelSpec::WidomRowlinson(s) => Some(2.0 * s.max_radius()),
            _ => None,
        }
    }

    /// Grid cell size for configurations of this model in `window`.
    pub fn cell_hint(&self, window: &Window) -> f64 {
        let fallback = window.side() / 16.0;
        let hint = match self.interaction_cutoff() {
            Some(c) => c,
            None => {
                let k = match &self.spec {
                    ModelSpec::Knn(s) => s.k as f64,
                    _ => 1.0,
                };
                (k / self.z()).powf(1.0 / self.dim as f64)
            }
        };
        if hint > 0.0 && hint.is_finite() {
            hint.max(fallback / 64.0).min(window.side())
        } else {
            fallback
        }
    }

    pub fn validate_window(&self, window: &Window) -> Result<()> {
        if window.dim() != self.dim {
            return Err(Error::invalid(
                "dim",
                format!("model is {}-dimensional but the window is {}-dimensional", self.dim, window.dim()),
            ));
        }
        if let ModelSpec::WidomRowlinson(s) = &self.spec {
            s.validate_window(window)?;
        }
        Ok(())
    }

    fn check_point(&self, x: &MarkedPoint, config: &Configuration) -> Result<()> {
        if config.window().dim() != self.dim {
            return Err(Error::invalid("dim", "configuration dimension does not match the model"));
        }
        if x.mark.is_some() != self.is_marked() {
            return Err(Error::MarkMismatch);
        }
        Ok(())
    }

    /// `h(x, gamma)`; `+inf` for a hard-core violation.
    pub fn local_energy(&self, x: &MarkedPoint, config: &Configuration) -> Result<f64> {
        self.check_point(x, config)?;
        match &self.spec {
            ModelSpec::Pair(s) => s.local_energy(&x.pos, config),
            ModelSpec::WidomRowlinson(s) => Ok(s.area_delta(x, config)?.value),
            ModelSpec::Voronoi(s) => s.local_energy(&x.pos, config),
            ModelSpec::Knn(s) => s.local_energy(&x.pos, config),
        }
    }

    /// `lambda*(x, gamma) = z exp(-beta h(x, gamma))`.
    pub fn papangelou(&self, x: &MarkedPoint, config: &Configuration) -> Result<f64> {
        if self.beta() == 0.0 {
            self.check_point(x, config)?;
            return Ok(self.z());
        }
        let h = self.local_energy(x, config)?;
        Ok(self.intensity_from_energy(h))
    }

    pub(crate) fn intensity_from_energy(&self, h: f64) -> f64 {
        if self.beta() == 0.0 {
            self.z()
        } else if h == f64::INFINITY {
            0.0
        } else {
            self.z() * (-self.beta() * h).exp()
        }
    }

    /// `lambda*(x, gamma ∪ {y}) / lambda*(x, gamma)`.
    pub fn papangelou_ratio(&self, x: &MarkedPoint, config: &Configuration, y: &MarkedPoint) -> Result<f64> {
        self.check_point(x, config)?;
        self.check_point(y, config)?;
        if x.pos == y.pos {
            return Err(Error::DuplicatePosition(x.pos.slice(self.dim).to_vec()));
        }
        let beta = self.beta();
        if let ModelSpec::Pair(s) = &self.spec {
            if s.potential.may_be_infinite() && s.local_energy(&x.pos, config)? == f64::INFINITY {
                return Err(Error::HardCoreConflict);
            }
            let phi = s.phi(config.window().distance(&x.pos, &y.pos))?;
            return Ok(if beta == 0.0 { 1.0 } else { (-beta * phi).exp() });
        }
        let h0 = self.local_energy(x, config)?;
        if h0 == f64::INFINITY {
            return Err(Error::HardCoreConflict);
        }
        let mut with_y = config.clone();
        with_y.insert(*y)?;
        let h1 = self.local_energy(x, &with_y)?;
        if beta == 0.0 {
            return Ok(1.0);
        }
        if h1 == f64::INFINITY {
            return Ok(0.0);
        }
        Ok((-beta * (h1 - h0)).exp())
    }

    /// `H(gamma)` computed from scratch.
    pub fn total_energy(&self, config: &Configuration) -> Result<f64> {
        match &self.spec {
            ModelSpec::Pair(s) => s.total_energy(config),
            ModelSpec::WidomRowlinson(s) => {
                // volume of the union, built one ball at a time
                let mut partial = Configuration::new(*config.window(), config.is_marked(), config.cell_hint());
                let mut sum = 0.0;
                for p in config.points() {
                    sum += s.area_delta(p, &partial)?.value;
                    partial.insert(*p)?;
                }
                Ok(sum)
            }
            ModelSpec::Voronoi(s) => s.total_energy(config),
            ModelSpec::Knn(s) => s.total_energy(config),
        }
    }

    /// Uniform upper bound `C_1 >= lambda*`, when the model has one.
    pub fn intensity_upper_bound(&self) -> Option<f64> {
        let z = self.z();
        if self.beta() == 0.0 {
            return Some(z);
        }
        match &self.spec {
            ModelSpec::Pair(s) if s.potential.is_non_negative() => Some(z),
            ModelSpec::WidomRowlinson(_) => Some(z),
            ModelSpec::Knn(s) => match (s.phi_sup(), s.n_d) {
                (Some(sup), Some(n_d)) => Some(knn_envelope(z, self.beta(), s.k, sup, n_d).1),
                _ => None,
            },
            _ => None,
        }
    }

    /// Empty configuration indexed for this model.
    pub fn empty_configuration(&self, window: Window) -> Result<Configuration> {
        self.validate_window(&window)?;
        Ok(Configuration::new(window, self.is_marked(), self.cell_hint(&window)))
    }

    /// `lambda*` at a position, drawing the mark when the model is marked.
    pub fn papangelou_at<R: Rng + ?Sized>(&self, pos: Position, config: &Configuration, rng: &mut R) -> Result<f64> {
        let x = MarkedPoint::new(pos, self.mark_distribution().sample(rng))?;
        self.papangelou(&x, config)
    }
}
