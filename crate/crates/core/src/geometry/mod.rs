//! Positions, windows, configurations and the uniform-grid neighbour index.

mod config;
mod grid;
pub mod io;

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{Configuration, Delta, DeltaOutcome};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Index of a point inside a [`Configuration`].
pub type PointId = usize;

/// A displacement or location in up to three dimensions.
///
/// Coordinates beyond the active dimension are kept at zero so that
/// arithmetic never has to branch on `d`.
pub type Vector = [f64; MAX_DIM];

/// A location in `d`-dimensional space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    coords: Vector,
}

impl Position {
    /// Builds a position from up to three coordinates.
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("position", format!("non-finite coordinate in {coords:?}")));
        }
        let mut out = [0.0; MAX_DIM];
        out[..coords.len()].copy_from_slice(coords);
        Ok(Self { coords: out })
    }

    pub(crate) const fn from_array(coords: Vector) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    pub fn coord(&self, axis: usize) -> f64 {
        self.coords[axis]
    }

    /// The leading `dim` coordinates.
    pub fn slice(&self, dim: usize) -> &[f64] {
        &self.coords[..dim]
    }

    pub(crate) fn offset(&self, v: &Vector) -> Position {
        Position::from_array([self.coords[0] + v[0], self.coords[1] + v[1], self.coords[2] + v[2]])
    }

    /// Lexicographic order on coordinates; the tie-breaker for nearest
    /// neighbour structures.
    pub fn lex_cmp(&self, other: &Position) -> Ordering {
        for (a, b) in self.coords.iter().zip(other.coords.iter()) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

/// A position with an optional non-negative mark (e.g. a ball radius).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub pos: Position,
    pub mark: Option<f64>,
}

impl MarkedPoint {
    pub fn new(pos: Position, mark: Option<f64>) -> Result<Self> {
        if let Some(m) = mark {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::invalid("mark", format!("must be finite and >= 0, got {m}")));
            }
        }
        Ok(Self { pos, mark })
    }

    pub fn unmarked(pos: Position) -> Self {
        Self { pos, mark: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Minimum-image torus metric.
    #[default]
    Periodic,
    /// Plain Euclidean metric inside the box.
    Free,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::Free => f.write_str("free"),
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "free" => Ok(Boundary::Free),
            other => Err(Error::invalid("boundary", format!("unknown boundary mode `{other}`"))),
        }
    }
}

/// The box `[0, side)^dim` with a boundary mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    side: f64,
    dim: usize,
    boundary: Boundary,
}

impl Window {
    pub fn new(side: f64, dim: usize, boundary: Boundary) -> Result<Self> {
        check_dim(dim)?;
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::invalid("side", format!("must be finite and > 0, got {side}")));
        }
        Ok(Self { side, dim, boundary })
    }

    pub fn periodic(side: f64, dim: usize) -> Result<Self> {
        Self::new(side, dim, Boundary::Periodic)
    }

    pub fn free(side: f64, dim: usize) -> Result<Self> {
        Self::new(side, dim, Boundary::Free)
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn contains(&self, p: &Position) -> bool {
        p.coords[..self.dim].iter().all(|&c| (0.0..self.side).contains(&c))
            && p.coords[self.dim..].iter().all(|&c| c == 0.0)
    }

    /// Maps a position back into `[0, side)^d` (periodic) or returns `None`
    /// when it leaves a free-boundary window.
    pub fn wrap(&self, p: &Position) -> Option<Position> {
        match self.boundary {
            Boundary::Free => self.contains(p).then_some(*p),
            Boundary::Periodic => {
                let mut c = p.coords;
                for x in c.iter_mut().take(self.dim) {
                    *x = x.rem_euclid(self.side);
                    // rem_euclid can round up to exactly `side`
                    if *x >= self.side {
                        *x = 0.0;
                    }
                }
                Some(Position::from_array(c))
            }
        }
    }

    /// Vector from `a` to `b`, using the minimum image under periodic boundary.
    pub fn displacement(&self, a: &Position, b: &Position) -> Vector {
        let mut v = [0.0; MAX_DIM];
        for (axis, out) in v.iter_mut().enumerate().take(self.dim) {
            let mut delta = b.coords[axis] - a.coords[axis];
            if self.boundary == Boundary::Periodic {
                delta -= self.side * (delta / self.side).round();
            }
            *out = delta;
        }
        v
    }

    pub fn distance(&self, a: &Position, b: &Position) -> f64 {
        norm(&self.displacement(a, b))
    }

    /// Largest distance that can separate two points of the window.
    pub fn max_distance(&self) -> f64 {
        let diag = self.side * (self.dim as f64).sqrt();
        match self.boundary {
            Boundary::Free => diag,
            Boundary::Periodic => 0.5 * diag,
        }
    }
}

/// Distance between two positions in `window`.
pub fn distance(window: &Window, a: &Position, b: &Position) -> f64 {
    window.distance(a, b)
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

pub(crate) fn norm(v: &Vector) -> f64 {
    norm_sq(v).sqrt()
}

pub(crate) fn norm_sq(v: &Vector) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

/// Volume of the unit ball in dimension `d`, including the degenerate `d = 0`.
pub(crate) fn unit_ball_volume(d: usize) -> Result<f64> {
    match d {
        0 => Ok(1.0),
        1 => Ok(2.0),
        2 => Ok(PI),
        3 => Ok(4.0 * PI / 3.0),
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// Volume `pi^{d/2} r^d / Gamma(d/2 + 1)` of a ball of radius `r` in `R^d`.
pub fn ball_volume(d: usize, r: f64) -> Result<f64> {
    check_dim(d)?;
    if !(r >= 0.0) {
        return Err(Error::invalid("radius", format!("must be >= 0, got {r}")));
    }
    Ok(unit_ball_volume(d)? * r.powi(d as i32))
}

/// Surface measure of the sphere of radius `r` in `R^d`.
pub(crate) fn sphere_area(d: usize, r: f64) -> Result<f64> {
    Ok(d as f64 * unit_ball_volume(d)? * r.powi(d as i32 - 1))
}
