use super::grid::Grid;
use super::{norm, MarkedPoint, PointId, Position, Vector, Window};
use crate::error::{Error, Result};

/// A single birth or death applied to a [`Configuration`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta {
    Birth(MarkedPoint),
    Death(PointId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaOutcome {
    /// The new point received this id.
    Born(PointId),
    /// The removed point. The former last point now carries its id.
    Died(MarkedPoint),
}

/// A finite point set in a window, indexed by a uniform grid.
///
/// Point ids are dense indices `0..len()`. Removing a point moves the last
/// point into the vacated id, so ids are stable only between deaths.
#[derive(Debug, Clone)]
pub struct Configuration {
    window: Window,
    marked: bool,
    points: Vec<MarkedPoint>,
    grid: Grid,
    cell_hint: f64,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.window == other.window && self.marked == other.marked && self.points == other.points
    }
}

impl Configuration {
    /// Empty configuration. `cell_hint` is the intended grid cell side,
    /// usually the interaction cutoff; non-positive values fall back to
    /// `side / 16`.
    pub fn new(window: Window, marked: bool, cell_hint: f64) -> Self {
        Self { window, marked, points: Vec::new(), grid: Grid::new(&window, cell_hint), cell_hint }
    }

    pub fn from_points(
        window: Window,
        marked: bool,
        cell_hint: f64,
        points: impl IntoIterator<Item = MarkedPoint>,
    ) -> Result<Self> {
        let mut config = Self::new(window, marked, cell_hint);
        for p in points {
            config.insert(p)?;
        }
        Ok(config)
    }

    /// Same points, re-indexed with a different cell size.
    pub fn with_cell_hint(&self, cell_hint: f64) -> Self {
        let mut grid = Grid::new(&self.window, cell_hint);
        for (id, p) in self.points.iter().enumerate() {
            grid.insert(id, &p.pos);
        }
        Self { window: self.window, marked: self.marked, points: self.points.clone(), grid, cell_hint }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn is_marked(&self) -> bool {
        self.marked
    }

    pub fn cell_hint(&self) -> f64 {
        self.cell_hint
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }

    pub fn point(&self, id: PointId) -> Result<&MarkedPoint> {
        self.points.get(id).ok_or(Error::InvalidPointId(id))
    }

    pub fn positions(&self) -> impl Iterator<Item = &Position> + '_ {
        self.points.iter().map(|p| &p.pos)
    }

    pub fn contains_position(&self, x: &Position) -> bool {
        let mut found = false;
        self.grid.visit_candidates(x, 0.0, |id| {
            found |= self.points[id].pos == *x;
        });
        found
    }

    fn validate_birth(&self, p: &MarkedPoint) -> Result<()> {
        if !self.window.contains(&p.pos) {
            return Err(Error::OutsideWindow(p.pos.slice(self.window.dim()).to_vec()));
        }
        if p.mark.is_some() != self.marked {
            return Err(Error::MarkMismatch);
        }
        if self.contains_position(&p.pos) {
            return Err(Error::DuplicatePosition(p.pos.slice(self.window.dim()).to_vec()));
        }
        Ok(())
    }

    /// Adds a point and returns its id.
    pub fn insert(&mut self, p: MarkedPoint) -> Result<PointId> {
        self.validate_birth(&p)?;
        let id = self.points.len();
        self.grid.insert(id, &p.pos);
        self.points.push(p);
        Ok(id)
    }

    /// Removes a point; the last point takes over the freed id.
    pub fn remove(&mut self, id: PointId) -> Result<MarkedPoint> {
        let removed = *self.point(id)?;
        let last = self.points.len() - 1;
        self.grid.remove(id, &removed.pos);
        if id != last {
            let moved = self.points[last].pos;
            self.grid.relabel(last, id, &moved);
        }
        self.points.swap_remove(id);
        Ok(removed)
    }

    /// Inserts `p` under id `id`, moving the point holding `id` to the end.
    /// Exactly undoes `remove(id)`.
    pub(crate) fn insert_at(&mut self, id: PointId, p: MarkedPoint) -> Result<()> {
        let last = self.insert(p)?;
        if id > last {
            self.remove(last)?;
            return Err(Error::InvalidPointId(id));
        }
        if id != last {
            let (pa, pb) = (self.points[id].pos, self.points[last].pos);
            let tmp = u32::MAX as usize;
            self.grid.relabel(id, tmp, &pa);
            self.grid.relabel(last, id, &pb);
            self.grid.relabel(tmp, last, &pa);
            self.points.swap(id, last);
        }
        Ok(())
    }

    pub fn apply(&mut self, delta: Delta) -> Result<DeltaOutcome> {
        match delta {
            Delta::Birth(p) => self.insert(p).map(DeltaOutcome::Born),
            Delta::Death(id) => self.remove(id).map(DeltaOutcome::Died),
        }
    }

    /// Visits every point within distance `r` of `x` with its id, distance
    /// and displacement from `x`. Visiting order follows the grid, not ids.
    pub(crate) fn for_each_within(&self, x: &Position, r: f64, mut f: impl FnMut(PointId, f64, &Vector)) {
        let mut visit = |id: PointId| {
            let v = self.window.displacement(x, &self.points[id].pos);
            let dist = norm(&v);
            if dist <= r {
                f(id, dist, &v);
            }
        };
        if r >= self.window.max_distance() {
            (0..self.points.len()).for_each(&mut visit);
        } else {
            self.grid.visit_candidates(x, r, visit);
        }
    }

    /// Ids of all points within distance `r` of `x`, in increasing id order.
    pub fn neighbors_within(&self, x: &Position, r: f64) -> Vec<PointId> {
        let mut out = Vec::new();
        self.for_each_within(x, r, |id, _, _| out.push(id));
        out.sort_unstable();
        out
    }

    /// True when the grid index equals one rebuilt from the point list.
    pub fn index_is_consistent(&self) -> bool {
        let rebuilt = self.with_cell_hint(self.cell_hint);
        self.grid.canonical() == rebuilt.grid.canonical()
    }

    /// Equality of the underlying point sets, ignoring ids.
    pub fn same_point_set(&self, other: &Self) -> bool {
        if self.window != other.window || self.len() != other.len() {
            return false;
        }
        let sorted = |c: &Self| {
            let mut pts = c.points.clone();
            pts.sort_by(|a, b| a.pos.lex_cmp(&b.pos));
            pts
        };
        sorted(self) == sorted(other)
    }

    /// The configuration shifted by `u` (wrapped; periodic windows only).
    pub fn translated(&self, u: &Vector) -> Result<Self> {
        if !self.window.is_periodic() {
            return Err(Error::invalid("boundary", "translation requires a periodic window"));
        }
        let pts = self
            .points
            .iter()
            .map(|p| MarkedPoint { pos: self.window.wrap(&p.pos.offset(u)).expect("periodic wrap"), mark: p.mark });
        Self::from_points(self.window, self.marked, self.cell_hint, pts)
    }
}
