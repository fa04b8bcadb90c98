use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, Configuration, PointId, Position, Vector};

/// Energy assigned to a single Voronoi cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellFunctional {
    /// `min(|C|, K)`: increasing, sub-additive and controlled by the volume.
    #[default]
    CappedVolume,
}

/// Voronoi Gibbs model with energy `H(gamma) = sum_y Phi(C(y, gamma))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoronoiSpec {
    pub z: f64,
    pub beta: f64,
    /// Volume cap `K`.
    pub cap: f64,
    #[serde(default)]
    pub functional: CellFunctional,
}

/// Which constraint produced an edge (or end point) of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    Boundary,
    Point(PointId),
    Inserted,
}

/// A Voronoi cell in coordinates relative to its centre.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCell {
    pub volume: f64,
    /// Largest distance from the centre to a vertex.
    pub radius: f64,
    /// Voronoi neighbours, sorted and deduplicated.
    pub neighbors: Vec<PointId>,
    /// Polygon vertices in counter-clockwise order (d = 2) or the two end
    /// points `[lo, 0], [hi, 0]` of the interval (d = 1).
    pub vertices: Vec<[f64; 2]>,
}

/// Cells touched by inserting a point.
#[derive(Debug, Clone)]
pub struct VoronoiInsertion {
    /// Cell of the new point in `gamma ∪ {x}`.
    pub cell: VoronoiCell,
    /// For each neighbour `y`: `(y, C(y, gamma), C(y, gamma ∪ {x}))`.
    pub changed: Vec<(PointId, VoronoiCell, VoronoiCell)>,
}

impl VoronoiInsertion {
    /// `sum_y |C(y, gamma)| - |C(y, gamma ∪ {x})|`, the volume the
    /// neighbours give up to the new cell.
    pub fn released_volume(&self) -> f64 {
        self.changed.iter().map(|(_, old, new)| old.volume - new.volume).sum()
    }
}

struct Candidate {
    v: Vector,
    dist: f64,
    side: Side,
}

impl VoronoiSpec {
    pub fn new(z: f64, beta: f64, cap: f64) -> Self {
        Self { z, beta, cap, functional: CellFunctional::CappedVolume }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        super::check_activity(self.z, self.beta)?;
        if dim > 2 {
            return Err(Error::invalid("dim", "voronoi model supports d = 1 or d = 2"));
        }
        if !(self.cap > 0.0 && self.cap.is_finite()) {
            return Err(Error::invalid("cap", format!("must be finite and > 0, got {}", self.cap)));
        }
        Ok(())
    }

    pub fn phi(&self, volume: f64) -> f64 {
        match self.functional {
            CellFunctional::CappedVolume => volume.min(self.cap),
        }
    }

    /// `Phi(C(x, gamma ∪ {x})) + sum_{y ~ x} [Phi(C(y, gamma ∪ {x})) - Phi(C(y, gamma))]`.
    pub fn local_energy(&self, x: &Position, config: &Configuration) -> Result<f64> {
        let ins = insertion(x, config)?;
        let mut h = self.phi(ins.cell.volume);
        for (_, old, new) in &ins.changed {
            h += self.phi(new.volume) - self.phi(old.volume);
        }
        Ok(h)
    }

    pub fn total_energy(&self, config: &Configuration) -> Result<f64> {
        let mut sum = 0.0;
        for (id, p) in config.points().iter().enumerate() {
            sum += self.phi(cell_of(&p.pos, config, Some(id), None)?.volume);
        }
        Ok(sum)
    }
}

/// Voronoi cell of `x` with respect to `config ∪ {x}`.
///
/// Free windows clip the cell to the window; periodic windows use the torus
/// metric, so a lone point owns the whole torus.
pub fn voronoi_cell(x: &Position, config: &Configuration) -> Result<VoronoiCell> {
    cell_of(x, config, None, None)
}

/// Cell of `x` together with the old and new cells of each of its neighbours.
pub fn insertion(x: &Position, config: &Configuration) -> Result<VoronoiInsertion> {
    if config.contains_position(x) {
        return Err(Error::DuplicatePosition(x.slice(config.window().dim()).to_vec()));
    }
    let cell = cell_of(x, config, None, None)?;
    let mut changed = Vec::with_capacity(cell.neighbors.len());
    for &id in &cell.neighbors {
        let y = config.points()[id].pos;
        let old = cell_of(&y, config, Some(id), None)?;
        let new = cell_of(&y, config, Some(id), Some(x))?;
        changed.push((id, old, new));
    }
    Ok(VoronoiInsertion { cell, changed })
}

/// Distance from `x` beyond which adding a point cannot change the local
/// energy of `x`.
pub fn stabilization_radius(x: &Position, config: &Configuration) -> Result<f64> {
    let ins = insertion(x, config)?;
    let w = config.window();
    let mut r = 2.0 * ins.cell.radius;
    for (id, old, _) in &ins.changed {
        r = r.max(w.distance(x, &config.points()[*id].pos) + 2.0 * old.radius);
    }
    Ok(r)
}

/// Cell of `center` against the points of `config` other than `exclude`,
/// plus the optional extra point.
pub(crate) fn cell_of(
    center: &Position,
    config: &Configuration,
    exclude: Option<PointId>,
    extra: Option<&Position>,
) -> Result<VoronoiCell> {
    let w = config.window();
    let dim = w.dim();
    if dim > 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let side = w.side();
    // once every relevant site is included the search can stop
    let limit = if w.is_periodic() { side * (dim as f64).sqrt() } else { w.max_distance() };
    let n = config.len() + usize::from(extra.is_some());
    let mut reach = 4.0 * (w.volume() / (n + 1) as f64).powf(1.0 / dim as f64);
    loop {
        let mut cands = gather(center, config, exclude, extra, reach);
        cands.sort_by(|a, b| {
            a.dist.total_cmp(&b.dist).then(a.side.cmp(&b.side)).then_with(|| a.v.partial_cmp(&b.v).expect("finite"))
        });
        let cell = if dim == 1 { clip_interval(center, config, &cands) } else { clip_polygon(center, config, &cands) };
        if 2.0 * cell.radius <= reach || reach >= limit {
            return Ok(cell);
        }
        reach *= 2.0;
    }
}

fn gather(
    center: &Position,
    config: &Configuration,
    exclude: Option<PointId>,
    extra: Option<&Position>,
    reach: f64,
) -> Vec<Candidate> {
    let w = config.window();
    let side = w.side();
    let dim = w.dim();
    let mut out = Vec::new();
    if w.is_periodic() && reach >= side / 2.0 {
        // images beyond the minimum one can matter for large cells
        let mut push_images = |v: Vector, s: Side| {
            for_each_shift(dim, |shift| {
                let mut u = v;
                for i in 0..dim {
                    u[i] += side * shift[i];
                }
                let dist = norm(&u);
                if dist <= reach {
                    out.push(Candidate { v: u, dist, side: s });
                }
            });
        };
        for (id, p) in config.points().iter().enumerate() {
            if Some(id) != exclude {
                push_images(w.displacement(center, &p.pos), Side::Point(id));
            }
        }
        if let Some(e) = extra {
            push_images(w.displacement(center, e), Side::Inserted);
        }
    } else {
        config.for_each_within(center, reach, |id, dist, v| {
            if Some(id) != exclude {
                out.push(Candidate { v: *v, dist, side: Side::Point(id) });
            }
        });
        if let Some(e) = extra {
            let v = w.displacement(center, e);
            let dist = norm(&v);
            if dist <= reach {
                out.push(Candidate { v, dist, side: Side::Inserted });
            }
        }
    }
    out
}

fn for_each_shift(dim: usize, mut f: impl FnMut([f64; 2])) {
    if dim == 1 {
        for a in [-1.0, 0.0, 1.0] {
            f([a, 0.0]);
        }
    } else {
        for a in [-1.0, 0.0, 1.0] {
            for b in [-1.0, 0.0, 1.0] {
                f([a, b]);
            }
        }
    }
}

fn initial_box(center: &Position, config: &Configuration) -> [(f64, f64); 2] {
    let w = config.window();
    let l = w.side();
    let mut b = [(0.0, 0.0); 2];
    for (i, bi) in b.iter_mut().enumerate().take(w.dim()) {
        *bi = if w.is_periodic() { (-l / 2.0, l / 2.0) } else { (-center.coord(i), l - center.coord(i)) };
    }
    b
}

fn finish(neighbors: impl Iterator<Item = Side>, volume: f64, radius: f64, vertices: Vec<[f64; 2]>) -> VoronoiCell {
    let mut ids: Vec<PointId> = neighbors
        .filter_map(|s| match s {
            Side::Point(id) => Some(id),
            _ => None,
        })
        .collect();
    ids.sort_unstable();
    ids.dedup();
    VoronoiCell { volume, radius, neighbors: ids, vertices }
}

fn clip_interval(center: &Position, config: &Configuration, cands: &[Candidate]) -> VoronoiCell {
    let [(mut lo, mut hi), _] = initial_box(center, config);
    let (mut lo_side, mut hi_side) = (Side::Boundary, Side::Boundary);
    for c in cands {
        let half = c.v[0] / 2.0;
        if c.dist / 2.0 > lo.abs().max(hi.abs()) {
            break;
        }
        if half > 0.0 && half < hi {
            hi = half;
            hi_side = c.side;
        } else if half < 0.0 && half > lo {
            lo = half;
            lo_side = c.side;
        }
    }
    finish([lo_side, hi_side].into_iter(), hi - lo, lo.abs().max(hi.abs()), vec![[lo, 0.0], [hi, 0.0]])
}

fn clip_polygon(center: &Position, config: &Configuration, cands: &[Candidate]) -> VoronoiCell {
    let [(x0, x1), (y0, y1)] = initial_box(center, config);
    // each vertex carries the side of the edge leaving it
    let mut poly = vec![
        ([x0, y0], Side::Boundary),
        ([x1, y0], Side::Boundary),
        ([x1, y1], Side::Boundary),
        ([x0, y1], Side::Boundary),
    ];
    let mut scratch = Vec::with_capacity(16);
    let mut radius = max_radius(&poly);
    for c in cands {
        if c.dist / 2.0 >= radius {
            break;
        }
        clip_half_plane(&poly, [c.v[0], c.v[1]], c.side, &mut scratch);
        std::mem::swap(&mut poly, &mut scratch);
        radius = max_radius(&poly);
    }
    let n = poly.len();
    let mut area2 = 0.0;
    for i in 0..n {
        let (a, b) = (poly[i].0, poly[(i + 1) % n].0);
        area2 += a[0] * b[1] - a[1] * b[0];
    }
    let sides = (0..n)
        .filter(|&i| {
            let (a, b) = (poly[i].0, poly[(i + 1) % n].0);
            a != b
        })
        .map(|i| poly[i].1);
    let sides: Vec<Side> = sides.collect();
    let vertices = poly.iter().map(|p| p.0).collect();
    finish(sides.into_iter(), area2 / 2.0, radius, vertices)
}

fn max_radius(poly: &[([f64; 2], Side)]) -> f64 {
    poly.iter().fold(0.0, |m, (p, _)| m.max(p[0].hypot(p[1])))
}

/// Keeps `{p : p·n <= |n|^2 / 2}`, the half of the plane closer to the
/// origin than to `n`.
fn clip_half_plane(poly: &[([f64; 2], Side)], n: [f64; 2], side: Side, out: &mut Vec<([f64; 2], Side)>) {
    out.clear();
    let c = (n[0] * n[0] + n[1] * n[1]) / 2.0;
    let f = |p: &[f64; 2]| p[0] * n[0] + p[1] * n[1] - c;
    let len = poly.len();
    for i in 0..len {
        let (a, la) = poly[i];
        let b = poly[(i + 1) % len].0;
        let (fa, fb) = (f(&a), f(&b));
        let cross = |fa: f64, fb: f64| {
            let t = fa / (fa - fb);
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        };
        if fa <= 0.0 {
            out.push((a, la));
            if fb > 0.0 {
                out.push((cross(fa, fb), side));
            }
        } else if fb <= 0.0 {
            out.push((cross(fa, fb), la));
        }
    }
}

/// Lower and upper bounds `z e^{-beta K}` and `z e^{beta K} e^{beta |C|}` on the
/// Papangelou intensity, for the capped-volume functional.
pub fn voronoi_envelope(z: f64, beta: f64, cap: f64, cell_volume: f64) -> (f64, f64) {
    (z * (-beta * cap).exp(), z * (beta * cap).exp() * (beta * cell_volume).exp())
}

/// Random point of the window, used by tests.
#[cfg(test)]
pub(crate) fn random_point<R: rand::Rng>(rng: &mut R, config: &Configuration) -> crate::geometry::MarkedPoint {
    let w = config.window();
    let mut c = [0.0; 3];
    for ci in c.iter_mut().take(w.dim()) {
        *ci = rng.random_range(0.0..w.side());
    }
    crate::geometry::MarkedPoint::unmarked(Position::from_array(c))
}
