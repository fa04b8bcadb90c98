use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::potential::TabulatedPotential;
use crate::error::{Error, Result};
use crate::geometry::{Configuration, PointId, Position, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialPotential {
    /// Bounded table, linearly interpolated.
    Tabulated(TabulatedPotential),
    /// `r^{2-d}`, available for d = 3.
    Coulomb,
    /// `r^{-s}`: decreasing and non-negative.
    InversePower { s: f64 },
}

/// k-nearest-neighbour model:
/// `H(gamma) = sum_{y in gamma} sum_{v in V^k(y, gamma)} Phi(|y - v|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnSpec {
    pub z: f64,
    pub beta: f64,
    pub k: usize,
    pub potential: RadialPotential,
    /// Bound on `#{y : x in V^k(y, gamma ∪ {x})} / k`, used by the intensity
    /// envelope of bounded potentials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_d: Option<f64>,
}

/// Local energy of an insertion together with the number of points whose
/// neighbourhood it changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnInsertion {
    pub energy: f64,
    pub affected: usize,
}

impl KnnSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        super::check_activity(self.z, self.beta)?;
        if self.k == 0 {
            return Err(Error::invalid("k", "must be >= 1"));
        }
        match &self.potential {
            RadialPotential::Tabulated(t) => {
                t.validate()?;
                if t.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("tabulated", "knn tables must be bounded"));
                }
            }
            RadialPotential::Coulomb => {
                if dim < 3 {
                    return Err(Error::invalid("coulomb", format!("requires d >= 3, got d = {dim}")));
                }
            }
            RadialPotential::InversePower { s } => {
                if !(*s > 0.0 && s.is_finite()) {
                    return Err(Error::invalid("s", format!("must be finite and > 0, got {s}")));
                }
            }
        }
        if let Some(n) = self.n_d {
            if !(n >= 1.0) {
                return Err(Error::invalid("n_d", format!("must be >= 1, got {n}")));
            }
        }
        Ok(())
    }

    pub fn phi(&self, r: f64, dim: usize) -> Result<f64> {
        match &self.potential {
            RadialPotential::Tabulated(t) => Ok(t.eval(r)),
            RadialPotential::Coulomb | RadialPotential::InversePower { .. } if r == 0.0 => {
                Err(Error::SingularPotential)
            }
            RadialPotential::Coulomb => Ok(r.powf(2.0 - dim as f64)),
            RadialPotential::InversePower { s } => Ok(r.powf(-s)),
        }
    }

    /// `sup |Phi|`, when finite.
    pub fn phi_sup(&self) -> Option<f64> {
        match &self.potential {
            RadialPotential::Tabulated(t) => Some(t.sup_abs()),
            _ => None,
        }
    }

    pub fn local_energy(&self, x: &Position, config: &Configuration) -> Result<f64> {
        Ok(self.insertion(x, config)?.energy)
    }

    /// `sum_{v in V^k(x, gamma)} Phi(x - v)
    ///  + sum_{y : x in V^k(y, gamma ∪ {x})} [Phi(y - x) - Phi(y - v^k(y, gamma))]`,
    /// where the last term is dropped when `y` has fewer than `k` neighbours.
    pub fn insertion(&self, x: &Position, config: &Configuration) -> Result<KnnInsertion> {
        let w = config.window();
        let dim = w.dim();
        if config.contains_position(x) {
            return Err(Error::DuplicatePosition(x.slice(dim).to_vec()));
        }
        let mut energy = 0.0;
        for (dist, _) in nearest(config, x, self.k, None) {
            energy += self.phi(dist, dim)?;
        }
        let mut affected = 0;
        for y in reverse_candidates(config, x, self.k) {
            let yp = &config.points()[y].pos;
            let dyx = w.distance(yp, x);
            let nbrs = nearest(config, yp, self.k, Some(y));
            if nbrs.len() < self.k {
                affected += 1;
                energy += self.phi(dyx, dim)?;
                continue;
            }
            let (dk, vk) = nbrs[self.k - 1];
            if order(dyx, x, dk, &config.points()[vk].pos) == Ordering::Less {
                affected += 1;
                energy += self.phi(dyx, dim)? - self.phi(dk, dim)?;
            }
        }
        Ok(KnnInsertion { energy, affected })
    }

    pub fn total_energy(&self, config: &Configuration) -> Result<f64> {
        let dim = config.window().dim();
        let mut sum = 0.0;
        for (id, p) in config.points().iter().enumerate() {
            for (dist, _) in nearest(config, &p.pos, self.k, Some(id)) {
                sum += self.phi(dist, dim)?;
            }
        }
        Ok(sum)
    }
}

/// Symmetric bounds `z e^{∓beta (1 + 2 N_d) k sup|Phi|}` on the Papangelou
/// intensity of a bounded kNN model.
pub fn knn_envelope(z: f64, beta: f64, k: usize, phi_sup: f64, n_d: f64) -> (f64, f64) {
    let e = beta * (1.0 + 2.0 * n_d) * k as f64 * phi_sup;
    (z * (-e).exp(), z * e.exp())
}

/// Ordering of neighbours: by distance, ties broken lexicographically.
fn order(da: f64, a: &Position, db: f64, b: &Position) -> Ordering {
    da.total_cmp(&db).then_with(|| a.lex_cmp(b))
}

/// The `min(k, n)` nearest points of `x`, ordered by distance with
/// lexicographic tie-breaking.
pub fn knn_neighbors(x: &Position, config: &Configuration, k: usize) -> Vec<PointId> {
    nearest(config, x, k, None).into_iter().map(|(_, id)| id).collect()
}

/// `(distance, id)` of the nearest points of `x`, skipping `exclude`.
pub(crate) fn nearest(config: &Configuration, x: &Position, k: usize, exclude: Option<PointId>) -> Vec<(f64, PointId)> {
    let w = config.window();
    let n = config.len() - usize::from(exclude.is_some());
    let want = k.min(n);
    if want == 0 {
        return Vec::new();
    }
    let mut r = (w.volume() * (k + 1) as f64 / n as f64).powf(1.0 / w.dim() as f64);
    let mut found = Vec::new();
    loop {
        found.clear();
        config.for_each_within(x, r, |id, dist, _| {
            if Some(id) != exclude {
                found.push((dist, id));
            }
        });
        if found.len() >= want || r >= w.max_distance() {
            break;
        }
        r *= 2.0;
    }
    let pts = config.points();
    found.sort_by(|a, b| order(a.0, &pts[a.1].pos, b.0, &pts[b.1].pos));
    found.truncate(want);
    found
}

/// Angular sector of a direction. Any two directions in one sector are at
/// most 60 degrees apart.
pub(crate) fn sector(v: &Vector, dim: usize) -> usize {
    match dim {
        1 => usize::from(v[0] < 0.0),
        2 => {
            let a = v[1].atan2(v[0]) + std::f64::consts::PI;
            ((a / (std::f64::consts::PI / 3.0)) as usize).min(5)
        }
        _ => {
            // cube faces, each split into a 3 x 3 grid
            let axis = (0..3).max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs())).expect("three axes");
            let m = v[axis].abs();
            let face = 2 * axis + usize::from(v[axis] < 0.0);
            let bin = |c: f64| {
                if m == 0.0 {
                    1
                } else {
                    (((c / m + 1.0) * 1.5) as usize).min(2)
                }
            };
            let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
            face * 9 + bin(v[b]) * 3 + bin(v[c])
        }
    }
}

pub(crate) fn sector_count(dim: usize) -> usize {
    match dim {
        1 => 2,
        2 => 6,
        _ => 54,
    }
}

/// Points `y` that could have `x` among their `k` nearest neighbours once
/// `x` is inserted.
///
/// If a sector around `x` holds `k` points strictly closer to `x` than `y`,
/// each of them is strictly closer to `y` than `x` is, so `y` is excluded.
/// The search radius doubles until every sector is settled.
pub(crate) fn reverse_candidates(config: &Configuration, x: &Position, k: usize) -> Vec<PointId> {
    let w = config.window();
    let dim = w.dim();
    let ns = sector_count(dim);
    let first = nearest(config, x, k + 1, None);
    let mut reach = match first.last() {
        Some(&(d, _)) if first.len() == k + 1 => 2.0 * d,
        _ => w.max_distance(),
    };
    let mut sectors: Vec<Vec<(f64, PointId)>> = vec![Vec::new(); ns];
    loop {
        sectors.iter_mut().for_each(Vec::clear);
        config.for_each_within(x, reach, |id, dist, v| sectors[sector(v, dim)].push((dist, id)));
        let complete = reach >= w.max_distance();
        let settled = complete || sectors.iter().all(|s| s.len() >= k);
        if settled {
            let mut out = Vec::new();
            for s in &mut sectors {
                s.sort_by(|a, b| a.0.total_cmp(&b.0));
                let cut = if s.len() >= k { s[k - 1].0 } else { f64::INFINITY };
                out.extend(s.iter().filter(|(d, _)| *d <= cut).map(|&(_, id)| id));
            }
            out.sort_unstable();
            return out;
        }
        reach *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Boundary, MarkedPoint, Window};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_config(rng: &mut ChaCha8Rng, w: Window, n: usize) -> Configuration {
        let mut c = Configuration::new(w, false, w.side() / 5.0);
        while c.len() < n {
            let p = random_pos(rng, &w);
            c.insert(MarkedPoint::unmarked(p)).unwrap();
        }
        c
    }

    fn random_pos(rng: &mut ChaCha8Rng, w: &Window) -> Position {
        let c: Vec<f64> = (0..w.dim()).map(|_| rng.random_range(0.0..w.side())).collect();
        Position::new(&c).unwrap()
    }

    fn table() -> RadialPotential {
        RadialPotential::Tabulated(TabulatedPotential::new(vec![0.0, 0.5, 1.0], vec![2.0, 1.0, 0.0]).unwrap())
    }

    #[test]
    fn single_neighbour_counts_both_directions() {
        let w = Window::periodic(4.0, 2).unwrap();
        let spec = KnnSpec { z: 1.0, beta: 1.0, k: 1, potential: table(), n_d: None };
        let y = MarkedPoint::unmarked(Position::new(&[1.0, 1.0]).unwrap());
        let c = Configuration::from_points(w, false, 1.0, [y]).unwrap();
        let x = Position::new(&[1.25, 1.0]).unwrap();
        // y had no neighbour before; now x and y are each other's nearest
        assert!((spec.local_energy(&x, &c).unwrap() - 3.0).abs() < 1e-15);
        let empty = Configuration::new(w, false, 1.0);
        assert_eq!(spec.local_energy(&x, &empty).unwrap(), 0.0);
    }

    #[test]
    fn ties_prefer_lexicographically_smaller() {
        let w = Window::free(4.0, 2).unwrap();
        let a = MarkedPoint::unmarked(Position::new(&[2.0, 3.0]).unwrap());
        let b = MarkedPoint::unmarked(Position::new(&[1.0, 2.0]).unwrap());
        let c = Configuration::from_points(w, false, 1.0, [a, b]).unwrap();
        let x = Position::new(&[2.0, 2.0]).unwrap();
        assert_eq!(knn_neighbors(&x, &c, 1), vec![1]);
        assert_eq!(knn_neighbors(&x, &c, 5), vec![1, 0]);
    }

    #[test]
    fn neighbours_match_full_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for boundary in [Boundary::Periodic, Boundary::Free] {
            let w = Window::new(5.0, 2, boundary).unwrap();
            let c = random_config(&mut rng, w, 200);
            for _ in 0..20 {
                let x = random_pos(&mut rng, &w);
                let mut all: Vec<(f64, PointId)> =
                    (0..c.len()).map(|i| (w.distance(&x, &c.points()[i].pos), i)).collect();
                all.sort_by(|a, b| a.0.total_cmp(&b.0));
                let expect: Vec<PointId> = all.iter().take(3).map(|p| p.1).collect();
                assert_eq!(knn_neighbors(&x, &c, 3), expect);
            }
        }
    }

    #[test]
    fn sectors_are_narrow() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for dim in [2, 3] {
            let mut by_sector: Vec<Vec<Vector>> = vec![Vec::new(); sector_count(dim)];
            for _ in 0..20_000 {
                let mut v = [0.0; 3];
                for vi in v.iter_mut().take(dim) {
                    *vi = rng.random_range(-1.0..1.0);
                }
                by_sector[sector(&v, dim)].push(v);
            }
            for s in &by_sector {
                assert!(!s.is_empty());
                for a in s.iter().take(150) {
                    for b in s.iter().take(150) {
                        let dot: f64 = (0..3).map(|i| a[i] * b[i]).sum();
                        let na: f64 = a.iter().map(|c| c * c).sum::<f64>().sqrt();
                        let nb: f64 = b.iter().map(|c| c * c).sum::<f64>().sqrt();
                        assert!(dot >= 0.5 * na * nb - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn local_energy_matches_global_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for (dim, potential) in
            [(2, table()), (3, RadialPotential::Coulomb), (2, RadialPotential::InversePower { s: 1.5 })]
        {
            for boundary in [Boundary::Periodic, Boundary::Free] {
                let w = Window::new(3.0, dim, boundary).unwrap();
                for k in 1..=3 {
                    let spec = KnnSpec { z: 1.0, beta: 1.0, k, potential: potential.clone(), n_d: None };
                    spec.validate(dim).unwrap();
                    for n in [0, 1, 2, 5, 40] {
                        let c = random_config(&mut rng, w, n);
                        let x = random_pos(&mut rng, &w);
                        let mut bigger = c.clone();
                        bigger.insert(MarkedPoint::unmarked(x)).unwrap();
                        let global = spec.total_energy(&bigger).unwrap() - spec.total_energy(&c).unwrap();
                        let local = spec.local_energy(&x, &c).unwrap();
                        assert!(
                            (global - local).abs() <= 1e-9 * global.abs().max(1.0),
                            "d={dim} k={k} n={n} {boundary:?}: {global} vs {local}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn coulomb_rejected_below_three_dimensions() {
        let spec = KnnSpec { z: 1.0, beta: 1.0, k: 1, potential: RadialPotential::Coulomb, n_d: None };
        assert!(spec.validate(2).is_err());
        assert!(spec.validate(3).is_ok());
    }
}
