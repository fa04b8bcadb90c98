use serde::{Deserialize, Serialize};

use super::SampleSet;
use crate::error::{Error, Result};
use crate::geometry::{Configuration, Window};
use crate::stats;

/// Occupied/empty flag of every cube of side `s` in a grid anchored at the
/// origin. Cell `(i0, i1, i2)` is stored at `i0 + n (i1 + n i2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyField {
    pub cell_side: f64,
    pub per_axis: usize,
    pub dim: usize,
    pub cells: Vec<bool>,
}

impl OccupancyField {
    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }
}

/// Number of cells of side `s` per axis; `L / s` must be an integer to 1e-9.
pub(crate) fn cells_per_axis(window: &Window, s: f64) -> Result<usize> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid("cell_side", format!("must be finite and > 0, got {s}")));
    }
    let q = window.side() / s;
    let n = q.round();
    if n < 1.0 || (q - n).abs() > 1e-9 * q.max(1.0) {
        return Err(Error::NotDivisible { side: window.side(), cell: s });
    }
    Ok(n as usize)
}

pub fn occupancy_field(config: &Configuration, s: f64) -> Result<OccupancyField> {
    let w = config.window();
    let n = cells_per_axis(w, s)?;
    let d = w.dim();
    let mut cells = vec![false; n.pow(d as u32)];
    for p in config.points() {
        let mut idx = 0;
        for axis in (0..d).rev() {
            let k = ((p.pos.coord(axis) / s).floor() as usize).min(n - 1);
            idx = idx * n + k;
        }
        cells[idx] = true;
    }
    Ok(OccupancyField { cell_side: s, per_axis: n, dim: d, cells })
}

/// Per-cell occupancy frequencies compared with a Bernoulli floor `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationCheck {
    pub cell_side: f64,
    pub p: f64,
    /// Smallest empirical occupancy frequency over cells.
    pub min_occupancy: f64,
    /// Smallest one-sided lower confidence bound over cells.
    pub lower_bound: f64,
    pub confidence: f64,
    /// Binomial standard error of the least occupied cell.
    pub se: f64,
    pub worst_cell: usize,
    pub n_samples: usize,
    pub passes: bool,
}

/// Passes when every cell's Wilson lower bound (one-sided, `confidence`)
/// on `P(occupied)` is at least `p`.
pub fn domination_check(samples: &SampleSet, s: f64, p: f64, confidence: f64) -> Result<DominationCheck> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
    }
    if !(confidence > 0.5 && confidence < 1.0) {
        return Err(Error::invalid("confidence", format!("must lie in (0.5, 1), got {confidence}")));
    }
    let snaps = samples.snapshots();
    let mut hits: Vec<u64> = Vec::new();
    for c in &snaps {
        let f = occupancy_field(c, s)?;
        if hits.is_empty() {
            hits = vec![0; f.cells.len()];
        }
        for (h, &b) in hits.iter_mut().zip(&f.cells) {
            *h += b as u64;
        }
    }
    let n = snaps.len() as u64;
    let (worst_cell, &worst) =
        hits.iter().enumerate().min_by_key(|(_, h)| **h).ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    let min_occupancy = worst as f64 / n as f64;
    let lower_bound = hits.iter().map(|&h| stats::wilson_lower(h, n, confidence)).fold(f64::INFINITY, f64::min);
    Ok(DominationCheck {
        cell_side: s,
        p,
        min_occupancy,
        lower_bound,
        confidence,
        se: (min_occupancy * (1.0 - min_occupancy) / n as f64).sqrt(),
        worst_cell,
        n_samples: snaps.len(),
        passes: lower_bound >= p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{count_in_window, SubBox};
    use crate::geometry::{MarkedPoint, Position};
    use crate::models::MarkDistribution;
    use crate::sampler::{chain_rng, sample_poisson};

    #[test]
    fn trivial_fields() {
        let w = Window::periodic(4.0, 2).unwrap();
        let empty = Configuration::new(w, false, 1.0);
        let f = occupancy_field(&empty, 1.0).unwrap();
        assert_eq!((f.cells.len(), f.occupied()), (16, 0));
        let centres = (0..4).flat_map(|i| (0..4).map(move |j| [i as f64 + 0.5, j as f64 + 0.5]));
        let full = Configuration::from_points(
            w,
            false,
            1.0,
            centres.map(|c| MarkedPoint::unmarked(Position::new(&c).unwrap())),
        )
        .unwrap();
        assert_eq!(occupancy_field(&full, 1.0).unwrap().occupied(), 16);
        assert!(matches!(occupancy_field(&full, 1.5), Err(Error::NotDivisible { .. })));
        assert!(occupancy_field(&full, 4.0 / 3.0).is_ok());
    }

    #[test]
    fn field_matches_cell_counts() {
        for dim in 1..=3 {
            let w = Window::free(3.0, dim).unwrap();
            let mut rng = chain_rng(21, dim as u64);
            let c = sample_poisson(&w, 1.0, MarkDistribution::Unmarked, 0.5, &mut rng).unwrap();
            let f = occupancy_field(&c, 1.0).unwrap();
            for (k, &occ) in f.cells.iter().enumerate() {
                let mut lo = [0.0; 3];
                let mut r = k;
                for l in lo.iter_mut().take(dim) {
                    *l = (r % 3) as f64;
                    r /= 3;
                }
                let n = count_in_window(&c, &SubBox { lo, side: 1.0 }).unwrap();
                assert_eq!(occ, n >= 1, "dim {dim} cell {k}");
            }
        }
    }

    #[test]
    fn poisson_void_probability_dominates() {
        let w = Window::periodic(4.0, 2).unwrap();
        let mut rng = chain_rng(8, 0);
        let snaps =
            (0..500).map(|_| sample_poisson(&w, 1.0, MarkDistribution::Unmarked, 0.5, &mut rng).unwrap()).collect();
        let s = SampleSet::new(vec![snaps]).unwrap();
        let occ = 1.0 - (-1.0f64).exp();
        let d = domination_check(&s, 1.0, 0.5, 0.99).unwrap();
        assert!(d.passes && d.lower_bound <= occ + 0.1);
        assert!(!domination_check(&s, 1.0, 0.7, 0.99).unwrap().passes);
        let empty = SampleSet::new(vec![vec![Configuration::new(w, false, 1.0); 50]]).unwrap();
        let d = domination_check(&empty, 1.0, 1e-6, 0.99).unwrap();
        assert!(!d.passes && d.min_occupancy == 0.0);
    }
}
