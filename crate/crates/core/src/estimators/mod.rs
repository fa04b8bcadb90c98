//! Estimators computed from sampled configurations: variance curves,
//! structure factors, GNZ residuals, assumption diagnostics and occupancy.

mod occupancy;
mod probes;
mod report;

use std::f64::consts::PI;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Position, Window};
use crate::sampler::ChainRun;
use crate::stats;

pub use occupancy::{domination_check, occupancy_field, DominationCheck, OccupancyField};
pub use probes::{
    a1_moment, a2_profile, gnz_residual, intensity_moment, probe_intensities, A1Moment, A2Profile, A2Row, GnzResidual,
    ProbeOptions, TestFunction,
};
pub use report::{write_rows_csv, EstimateSummary};

/// Window fractions used when none are given.
pub const DEFAULT_FRACTIONS: [f64; 5] = [0.1, 0.2, 0.4, 0.6, 0.8];

/// Fewest snapshots accepted by [`variance_curve`].
pub const MIN_SAMPLES: usize = 30;

/// Target number of batches for batch-means standard errors.
const TARGET_BATCHES: usize = 20;

/// Snapshots grouped by the chain that produced them.
///
/// Every configuration is re-indexed on construction, so results do not
/// depend on whether snapshots come straight from a sampler or from files.
#[derive(Debug, Clone)]
pub struct SampleSet {
    window: Window,
    chains: Vec<Vec<Configuration>>,
}

impl SampleSet {
    pub fn new(chains: Vec<Vec<Configuration>>) -> Result<Self> {
        let window = *chains.iter().flatten().next().ok_or(Error::TooFewSamples { needed: 1, got: 0 })?.window();
        if chains.iter().flatten().any(|c| *c.window() != window) {
            return Err(Error::invalid("samples", "all snapshots must share one window"));
        }
        let chains = chains
            .into_iter()
            .filter(|c| !c.is_empty())
            .map(|c| c.iter().map(|s| s.with_cell_hint(s.cell_hint())).collect())
            .collect();
        Ok(Self { window, chains })
    }

    pub fn from_runs(runs: Vec<ChainRun>) -> Result<Self> {
        Self::new(runs.into_iter().map(|r| r.snapshots).collect())
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn chains(&self) -> &[Vec<Configuration>] {
        &self.chains
    }

    pub fn len(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshots in chain order.
    pub fn snapshots(&self) -> Vec<&Configuration> {
        self.chains.iter().flatten().collect()
    }

    /// Contiguous index ranges of the snapshot list used as batches: one per
    /// chain when there are enough chains, otherwise every chain is cut into
    /// equal consecutive pieces.
    pub(crate) fn batches(&self) -> Vec<Range<usize>> {
        let per_chain =
            if self.chains.len() >= TARGET_BATCHES / 2 { 1 } else { TARGET_BATCHES.div_ceil(self.chains.len()) };
        let mut out = Vec::new();
        let mut start = 0;
        for chain in &self.chains {
            let n = chain.len();
            let pieces = per_chain.min(n).max(1);
            let m = n / pieces;
            for b in 0..pieces {
                let end = if b + 1 == pieces { n } else { (b + 1) * m };
                out.push(start + b * m..start + end);
            }
            start += n;
        }
        out
    }

    /// Mean and batch-means standard error of `stat` applied to each batch.
    pub(crate) fn batch_stat(&self, values: &[f64], stat: impl Fn(&[f64]) -> f64) -> (f64, f64) {
        let batches: Vec<&[f64]> = self.batches().into_iter().map(|r| &values[r]).collect();
        (stat(values), stats::batch_se(&batches, stat))
    }

    /// Estimated intensity `E N / |W|` with its standard error.
    pub fn intensity(&self) -> (f64, f64) {
        let counts: Vec<f64> = self.snapshots().iter().map(|c| c.len() as f64).collect();
        let vol = self.window.volume();
        let (m, se) = self.batch_stat(&counts, stats::mean);
        (m / vol, se / vol)
    }
}

/// An axis-aligned cube `[lo, lo + side)^d` inside a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubBox {
    pub lo: [f64; 3],
    pub side: f64,
}

impl SubBox {
    /// Cube of volume `fraction |W|` sharing the window's centre.
    pub fn centered(window: &Window, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::invalid("fraction", format!("must lie in (0, 1], got {fraction}")));
        }
        let side = window.side() * fraction.powf(1.0 / window.dim() as f64);
        let off = (window.side() - side) / 2.0;
        let mut lo = [0.0; 3];
        lo[..window.dim()].fill(off);
        Ok(Self { lo, side })
    }

    pub fn volume(&self, dim: usize) -> f64 {
        self.side.powi(dim as i32)
    }

    pub fn contains(&self, p: &Position, dim: usize) -> bool {
        (0..dim).all(|i| {
            let c = p.coord(i);
            c >= self.lo[i] && c < self.lo[i] + self.side
        })
    }

    fn check_inside(&self, window: &Window) -> Result<()> {
        let l = window.side();
        let ok = self.side >= 0.0
            && (0..window.dim()).all(|i| self.lo[i] >= 0.0 && self.lo[i] + self.side <= l * (1.0 + 1e-12));
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("sub_window", format!("{self:?} is not contained in the window")))
        }
    }
}

/// Number of points whose position lies in `sub`.
pub fn count_in_window(config: &Configuration, sub: &SubBox) -> Result<usize> {
    let w = config.window();
    sub.check_inside(w)?;
    let d = w.dim();
    let centre = sub.lo.map(|lo| lo + sub.side / 2.0);
    let centre = Position::new(&centre[..d])?;
    let reach = sub.side / 2.0 * (d as f64).sqrt() * (1.0 + 1e-9);
    let mut n = 0;
    config.for_each_within(&centre, reach, |id, _, _| {
        if sub.contains(&config.points()[id].pos, d) {
            n += 1;
        }
    });
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub fraction: f64,
    pub volume: f64,
    pub mean: f64,
    pub variance: f64,
    pub var_per_volume: f64,
    pub se: f64,
    pub n_samples: usize,
}

/// `Var N / |sub-window|` for nested centred sub-windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCurve {
    pub rows: Vec<VarianceRow>,
}

impl VarianceCurve {
    /// Per row: does `Var/|W| >= bound - 3 SE` hold?
    pub fn verdicts(&self, bound: f64) -> Vec<bool> {
        self.rows.iter().map(|r| r.var_per_volume >= bound - 3.0 * r.se).collect()
    }
}

/// Variance of the count in centred sub-boxes of volume `f |W|`, across
/// snapshots, with batch-means standard errors.
pub fn variance_curve(samples: &SampleSet, fractions: &[f64]) -> Result<VarianceCurve> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SAMPLES, got: n });
    }
    let mut fr = fractions.to_vec();
    fr.sort_by(f64::total_cmp);
    fr.dedup();
    let dim = samples.window().dim();
    let snaps = samples.snapshots();
    let mut rows = Vec::with_capacity(fr.len());
    for f in fr {
        let sub = SubBox::centered(samples.window(), f)?;
        let vol = sub.volume(dim);
        let counts: Vec<f64> =
            snaps.par_iter().map(|c| count_in_window(c, &sub).map(|k| k as f64)).collect::<Result<_>>()?;
        let variance = stats::variance(&counts);
        let (_, se) = samples.batch_stat(&counts, stats::variance);
        rows.push(VarianceRow {
            fraction: f,
            volume: vol,
            mean: stats::mean(&counts),
            variance,
            var_per_volume: variance / vol,
            se: se / vol,
            n_samples: n,
        });
    }
    Ok(VarianceCurve { rows })
}

/// Integer multiples `m` of the fundamental wavevector `2 pi / L`.
pub type WaveIndex = [i64; 3];

/// The `m != 0` with `|m_i| <= max` whose first nonzero entry is positive.
pub fn default_wavevectors(dim: usize, max: i64) -> Vec<WaveIndex> {
    let mut out = Vec::new();
    let r = -max..=max;
    let ys = if dim >= 2 { r.clone() } else { 0..=0 };
    let zs = if dim >= 3 { r.clone() } else { 0..=0 };
    for x in r {
        for y in ys.clone() {
            for z in zs.clone() {
                let m = [x, y, z];
                if m.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
                    out.push(m);
                }
            }
        }
    }
    out
}

/// `|sum_x e^{i k.x}|^2 / N` for one configuration, `k = 2 pi m / L`.
/// `None` for an empty configuration.
pub fn structure_factor_single(config: &Configuration, m: &WaveIndex) -> Result<Option<f64>> {
    let w = config.window();
    let d = w.dim();
    if m[..d].iter().all(|&c| c == 0) || m[d..].iter().any(|&c| c != 0) {
        return Err(Error::invalid("wavevector", format!("need a nonzero {d}-dimensional index, got {m:?}")));
    }
    if config.is_empty() {
        return Ok(None);
    }
    let scale = 2.0 * PI / w.side();
    let (mut re, mut im) = (0.0, 0.0);
    for p in config.points() {
        let phase: f64 = (0..d).map(|i| scale * m[i] as f64 * p.pos.coord(i)).sum();
        re += phase.cos();
        im += phase.sin();
    }
    Ok(Some((re * re + im * im) / config.len() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureRow {
    pub m0: i64,
    pub m1: i64,
    pub m2: i64,
    pub k: f64,
    pub s: f64,
    pub se: f64,
    pub n_samples: usize,
}

/// `S(k)` averaged over the non-empty snapshots.
pub fn structure_factor(samples: &SampleSet, wavevectors: &[WaveIndex]) -> Result<Vec<StructureRow>> {
    let w = samples.window();
    let d = w.dim();
    let snaps = samples.snapshots();
    let mut out = Vec::with_capacity(wavevectors.len());
    for m in wavevectors {
        let vals: Vec<Option<f64>> = snaps.par_iter().map(|c| structure_factor_single(c, m)).collect::<Result<_>>()?;
        // empty snapshots are dropped; batches then act on the remainder
        let kept: Vec<f64> = vals.iter().flatten().copied().collect();
        if kept.len() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: kept.len() });
        }
        let se = if kept.len() == vals.len() {
            samples.batch_stat(&kept, stats::mean).1
        } else {
            let n_b = TARGET_BATCHES.min(kept.len());
            stats::batch_se(&stats::batches(&kept, n_b), stats::mean)
        };
        let k = 2.0 * PI / w.side() * (m[..d].iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt();
        out.push(StructureRow { m0: m[0], m1: m[1], m2: m[2], k, s: stats::mean(&kept), se, n_samples: kept.len() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MarkedPoint;
    use crate::models::MarkDistribution;
    use crate::sampler::{chain_rng, sample_poisson};
    use proptest::prelude::*;

    fn pt(c: &[f64]) -> MarkedPoint {
        MarkedPoint::unmarked(Position::new(c).unwrap())
    }

    fn poisson_set(z: f64, side: f64, chains: usize, per: usize, seed: u64) -> SampleSet {
        let w = Window::periodic(side, 2).unwrap();
        let runs = (0..chains as u64)
            .map(|c| {
                let mut rng = chain_rng(seed, c);
                (0..per).map(|_| sample_poisson(&w, z, MarkDistribution::Unmarked, 1.0, &mut rng).unwrap()).collect()
            })
            .collect();
        SampleSet::new(runs).unwrap()
    }

    #[test]
    fn count_trivial_cases() {
        let w = Window::free(4.0, 2).unwrap();
        let empty = Configuration::new(w, false, 1.0);
        let all = SubBox { lo: [0.0; 3], side: 4.0 };
        assert_eq!(count_in_window(&empty, &all).unwrap(), 0);
        let c = Configuration::from_points(w, false, 1.0, [pt(&[0.1, 0.1]), pt(&[3.9, 3.9]), pt(&[2.0, 2.0])]).unwrap();
        assert_eq!(count_in_window(&c, &all).unwrap(), 3);
        let outside = SubBox { lo: [3.0, 3.0, 0.0], side: 2.0 };
        assert!(count_in_window(&c, &outside).is_err());
    }

    proptest! {
        #[test]
        fn count_matches_linear_scan(seed in 0u64..500, f in 0.05f64..1.0, periodic in any::<bool>()) {
            let w = if periodic { Window::periodic(5.0, 2).unwrap() } else { Window::free(5.0, 2).unwrap() };
            let mut rng = chain_rng(seed, 0);
            let c = sample_poisson(&w, 3.0, MarkDistribution::Unmarked, 0.7, &mut rng).unwrap();
            let sub = SubBox::centered(&w, f).unwrap();
            let scan = c.points().iter().filter(|p| {
                (0..2).all(|i| p.pos.coord(i) >= sub.lo[i] && p.pos.coord(i) < sub.lo[i] + sub.side)
            }).count();
            prop_assert_eq!(count_in_window(&c, &sub).unwrap(), scan);
        }
    }

    #[test]
    fn batches_cover_all_snapshots() {
        for (chains, per) in [(1, 100), (3, 37), (12, 5), (25, 40)] {
            let s = poisson_set(1.0, 2.0, chains, per, 1);
            let b = s.batches();
            assert_eq!(b.first().unwrap().start, 0);
            assert_eq!(b.last().unwrap().end, chains * per);
            assert!(b.windows(2).all(|p| p[0].end == p[1].start));
            assert!(b.len() >= 10.min(chains * per));
        }
    }

    #[test]
    fn poisson_variance_curve() {
        let s = poisson_set(2.0, 5.0, 4, 500, 9);
        let vc = variance_curve(&s, &DEFAULT_FRACTIONS).unwrap();
        assert_eq!(vc.rows.len(), 5);
        for r in &vc.rows {
            assert!((r.var_per_volume - 2.0).abs() <= 3.0 * r.se, "{r:?}");
            assert!(r.se > 0.0);
        }
        assert!(vc.rows.windows(2).all(|p| p[0].volume < p[1].volume));
    }

    #[test]
    fn variance_unbiased_over_repetitions() {
        // mean of 50 independent estimates, against the spread of the estimates
        let mut per_fraction = vec![Vec::new(); DEFAULT_FRACTIONS.len()];
        for rep in 0..50 {
            let s = poisson_set(1.0, 4.0, 2, 30, 1000 + rep);
            let vc = variance_curve(&s, &DEFAULT_FRACTIONS).unwrap();
            for (i, r) in vc.rows.iter().enumerate() {
                per_fraction[i].push(r.var_per_volume);
            }
        }
        for v in per_fraction {
            assert!((stats::mean(&v) - 1.0).abs() <= 3.0 * stats::standard_error(&v));
        }
    }

    #[test]
    fn constant_configurations_have_zero_variance() {
        let w = Window::periodic(2.0, 2).unwrap();
        let c = Configuration::from_points(w, false, 0.5, [pt(&[1.0, 1.0]), pt(&[0.2, 1.7])]).unwrap();
        let s = SampleSet::new(vec![vec![c; 40]]).unwrap();
        let vc = variance_curve(&s, &[0.5, 1.0]).unwrap();
        assert!(vc.rows.iter().all(|r| r.variance == 0.0));
        assert!(matches!(
            variance_curve(&SampleSet::new(vec![s.chains()[0][..10].to_vec()]).unwrap(), &[0.5]),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn structure_factor_trivial_cases() {
        let w = Window::periodic(3.0, 2).unwrap();
        let one = Configuration::from_points(w, false, 1.0, [pt(&[0.37, 2.1])]).unwrap();
        for m in default_wavevectors(2, 2) {
            assert!((structure_factor_single(&one, &m).unwrap().unwrap() - 1.0).abs() < 1e-12);
        }
        // integer lattice: Bragg peak at every reciprocal lattice vector
        let lattice: Vec<MarkedPoint> = (0..3).flat_map(|i| (0..3).map(move |j| pt(&[i as f64, j as f64]))).collect();
        let c = Configuration::from_points(w, false, 1.0, lattice).unwrap();
        assert!((structure_factor_single(&c, &[3, 0, 0]).unwrap().unwrap() - 9.0).abs() < 1e-9);
        assert!((structure_factor_single(&c, &[3, -3, 0]).unwrap().unwrap() - 9.0).abs() < 1e-9);
        assert!(structure_factor_single(&c, &[1, 0, 0]).unwrap().unwrap() < 1e-20);
        assert!(structure_factor_single(&c, &[0, 0, 0]).is_err());
        assert!(structure_factor_single(&c, &[0, 0, 1]).is_err());
    }

    #[test]
    fn poisson_structure_factor_is_one() {
        let s = poisson_set(1.0, 4.0, 4, 250, 3);
        for row in structure_factor(&s, &default_wavevectors(2, 1)).unwrap() {
            assert!((row.s - 1.0).abs() <= 3.0 * row.se, "{row:?}");
        }
    }

    #[test]
    fn wavevector_enumeration() {
        assert_eq!(default_wavevectors(1, 2).len(), 2);
        assert_eq!(default_wavevectors(2, 1).len(), 4);
        assert_eq!(default_wavevectors(3, 1).len(), 13);
    }
}
