//! Probe-based estimators: GNZ residuals and the moment diagnostics of the
//! Papangelou intensity. Probes are stratified: one uniform point in every
//! cell of a regular grid over the window.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SampleSet;
use crate::error::{Error, Result};
use crate::geometry::{Configuration, MarkedPoint, Position, Window};
use crate::models::PapangelouModel;
use crate::sampler::{chain_rng, uniform_position, ChainRng};
use crate::stats;

/// Stream offset separating probe randomness from chain randomness.
const PROBE_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    /// Grid cells per axis; each snapshot gets `probes_per_axis^d` probes.
    pub probes_per_axis: usize,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { probes_per_axis: 8, seed: 0 }
    }
}

impl ProbeOptions {
    fn validate(&self) -> Result<()> {
        if self.probes_per_axis == 0 {
            return Err(Error::invalid("probes_per_axis", "must be >= 1"));
        }
        Ok(())
    }

    fn rng(&self, snapshot: usize) -> ChainRng {
        chain_rng(self.seed, PROBE_STREAM + snapshot as u64)
    }
}

/// Jittered grid: one uniform point per cell.
fn jittered<R: Rng + ?Sized>(window: &Window, per_axis: usize, rng: &mut R) -> Vec<Position> {
    let d = window.dim();
    let h = window.side() / per_axis as f64;
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut k| {
            let mut c = [0.0; 3];
            for ci in c.iter_mut().take(d) {
                let cell = k % per_axis;
                k /= per_axis;
                // stay strictly inside [0, L)
                *ci = ((cell as f64 + rng.random::<f64>()) * h).min(window.side() * (1.0 - f64::EPSILON));
            }
            Position::from_array(c)
        })
        .collect()
}

/// Test functions `f(x, gamma)` for the GNZ check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant,
    /// Number of points of `gamma` within `radius` of `x`.
    LocalCount {
        radius: f64,
    },
    /// `1` when no point of `gamma` lies within `radius` of `x`.
    HardCore {
        radius: f64,
    },
}

impl TestFunction {
    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Constant => "constant",
            TestFunction::LocalCount { .. } => "local_count",
            TestFunction::HardCore { .. } => "hard_core",
        }
    }

    /// The three built-in functions, with `radius` for the local ones.
    pub fn family(radius: f64) -> [TestFunction; 3] {
        [TestFunction::Constant, TestFunction::LocalCount { radius }, TestFunction::HardCore { radius }]
    }

    fn validate(&self) -> Result<()> {
        match *self {
            TestFunction::LocalCount { radius } | TestFunction::HardCore { radius } if !(radius > 0.0) => {
                Err(Error::invalid("radius", format!("test function radius must be > 0, got {radius}")))
            }
            _ => Ok(()),
        }
    }

    /// `f(x, gamma \ {skip})`.
    fn eval(&self, x: &Position, config: &Configuration, skip: Option<usize>) -> f64 {
        match *self {
            TestFunction::Constant => 1.0,
            TestFunction::LocalCount { radius } => {
                let mut n = 0usize;
                config.for_each_within(x, radius, |id, _, _| {
                    if Some(id) != skip {
                        n += 1;
                    }
                });
                n as f64
            }
            TestFunction::HardCore { radius } => {
                let mut hit = false;
                config.for_each_within(x, radius, |id, _, _| hit |= Some(id) != skip);
                if hit {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// Both sides of `E sum_x f(x, gamma \ x) = int E f(x, gamma) lambda*(x, gamma) dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnzResidual {
    pub test: TestFunction,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    pub residual: f64,
    /// Batch-means standard error of the per-snapshot difference.
    pub se: f64,
    pub n_samples: usize,
}

impl GnzResidual {
    /// `|residual| / se`.
    pub fn z_score(&self) -> f64 {
        if self.se > 0.0 {
            self.residual.abs() / self.se
        } else if self.residual == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// GNZ residual of `model` on `samples`. Passing a model other than the
/// one that generated the samples gives a misspecification test.
pub fn gnz_residual(
    samples: &SampleSet,
    model: &PapangelouModel,
    test: TestFunction,
    opts: &ProbeOptions,
) -> Result<GnzResidual> {
    opts.validate()?;
    test.validate()?;
    let window = *samples.window();
    let vol = window.volume();
    let snaps = samples.snapshots();
    let pairs: Vec<(f64, f64)> = snaps
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let lhs: f64 = (0..c.len()).map(|id| test.eval(&c.points()[id].pos, c, Some(id))).sum();
            let mut rng = opts.rng(i);
            let probes = jittered(&window, opts.probes_per_axis, &mut rng);
            let mut vals = Vec::with_capacity(probes.len());
            for u in probes {
                let f = test.eval(&u, c, None);
                let v = if f == 0.0 { 0.0 } else { f * model.papangelou_at(u, c, &mut rng)? };
                vals.push(v);
            }
            Ok((lhs, vol * stats::mean(&vals)))
        })
        .collect::<Result<_>>()?;
    let lhs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let rhs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diff: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    let (l, l_se) = samples.batch_stat(&lhs, stats::mean);
    let (r, r_se) = samples.batch_stat(&rhs, stats::mean);
    let (res, se) = samples.batch_stat(&diff, stats::mean);
    Ok(GnzResidual { test, lhs: l, lhs_se: l_se, rhs: r, rhs_se: r_se, residual: res, se, n_samples: snaps.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A1Moment {
    pub alpha1: f64,
    pub estimate: f64,
    pub se: f64,
    pub n_samples: usize,
}

/// `E lambda*(x, Gamma)^{2 alpha1}` over stratified probes and snapshots.
pub fn a1_moment(samples: &SampleSet, model: &PapangelouModel, alpha1: f64, opts: &ProbeOptions) -> Result<A1Moment> {
    if !(alpha1 > 1.0 && alpha1.is_finite()) {
        return Err(Error::invalid("alpha1", format!("must be finite and > 1, got {alpha1}")));
    }
    let (estimate, se) = intensity_moment(samples, model, 2.0 * alpha1, opts)?;
    Ok(A1Moment { alpha1, estimate, se, n_samples: samples.len() })
}

/// `E lambda*(x, Gamma)^power` with its batch-means standard error.
pub fn intensity_moment(
    samples: &SampleSet,
    model: &PapangelouModel,
    power: f64,
    opts: &ProbeOptions,
) -> Result<(f64, f64)> {
    opts.validate()?;
    let window = *samples.window();
    let per: Vec<f64> = samples
        .snapshots()
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut rng = opts.rng(i);
            let vals = jittered(&window, opts.probes_per_axis, &mut rng)
                .into_iter()
                .map(|u| Ok(model.papangelou_at(u, c, &mut rng)?.powf(power)))
                .collect::<Result<Vec<f64>>>()?;
            Ok(stats::mean(&vals))
        })
        .collect::<Result<_>>()?;
    Ok(samples.batch_stat(&per, stats::mean))
}

/// Papangelou intensities at the stratified probes of every snapshot,
/// together with the probe and its snapshot index.
pub fn probe_intensities(
    samples: &SampleSet,
    model: &PapangelouModel,
    opts: &ProbeOptions,
) -> Result<Vec<(usize, MarkedPoint, f64)>> {
    opts.validate()?;
    let window = *samples.window();
    let per: Vec<Vec<(usize, MarkedPoint, f64)>> = samples
        .snapshots()
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut rng = opts.rng(i);
            jittered(&window, opts.probes_per_axis, &mut rng)
                .into_iter()
                .map(|u| {
                    let x = MarkedPoint::new(u, model.mark_distribution().sample(&mut rng))?;
                    Ok((i, x, model.papangelou(&x, c)?))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2Row {
    pub radius: f64,
    pub estimate: f64,
    pub se: f64,
    pub n_samples: usize,
    /// Probes redrawn because the intensity at `x` was zero.
    pub conflicts: u64,
}

/// `E |1 - lambda*(x, Gamma ∪ {x + y}) / lambda*(x, Gamma)|^{alpha2}` as a
/// function of `|y|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2Profile {
    pub alpha2: f64,
    pub rows: Vec<A2Row>,
}

fn random_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> [f64; 3] {
    loop {
        let mut v = [0.0; 3];
        for c in v.iter_mut().take(dim) {
            *c = rng.sample(StandardNormal);
        }
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.map(|c| c / n);
        }
    }
}

/// Position `x + r u`, or `None` when it leaves a free window.
fn shifted(window: &Window, x: &Position, r: f64, u: &[f64; 3]) -> Option<Position> {
    let mut c = *x.coords();
    for i in 0..window.dim() {
        c[i] += r * u[i];
    }
    window.wrap(&Position::from_array(c))
}

const MAX_REDRAWS: usize = 10_000;

pub fn a2_profile(
    samples: &SampleSet,
    model: &PapangelouModel,
    alpha2: f64,
    radii: &[f64],
    opts: &ProbeOptions,
) -> Result<A2Profile> {
    opts.validate()?;
    if !(alpha2 > 1.0 && alpha2.is_finite()) {
        return Err(Error::invalid("alpha2", format!("must be finite and > 1, got {alpha2}")));
    }
    let window = *samples.window();
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    for &r in &radii {
        let limit = if window.is_periodic() { window.side() / 2.0 } else { window.max_distance() };
        if !(r > 0.0 && r <= limit) {
            return Err(Error::invalid("radii", format!("radius {r} must lie in (0, {limit}]")));
        }
    }
    let dim = window.dim();
    let snaps = samples.snapshots();
    // per snapshot: (mean per radius, conflicts per radius)
    let per: Vec<(Vec<f64>, Vec<u64>)> = snaps
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut rng = opts.rng(i);
            let probes = jittered(&window, opts.probes_per_axis, &mut rng);
            let mut means = Vec::with_capacity(radii.len());
            let mut conflicts = vec![0u64; radii.len()];
            for (ri, &r) in radii.iter().enumerate() {
                let mut vals = Vec::with_capacity(probes.len());
                for &probe in &probes {
                    let mut pos = probe;
                    let mut redraws = 0;
                    let value = loop {
                        if redraws > MAX_REDRAWS {
                            return Err(Error::Numerical(format!("no admissible probe pair at radius {r}")));
                        }
                        redraws += 1;
                        let x = MarkedPoint::new(pos, model.mark_distribution().sample(&mut rng))?;
                        let Some(ypos) = shifted(&window, &pos, r, &random_direction(dim, &mut rng)) else {
                            continue;
                        };
                        let y = MarkedPoint::new(ypos, model.mark_distribution().sample(&mut rng))?;
                        match model.papangelou_ratio(&x, c, &y) {
                            Ok(ratio) => break (1.0 - ratio).abs().powf(alpha2),
                            Err(Error::HardCoreConflict) => {
                                conflicts[ri] += 1;
                                pos = uniform_position(&window, &mut rng);
                            }
                            Err(e) => return Err(e),
                        }
                    };
                    vals.push(value);
                }
                means.push(stats::mean(&vals));
            }
            Ok((means, conflicts))
        })
        .collect::<Result<_>>()?;
    let rows = radii
        .iter()
        .enumerate()
        .map(|(ri, &radius)| {
            let vals: Vec<f64> = per.iter().map(|p| p.0[ri]).collect();
            let (estimate, se) = samples.batch_stat(&vals, stats::mean);
            A2Row { radius, estimate, se, n_samples: vals.len(), conflicts: per.iter().map(|p| p.1[ri]).sum() }
        })
        .collect();
    Ok(A2Profile { alpha2, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::MarkDistribution;
    use crate::models::{ModelSpec, PairPotential, PairPotentialSpec, TabulatedPotential};
    use crate::sampler::sample_poisson;

    fn poisson_set(z: f64, side: f64, n: usize) -> SampleSet {
        let w = Window::periodic(side, 2).unwrap();
        let mut rng = chain_rng(5, 0);
        let snaps = (0..n).map(|_| sample_poisson(&w, z, MarkDistribution::Unmarked, 0.5, &mut rng).unwrap()).collect();
        SampleSet::new(vec![snaps]).unwrap()
    }

    #[test]
    fn jittered_probes_are_stratified() {
        let w = Window::periodic(3.0, 2).unwrap();
        let mut rng = chain_rng(0, 0);
        let p = jittered(&w, 3, &mut rng);
        assert_eq!(p.len(), 9);
        let mut cells: Vec<(i64, i64)> = p.iter().map(|q| (q.coord(0) as i64, q.coord(1) as i64)).collect();
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 9);
    }

    #[test]
    fn poisson_gnz_balances_and_detects_misspecification() {
        let s = poisson_set(2.0, 3.0, 400);
        let m = PapangelouModel::poisson(2.0, 2).unwrap();
        let opts = ProbeOptions { probes_per_axis: 4, seed: 1 };
        for f in TestFunction::family(0.4) {
            let g = gnz_residual(&s, &m, f, &opts).unwrap();
            assert!(g.z_score() <= 3.0, "{g:?}");
        }
        let c = gnz_residual(&s, &m, TestFunction::Constant, &opts).unwrap();
        assert!((c.rhs - 18.0).abs() < 1e-9);
        let wrong = m.with_activity(4.0).unwrap();
        let g = gnz_residual(&s, &wrong, TestFunction::Constant, &opts).unwrap();
        assert!(g.z_score() > 5.0);
    }

    #[test]
    fn test_functions_exclude_the_point_itself() {
        let w = Window::periodic(4.0, 2).unwrap();
        let pts = [[1.0, 1.0], [1.3, 1.0], [3.0, 3.0]].map(|c| MarkedPoint::unmarked(Position::new(&c).unwrap()));
        let c = Configuration::from_points(w, false, 1.0, pts).unwrap();
        let lc = TestFunction::LocalCount { radius: 0.5 };
        let hc = TestFunction::HardCore { radius: 0.5 };
        assert_eq!(lc.eval(&pts[0].pos, &c, Some(0)), 1.0);
        assert_eq!(hc.eval(&pts[0].pos, &c, Some(0)), 0.0);
        assert_eq!(hc.eval(&pts[2].pos, &c, Some(2)), 1.0);
        assert!(hc.validate().is_ok() && TestFunction::HardCore { radius: 0.0 }.validate().is_err());
    }

    #[test]
    fn a1_of_poisson_is_exact() {
        let s = poisson_set(1.5, 2.0, 40);
        let m = PapangelouModel::poisson(1.5, 2).unwrap();
        let a = a1_moment(&s, &m, 1.5, &ProbeOptions::default()).unwrap();
        assert!((a.estimate - 1.5f64.powf(3.0)).abs() < 1e-12);
        assert!(a1_moment(&s, &m, 1.0, &ProbeOptions::default()).is_err());
    }

    #[test]
    fn a2_of_pair_model_is_closed_form() {
        let s = poisson_set(1.0, 4.0, 40);
        let spec = PairPotentialSpec::strauss(1.0, 0.7, 0.5);
        let m = PapangelouModel::new(ModelSpec::Pair(spec), 2).unwrap();
        let p = a2_profile(&s, &m, 2.0, &[0.2, 0.49, 0.6, 1.5], &ProbeOptions::default()).unwrap();
        let inside = (1.0 - (-0.7f64).exp()).powi(2);
        assert!((p.rows[0].estimate - inside).abs() < 1e-12);
        assert!((p.rows[1].estimate - inside).abs() < 1e-12);
        assert_eq!(p.rows[2].estimate, 0.0);
        assert_eq!(p.rows[3].estimate, 0.0);
    }

    #[test]
    fn a2_resamples_hard_core_conflicts() {
        let w = Window::periodic(2.0, 2).unwrap();
        let table = TabulatedPotential::new(vec![0.0, 0.3], vec![f64::INFINITY, f64::INFINITY]).unwrap();
        let spec = PairPotentialSpec { potential: PairPotential::Tabulated(table), z: 1.0, beta: 1.0, cutoff: None };
        let m = PapangelouModel::new(ModelSpec::Pair(spec), 2).unwrap();
        let c = Configuration::from_points(w, false, 0.5, [MarkedPoint::unmarked(Position::new(&[1.0, 1.0]).unwrap())])
            .unwrap();
        let s = SampleSet::new(vec![vec![c; 4]]).unwrap();
        let p = a2_profile(&s, &m, 2.0, &[0.1, 0.9], &ProbeOptions { probes_per_axis: 10, seed: 2 }).unwrap();
        assert!(p.rows.iter().all(|r| r.conflicts > 0));
        assert_eq!(p.rows[0].estimate, 1.0);
        assert_eq!(p.rows[1].estimate, 0.0);
        assert!(a2_profile(&s, &m, 2.0, &[1.5], &ProbeOptions::default()).is_err());
    }
}
