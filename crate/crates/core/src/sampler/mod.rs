//! Birth-death-move Metropolis-Hastings sampling of finite-volume Gibbs
//! measures, a Poisson sampler, and a brute-force oracle for tiny windows.
//!
//! The chains target the density `z^n exp(-beta H(gamma))` with respect to
//! the unit-rate Poisson process on the window, so the periodic torus stands
//! in for the infinite-volume process.

mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Configuration, MarkedPoint, Position, Window};
use crate::models::{MarkDistribution, PapangelouModel};

pub use oracle::{brute_force_oracle, OracleOptions, OracleResult};

/// The generator behind every chain: counter-based, with independent streams.
pub type ChainRng = ChaCha8Rng;

/// Generator for chain `chain` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, chain: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Uniform position in the window.
pub fn uniform_position<R: Rng + ?Sized>(window: &Window, rng: &mut R) -> Position {
    let mut c = [0.0; 3];
    for ci in c.iter_mut().take(window.dim()) {
        *ci = rng.random_range(0.0..window.side());
    }
    Position::new(&c[..window.dim()]).expect("finite coordinates")
}

/// Poisson process of intensity `z` with i.i.d. marks.
pub fn sample_poisson<R: Rng + ?Sized>(
    window: &Window,
    z: f64,
    marks: MarkDistribution,
    cell_hint: f64,
    rng: &mut R,
) -> Result<Configuration> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::invalid("z", format!("must be finite and > 0, got {z}")));
    }
    let n = Poisson::new(z * window.volume()).map_err(|e| Error::Numerical(format!("poisson law: {e}")))?.sample(rng)
        as usize;
    let marked = !matches!(marks, MarkDistribution::Unmarked);
    let mut config = Configuration::new(*window, marked, cell_hint);
    while config.len() < n {
        let p = MarkedPoint::new(uniform_position(window, rng), marks.sample(rng))?;
        // coincident draws have probability zero; redraw if one happens
        if !config.contains_position(&p.pos) {
            config.insert(p)?;
        }
    }
    Ok(config)
}

/// Proposal probabilities and run lengths of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSchedule {
    pub p_birth: f64,
    pub p_death: f64,
    pub p_move: f64,
    /// Standard deviation of the Gaussian displacement of a move.
    pub move_sigma: f64,
    /// Proposals discarded before the first snapshot.
    pub burn_in: u64,
    /// Proposals between snapshots; `0` behaves like `1`.
    pub thin: u64,
}

impl SamplerSchedule {
    /// Births and deaths 0.4 each, moves 0.2 with half the interaction
    /// cutoff as step, burn-in `1e5 max(1, z|W|)` and thinning `z|W|`.
    pub fn default_for(model: &PapangelouModel, window: &Window) -> Self {
        let load = model.z() * window.volume();
        let step = match model.interaction_cutoff() {
            Some(c) if c > 0.0 && c.is_finite() => c / 2.0,
            _ => model.cell_hint(window) / 2.0,
        };
        Self {
            p_birth: 0.4,
            p_death: 0.4,
            p_move: 0.2,
            move_sigma: step.min(window.side() / 2.0),
            burn_in: (1e5 * load.max(1.0)).round() as u64,
            thin: load.round().max(1.0) as u64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ps = [self.p_birth, self.p_death, self.p_move];
        if ps[..2].iter().any(|p| !(*p > 0.0 && *p < 1.0)) || !(0.0..1.0).contains(&self.p_move) {
            return Err(Error::invalid("schedule", "birth/death probabilities must lie in (0,1), move in [0,1)"));
        }
        if (ps.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("schedule", format!("probabilities must sum to 1, got {ps:?}")));
        }
        if self.p_move > 0.0 && !(self.move_sigma > 0.0 && self.move_sigma.is_finite()) {
            return Err(Error::invalid("move_sigma", format!("must be finite and > 0, got {}", self.move_sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Proposal {
    Birth,
    Death,
    Move,
}

/// Proposed and accepted counts per proposal type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub births_proposed: u64,
    pub births_accepted: u64,
    pub deaths_proposed: u64,
    pub deaths_accepted: u64,
    pub moves_proposed: u64,
    pub moves_accepted: u64,
}

impl AcceptanceStats {
    fn record(&mut self, kind: Proposal, accepted: bool) {
        let (p, a) = match kind {
            Proposal::Birth => (&mut self.births_proposed, &mut self.births_accepted),
            Proposal::Death => (&mut self.deaths_proposed, &mut self.deaths_accepted),
            Proposal::Move => (&mut self.moves_proposed, &mut self.moves_accepted),
        };
        *p += 1;
        *a += u64::from(accepted);
    }

    pub fn merge(&mut self, other: &Self) {
        self.births_proposed += other.births_proposed;
        self.births_accepted += other.births_accepted;
        self.deaths_proposed += other.deaths_proposed;
        self.deaths_accepted += other.deaths_accepted;
        self.moves_proposed += other.moves_proposed;
        self.moves_accepted += other.moves_accepted;
    }

    /// Acceptance rates of births, deaths and moves (NaN when never proposed).
    pub fn rates(&self) -> [f64; 3] {
        let r = |a: u64, p: u64| if p == 0 { f64::NAN } else { a as f64 / p as f64 };
        [
            r(self.births_accepted, self.births_proposed),
            r(self.deaths_accepted, self.deaths_proposed),
            r(self.moves_accepted, self.moves_proposed),
        ]
    }
}

/// A chain: current configuration, step counter and generator.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub config: Configuration,
    pub step: u64,
    pub rng: ChainRng,
    pub stats: AcceptanceStats,
}

impl ChainState {
    pub fn new(config: Configuration, rng: ChainRng) -> Self {
        Self { config, step: 0, rng, stats: AcceptanceStats::default() }
    }

    /// Empty configuration for `model` in `window`.
    pub fn empty(model: &PapangelouModel, window: Window, rng: ChainRng) -> Result<Self> {
        Ok(Self::new(model.empty_configuration(window)?, rng))
    }
}

/// One birth, death or move proposal with Metropolis-Hastings acceptance.
///
/// Birth of a uniform `x` is accepted with
/// `min(1, lambda*(x, gamma) |W| p_d / ((n + 1) p_b))`, death of a uniformly
/// chosen `x` with `min(1, n p_b / (lambda*(x, gamma \ x) |W| p_d))` (always
/// when that intensity is zero), and a Gaussian move `x -> x'` with
/// `min(1, lambda*(x', gamma \ x) / lambda*(x, gamma \ x))`.
pub fn bdm_step(state: &mut ChainState, model: &PapangelouModel, schedule: &SamplerSchedule) -> Result<Proposal> {
    let window = *state.config.window();
    let vol = window.volume();
    let u: f64 = state.rng.random();
    let kind = if u < schedule.p_birth {
        Proposal::Birth
    } else if u < schedule.p_birth + schedule.p_death {
        Proposal::Death
    } else {
        Proposal::Move
    };
    state.step += 1;
    let accepted = match kind {
        Proposal::Birth => {
            let pos = uniform_position(&window, &mut state.rng);
            let x = MarkedPoint::new(pos, model.mark_distribution().sample(&mut state.rng))?;
            let accept: f64 = state.rng.random();
            if state.config.contains_position(&x.pos) {
                false
            } else {
                let n = state.config.len() as f64;
                let lam = model.papangelou(&x, &state.config)?;
                let a = lam * vol * schedule.p_death / ((n + 1.0) * schedule.p_birth);
                let ok = accept < a;
                if ok {
                    state.config.insert(x)?;
                }
                ok
            }
        }
        Proposal::Death => {
            let n = state.config.len();
            if n == 0 {
                false
            } else {
                let id = state.rng.random_range(0..n);
                let accept: f64 = state.rng.random();
                let x = state.config.remove(id)?;
                let lam = model.papangelou(&x, &state.config)?;
                let ok = lam == 0.0 || accept * lam * vol * schedule.p_death < n as f64 * schedule.p_birth;
                if !ok {
                    state.config.insert_at(id, x)?;
                }
                ok
            }
        }
        Proposal::Move => {
            let n = state.config.len();
            if n == 0 {
                false
            } else {
                let id = state.rng.random_range(0..n);
                let normal =
                    Normal::new(0.0, schedule.move_sigma).map_err(|e| Error::Numerical(format!("move law: {e}")))?;
                let mut shift = [0.0; 3];
                for s in shift.iter_mut().take(window.dim()) {
                    *s = normal.sample(&mut state.rng);
                }
                let accept: f64 = state.rng.random();
                let x = *state.config.point(id)?;
                match window.wrap(&x.pos.offset(&shift)) {
                    Some(pos) if !state.config.contains_position(&pos) => {
                        let moved = MarkedPoint { pos, mark: x.mark };
                        state.config.remove(id)?;
                        let old = model.papangelou(&x, &state.config)?;
                        let new = model.papangelou(&moved, &state.config)?;
                        let ok = old == 0.0 || accept * old < new;
                        state.config.insert_at(id, if ok { moved } else { x })?;
                        ok
                    }
                    // leaving a free window or landing on a point
                    _ => false,
                }
            }
        }
    };
    state.stats.record(kind, accepted);
    Ok(kind)
}

/// Snapshots of one chain and its acceptance statistics.
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub chain: u64,
    pub snapshots: Vec<Configuration>,
    pub stats: AcceptanceStats,
}

/// Runs `burn_in` proposals, then records `n_samples` snapshots separated by
/// `max(thin, 1)` proposals. Starts from the empty configuration.
pub fn run_chain(
    model: &PapangelouModel,
    window: Window,
    schedule: &SamplerSchedule,
    n_samples: usize,
    seed: u64,
    chain: u64,
) -> Result<ChainRun> {
    schedule.validate()?;
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be >= 1"));
    }
    let mut state = ChainState::empty(model, window, chain_rng(seed, chain))?;
    for _ in 0..schedule.burn_in {
        bdm_step(&mut state, model, schedule)?;
    }
    let mut snapshots = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        for _ in 0..schedule.thin.max(1) {
            bdm_step(&mut state, model, schedule)?;
        }
        snapshots.push(state.config.clone());
    }
    Ok(ChainRun { chain, snapshots, stats: state.stats })
}

/// Independent chains `0..n_chains` in parallel; the result is ordered by
/// chain and does not depend on the thread count.
pub fn run_chains(
    model: &PapangelouModel,
    window: Window,
    schedule: &SamplerSchedule,
    n_samples: usize,
    n_chains: usize,
    seed: u64,
) -> Result<Vec<ChainRun>> {
    (0..n_chains as u64).into_par_iter().map(|c| run_chain(model, window, schedule, n_samples, seed, c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelSpec, PairPotential, PairPotentialSpec, TabulatedPotential};
    use crate::stats;

    #[test]
    fn poisson_counts_have_poisson_moments() {
        let w = Window::periodic(2.0, 2).unwrap();
        let mut rng = chain_rng(1, 0);
        let counts: Vec<f64> = (0..100_000)
            .map(|_| sample_poisson(&w, 1.0, MarkDistribution::Unmarked, 0.5, &mut rng).unwrap().len() as f64)
            .collect();
        let m = stats::mean(&counts);
        assert!((m - 4.0).abs() <= 3.0 * (4.0f64 / 1e5).sqrt(), "{m}");
        // Var(N)/|W| = z; the SE of a sample variance of Poisson(4) is about sqrt((2*16 + 4)/n)
        let v = stats::variance(&counts) / 4.0;
        assert!((v - 1.0).abs() <= 3.0 * (36.0f64 / 1e5).sqrt() / 4.0, "{v}");
    }

    #[test]
    fn poisson_marks_are_uniform() {
        let w = Window::periodic(10.0, 2).unwrap();
        let mut rng = chain_rng(2, 0);
        let marks = MarkDistribution::Uniform { min: 0.1, max: 0.3 };
        let c = sample_poisson(&w, 20.0, marks, 1.0, &mut rng).unwrap();
        let m: Vec<f64> = c.points().iter().map(|p| p.mark.unwrap()).collect();
        let d = stats::ks_statistic(&m, |x| ((x - 0.1) / 0.2).clamp(0.0, 1.0));
        assert!(d < stats::ks_critical(m.len(), 0.01), "{d}");
    }

    #[test]
    fn runs_are_deterministic() {
        let w = Window::periodic(3.0, 2).unwrap();
        let m = PapangelouModel::new(ModelSpec::Pair(PairPotentialSpec::strauss(2.0, 1.0, 0.3)), 2).unwrap();
        let mut s = SamplerSchedule::default_for(&m, &w);
        s.burn_in = 2000;
        let a = run_chains(&m, w, &s, 20, 3, 99).unwrap();
        let b = run_chains(&m, w, &s, 20, 3, 99).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.snapshots, y.snapshots);
            assert_eq!(x.stats, y.stats);
        }
        assert_ne!(a[0].snapshots, a[1].snapshots);
        for r in a[0].stats.rates() {
            assert!(r > 0.0 && r < 1.0, "{r}");
        }
    }

    #[test]
    fn thin_zero_takes_consecutive_states() {
        let w = Window::periodic(2.0, 1).unwrap();
        let m = PapangelouModel::poisson(2.0, 1).unwrap();
        let mut s = SamplerSchedule::default_for(&m, &w);
        s.burn_in = 0;
        s.thin = 0;
        let run = run_chain(&m, w, &s, 50, 5, 0).unwrap();
        let st = run.stats;
        assert_eq!(st.births_proposed + st.deaths_proposed + st.moves_proposed, 50);
    }

    #[test]
    fn hard_core_births_are_rejected() {
        let table = TabulatedPotential::new(vec![0.0, 10.0], vec![f64::INFINITY, f64::INFINITY]).unwrap();
        let spec = PairPotentialSpec { potential: PairPotential::Tabulated(table), z: 5.0, beta: 1.0, cutoff: None };
        let m = PapangelouModel::new(ModelSpec::Pair(spec), 2).unwrap();
        let w = Window::periodic(2.0, 2).unwrap();
        let mut state = ChainState::empty(&m, w, chain_rng(3, 0)).unwrap();
        let s = SamplerSchedule { p_birth: 0.5, p_death: 0.3, p_move: 0.2, move_sigma: 0.1, burn_in: 0, thin: 1 };
        for _ in 0..2000 {
            bdm_step(&mut state, &m, &s).unwrap();
            assert!(state.config.len() <= 1);
        }
    }

    #[test]
    fn schedule_validation() {
        let mut s = SamplerSchedule { p_birth: 0.4, p_death: 0.4, p_move: 0.2, move_sigma: 0.1, burn_in: 0, thin: 1 };
        assert!(s.validate().is_ok());
        s.p_move = 0.3;
        assert!(s.validate().is_err());
    }
}
