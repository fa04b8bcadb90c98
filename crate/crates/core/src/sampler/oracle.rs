use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{chain_rng, uniform_position};
use crate::error::{Error, Result};
use crate::geometry::{Configuration, MarkedPoint, Position, Window};
use crate::models::PapangelouModel;
use crate::stats;

/// Settings of [`brute_force_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Largest point count kept; larger counts are truncated.
    pub n_max: usize,
    /// Monte Carlo integration points per `Z_n`, `n >= 2`.
    pub mc_samples: usize,
    /// Largest admissible Poisson bound on `P(N > n_max)`.
    pub tail_tolerance: f64,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { n_max: 5, mc_samples: 1_000_000, tail_tolerance: 1e-6, seed: 0 }
    }
}

/// Law of the point count of the finite-volume Gibbs measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// `Z_n = z^n / n! * int_{W^n} exp(-beta H)`, `n = 0..=n_max`.
    pub z_n: Vec<f64>,
    /// Monte Carlo standard errors of `Z_n` (zero where exact).
    pub z_n_se: Vec<f64>,
    /// `P(N = n)` normalised over `0..=n_max`.
    pub probabilities: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// `P(Pois(C_1 |W|) > n_max)`, which dominates the truncated mass.
    pub tail_bound: f64,
}

/// Distribution of `N` from the partition-function terms `Z_n`.
///
/// `Z_0 = 1` and `Z_1` are exact (single-point energies are the same at
/// every location for all models here); `Z_n` for `n >= 2` is a Monte Carlo
/// integral over `n` uniform points. Requires a uniform bound
/// `lambda* <= C_1`, which makes the count dominated by `Pois(C_1 |W|)` and
/// bounds the truncated tail.
pub fn brute_force_oracle(model: &PapangelouModel, window: Window, opts: &OracleOptions) -> Result<OracleResult> {
    model.validate_window(&window)?;
    let c1 = model
        .intensity_upper_bound()
        .ok_or_else(|| Error::invalid("model", "the oracle needs a model whose intensity is bounded above"))?;
    let vol = window.volume();
    let tail_bound = poisson_tail(c1 * vol, opts.n_max);
    if tail_bound > opts.tail_tolerance {
        return Err(Error::TruncationBound { bound: tail_bound, tolerance: opts.tail_tolerance });
    }
    if opts.n_max >= 2 && opts.mc_samples < 2 {
        return Err(Error::invalid("mc_samples", "need at least 2 integration points"));
    }
    let z = model.z();
    let beta = model.beta();
    let mut z_n = vec![1.0];
    let mut z_n_se = vec![0.0];
    if opts.n_max >= 1 {
        let one = Configuration::new(window, model.is_marked(), model.cell_hint(&window));
        let mut rng = chain_rng(opts.seed, 1);
        let centre = vec![window.side() / 2.0; window.dim()];
        let x = MarkedPoint::new(Position::new(&centre)?, model.mark_distribution().sample(&mut rng))?;
        let h = if model.is_marked() {
            // marked single-point energies depend on the mark: integrate it
            let draws: Vec<f64> = (0..opts.mc_samples.max(1))
                .map(|_| {
                    let x = MarkedPoint { pos: x.pos, mark: model.mark_distribution().sample(&mut rng) };
                    boltzmann(model, beta, &x, &one)
                })
                .collect::<Result<_>>()?;
            z_n_se.push(z * vol * stats::standard_error(&draws));
            stats::mean(&draws)
        } else {
            z_n_se.push(0.0);
            boltzmann(model, beta, &x, &one)?
        };
        z_n.push(z * vol * h);
    }
    for n in 2..=opts.n_max {
        let (m, se) = mc_boltzmann(model, window, n, opts)?;
        let scale = (1..=n).fold(1.0, |acc, k| acc * z * vol / k as f64);
        z_n.push(scale * m);
        z_n_se.push(scale * se);
    }
    let total: f64 = z_n.iter().sum();
    let probabilities: Vec<f64> = z_n.iter().map(|v| v / total).collect();
    let mean: f64 = probabilities.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let second: f64 = probabilities.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum();
    Ok(OracleResult { z_n, z_n_se, probabilities, mean, variance: second - mean * mean, tail_bound })
}

fn boltzmann(model: &PapangelouModel, beta: f64, x: &MarkedPoint, empty: &Configuration) -> Result<f64> {
    let mut c = empty.clone();
    c.insert(*x)?;
    let h = model.total_energy(&c)?;
    Ok(if beta == 0.0 {
        1.0
    } else if h == f64::INFINITY {
        0.0
    } else {
        (-beta * h).exp()
    })
}

/// Mean and standard error of `exp(-beta H)` over `n` uniform points.
fn mc_boltzmann(model: &PapangelouModel, window: Window, n: usize, opts: &OracleOptions) -> Result<(f64, f64)> {
    const CHUNKS: usize = 64;
    let beta = model.beta();
    let per_chunk = opts.mc_samples.div_ceil(CHUNKS);
    let chunks: Vec<Vec<f64>> = (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chain_rng(opts.seed, ((n as u64) << 32) | chunk as u64);
            let mut out = Vec::with_capacity(per_chunk);
            let base = Configuration::new(window, model.is_marked(), model.cell_hint(&window));
            for _ in 0..per_chunk {
                let mut c = base.clone();
                while c.len() < n {
                    let p = MarkedPoint::new(
                        uniform_position(&window, &mut rng),
                        model.mark_distribution().sample(&mut rng),
                    )?;
                    if !c.contains_position(&p.pos) {
                        c.insert(p)?;
                    }
                }
                let h = model.total_energy(&c)?;
                out.push(if beta == 0.0 {
                    1.0
                } else if h == f64::INFINITY {
                    0.0
                } else {
                    (-beta * h).exp()
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let all: Vec<f64> = chunks.into_iter().flatten().collect();
    Ok((stats::mean(&all), stats::standard_error(&all)))
}

/// `P(Pois(mu) > n)`.
pub(crate) fn poisson_tail(mu: f64, n: usize) -> f64 {
    let mut term = (-mu).exp();
    let mut cdf = term;
    for k in 1..=n {
        term *= mu / k as f64;
        cdf += term;
    }
    (1.0 - cdf).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelSpec, PairPotential, PairPotentialSpec, TabulatedPotential};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn poisson_reduction_is_exact() {
        let w = Window::free(1.0, 2).unwrap();
        let m = PapangelouModel::poisson(0.5, 2).unwrap();
        let opts = OracleOptions { n_max: 8, mc_samples: 100, ..Default::default() };
        let r = brute_force_oracle(&m, w, &opts).unwrap();
        let mut term = 1.0;
        let mut raw = vec![1.0];
        for k in 1..=8 {
            term *= 0.5 / k as f64;
            raw.push(term);
        }
        let s: f64 = raw.iter().sum();
        for (p, q) in r.probabilities.iter().zip(&raw) {
            assert!((p - q / s).abs() < 1e-14);
        }
    }

    #[test]
    fn hard_core_truncated_at_one() {
        let table = TabulatedPotential::new(vec![0.0, 5.0], vec![f64::INFINITY, f64::INFINITY]).unwrap();
        let spec = PairPotentialSpec { potential: PairPotential::Tabulated(table), z: 0.3, beta: 50.0, cutoff: None };
        let m = PapangelouModel::new(ModelSpec::Pair(spec), 2).unwrap();
        let w = Window::free(1.0, 2).unwrap();
        let opts = OracleOptions { n_max: 1, tail_tolerance: 1.0, ..Default::default() };
        let r = brute_force_oracle(&m, w, &opts).unwrap();
        assert!((r.probabilities[1] / r.probabilities[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn truncation_bound_is_enforced() {
        let m = PapangelouModel::poisson(1.0, 2).unwrap();
        let w = Window::free(1.0, 2).unwrap();
        let err = brute_force_oracle(&m, w, &OracleOptions::default()).unwrap_err();
        assert!(matches!(err, Error::TruncationBound { .. }));
    }

    #[test]
    fn strauss_z2_matches_independent_integration() {
        // Z_2 = z^2/2 int int exp(-beta 1{|u - v| <= R}) with an independent
        // hand-written integrator (no configuration machinery)
        let spec = PairPotentialSpec::strauss(1.0, 1.0, 0.5);
        let m = PapangelouModel::new(ModelSpec::Pair(spec), 2).unwrap();
        let w = Window::free(1.0, 2).unwrap();
        let opts = OracleOptions { n_max: 2, mc_samples: 1_000_000, tail_tolerance: 1.0, seed: 4 };
        let r = brute_force_oracle(&m, w, &opts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 10_000_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let (a, b, c, d): (f64, f64, f64, f64) = (rng.random(), rng.random(), rng.random(), rng.random());
            if (a - c).hypot(b - d) <= 0.5 {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let e = (-1.0f64).exp();
        let mc = 0.5 * (1.0 - p + p * e);
        let mc_se = 0.5 * (1.0 - e) * (p * (1.0 - p) / n as f64).sqrt();
        let se = (mc_se * mc_se + r.z_n_se[2] * r.z_n_se[2]).sqrt();
        assert!((r.z_n[2] - mc).abs() <= 3.0 * se, "{} vs {mc} (se {se})", r.z_n[2]);
    }

    #[test]
    fn tail_formula() {
        assert!((poisson_tail(1.0, 5) - 5.94e-4).abs() < 1e-6);
        assert_eq!(poisson_tail(0.0, 0), 0.0);
    }
}
