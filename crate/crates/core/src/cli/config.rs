//! Experiment configuration: a TOML file with `[model]`, `[window]`,
//! `[sampler]` and `[analysis]` sections. Every optional key is filled in by
//! [`ExperimentConfig::resolve`], and the resolved form is what runs and what
//! is recorded in the manifest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{default_wavevectors, WaveIndex, DEFAULT_FRACTIONS};
use crate::geometry::{Boundary, Window};
use crate::models::{ModelSpec, PapangelouModel};
use crate::sampler::SamplerSchedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub side: f64,
    pub dim: usize,
    #[serde(default = "periodic")]
    pub boundary: Boundary,
}

fn periodic() -> Boundary {
    Boundary::Periodic
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    #[serde(default)]
    pub seed: u64,
    pub n_samples: usize,
    #[serde(default)]
    pub n_chains: Option<usize>,
    pub p_birth: Option<f64>,
    pub p_death: Option<f64>,
    pub p_move: Option<f64>,
    pub move_sigma: Option<f64>,
    pub burn_in: Option<u64>,
    pub thin: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub fractions: Option<Vec<f64>>,
    pub wavevectors: Option<Vec<Vec<i64>>>,
    /// Largest `|m_i|` of the default wavevectors.
    pub wavevector_max: Option<i64>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    /// Inner cutoff of the integrability integral and the `delta` of the
    /// occupancy domination check.
    pub delta: Option<f64>,
    /// `epsilon` of the occupancy domination check; the check runs only when
    /// it is set.
    pub epsilon: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub gnz_radius: Option<f64>,
    pub probes_per_axis: Option<usize>,
}

/// An experiment file as written by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub window: WindowConfig,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSampler {
    pub seed: u64,
    pub n_samples: usize,
    pub n_chains: usize,
    pub schedule: SamplerSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedAnalysis {
    pub fractions: Vec<f64>,
    pub wavevectors: Vec<WaveIndex>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta: f64,
    pub epsilon: Option<f64>,
    pub radii: Vec<f64>,
    pub gnz_radius: f64,
    pub probes_per_axis: usize,
}

/// A configuration with every default made explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub model: ModelSpec,
    pub window: WindowConfig,
    pub sampler: ResolvedSampler,
    pub analysis: ResolvedAnalysis,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let window = self.window.window()?;
        let model = PapangelouModel::new(self.model.clone(), window.dim())?;
        model.validate_window(&window)?;

        let s = &self.sampler;
        if s.n_samples == 0 {
            return Err(Error::invalid("sampler.n_samples", "must be >= 1"));
        }
        let d = SamplerSchedule::default_for(&model, &window);
        let p_move = s.p_move.unwrap_or(d.p_move);
        // unspecified birth/death probabilities split the remainder evenly
        let (p_birth, p_death) = match (s.p_birth, s.p_death) {
            (Some(b), Some(dd)) => (b, dd),
            (Some(b), None) => (b, 1.0 - p_move - b),
            (None, Some(dd)) => (1.0 - p_move - dd, dd),
            (None, None) => ((1.0 - p_move) / 2.0, (1.0 - p_move) / 2.0),
        };
        let schedule = SamplerSchedule {
            p_birth,
            p_death,
            p_move,
            move_sigma: s.move_sigma.unwrap_or(d.move_sigma),
            burn_in: s.burn_in.unwrap_or(d.burn_in),
            thin: s.thin.unwrap_or(d.thin),
        };
        schedule.validate()?;
        let n_chains = s.n_chains.unwrap_or(1);
        if n_chains == 0 {
            return Err(Error::invalid("sampler.n_chains", "must be >= 1"));
        }

        let a = &self.analysis;
        let dim = window.dim();
        let fractions = a.fractions.clone().unwrap_or_else(|| DEFAULT_FRACTIONS.to_vec());
        if fractions.is_empty() || fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::invalid("analysis.fractions", format!("need values in (0, 1], got {fractions:?}")));
        }
        let wavevectors = match &a.wavevectors {
            Some(list) => list
                .iter()
                .map(|m| {
                    if m.len() != dim || m.iter().all(|&c| c == 0) {
                        return Err(Error::invalid(
                            "analysis.wavevectors",
                            format!("need nonzero integer vectors of length {dim}, got {m:?}"),
                        ));
                    }
                    let mut out = [0; 3];
                    out[..dim].copy_from_slice(m);
                    Ok(out)
                })
                .collect::<Result<Vec<_>>>()?,
            None => {
                let max = a.wavevector_max.unwrap_or(2);
                if max < 1 {
                    return Err(Error::invalid("analysis.wavevector_max", "must be >= 1"));
                }
                default_wavevectors(dim, max)
            }
        };
        let alpha1 = a.alpha1.unwrap_or(2.0);
        let alpha2 = a.alpha2.unwrap_or(2.0);
        for (name, v) in [("analysis.alpha1", alpha1), ("analysis.alpha2", alpha2)] {
            if !(v > 1.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be finite and > 1, got {v}")));
            }
        }
        let scale = match model.interaction_cutoff() {
            Some(c) if c > 0.0 && c.is_finite() => c,
            _ => model.cell_hint(&window),
        };
        let limit = if window.is_periodic() { window.side() / 2.0 } else { window.max_distance() };
        let radii = match &a.radii {
            Some(r) => r.clone(),
            None => [0.25, 0.5, 0.75, 1.25, 2.0, 3.0].iter().map(|f| f * scale).filter(|&r| r <= limit).collect(),
        };
        if radii.iter().any(|&r| !(r > 0.0 && r <= limit)) {
            return Err(Error::invalid("analysis.radii", format!("need values in (0, {limit}], got {radii:?}")));
        }
        let delta = a.delta.unwrap_or(0.0);
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::invalid("analysis.delta", format!("must be finite and >= 0, got {delta}")));
        }
        if let Some(eps) = a.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::invalid("analysis.epsilon", format!("must be finite and > 0, got {eps}")));
            }
        }
        let gnz_radius = a.gnz_radius.unwrap_or(scale.min(limit));
        if !(gnz_radius > 0.0) {
            return Err(Error::invalid("analysis.gnz_radius", format!("must be > 0, got {gnz_radius}")));
        }
        let probes_per_axis = a.probes_per_axis.unwrap_or(if dim == 3 { 4 } else { 8 });
        if probes_per_axis == 0 {
            return Err(Error::invalid("analysis.probes_per_axis", "must be >= 1"));
        }
        Ok(ResolvedConfig {
            model: self.model.clone(),
            window: self.window.clone(),
            sampler: ResolvedSampler { seed: s.seed, n_samples: s.n_samples, n_chains, schedule },
            analysis: ResolvedAnalysis {
                fractions,
                wavevectors,
                alpha1,
                alpha2,
                delta,
                epsilon: a.epsilon,
                radii,
                gnz_radius,
                probes_per_axis,
            },
        })
    }
}

impl WindowConfig {
    pub fn window(&self) -> Result<Window> {
        Window::new(self.side, self.dim, self.boundary)
    }
}

impl ResolvedConfig {
    pub fn window(&self) -> Result<Window> {
        self.window.window()
    }

    pub fn model(&self) -> Result<PapangelouModel> {
        PapangelouModel::new(self.model.clone(), self.window.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STRAUSS: &str = r#"
[model]
type = "pair"
z = 1.0
beta = 1.0
potential = { kind = "strauss", range = 0.1 }

[window]
side = 4.0
dim = 2

[sampler]
seed = 7
n_samples = 100
"#;

    #[test]
    fn minimal_config_resolves_every_default() {
        let r = ExperimentConfig::parse(STRAUSS).unwrap().resolve().unwrap();
        assert_eq!(r.sampler.seed, 7);
        assert_eq!(r.sampler.n_chains, 1);
        assert_eq!(r.window.boundary, Boundary::Periodic);
        assert_eq!(r.analysis.fractions, DEFAULT_FRACTIONS.to_vec());
        assert!((r.sampler.schedule.p_birth - 0.4).abs() < 1e-15);
        assert_eq!(r.analysis.radii.len(), 6);
        assert!((r.analysis.gnz_radius - 0.1).abs() < 1e-15);
        // the resolved form survives a JSON round trip unchanged
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<ResolvedConfig>(&json).unwrap(), r);
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let bad = STRAUSS.replace("n_samples = 100", "n_samples = 100\nsamples = 3");
        let e = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(e.contains("samples") && e.contains("line"), "{e}");
        let bad = STRAUSS.replace("beta = 1.0", "beta = 1.0\nbogus = 2");
        assert!(ExperimentConfig::parse(&bad).unwrap_err().to_string().contains("bogus"));
        let bad = STRAUSS.replace("beta = 1.0", "beta = -1.0");
        let e = ExperimentConfig::parse(&bad).unwrap().resolve().unwrap_err().to_string();
        assert!(e.contains("beta"), "{e}");
        let bad = STRAUSS.replace("dim = 2", "dim = 5");
        assert!(ExperimentConfig::parse(&bad).unwrap().resolve().is_err());
    }

    #[test]
    fn explicit_schedule_and_wavevectors() {
        let text = STRAUSS.replace(
            "n_samples = 100",
            "n_samples = 10\np_move = 0.0\nburn_in = 5\nthin = 2\n\n[analysis]\nwavevectors = [[1, 0], [0, 2]]",
        );
        let r = ExperimentConfig::parse(&text).unwrap().resolve().unwrap();
        assert_eq!(r.sampler.schedule.p_birth, 0.5);
        assert_eq!(r.sampler.schedule.burn_in, 5);
        assert_eq!(r.analysis.wavevectors, vec![[1, 0, 0], [0, 2, 0]]);
        let bad = text.replace("[0, 2]", "[0, 0]");
        assert!(ExperimentConfig::parse(&bad).unwrap().resolve().is_err());
    }
}
