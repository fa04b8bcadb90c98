//! Self-checks of a sample set against its model: GNZ balance with a
//! misspecified control, intensity envelopes and moment conditions, and the
//! count law against the brute-force oracle.

use serde::{Deserialize, Serialize};

use super::config::ResolvedConfig;
use super::experiment::probe_options;
use crate::bounds::{integrability_integral, knn_envelope, voronoi_envelope, Integrability, QuadOptions};
use crate::error::Result;
use crate::estimators::{
    a1_moment, a2_profile, gnz_residual, probe_intensities, A1Moment, A2Profile, GnzResidual, ProbeOptions, SampleSet,
    TestFunction,
};
use crate::geometry::ball_volume;
use crate::models::{voronoi_cell, ModelSpec, PapangelouModel};
use crate::sampler::OracleResult;
use crate::stats::{chi_square, ChiSquareTest};

/// Largest `|residual| / SE` accepted under the true model.
pub const GNZ_ACCEPT: f64 = 3.0;
/// Smallest `|residual| / SE` required of the misspecified control.
pub const GNZ_REJECT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnzCheck {
    pub residuals: Vec<GnzResidual>,
    /// Constant test function under the model with doubled activity.
    pub control: GnzResidual,
    pub passes: bool,
}

pub fn gnz_check(samples: &SampleSet, model: &PapangelouModel, radius: f64, opts: &ProbeOptions) -> Result<GnzCheck> {
    let residuals: Vec<GnzResidual> = TestFunction::family(radius)
        .into_iter()
        .map(|f| gnz_residual(samples, model, f, opts))
        .collect::<Result<_>>()?;
    let wrong = model.with_activity(2.0 * model.z())?;
    let control = gnz_residual(samples, &wrong, TestFunction::Constant, opts)?;
    let passes = residuals.iter().all(|r| r.z_score() <= GNZ_ACCEPT) && control.z_score() > GNZ_REJECT;
    Ok(GnzCheck { residuals, control, passes })
}

/// Sampled intensities compared with the model's pointwise envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub n_probes: usize,
    pub violations: usize,
    pub min_intensity: f64,
    pub max_intensity: f64,
    /// `max_x #affected / k` over the probes, for kNN models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_d_estimate: Option<f64>,
}

const ENVELOPE_SLACK: f64 = 1e-9;

/// Checks every probe intensity against the model's lower and upper bounds:
/// `[z e^{-beta |B(0,R_x)|}, z]` for Widom-Rowlinson,
/// `[z e^{-beta K}, z e^{beta K} e^{beta |C(x, gamma)|}]` for Voronoi,
/// the symmetric kNN envelope with `N_d` given or estimated from the
/// probes, and `[0, z]` for non-negative pair potentials.
pub fn envelope_check(samples: &SampleSet, model: &PapangelouModel, opts: &ProbeOptions) -> Result<EnvelopeCheck> {
    let probes = probe_intensities(samples, model, opts)?;
    let snaps = samples.snapshots();
    let z = model.z();
    let beta = model.beta();
    let mut n_d_estimate = None;
    if let ModelSpec::Knn(s) = model.spec() {
        let mut worst = 1.0f64;
        for (i, x, _) in &probes {
            let ins = s.insertion(&x.pos, snaps[*i])?;
            worst = worst.max(ins.affected as f64 / s.k as f64);
        }
        n_d_estimate = Some(worst);
    }
    let mut violations = 0;
    let (mut lo_seen, mut hi_seen) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, x, lambda) in &probes {
        lo_seen = lo_seen.min(*lambda);
        hi_seen = hi_seen.max(*lambda);
        let (lo, hi) = match model.spec() {
            ModelSpec::WidomRowlinson(s) => {
                let b = ball_volume(model.dim(), s.radius_of(x)?)?;
                (z * (-beta * b).exp(), z)
            }
            ModelSpec::Voronoi(s) => voronoi_envelope(z, beta, s.cap, voronoi_cell(&x.pos, snaps[*i])?.volume),
            ModelSpec::Knn(s) => match s.phi_sup() {
                Some(sup) => knn_envelope(z, beta, s.k, sup, s.n_d.or(n_d_estimate).unwrap_or(1.0)),
                None => (0.0, f64::INFINITY),
            },
            ModelSpec::Pair(_) => (0.0, model.intensity_upper_bound().unwrap_or(f64::INFINITY)),
        };
        if *lambda < lo * (1.0 - ENVELOPE_SLACK) || *lambda > hi * (1.0 + ENVELOPE_SLACK) {
            violations += 1;
        }
    }
    Ok(EnvelopeCheck {
        n_probes: probes.len(),
        violations,
        min_intensity: lo_seen,
        max_intensity: hi_seen,
        n_d_estimate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub a1: A1Moment,
    pub a2: A2Profile,
    pub envelope: EnvelopeCheck,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrability: Option<Integrability>,
    pub passes: bool,
}

/// Moment condition, decay profile, envelope and (for pair potentials)
/// integrability. Passes when no envelope is violated, the moments are
/// finite and the pair integral converges.
pub fn verify_assumptions(config: &ResolvedConfig, samples: &SampleSet) -> Result<AssumptionReport> {
    let model = config.model()?;
    let opts = probe_options(config);
    let a = &config.analysis;
    let a1 = a1_moment(samples, &model, a.alpha1, &opts)?;
    let a2 = a2_profile(samples, &model, a.alpha2, &a.radii, &opts)?;
    let envelope = envelope_check(samples, &model, &opts)?;
    let integrability = match &config.model {
        ModelSpec::Pair(s) => Some(integrability_integral(s, model.dim(), a.delta, &QuadOptions::default())?),
        _ => None,
    };
    let passes = envelope.violations == 0
        && a1.estimate.is_finite()
        && a2.rows.iter().all(|r| r.estimate.is_finite())
        && !matches!(integrability, Some(Integrability::NonIntegrable { .. }));
    Ok(AssumptionReport { a1, a2, envelope, integrability, passes })
}

/// Chi-square comparison of sampled point counts with the oracle law;
/// counts above `n_max` join the last bin.
pub fn compare_with_oracle(samples: &SampleSet, oracle: &OracleResult) -> ChiSquareTest {
    let n_max = oracle.probabilities.len() - 1;
    let mut observed = vec![0u64; n_max + 1];
    for c in samples.snapshots() {
        observed[c.len().min(n_max)] += 1;
    }
    chi_square(&observed, &oracle.probabilities, 5.0)
}
