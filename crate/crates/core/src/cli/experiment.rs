//! Simulation runs, sample directories with their manifest, and the
//! standard analysis of a sample set.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ResolvedConfig;
use crate::bounds::{
    bernoulli_p, integrability_integral, pair_bound, stability_constants, strauss_bound, wr_bound, Integrability,
    QuadOptions,
};
use crate::error::{Error, Result};
use crate::estimators::{
    a1_moment, a2_profile, domination_check, gnz_residual, intensity_moment, structure_factor, variance_curve,
    write_rows_csv, A1Moment, A2Profile, DominationCheck, EstimateSummary, GnzResidual, ProbeOptions, SampleSet,
    StructureRow, TestFunction, VarianceCurve,
};
use crate::geometry::io::{read_sample, write_sample};
use crate::models::{ModelSpec, PairPotential, RadiusLaw};
use crate::sampler::{run_chains, AcceptanceStats, ChainRun};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub chain: u64,
    pub dir: String,
    pub n_snapshots: usize,
    pub acceptance: AcceptanceStats,
}

/// Everything needed to reproduce and verify a sample directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    /// The configuration file exactly as given.
    pub config_text: String,
    pub resolved: ResolvedConfig,
    pub model: String,
    pub chains: Vec<ChainRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs the chains described by `config`.
pub fn simulate(config: &ResolvedConfig) -> Result<Vec<ChainRun>> {
    let model = config.model()?;
    let s = &config.sampler;
    run_chains(&model, config.window()?, &s.schedule, s.n_samples, s.n_chains, s.seed)
}

fn chain_dir(chain: u64) -> String {
    format!("chain_{chain:03}")
}

fn snap_name(i: usize) -> String {
    format!("snap_{i:05}.csv")
}

/// Writes `out/chain_XXX/snap_XXXXX.csv` (with JSON sidecars) and
/// `out/manifest.json`; returns the manifest and its SHA-256.
pub fn write_samples(
    out: &Path,
    config_text: &str,
    config: &ResolvedConfig,
    runs: &[ChainRun],
) -> Result<(Manifest, String)> {
    fs::create_dir_all(out)?;
    let mut chains = Vec::with_capacity(runs.len());
    for run in runs {
        let dir = chain_dir(run.chain);
        let path = out.join(&dir);
        fs::create_dir_all(&path)?;
        for (i, snap) in run.snapshots.iter().enumerate() {
            write_sample(&path.join(snap_name(i)), snap)?;
        }
        chains.push(ChainRecord { chain: run.chain, dir, n_snapshots: run.snapshots.len(), acceptance: run.stats });
    }
    let manifest = Manifest {
        tool: format!("gibbsfluct {}", env!("CARGO_PKG_VERSION")),
        config_text: config_text.to_string(),
        resolved: config.clone(),
        model: config.model()?.name().to_string(),
        chains,
    };
    let bytes = serde_json::to_vec_pretty(&manifest)?;
    fs::write(out.join(MANIFEST), &bytes)?;
    Ok((manifest, sha256_hex(&bytes)))
}

/// Reads a sample directory, checking it against its manifest.
pub fn load_samples(dir: &Path) -> Result<(Manifest, String, SampleSet)> {
    let mpath = dir.join(MANIFEST);
    let mismatch = |reason: String| Error::Manifest { path: mpath.clone(), reason };
    let bytes = fs::read(&mpath).map_err(|e| mismatch(format!("cannot read manifest: {e}")))?;
    let manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| mismatch(e.to_string()))?;
    let window = manifest.resolved.window()?;
    let cell_hint = manifest.resolved.model()?.cell_hint(&window);
    let mut chains = Vec::with_capacity(manifest.chains.len());
    for rec in &manifest.chains {
        let cdir = dir.join(&rec.dir);
        let on_disk = fs::read_dir(&cdir)
            .map_err(|e| mismatch(format!("{}: {e}", rec.dir)))?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
            .count();
        if on_disk != rec.n_snapshots {
            return Err(mismatch(format!("{} holds {on_disk} snapshots, manifest lists {}", rec.dir, rec.n_snapshots)));
        }
        let mut snaps = Vec::with_capacity(rec.n_snapshots);
        for i in 0..rec.n_snapshots {
            let c = read_sample(&cdir.join(snap_name(i)), cell_hint)?;
            if *c.window() != window {
                return Err(mismatch(format!("{}/{} has a different window", rec.dir, snap_name(i))));
            }
            snaps.push(c);
        }
        chains.push(snaps);
    }
    Ok((manifest, sha256_hex(&bytes), SampleSet::new(chains)?))
}

/// A closed-form variance floor and the per-window verdict
/// `Var/|W| >= bound - 3 SE`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    pub verdicts: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub model: String,
    pub seed: u64,
    pub n_samples: usize,
    pub intensity: f64,
    pub intensity_se: f64,
    pub variance: VarianceCurve,
    pub bound: Option<BoundCheck>,
    pub structure: Vec<StructureRow>,
    pub gnz: Vec<GnzResidual>,
    pub a1: A1Moment,
    pub a2: A2Profile,
    pub domination: Option<DominationCheck>,
}

pub(crate) fn probe_options(config: &ResolvedConfig) -> ProbeOptions {
    ProbeOptions { probes_per_axis: config.analysis.probes_per_axis, seed: config.sampler.seed }
}

/// The closed-form variance floor that applies to the model, if any.
pub fn variance_floor(config: &ResolvedConfig, samples: &SampleSet, lambda: f64) -> Result<Option<(String, f64)>> {
    let model = config.model()?;
    let dim = model.dim();
    Ok(match &config.model {
        ModelSpec::Pair(s) => match s.potential {
            PairPotential::Strauss { range } => {
                Some(("strauss_bound".into(), strauss_bound(s.z, s.beta, range, lambda, dim)?))
            }
            _ => match integrability_integral(s, dim, config.analysis.delta, &QuadOptions::default())? {
                Integrability::Integrable { value, tail, .. } if lambda > 0.0 => {
                    let (m2, _) = intensity_moment(samples, &model, 2.0, &probe_options(config))?;
                    Some(("pair_bound".into(), pair_bound(lambda, m2.max(lambda * lambda), value + tail)?))
                }
                _ => None,
            },
        },
        ModelSpec::WidomRowlinson(s) => match s.radii {
            RadiusLaw::Fixed { radius } => Some(("wr_bound".into(), wr_bound(s.z, s.beta, radius, dim)?)),
            RadiusLaw::Uniform { .. } => None,
        },
        ModelSpec::Voronoi(_) | ModelSpec::Knn(_) => None,
    })
}

/// Bernoulli floor `p` and cell side `s = 2 delta + eps` of the occupancy
/// check, when the configuration asks for it.
pub fn domination_parameters(config: &ResolvedConfig) -> Result<Option<(f64, f64)>> {
    let Some(eps) = config.analysis.epsilon else {
        return Ok(None);
    };
    let model = config.model()?;
    let (Some(c1), Some(c2)) = stability_constants(&model) else {
        return Err(Error::invalid(
            "analysis.epsilon",
            format!("the {} model has no uniform intensity bounds for the occupancy check", model.name()),
        ));
    };
    let delta = config.analysis.delta;
    let p = bernoulli_p(model.z(), model.beta(), c1, c2, delta, eps, model.dim())?;
    Ok(Some((2.0 * delta + eps, p)))
}

pub fn run_analysis(config: &ResolvedConfig, samples: &SampleSet) -> Result<AnalysisReport> {
    let model = config.model()?;
    let a = &config.analysis;
    let opts = probe_options(config);
    let (intensity, intensity_se) = samples.intensity();
    let variance = variance_curve(samples, &a.fractions)?;
    let bound = variance_floor(config, samples, intensity)?.map(|(name, value)| BoundCheck {
        verdicts: variance.verdicts(value),
        name,
        value,
    });
    let structure = structure_factor(samples, &a.wavevectors)?;
    let gnz = TestFunction::family(a.gnz_radius)
        .into_iter()
        .map(|f| gnz_residual(samples, &model, f, &opts))
        .collect::<Result<_>>()?;
    let a1 = a1_moment(samples, &model, a.alpha1, &opts)?;
    let a2 = a2_profile(samples, &model, a.alpha2, &a.radii, &opts)?;
    let domination = match domination_parameters(config)? {
        Some((s, p)) => Some(domination_check(samples, s, p, 0.99)?),
        None => None,
    };
    Ok(AnalysisReport {
        model: model.name().to_string(),
        seed: config.sampler.seed,
        n_samples: samples.len(),
        intensity,
        intensity_se,
        variance,
        bound,
        structure,
        gnz,
        a1,
        a2,
        domination,
    })
}

#[derive(Serialize)]
struct VarianceCsvRow {
    fraction: f64,
    volume: f64,
    mean: f64,
    variance: f64,
    var_per_volume: f64,
    se: f64,
    n_samples: usize,
    bound: Option<f64>,
    pass: Option<bool>,
}

#[derive(Serialize)]
struct GnzCsvRow {
    test: &'static str,
    radius: Option<f64>,
    lhs: f64,
    lhs_se: f64,
    rhs: f64,
    rhs_se: f64,
    residual: f64,
    se: f64,
    n_samples: usize,
}

pub(crate) fn gnz_rows(gnz: &[GnzResidual]) -> Vec<impl Serialize> {
    gnz.iter()
        .map(|g| GnzCsvRow {
            test: g.test.name(),
            radius: match g.test {
                TestFunction::Constant => None,
                TestFunction::LocalCount { radius } | TestFunction::HardCore { radius } => Some(radius),
            },
            lhs: g.lhs,
            lhs_se: g.lhs_se,
            rhs: g.rhs,
            rhs_se: g.rhs_se,
            residual: g.residual,
            se: g.se,
            n_samples: g.n_samples,
        })
        .collect()
}

/// Writes the CSV tables and JSON summaries of a report into `out`.
pub fn write_report(out: &Path, report: &AnalysisReport, manifest_hash: Option<&str>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let summary = |estimate: serde_json::Value, se: serde_json::Value| EstimateSummary {
        model: report.model.clone(),
        seed: report.seed,
        n_samples: report.n_samples,
        estimate,
        se,
        manifest_sha256: manifest_hash.map(str::to_string),
    };
    let mut emit = |stem: &str, s: EstimateSummary| -> Result<()> {
        let p = out.join(format!("{stem}.json"));
        s.write(&p)?;
        written.push(p);
        Ok(())
    };

    let rows: Vec<VarianceCsvRow> = report
        .variance
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| VarianceCsvRow {
            fraction: r.fraction,
            volume: r.volume,
            mean: r.mean,
            variance: r.variance,
            var_per_volume: r.var_per_volume,
            se: r.se,
            n_samples: r.n_samples,
            bound: report.bound.as_ref().map(|b| b.value),
            pass: report.bound.as_ref().map(|b| b.verdicts[i]),
        })
        .collect();
    write_rows_csv(&out.join("variance.csv"), &rows)?;
    let est: Vec<f64> = report.variance.rows.iter().map(|r| r.var_per_volume).collect();
    let se: Vec<f64> = report.variance.rows.iter().map(|r| r.se).collect();
    emit("variance", summary(serde_json::json!(est), serde_json::json!(se)))?;

    write_rows_csv(&out.join("structure_factor.csv"), &report.structure)?;
    let est: Vec<f64> = report.structure.iter().map(|r| r.s).collect();
    let se: Vec<f64> = report.structure.iter().map(|r| r.se).collect();
    emit("structure_factor", summary(serde_json::json!(est), serde_json::json!(se)))?;

    write_rows_csv(&out.join("gnz.csv"), &gnz_rows(&report.gnz))?;
    let est: Vec<f64> = report.gnz.iter().map(|g| g.residual).collect();
    let se: Vec<f64> = report.gnz.iter().map(|g| g.se).collect();
    emit("gnz", summary(serde_json::json!(est), serde_json::json!(se)))?;

    emit("a1", summary(serde_json::json!(report.a1.estimate), serde_json::json!(report.a1.se)))?;

    write_rows_csv(&out.join("a2.csv"), &report.a2.rows)?;
    let est: Vec<f64> = report.a2.rows.iter().map(|r| r.estimate).collect();
    let se: Vec<f64> = report.a2.rows.iter().map(|r| r.se).collect();
    emit("a2", summary(serde_json::json!(est), serde_json::json!(se)))?;

    if let Some(d) = &report.domination {
        emit("domination", summary(serde_json::json!(d.lower_bound), serde_json::json!(d.se)))?;
    }

    #[derive(Serialize)]
    struct Full<'a> {
        manifest_sha256: Option<&'a str>,
        #[serde(flatten)]
        report: &'a AnalysisReport,
    }
    let p = out.join("report.json");
    fs::write(&p, serde_json::to_vec_pretty(&Full { manifest_sha256: manifest_hash, report })?)?;
    written.push(p);
    for name in ["variance.csv", "structure_factor.csv", "gnz.csv", "a2.csv"] {
        written.push(out.join(name));
    }
    Ok(written)
}
