use std::fs;
use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};

use super::load_config;
use crate::bounds::{
    bernoulli_p, beta_critical, c_d_constant, integrability_integral, knn_envelope, pair_bound, stability_constants,
    strauss_bound, voronoi_envelope, wr_bound, BoundName, BoundsReport, Integrability, QuadOptions,
};
use crate::error::{Error, Result};
use crate::models::{ModelSpec, PairPotential, PairPotentialSpec, RadiusLaw};

#[derive(Debug, Args)]
pub struct BoundsCommand {
    #[command(subcommand)]
    which: Which,
    /// Print the report as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write the JSON report to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PotentialKind {
    Strauss,
    Riesz,
    LennardJones,
}

#[derive(Debug, Subcommand)]
enum Which {
    /// The geometric constant C_d.
    #[command(name = "c_d", alias = "c-d")]
    CD {
        #[arg(long)]
        dim: usize,
    },
    /// Root of beta = z exp(-beta K) C_d.
    BetaCritical {
        #[arg(long)]
        z: f64,
        #[arg(long = "K")]
        k: f64,
        #[arg(long)]
        dim: usize,
    },
    /// int |1 - exp(-beta Phi)| outside the ball of radius delta.
    Integrability {
        #[arg(long, value_enum)]
        model: PotentialKind,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        range: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        alpha1: Option<f64>,
        #[arg(long)]
        alpha2: Option<f64>,
    },
    /// Variance floor of the Strauss model.
    Strauss {
        #[arg(long)]
        z: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        range: f64,
        /// Intensity; defaults to z.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        dim: usize,
    },
    /// Variance floor of the Widom-Rowlinson model.
    Wr {
        #[arg(long)]
        z: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        dim: usize,
    },
    /// Variance floor of a pair potential from its moments and integral.
    Pair {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        m2: f64,
        #[arg(long)]
        integral: f64,
    },
    /// Occupancy floor of the Bernoulli domination.
    BernoulliP {
        #[arg(long)]
        z: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        c2: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        dim: usize,
    },
    /// Bounds on the Voronoi intensity given the cell volume of the new point
    VoronoiEnvelope {
        #[arg(long)]
        z: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long = "K")]
        k: f64,
        #[arg(long)]
        cell_volume: f64,
    },
    /// Bounds on the kNN intensity for a bounded potential
    KnnEnvelope {
        #[arg(long)]
        z: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        phi_sup: f64,
        #[arg(long)]
        n_d: f64,
    },
    /// Every bound that applies to the model of an experiment file.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
}

fn need(v: Option<f64>, name: &'static str) -> Result<f64> {
    v.ok_or_else(|| Error::invalid(name, "required for this potential"))
}

fn push_integrability(r: &mut BoundsReport, spec: &PairPotentialSpec, dim: usize, delta: f64) -> Result<Integrability> {
    let v = integrability_integral(spec, dim, delta, &QuadOptions::default())?;
    if let Integrability::Integrable { value, error, tail } = &v {
        r.push(
            BoundName::Integrability,
            *value,
            &[("beta", spec.beta), ("dim", dim as f64), ("delta", delta), ("error", *error), ("tail", *tail)],
            "int_{|y|>delta} |1 - exp(-beta Phi(y))| dy",
        )?;
    }
    Ok(v)
}

impl BoundsCommand {
    pub fn run(&self) -> Result<bool> {
        let mut r = BoundsReport::default();
        let mut verdict = None;
        match &self.which {
            Which::CD { dim } => {
                r.push(
                    BoundName::CD,
                    c_d_constant(*dim)?,
                    &[("dim", *dim as f64)],
                    "(1/3)(|B|_{d-1}/|B|_d)(sin^{d-1}(pi/12)cos(pi/12)/d + int_0^{pi/12} sin^d)",
                )?;
            }
            Which::BetaCritical { z, k, dim } => {
                r.push(
                    BoundName::BetaC,
                    beta_critical(*z, *k, *dim)?,
                    &[("z", *z), ("K", *k), ("dim", *dim as f64)],
                    "beta = z exp(-beta K) C_d",
                )?;
            }
            Which::Integrability { model, dim, beta, delta, range, s, a, b, alpha1, alpha2 } => {
                let potential = match model {
                    PotentialKind::Strauss => PairPotential::Strauss { range: need(*range, "range")? },
                    PotentialKind::Riesz => PairPotential::Riesz { s: need(*s, "s")? },
                    PotentialKind::LennardJones => PairPotential::LennardJones {
                        a: need(*a, "a")?,
                        b: need(*b, "b")?,
                        alpha1: need(*alpha1, "alpha1")?,
                        alpha2: need(*alpha2, "alpha2")?,
                    },
                };
                let spec = PairPotentialSpec { potential, z: 1.0, beta: *beta, cutoff: None };
                verdict = Some(push_integrability(&mut r, &spec, *dim, *delta)?);
            }
            Which::Strauss { z, beta, range, lambda, dim } => {
                let l = lambda.unwrap_or(*z);
                r.push(
                    BoundName::StraussBound,
                    strauss_bound(*z, *beta, *range, l, *dim)?,
                    &[("z", *z), ("beta", *beta), ("R", *range), ("lambda", l), ("dim", *dim as f64)],
                    "lambda^2 / (z + z^2 |B(0,R)| (1 - exp(-beta)))",
                )?;
            }
            Which::Wr { z, beta, radius, dim } => {
                r.push(
                    BoundName::WrBound,
                    wr_bound(*z, *beta, *radius, *dim)?,
                    &[("z", *z), ("beta", *beta), ("R", *radius), ("dim", *dim as f64)],
                    "exp(-beta |B(0,R)|) / (1 + z exp(beta |B(0,R)|) |B(0,2R)|)",
                )?;
            }
            Which::Pair { lambda, m2, integral } => {
                r.push(
                    BoundName::PairBound,
                    pair_bound(*lambda, *m2, *integral)?,
                    &[("lambda", *lambda), ("m2", *m2), ("integral", *integral)],
                    "lambda^2 / (lambda + m2 I)",
                )?;
            }
            Which::BernoulliP { z, beta, c1, c2, delta, eps, dim } => {
                r.push(
                    BoundName::BernoulliP,
                    bernoulli_p(*z, *beta, *c1, *c2, *delta, *eps, *dim)?,
                    &[("z", *z), ("beta", *beta), ("C1", *c1), ("C2", *c2), ("delta", *delta), ("eps", *eps)],
                    "C2 z eps^d exp(-z s^d) / exp(z s^d (C1 - 1)), s = 2 delta + eps",
                )?;
            }
            Which::VoronoiEnvelope { z, beta, k, cell_volume } => {
                r.push_envelope(
                    BoundName::VoronoiEnvelope,
                    voronoi_envelope(*z, *beta, *k, *cell_volume),
                    &[("z", *z), ("beta", *beta), ("K", *k), ("cell_volume", *cell_volume)],
                    "[z exp(-beta K), z exp(beta K) exp(beta |C|)]",
                )?;
            }
            Which::KnnEnvelope { z, beta, k, phi_sup, n_d } => {
                r.push_envelope(
                    BoundName::KnnEnvelope,
                    knn_envelope(*z, *beta, *k, *phi_sup, *n_d),
                    &[("z", *z), ("beta", *beta), ("k", *k as f64), ("phi_sup", *phi_sup), ("N_d", *n_d)],
                    "z exp(-/+ beta (1 + 2 N_d) k sup|Phi|)",
                )?;
            }
            Which::Report { config } => {
                let (_, cfg) = load_config(config, None)?;
                verdict = model_report(&mut r, &cfg)?;
            }
        }
        let mut doc = serde_json::to_value(&r)?;
        if let Some(v) = &verdict {
            doc["integrability"] = serde_json::to_value(v)?;
        }
        if self.json {
            println!("{}", serde_json::to_string_pretty(&doc)?);
        } else {
            print!("{}", r.to_text());
            if let Some(Integrability::NonIntegrable { reason }) = &verdict {
                println!("integrability  non-integrable: {reason}");
            }
        }
        if let Some(path) = &self.out {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, serde_json::to_vec_pretty(&doc)?)?;
        }
        Ok(true)
    }
}

fn model_report(r: &mut BoundsReport, cfg: &super::ResolvedConfig) -> Result<Option<Integrability>> {
    let model = cfg.model()?;
    let dim = model.dim();
    let (z, beta) = (model.z(), model.beta());
    let mut verdict = None;
    match &cfg.model {
        ModelSpec::Pair(s) => {
            if let PairPotential::Strauss { range } = s.potential {
                r.push(
                    BoundName::StraussBound,
                    strauss_bound(z, beta, range, z, dim)?,
                    &[("z", z), ("beta", beta), ("R", range), ("lambda", z), ("dim", dim as f64)],
                    "lambda^2 / (z + z^2 |B(0,R)| (1 - exp(-beta))) at lambda = z",
                )?;
            }
            verdict = Some(push_integrability(r, s, dim, cfg.analysis.delta)?);
        }
        ModelSpec::WidomRowlinson(s) => {
            if let RadiusLaw::Fixed { radius } = s.radii {
                r.push(
                    BoundName::WrBound,
                    wr_bound(z, beta, radius, dim)?,
                    &[("z", z), ("beta", beta), ("R", radius), ("dim", dim as f64)],
                    "exp(-beta |B(0,R)|) / (1 + z exp(beta |B(0,R)|) |B(0,2R)|)",
                )?;
            }
        }
        ModelSpec::Voronoi(s) => {
            r.push(BoundName::CD, c_d_constant(dim)?, &[("dim", dim as f64)], "C_d")?;
            r.push(
                BoundName::BetaC,
                beta_critical(z, s.cap, dim)?,
                &[("z", z), ("K", s.cap), ("dim", dim as f64)],
                "beta = z exp(-beta K) C_d",
            )?;
            let cell = cfg.window()?.volume();
            r.push_envelope(
                BoundName::VoronoiEnvelope,
                voronoi_envelope(z, beta, s.cap, cell),
                &[("z", z), ("beta", beta), ("K", s.cap), ("cell_volume", cell)],
                "[z exp(-beta K), z exp(beta K) exp(beta |C|)] at |C| = |window|",
            )?;
        }
        ModelSpec::Knn(s) => {
            if let (Some(sup), Some(n_d)) = (s.phi_sup(), s.n_d) {
                r.push_envelope(
                    BoundName::KnnEnvelope,
                    knn_envelope(z, beta, s.k, sup, n_d),
                    &[("z", z), ("beta", beta), ("k", s.k as f64), ("phi_sup", sup), ("N_d", n_d)],
                    "z exp(-/+ beta (1 + 2 N_d) k sup|Phi|)",
                )?;
            }
        }
    }
    if let (Some(eps), (Some(c1), Some(c2))) = (cfg.analysis.epsilon, stability_constants(&model)) {
        let delta = cfg.analysis.delta;
        r.push(
            BoundName::BernoulliP,
            bernoulli_p(z, beta, c1, c2, delta, eps, dim)?,
            &[("z", z), ("beta", beta), ("C1", c1), ("C2", c2), ("delta", delta), ("eps", eps)],
            "C2 z eps^d exp(-z s^d) / exp(z s^d (C1 - 1)), s = 2 delta + eps",
        )?;
    }
    Ok(verdict)
}
