//! Closed-form constants and lower bounds on `Var(N)/|window|`.

mod quadrature;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ball_volume, check_dim, sphere_area, unit_ball_volume};
use crate::models::{ModelSpec, PairPotential, PairPotentialSpec, PapangelouModel};

pub use crate::models::{knn_envelope, voronoi_envelope};
pub use quadrature::{integrate, QuadOptions, Quadrature};

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

fn check_non_negative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

/// Outcome of the integrability check of `|1 - exp(-beta Phi)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Integrability {
    Integrable {
        value: f64,
        /// Quadrature error estimate.
        error: f64,
        /// Bound on the mass beyond the cutoff that was not integrated.
        tail: f64,
    },
    NonIntegrable {
        reason: String,
    },
}

impl Integrability {
    pub fn value(&self) -> Option<f64> {
        match self {
            Integrability::Integrable { value, .. } => Some(*value),
            Integrability::NonIntegrable { .. } => None,
        }
    }
}

/// `int_{|y| > delta} |1 - exp(-beta Phi(|y|))| dy` in dimension `dim`, as a
/// radial integral up to the potential's cutoff.
///
/// Riesz exponents `s <= d` (and Lennard-Jones attractive exponents
/// `alpha2 <= d`) have non-integrable tails and yield a verdict instead of
/// a number.
pub fn integrability_integral(
    spec: &PairPotentialSpec,
    dim: usize,
    delta: f64,
    opts: &QuadOptions,
) -> Result<Integrability> {
    check_dim(dim)?;
    check_non_negative("delta", delta)?;
    check_non_negative("beta", spec.beta)?;
    let d = dim as f64;
    match &spec.potential {
        PairPotential::Riesz { s } if *s <= d => {
            return Ok(Integrability::NonIntegrable {
                reason: format!("riesz tail r^-{s} is not integrable in dimension {dim} (needs s > {dim})"),
            })
        }
        PairPotential::LennardJones { alpha2, .. } if *alpha2 <= d => {
            return Ok(Integrability::NonIntegrable {
                reason: format!("attractive tail r^-{alpha2} is not integrable in dimension {dim}"),
            })
        }
        _ => {}
    }
    if spec.beta == 0.0 {
        return Ok(Integrability::Integrable { value: 0.0, error: 0.0, tail: 0.0 });
    }
    let cutoff = spec.cutoff();
    if delta >= cutoff {
        return Ok(Integrability::Integrable { value: 0.0, error: 0.0, tail: 0.0 });
    }
    let area = sphere_area(dim, 1.0)?;
    let beta = spec.beta;
    let integrand = |r: f64| {
        let phi = spec.phi_untruncated(r);
        let w = if phi == f64::INFINITY { 1.0 } else { (-(-beta * phi).exp_m1()).abs() };
        w * area * r.powi(dim as i32 - 1)
    };
    let mut breaks = spec.potential.breakpoints();
    // geometric splits resolve the slowly decaying power-law tails
    let mut r = 1e-3;
    while r < cutoff {
        breaks.push(r);
        r *= 2.0;
    }
    let q = integrate(integrand, delta, cutoff, &breaks, opts)?;
    let tail = match &spec.potential {
        PairPotential::Riesz { s } => beta * area * cutoff.powf(d - s) / (s - d),
        PairPotential::LennardJones { a, b, alpha1, alpha2 } => {
            let e = beta * (a * cutoff.powf(-alpha1) + b * cutoff.powf(-alpha2));
            beta * area
                * (a * cutoff.powf(d - alpha1) / (alpha1 - d) + b * cutoff.powf(d - alpha2) / (alpha2 - d))
                * e.exp()
        }
        _ => 0.0,
    };
    Ok(Integrability::Integrable { value: q.value, error: q.error, tail })
}

/// `lambda^2 / (lambda + m2 I)`: lower bound on the asymptotic `Var(N)/|W|`
/// of a pair-potential model with intensity `lambda`, second moment
/// `m2 = E lambda*(0)^2` and integrability integral `I`.
pub fn pair_bound(lambda: f64, m2: f64, integral: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_non_negative("integral", integral)?;
    if !(m2.is_finite() && m2 >= lambda * lambda * (1.0 - 1e-12)) {
        return Err(Error::invalid("m2", format!("second moment {m2} must be >= lambda^2 = {}", lambda * lambda)));
    }
    Ok(lambda * lambda / (lambda + m2 * integral))
}

/// `lambda^2 / (z + z^2 |B(0,R)| (1 - e^{-beta}))` for the Strauss model.
pub fn strauss_bound(z: f64, beta: f64, range: f64, lambda: f64, dim: usize) -> Result<f64> {
    check_positive("z", z)?;
    check_non_negative("beta", beta)?;
    check_non_negative("range", range)?;
    check_non_negative("lambda", lambda)?;
    let ball = ball_volume(dim, range)?;
    Ok(lambda * lambda / (z + z * z * ball * (-(-beta).exp_m1())))
}

/// `e^{-beta |B(0,R)|} / (1 + z e^{beta |B(0,R)|} |B(0,2R)|)` for the
/// Widom-Rowlinson model with fixed radius `R`.
pub fn wr_bound(z: f64, beta: f64, radius: f64, dim: usize) -> Result<f64> {
    check_positive("z", z)?;
    check_non_negative("beta", beta)?;
    check_non_negative("radius", radius)?;
    let b = ball_volume(dim, radius)?;
    let b2 = ball_volume(dim, 2.0 * radius)?;
    Ok((-beta * b).exp() / (1.0 + z * (beta * b).exp() * b2))
}

/// `C_d = (1/3) (|B|_{d-1} / |B|_d) (sin^{d-1}(pi/12) cos(pi/12) / d
///        + int_0^{pi/12} sin^d)`, with `|B|_0 = 1`.
pub fn c_d_constant(dim: usize) -> Result<f64> {
    check_dim(dim)?;
    let bd = unit_ball_volume(dim)?;
    let bd1 = unit_ball_volume(dim - 1)?;
    let t = PI / 12.0;
    let opts = QuadOptions { abs_tol: 1e-16, rel_tol: 1e-13, max_depth: 50 };
    let q = integrate(|x| x.sin().powi(dim as i32), 0.0, t, &[], &opts)?;
    let d = dim as f64;
    Ok(bd1 / bd / 3.0 * (t.sin().powi(dim as i32 - 1) * t.cos() / d + q.value))
}

/// Unique root of `beta = z e^{-beta K} C_d`, by bisection to `1e-12`.
///
/// The right-hand side decreases in `beta` and never exceeds `z C_d`, so the
/// root lies in `[0, z C_d]`.
pub fn beta_critical(z: f64, cap: f64, dim: usize) -> Result<f64> {
    check_positive("z", z)?;
    check_positive("K", cap)?;
    let cd = c_d_constant(dim)?;
    let g = |b: f64| b - z * (-b * cap).exp() * cd;
    let (mut lo, mut hi) = (0.0, z * cd);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `Z = e^{z s^d (C_1 - 1)}`: the exponential series
/// `sum_n C_1^n (z s^d)^n / n! e^{-z s^d}` in closed form.
pub fn dominating_partition(z: f64, c1: f64, s: f64, dim: usize) -> f64 {
    (z * s.powi(dim as i32) * (c1 - 1.0)).exp()
}

/// Bernoulli parameter `p = C_2 z eps^d e^{-z s^d} / Z` with
/// `s = 2 delta + eps`: the cells of side `s` are occupied with probability
/// at least `p`, independently of each other.
///
/// `beta` enters only through the stability constants `C_1 >= C_2 > 0`.
pub fn bernoulli_p(z: f64, _beta: f64, c1: f64, c2: f64, delta: f64, eps: f64, dim: usize) -> Result<f64> {
    check_positive("z", z)?;
    check_positive("C2", c2)?;
    check_positive("eps", eps)?;
    check_non_negative("delta", delta)?;
    check_dim(dim)?;
    if !(c1 >= c2 && c1.is_finite()) {
        return Err(Error::invalid("C1", format!("need C1 >= C2, got C1 = {c1}, C2 = {c2}")));
    }
    let s = 2.0 * delta + eps;
    let x = z * s.powi(dim as i32);
    Ok(c2 * z * eps.powi(dim as i32) * (-x).exp() / dominating_partition(z, c1, s, dim))
}

/// Uniform bounds `(C_1, C_2)` with `C_2 <= lambda* <= C_1`, where known.
pub fn stability_constants(model: &PapangelouModel) -> (Option<f64>, Option<f64>) {
    let z = model.z();
    let beta = model.beta();
    if beta == 0.0 {
        return (Some(z), Some(z));
    }
    let lower = match model.spec() {
        ModelSpec::WidomRowlinson(s) => ball_volume(model.dim(), s.max_radius()).ok().map(|b| z * (-beta * b).exp()),
        ModelSpec::Voronoi(s) => Some(voronoi_envelope(z, beta, s.cap, 0.0).0),
        ModelSpec::Knn(s) => match (s.phi_sup(), s.n_d) {
            (Some(sup), Some(n_d)) => Some(knn_envelope(z, beta, s.k, sup, n_d).0),
            _ => None,
        },
        ModelSpec::Pair(_) => None,
    };
    (model.intensity_upper_bound(), lower)
}

/// Names admitted in a [`BoundsReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundName {
    StraussBound,
    PairBound,
    WrBound,
    CD,
    BetaC,
    Integrability,
    BernoulliP,
    KnnEnvelope,
    VoronoiEnvelope,
}

impl fmt::Display for BoundName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(s.as_str().ok_or(fmt::Error)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub name: BoundName,
    /// The value, or the lower end of an envelope.
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub inputs: BTreeMap<String, f64>,
    pub formula: String,
}

/// Named constants and bounds with their inputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub entries: Vec<BoundEntry>,
}

impl BoundsReport {
    pub fn push(&mut self, name: BoundName, value: f64, inputs: &[(&str, f64)], formula: &str) -> Result<()> {
        self.push_entry(name, value, None, inputs, formula)
    }

    pub fn push_envelope(
        &mut self,
        name: BoundName,
        (lower, upper): (f64, f64),
        inputs: &[(&str, f64)],
        formula: &str,
    ) -> Result<()> {
        if !(lower <= upper) {
            return Err(Error::Numerical(format!("{name}: envelope [{lower}, {upper}] is not ordered")));
        }
        self.push_entry(name, lower, Some(upper), inputs, formula)
    }

    fn push_entry(
        &mut self,
        name: BoundName,
        value: f64,
        upper: Option<f64>,
        inputs: &[(&str, f64)],
        formula: &str,
    ) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) || upper.is_some_and(|u| !u.is_finite()) {
            return Err(Error::Numerical(format!("{name} = {value} is not finite and non-negative")));
        }
        self.entries.push(BoundEntry {
            name,
            value,
            upper,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            formula: formula.to_string(),
        });
        Ok(())
    }

    pub fn get(&self, name: BoundName) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let width = self.entries.iter().map(|e| e.name.to_string().len()).max().unwrap_or(0);
        let mut out = String::new();
        for e in &self.entries {
            let value = match e.upper {
                Some(u) => format!("[{:.10e}, {:.10e}]", e.value, u),
                None => format!("{:.10e}", e.value),
            };
            let inputs: Vec<String> = e.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push_str(&format!(
                "{:<width$}  {}  ({})  {}\n",
                e.name.to_string(),
                value,
                inputs.join(", "),
                e.formula
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn c_d_reference_values() {
        assert!((c_d_constant(1).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!((c_d_constant(2).unwrap() - 1.0 / 36.0).abs() < 1e-12);
        // closed form of int_0^t sin^3 = 2/3 - cos t + cos^3 t / 3
        let t = PI / 12.0;
        let i3 = 2.0 / 3.0 - t.cos() + t.cos().powi(3) / 3.0;
        let c3 = PI / (4.0 * PI / 3.0) / 3.0 * (t.sin().powi(2) * t.cos() / 3.0 + i3);
        assert!((c_d_constant(3).unwrap() - c3).abs() < 1e-14);
        assert!((c3 - 0.006).abs() <= 0.0005);
        assert!(c_d_constant(4).is_err());
    }

    #[test]
    fn c_d_decreases_with_dimension() {
        let c: Vec<f64> = (1..=3).map(|d| c_d_constant(d).unwrap()).collect();
        assert!(c[0] > c[1] && c[1] > c[2]);
    }

    #[test]
    fn beta_critical_reference() {
        let b = beta_critical(1.0, 1.0, 2).unwrap();
        assert!((b - 0.03).abs() <= 0.005, "{b}");
        assert!((b - (-b).exp() / 36.0).abs() <= 1e-12);
        // small cap: fixed point of beta = z C_d
        let b = beta_critical(1.0, 1e-12, 2).unwrap();
        assert!((b - 1.0 / 36.0).abs() < 1e-12);
    }

    #[test]
    fn beta_critical_matches_grid_scan() {
        let b = beta_critical(2.0, 1.0, 1).unwrap();
        let hi = 2.0 / 6.0;
        let n = 1_000_000;
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for i in 0..=n {
            let x = hi * i as f64 / n as f64;
            let g = (x - 2.0 * (-x).exp() / 6.0).abs();
            if g < best {
                best = g;
                arg = x;
            }
        }
        assert!((b - arg).abs() <= hi / n as f64, "{b} vs {arg}");
    }

    #[test]
    fn strauss_integrability_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..20 {
            let beta = rng.random_range(0.01..5.0);
            let r = rng.random_range(0.01..3.0);
            let dim = rng.random_range(1..=3);
            let spec = PairPotentialSpec::strauss(1.0, beta, r);
            let q = integrability_integral(&spec, dim, 0.0, &QuadOptions::default()).unwrap();
            let exact = ball_volume(dim, r).unwrap() * (1.0 - (-beta).exp());
            assert!((q.value().unwrap() - exact).abs() <= 1e-8 * exact, "{beta} {r} {dim}");
        }
    }

    #[test]
    fn riesz_verdicts() {
        let riesz = |s| PairPotentialSpec { potential: PairPotential::Riesz { s }, z: 1.0, beta: 1.0, cutoff: None };
        let v = integrability_integral(&riesz(1.0), 2, 0.0, &QuadOptions::default()).unwrap();
        assert!(matches!(v, Integrability::NonIntegrable { .. }));
        // d = 1, s = 2: int_R |1 - exp(-|y|^-2)| dy = 2 sqrt(pi)
        let v = integrability_integral(&riesz(2.0), 1, 0.0, &QuadOptions::default()).unwrap();
        let Integrability::Integrable { value, tail, .. } = v else { panic!() };
        assert!((value + tail - 2.0 * PI.sqrt()).abs() < 1e-7, "{value} {tail}");
    }

    #[test]
    fn bound_formulas() {
        assert_eq!(strauss_bound(2.0, 1.0, 0.0, 1.5, 2).unwrap(), 1.5 * 1.5 / 2.0);
        assert_eq!(strauss_bound(2.0, 0.0, 0.3, 2.0, 2).unwrap(), 2.0);
        assert_eq!(wr_bound(1.0, 1.0, 0.0, 2).unwrap(), 1.0);
        assert!((wr_bound(1.0, 0.0, 0.5, 2).unwrap() - 1.0 / (1.0 + PI)).abs() < 1e-15);
        let b = PI / 16.0;
        let expect = (-b).exp() / (1.0 + b.exp() * PI / 4.0);
        assert!((wr_bound(1.0, 1.0, 0.25, 2).unwrap() - expect).abs() < 1e-15);
        assert_eq!(pair_bound(2.0, 4.0, 0.0).unwrap(), 2.0);
        assert!((pair_bound(2.0, 4.0, 0.5).unwrap() - 4.0 / 4.0).abs() < 1e-15);
        assert!(pair_bound(2.0, 3.0, 0.5).is_err());
    }

    #[test]
    fn bernoulli_reference() {
        let p = bernoulli_p(1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 2).unwrap();
        // series form of the partition term, summed directly
        let mut series = 0.0;
        let mut term = 1.0;
        for n in 0..60 {
            if n > 0 {
                term *= 1.0 / n as f64;
            }
            series += term * (-1.0f64).exp();
        }
        assert!((p - (-1.0f64).exp() / series).abs() < 1e-15);
        assert!(bernoulli_p(1.0, 0.0, 1.0, 1e-300, 0.1, 1.0, 2).unwrap() < 1e-299);
        let wr_c2 = (-PI / 16.0f64).exp();
        let p = bernoulli_p(1.0, 1.0, 1.0, wr_c2, 0.5, 1.0, 2).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn report_renders_and_serialises() {
        let mut r = BoundsReport::default();
        r.push(BoundName::CD, 1.0 / 36.0, &[("dim", 2.0)], "C_d").unwrap();
        r.push_envelope(BoundName::VoronoiEnvelope, voronoi_envelope(1.0, 1.0, 1.0, 1.0), &[], "env").unwrap();
        assert!(r.to_text().contains("c_d"));
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"voronoi_envelope\""));
        let (lo, hi) = voronoi_envelope(1.0, 1.0, 1.0, 1.0);
        assert!((lo - (-1.0f64).exp()).abs() < 1e-15 && (hi - 2f64.exp()).abs() < 1e-14);
        assert!(r.push(BoundName::BetaC, f64::NAN, &[], "").is_err());
    }

    proptest! {
        #[test]
        fn bounds_are_positive(z in 0.01f64..10.0, beta in 0.0f64..5.0, r in 0.0f64..2.0, dim in 1usize..=3) {
            prop_assert!(strauss_bound(z, beta, r, z, dim).unwrap() > 0.0);
            prop_assert!(wr_bound(z, beta, r, dim).unwrap() > 0.0);
            let b = beta_critical(z, 1.0 + r, dim).unwrap();
            prop_assert!(b > 0.0);
            let (lo, hi) = knn_envelope(z, beta, 2, r, 3.0);
            prop_assert!(lo <= z && z <= hi);
        }
    }
}
