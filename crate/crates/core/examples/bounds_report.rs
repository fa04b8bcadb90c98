//! Closed-form constants and variance floors.

use gibbsfluct::bounds::{
    bernoulli_p, beta_critical, c_d_constant, integrability_integral, pair_bound, strauss_bound, wr_bound, BoundName,
    BoundsReport, QuadOptions,
};
use gibbsfluct::models::{PairPotential, PairPotentialSpec};

fn main() -> gibbsfluct::Result<()> {
    let mut report = BoundsReport::default();
    for d in 1..=3 {
        report.push(BoundName::CD, c_d_constant(d)?, &[("dim", d as f64)], "c_d")?;
    }
    report.push(BoundName::BetaC, beta_critical(1.0, 1.0, 2)?, &[("z", 1.0), ("K", 1.0), ("dim", 2.0)], "beta_c")?;
    report.push(
        BoundName::StraussBound,
        strauss_bound(1.0, 1.0, 0.1, 0.98, 2)?,
        &[("z", 1.0), ("beta", 1.0), ("R", 0.1), ("lambda", 0.98)],
        "lambda^2 / (z + z^2 |B(0,R)| (1 - e^-beta))",
    )?;
    report.push(BoundName::WrBound, wr_bound(1.0, 1.0, 0.25, 2)?, &[("R", 0.25)], "wr")?;

    // Lennard-Jones: integrability with a hard inner cutoff, then the pair floor
    let lj = PairPotentialSpec {
        potential: PairPotential::LennardJones { a: 0.01, b: 0.01, alpha1: 12.0, alpha2: 6.0 },
        z: 1.0,
        beta: 0.5,
        cutoff: None,
    };
    let integral = integrability_integral(&lj, 2, 0.2, &QuadOptions::default())?;
    println!("lennard-jones integrability: {integral:?}");
    if let Some(i) = integral.value() {
        report.push(BoundName::PairBound, pair_bound(0.8, 0.7, i)?, &[("lambda", 0.8), ("m2", 0.7)], "pair")?;
    }
    let c2 = (-std::f64::consts::PI / 16.0).exp();
    report.push(
        BoundName::BernoulliP,
        bernoulli_p(1.0, 1.0, 1.0, c2, 0.5, 1.0, 2)?,
        &[("delta", 0.5), ("eps", 1.0)],
        "C2 z eps^d e^{-z s^d} / Z",
    )?;
    print!("{}", report.to_text());
    Ok(())
}
