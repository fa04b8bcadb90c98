//! Poisson chain (Strauss with beta = 0): Var(N)/|W| should equal z at every
//! window fraction and S(k) should be flat at 1.

use gibbsfluct::estimators::{default_wavevectors, structure_factor, variance_curve, SampleSet, DEFAULT_FRACTIONS};
use gibbsfluct::sampler::{run_chains, SamplerSchedule};
use gibbsfluct::{PapangelouModel, Window};

fn main() -> gibbsfluct::Result<()> {
    let z = 2.0;
    let window = Window::periodic(5.0, 2)?;
    let model = PapangelouModel::poisson(z, 2)?;
    let mut sched = SamplerSchedule::default_for(&model, &window);
    sched.burn_in = 10_000;
    sched.thin = 250;
    let samples = SampleSet::from_runs(run_chains(&model, window, &sched, 100, 10, 1)?)?;

    println!("fraction  Var/|W|     se   (z = {z})");
    for r in variance_curve(&samples, &DEFAULT_FRACTIONS)?.rows {
        println!("{:>8.2}  {:>7.4}  {:.4}", r.fraction, r.var_per_volume, r.se);
    }
    println!("\n     k      S(k)     se");
    for r in structure_factor(&samples, &default_wavevectors(2, 1))? {
        println!("{:>6.3}  {:>7.4}  {:.4}", r.k, r.s, r.se);
    }
    Ok(())
}
