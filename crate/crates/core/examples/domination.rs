//! Occupancy of side-s cells in Widom-Rowlinson samples against the
//! Bernoulli floor p.

use gibbsfluct::bounds::{bernoulli_p, stability_constants};
use gibbsfluct::estimators::{domination_check, SampleSet};
use gibbsfluct::models::{ModelSpec, WidomRowlinsonSpec};
use gibbsfluct::sampler::{run_chains, SamplerSchedule};
use gibbsfluct::{PapangelouModel, Window};

fn main() -> gibbsfluct::Result<()> {
    let (z, beta, radius) = (1.0, 1.0, 0.25);
    let model = PapangelouModel::new(ModelSpec::WidomRowlinson(WidomRowlinsonSpec::fixed(z, beta, radius)), 2)?;
    let window = Window::periodic(6.0, 2)?;
    let mut sched = SamplerSchedule::default_for(&model, &window);
    sched.burn_in = 20_000;
    sched.thin = 150;
    let samples = SampleSet::from_runs(run_chains(&model, window, &sched, 50, 8, 10)?)?;

    let (c1, c2) = stability_constants(&model);
    let (c1, c2) = (c1.expect("upper bound"), c2.expect("lower bound"));
    let (delta, eps) = (2.0 * radius, 1.0);
    let p = bernoulli_p(z, beta, c1, c2, delta, eps, 2)?;
    let check = domination_check(&samples, 2.0 * delta + eps, p, 0.99)?;
    println!("C1 = {c1:.4}, C2 = {c2:.4}, p = {p:.5}");
    println!(
        "min occupancy {:.4}, 99% lower bound {:.4}: {}",
        check.min_occupancy,
        check.lower_bound,
        if check.passes { "PASS" } else { "FAIL" }
    );
    Ok(())
}
