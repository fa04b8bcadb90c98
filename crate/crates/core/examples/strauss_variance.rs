//! Number variance of a Strauss process against its non-hyperuniformity
//! floor, on two window sizes.

use gibbsfluct::bounds::strauss_bound;
use gibbsfluct::estimators::{variance_curve, SampleSet, DEFAULT_FRACTIONS};
use gibbsfluct::models::{ModelSpec, PairPotentialSpec};
use gibbsfluct::sampler::{run_chains, SamplerSchedule};
use gibbsfluct::{PapangelouModel, Window};

fn main() -> gibbsfluct::Result<()> {
    let (z, beta, range) = (1.0, 1.0, 0.1);
    let model = PapangelouModel::new(ModelSpec::Pair(PairPotentialSpec::strauss(z, beta, range)), 2)?;
    for side in [4.0, 8.0] {
        let window = Window::periodic(side, 2)?;
        let mut sched = SamplerSchedule::default_for(&model, &window);
        sched.burn_in = 50_000;
        sched.thin = (12.0 * side * side) as u64;
        let samples = SampleSet::from_runs(run_chains(&model, window, &sched, 100, 10, 7)?)?;
        let (lambda, lambda_se) = samples.intensity();
        let bound = strauss_bound(z, beta, range, lambda, 2)?;
        println!("L = {side}: lambda = {lambda:.4} ± {lambda_se:.4}, floor = {bound:.4}");
        let curve = variance_curve(&samples, &DEFAULT_FRACTIONS)?;
        for (r, ok) in curve.rows.iter().zip(curve.verdicts(bound)) {
            let verdict = if ok { "PASS" } else { "FAIL" };
            println!("  {:.1}  {:.4} ± {:.4}  {verdict}", r.fraction, r.var_per_volume, r.se);
        }
    }
    Ok(())
}
