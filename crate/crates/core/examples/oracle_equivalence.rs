//! Count law of a Strauss chain on the unit square against the brute-force
//! partition-function oracle.

use gibbsfluct::cli::compare_with_oracle;
use gibbsfluct::estimators::SampleSet;
use gibbsfluct::models::{ModelSpec, PairPotentialSpec};
use gibbsfluct::sampler::{brute_force_oracle, run_chains, OracleOptions, SamplerSchedule};
use gibbsfluct::{PapangelouModel, Window};

fn main() -> gibbsfluct::Result<()> {
    let model = PapangelouModel::new(ModelSpec::Pair(PairPotentialSpec::strauss(1.0, 2.0, 0.5)), 2)?;
    let window = Window::free(1.0, 2)?;
    // Pois(1) mass beyond 5 points is 5.9e-4
    let opts = OracleOptions { tail_tolerance: 1e-3, ..OracleOptions::default() };
    let oracle = brute_force_oracle(&model, window, &opts)?;
    let mut sched = SamplerSchedule::default_for(&model, &window);
    sched.burn_in = 1_000;
    sched.thin = 20;
    let samples = SampleSet::from_runs(run_chains(&model, window, &sched, 2_000, 10, 3)?)?;
    let test = compare_with_oracle(&samples, &oracle);
    for (n, p) in oracle.probabilities.iter().enumerate() {
        println!("P(N = {n}) = {p:.6}");
    }
    println!("chi-square {:.3} on {} df, p = {:.4}", test.statistic, test.df, test.p_value);
    Ok(())
}
