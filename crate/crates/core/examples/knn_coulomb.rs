//! k-nearest-neighbour Coulomb energy in d = 3: the local insertion energy
//! equals the difference of total energies.

use gibbsfluct::models::{KnnSpec, RadialPotential};
use gibbsfluct::sampler::{chain_rng, uniform_position};
use gibbsfluct::{Configuration, MarkedPoint, Window};

fn main() -> gibbsfluct::Result<()> {
    let window = Window::periodic(1.0, 3)?;
    let mut rng = chain_rng(8, 0);
    let mut config = Configuration::new(window, false, 0.25);
    while config.len() < 40 {
        config.insert(MarkedPoint::unmarked(uniform_position(&window, &mut rng)))?;
    }
    for k in 1..=3 {
        let spec = KnnSpec { z: 1.0, beta: 1.0, k, potential: RadialPotential::Coulomb, n_d: None };
        let x = uniform_position(&window, &mut rng);
        let ins = spec.insertion(&x, &config)?;
        let mut with_x = config.clone();
        with_x.insert(MarkedPoint::unmarked(x))?;
        let diff = spec.total_energy(&with_x)? - spec.total_energy(&config)?;
        println!(
            "k = {k}: h = {:.10}, H(gamma + x) - H(gamma) = {diff:.10}, {} neighbourhoods changed",
            ins.energy, ins.affected
        );
    }
    Ok(())
}
