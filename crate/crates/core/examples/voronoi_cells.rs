//! Incremental Voronoi insertion: the new cell is exactly the volume the
//! neighbours give up, and lambda* sits inside its volume envelope.

use gibbsfluct::geometry::Position;
use gibbsfluct::models::{voronoi_envelope, voronoi_insertion, ModelSpec, VoronoiSpec};
use gibbsfluct::sampler::{chain_rng, uniform_position};
use gibbsfluct::{Configuration, MarkedPoint, PapangelouModel, Window};

fn main() -> gibbsfluct::Result<()> {
    let window = Window::periodic(1.0, 2)?;
    let spec = VoronoiSpec::new(1.0, 1.0, 0.08);
    let model = PapangelouModel::new(ModelSpec::Voronoi(spec.clone()), 2)?;
    let mut rng = chain_rng(5, 0);
    let mut config = Configuration::new(window, false, 0.25);
    while config.len() < 20 {
        config.insert(MarkedPoint::unmarked(uniform_position(&window, &mut rng)))?;
    }

    let x = Position::new(&[0.5, 0.5])?;
    let ins = voronoi_insertion(&x, &config)?;
    println!("new cell: {} vertices, volume {:.6}", ins.cell.vertices.len(), ins.cell.volume);
    for (id, old, new) in &ins.changed {
        println!("  neighbour {id:>2}: {:.6} -> {:.6}", old.volume, new.volume);
    }
    println!("released volume {:.6}", ins.released_volume());

    let lambda = model.papangelou(&MarkedPoint::unmarked(x), &config)?;
    let (lo, hi) = voronoi_envelope(spec.z, spec.beta, spec.cap, ins.cell.volume);
    println!("lambda* = {lambda:.6} in [{lo:.6}, {hi:.6}]");
    Ok(())
}
