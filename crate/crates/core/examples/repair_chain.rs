//! Repairs a grid-valued function one dimension at a time and prints the
//! per-step accounting.

use liptest::distribution::ProductDistribution;
use liptest::function::DenseFunction;
use liptest::oracle;
use liptest::repair::full_repair;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 3;
    let delta = 0.25;
    let values = vec![0.0, 2.5, 0.5, 3.0, 1.0, 1.0, -1.5, 2.0];
    let f = DenseFunction::on_grid(d, values, delta)?;
    let dist = ProductDistribution::new(vec![0.4, 0.6, 0.5])?;

    let run = full_repair(&f, &dist)?;
    for step in &run.steps {
        println!(
            "A_{}: distance {:.4}, violated endpoint mass {:.4}, {} basic steps",
            step.dimension, step.distance, step.violated_endpoint_mass, step.basic_steps
        );
    }
    let g = run.result();
    println!("repaired: {:?}", g.values());
    println!("changed {} vertices, total distance {:.4}", run.modified_vertices().len(), run.total_distance);
    println!("lipschitz: {}", oracle::is_lipschitz_exhaustive(g, 1.0)?);
    let best = oracle::exact_distance_to_lipschitz(&f, &dist, 1.0)?;
    println!("optimal distance {:.4} at d = {}", best.distance, f.dim());
    Ok(())
}
