//! Exact distance to the Lipschitz class with a checkable certificate.

use liptest::distribution::ProductDistribution;
use liptest::function::DenseFunction;
use liptest::oracle::exact_distance_to_lipschitz;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 4;
    let f = DenseFunction::from_fn(d, |x| 4.0 * f64::from(x.coord(1)))?;
    for p in [vec![0.5; d], vec![0.1, 0.5, 0.5, 0.5], vec![0.9, 0.3, 0.6, 0.2]] {
        let dist = ProductDistribution::new(p.clone())?;
        let cert = exact_distance_to_lipschitz(&f, &dist, 1.0)?;
        println!(
            "p = {p:?}: distance {:.4}, {} vertices changed, certificate ok: {}",
            cert.distance,
            cert.witness_set.len(),
            cert.verify(&f, &dist, 1.0)?
        );
    }
    Ok(())
}
