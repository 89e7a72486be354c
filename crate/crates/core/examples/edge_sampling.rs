//! Draws edges under a skewed product distribution and compares the
//! empirical law with the exact edge masses.

use std::collections::HashMap;

use liptest::distribution::{ProductDistribution, SeededRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dist = ProductDistribution::new(vec![0.9, 0.2, 0.5])?;
    let mut rng = SeededRng::new(1);
    let n = 200_000;
    let mut counts: HashMap<_, usize> = HashMap::new();
    for _ in 0..n {
        *counts.entry(dist.sample_edge(&mut rng)).or_default() += 1;
    }
    let mut rows: Vec<_> = counts.into_iter().collect();
    rows.sort_by_key(|(e, _)| (e.dimension(), e.base().bits()));
    let mut tv = 0.0;
    for (e, c) in rows {
        let exact = dist.edge_mass(e)?;
        let seen = c as f64 / n as f64;
        tv += (seen - exact).abs() / 2.0;
        println!("{:<12} exact {exact:.5} empirical {seen:.5}", e.to_string());
    }
    println!("total variation {tv:.5}");
    Ok(())
}
