//! Runs the tester on a Lipschitz function and on a steep dictator.
//!
//! `cargo run --example test_lipschitz -- [seed]`

use liptest::distribution::{ProductDistribution, SeededRng};
use liptest::function::{HammingWeight, ScaledDictator};
use liptest::tester::{test_lipschitz, TestMode, TesterConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let d = 6;
    let dist = ProductDistribution::new(vec![0.3, 0.5, 0.7, 0.2, 0.9, 0.4])?;
    let cfg = TesterConfig::new(0.5, 0.1, 1.0 / 144.0, TestMode::Real)?;
    let rng = SeededRng::new(seed);

    let smooth = test_lipschitz(&HammingWeight { d }, &dist, &cfg, &rng)?;
    println!("hamming weight: {:?} after {} queries", smooth.verdict, smooth.queries.sampling);

    let steep = ScaledDictator { d, k: 4.0 };
    let report = test_lipschitz(&steep, &dist, &cfg, &rng)?;
    println!("4 * x_1: {:?} after {} queries", report.verdict, report.queries.sampling);
    if let Some(w) = &report.witness {
        println!("witness {} / {} with gap {}", w.pair.0, w.pair.1, w.gap);
        assert!(w.recheck(&steep));
    }
    Ok(())
}
