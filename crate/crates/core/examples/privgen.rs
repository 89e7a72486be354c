//! Releases outputs only after the mechanism passes the privacy audit.

use liptest::distribution::{ProductDistribution, SeededRng};
use liptest::hypercube::Vertex;
use liptest::mechanism::{RandomizedResponse, TruncatedGeometric};
use liptest::privacy::{priv_gen, GdpParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 3;
    let dist = ProductDistribution::uniform(d)?;
    let params = GdpParams::new(0.7, 0.9, 0.1);
    let x = Vertex::parse("101")?;
    let geo = TruncatedGeometric::new(d, std::f64::consts::LN_2)?;
    for seed in 0..5 {
        let out = priv_gen(&geo, x, &dist, &params, &SeededRng::new(seed))?;
        println!("seed {seed}: {}", serde_json::to_string(&out.release)?);
    }
    // Too little noise for the requested budget: the release is withheld.
    let leaky = RandomizedResponse::new(d, 0.05)?;
    let out = priv_gen(&leaky, x, &dist, &params, &SeededRng::new(0))?;
    println!("leaky mechanism: {}", serde_json::to_string(&out.release)?);
    Ok(())
}
