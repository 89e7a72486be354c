//! Audits randomized response and the truncated geometric mechanism for
//! pure differential privacy.

use liptest::distribution::{ProductDistribution, SeededRng};
use liptest::mechanism::{RandomizedResponse, TruncatedGeometric};
use liptest::privacy::{dp_check_exhaustive, gdp_test, GdpParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rng = SeededRng::new(3);
    let rr = RandomizedResponse::new(1, 0.25)?;
    let dist = ProductDistribution::uniform(1)?;
    for alpha in [1.0, 1.2] {
        let params = GdpParams::new(alpha, 0.5, 0.1).with_delta(0.05);
        let v = gdp_test(&rr, &dist, &params, &rng)?;
        print!("randomized response, alpha {alpha}: {:?}", v.verdict);
        if let Some(w) = &v.witness {
            print!(" (ratio {:.3} between {} and {})", w.ratio, w.dataset, w.neighbor);
        }
        println!();
    }

    let d = 4;
    let geo = TruncatedGeometric::new(d, std::f64::consts::LN_2)?;
    let v = gdp_test(&geo, &ProductDistribution::uniform(d)?, &GdpParams::new(0.7, 0.9, 0.1), &rng)?;
    println!("truncated geometric, d = {d}: {:?}, guarantee {:?}", v.verdict, v.guarantee);
    let exact = dp_check_exhaustive(&geo, 0.7)?;
    println!("exhaustive max log-ratio {:.6}", exact.max_log_ratio);
    Ok(())
}
