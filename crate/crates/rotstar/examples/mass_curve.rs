//! M(a) over a range of central enthalpies: the power-law exponent and a
//! two-term pressure law that keeps M′ away from zero.

use rotstar::eos::{power_law, power_sum};
use rotstar::radial::mass_curve;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for gamma in [1.5, 4.0 / 3.0, 1.8] {
        let c = mass_curve(&power_law(gamma)?, 0.5, 2.0, 6)?;
        println!("gamma = {gamma:.4}: M ~ a^{:.6}", c.fitted_exponent());
    }
    let c = mass_curve(&power_sum(&[(1.0, 1.5), (1.0, 1.8)])?, 0.5, 2.0, 8)?;
    println!("{:>10} {:>12} {:>12} {:>12}", "a", "R", "M", "M'");
    for s in &c.samples {
        println!("{:>10.5} {:>12.6} {:>12.6} {:>12.5e}", s.a, s.radius, s.mass, s.mass_prime);
    }
    Ok(())
}
