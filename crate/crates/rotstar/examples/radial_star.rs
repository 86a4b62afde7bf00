//! Radial fluid star for a few power laws, with the closed form at γ = 2.

use rotstar::eos::power_law;
use rotstar::radial::{gamma_43_identity_check, solve_radial};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for gamma in [1.3, 1.5, 2.0] {
        let star = solve_radial(&power_law(gamma)?, 1.0)?;
        println!("gamma = {gamma}: R = {:.8} M = {:.8} M' = {:.6e}", star.radius, star.mass, star.mass_prime);
    }
    // γ = 2: u₀ = sin(kr)/(kr), k = √(2π)
    let star = solve_radial(&power_law(2.0)?, 1.0)?;
    let k = (2.0 * std::f64::consts::PI).sqrt();
    let err = star
        .grid
        .nodes()
        .iter()
        .map(|&r| if r == 0.0 { (star.u0_at(0.0) - 1.0).abs() } else { (star.u0_at(r) - (k * r).sin() / (k * r)).abs() })
        .fold(0.0, f64::max);
    println!("gamma = 2 sup |u0 - sin(kr)/(kr)| = {err:.2e}, R - sqrt(pi/2) = {:.2e}", star.radius - (std::f64::consts::PI / 2.0).sqrt());

    let degenerate = solve_radial(&power_law(4.0 / 3.0)?, 1.0)?;
    let id = gamma_43_identity_check(&degenerate)?;
    println!("gamma = 4/3: M' a/M = {:.2e}, identity residual {:.2e}", degenerate.mass_prime / degenerate.mass, id.residual);
    Ok(())
}
