//! Rotating kinetic star: the response starts at order κ², and the
//! continuation keeps the mass fixed.

use rotstar::rotating::{NewtonOptions, ShapeOptions};
use rotstar::vlasov::{solve_vp_radial, vp_newton, vp_rotation_response, Psi, VlasovAnsatz};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let star = solve_vp_radial(&VlasovAnsatz::polytropic(0.0, Psi::Quadratic(1.0))?, 1.0)?;
    let resp = vp_rotation_response(&star, 1e-2, &ShapeOptions::default())?;
    println!("response per kappa^2/2: slope = {:.6e}", resp.oblateness_slope());
    let curve = vp_newton(&star, &[0.0, 1e-2, 2e-2], &NewtonOptions::default())?;
    let base = star.radius;
    for s in &curve.solutions {
        println!(
            "kappa = {:.2e} R_eq - R = {:.4e} R_pole - R = {:.4e} mass = {:.12} (M = {:.12})",
            s.kappa,
            s.equatorial_radius - base,
            s.polar_radius - base,
            s.mass_check,
            star.mass
        );
    }
    Ok(())
}
