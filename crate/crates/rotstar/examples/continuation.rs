//! Newton continuation of a rigidly rotating polytrope with the total mass
//! held fixed, compared with the first-order shape.

use rotstar::eos::{power_law, RotationProfile};
use rotstar::radial::solve_radial;
use rotstar::rotating::{first_order_shape, newton_continue, NewtonOptions, ShapeOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let star = solve_radial(&power_law(1.5)?, 1.0)?;
    let profile = RotationProfile::rigid(1.0);
    let first = first_order_shape(&star, &profile, 1.0, &ShapeOptions::default())?;
    let curve = newton_continue(&star, &profile, &[0.0, 2.5e-4, 5e-4, 1e-3], &NewtonOptions::default())?;
    println!("M = {:.10}", star.mass);
    for s in &curve.solutions {
        let slope = if s.kappa > 0.0 { (s.equatorial_radius - s.polar_radius) / s.kappa } else { f64::NAN };
        println!(
            "kappa = {:.2e} R_eq = {:.8} R_pole = {:.8} slope = {slope:.4} (first order {:.4}) mass = {:.12} iters = {}",
            s.kappa,
            s.equatorial_radius,
            s.polar_radius,
            first.oblateness_slope(),
            s.mass_check,
            s.newton_iters
        );
    }
    if let Some(stop) = &curve.stop {
        println!("stopped: {stop:?}");
    }
    Ok(())
}
