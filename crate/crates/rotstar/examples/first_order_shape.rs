//! First-order shape of a slowly rotating polytrope: the boundary moves out
//! at the equator and in at the poles.

use rotstar::eos::{power_law, RotationProfile};
use rotstar::radial::solve_radial;
use rotstar::rotating::{first_order_shape, l2_trace_bound, ShapeOptions};
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let star = solve_radial(&power_law(1.5)?, 1.0)?;
    let kappa = 1e-3;
    for (name, profile) in [
        ("rigid", RotationProfile::rigid(1.0)),
        ("omega^2 = r^2", RotationProfile::Power { c: 1.0, k: 2.0 }),
    ] {
        let shape = first_order_shape(&star, &profile, kappa, &ShapeOptions::default())?;
        println!("{name}: R_eq = {:.8} R_pole = {:.8} slope = {:.5}", shape.equatorial_radius, shape.polar_radius, shape.oblateness_slope());
        for m in &shape.xi_l {
            println!("  xi_{}(R) = {:.6e}", m.l, m.value);
        }
        for i in 0..=4 {
            let theta = PI / 2.0 * i as f64 / 4.0;
            println!("  theta = {theta:.4} displacement = {:.6e}", kappa * shape.displacement(theta));
        }
    }
    println!("l = 2 bound (rigid): {:.6e}", l2_trace_bound(&star, 1.0));
    Ok(())
}
