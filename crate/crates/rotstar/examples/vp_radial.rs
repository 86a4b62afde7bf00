//! Radial kinetic star from a polytropic phase-space ansatz, its identities
//! and its fluid twin.

use rotstar::vlasov::{polytropic_equivalence, solve_vp_radial, vs_identities, Psi, VlasovAnsatz};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for mu in [-1.0, 0.0, 0.5] {
        let ansatz = VlasovAnsatz::polytropic(mu, Psi::Quadratic(1.0))?;
        let star = solve_vp_radial(&ansatz, 1.0)?;
        let ids = vs_identities(&star, 200);
        println!(
            "mu = {mu}: gamma_eff = {:.4} R = {:.8} M = {:.8} flux {:.1e} identities {:.1e} {:.1e}",
            ansatz.effective_gamma(),
            star.radius,
            star.mass,
            star.flux_residual(),
            ids.scaling,
            ids.boundary
        );
        println!("  G(0.5): closed form {:.12} quadrature {:.12}", ansatz.g(0.5), ansatz.g_quadrature(0.5));
        println!("  density profile vs fluid twin: {:.2e}", polytropic_equivalence(mu, 1.0, 200)?);
    }
    Ok(())
}
