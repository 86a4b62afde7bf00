//! Smallest singular value of the even harmonic blocks of the linearized
//! operator under grid refinement. At γ = 4/3 the l = 0 block loses
//! injectivity and the variational solution supplies the kernel vector.

use rotstar::eos::power_law;
use rotstar::linop::{assemble_mode, kernel_margins, kernel_witness, LinopOptions};
use rotstar::radial::solve_radial;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = LinopOptions::default();
    for gamma in [1.5, 4.0 / 3.0] {
        let star = solve_radial(&power_law(gamma)?, 1.0)?;
        for m in kernel_margins(&star, &[0, 2], &[64, 128, 256], &opts)? {
            println!("gamma = {gamma:.4} l = {} n = {:>3} sigma_min = {:.3e}", m.l, m.n, m.sigma_min);
        }
    }
    let star = solve_radial(&power_law(4.0 / 3.0)?, 1.0)?;
    let op = assemble_mode(&star, 0, &LinopOptions { n: 256, ..opts })?;
    let xi = kernel_witness(&star, op.nodes());
    let image = op.apply(&xi)?;
    println!("witness: |L xi|/|xi| = {:.3e}", op.norm(&image) / op.norm(&xi));
    Ok(())
}
