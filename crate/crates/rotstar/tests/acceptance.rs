//! The twelve acceptance criteria. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotstar::dilation::{DeformationField, FieldGrid};
use rotstar::eos::{check_mass_condition_b, power_law, power_sum, RotationProfile, SampleSpec};
use rotstar::linop::{assemble_mode, kernel_margins, kernel_witness, LinopOptions};
use rotstar::numerics::sup_norm;
use rotstar::radial::{mass_curve, scaling_law_deviation, solve_radial};
use rotstar::rotating::{
    evaluate_f, first_order_shape, frechet_apply, newton_continue, NewtonOptions, PotentialOptions, ShapeOptions,
};
use rotstar::vlasov::{
    polytropic_equivalence, solve_vp_radial, vp_evaluate_f, vp_first_order_forcing, vp_frechet_apply, vp_newton,
    vs_identities, Psi, VlasovAnsatz,
};
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_closed_form() -> Outcome {
    let star = solve_radial(&power_law(2.0).unwrap(), 1.0).unwrap();
    let target = (PI / 2.0).sqrt();
    let k = (2.0 * PI).sqrt();
    let sup = star
        .grid
        .nodes()
        .iter()
        .map(|&r| {
            let exact = if r == 0.0 { 1.0 } else { (k * r).sin() / (k * r) };
            (star.u0_at(r) - exact).abs()
        })
        .fold(0.0, f64::max);
    let (er, em) = ((star.radius - target).abs(), (star.mass - target).abs());
    check(er < 1e-7 && em < 1e-7 && sup < 1e-7, format!("|R-√(π/2)| = {er:.1e}, |M-√(π/2)| = {em:.1e}, sup|u0-sinc| = {sup:.1e}"))
}

fn c2_scaling() -> Outcome {
    let mut worst = 0.0_f64;
    for g in [1.3, 1.5, 1.7] {
        let eos = power_law(g).unwrap();
        for s in [0.6, 1.7] {
            worst = worst.max(scaling_law_deviation(&eos, 1.0, s, 400).unwrap());
        }
    }
    check(worst < 1e-8, format!("max sup deviation {worst:.2e} over γ ∈ {{1.3, 1.5, 1.7}}, s ∈ {{0.6, 1.7}}"))
}

fn c3_mass_derivative() -> Outcome {
    let laws = [
        ("γ=1.3", power_law(1.3).unwrap()),
        ("γ=1.5", power_law(1.5).unwrap()),
        ("γ=1.7", power_law(1.7).unwrap()),
        ("s^1.5+s^1.8", power_sum(&[(1.0, 1.5), (1.0, 1.8)]).unwrap()),
    ];
    let mut worst = 0.0_f64;
    for (_, eos) in &laws {
        for a in [0.7, 1.0, 1.6] {
            let h = 1e-3 * a;
            let m = |x: f64| solve_radial(eos, x).unwrap().mass;
            let fd = (m(a + h) - m(a - h)) / (2.0 * h);
            let mp = solve_radial(eos, a).unwrap().mass_prime;
            worst = worst.max(((mp - fd) / fd).abs());
        }
    }
    check(worst < 1e-5, format!("max relative |M' - FD| = {worst:.2e}"))
}

fn c4_degeneracy() -> Outcome {
    let ladder = [128, 256, 512];
    let opts = LinopOptions::default();
    let deg = solve_radial(&power_law(4.0 / 3.0).unwrap(), 1.0).unwrap();
    let flat = deg.mass_prime.abs() * deg.a / deg.mass;
    let s43: Vec<f64> = kernel_margins(&deg, &[0], &ladder, &opts).unwrap().iter().map(|m| m.sigma_min).collect();
    let ok = solve_radial(&power_law(1.5).unwrap(), 1.0).unwrap();
    let s15: Vec<f64> = kernel_margins(&ok, &[0], &ladder, &opts).unwrap().iter().map(|m| m.sigma_min).collect();
    let decay = s43.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
    let spread = s15.iter().fold(0.0_f64, |a, s| a.max((s / s15[0] - 1.0).abs()));
    check(
        flat < 1e-6 && decay >= 2.0 && spread < 0.1,
        format!("|M'|a/M = {flat:.1e}; γ=4/3 σ_min {} (min ratio {decay:.1}); γ=1.5 spread {spread:.1e}", s43.iter().map(|s| format!("{s:.2e}")).collect::<Vec<_>>().join(" → ")),
    )
}

fn c5_witness() -> Outcome {
    let star = solve_radial(&power_law(4.0 / 3.0).unwrap(), 1.0).unwrap();
    let op = assemble_mode(&star, 0, &LinopOptions { n: 512, ..LinopOptions::default() }).unwrap();
    let xi = kernel_witness(&star, op.nodes());
    let ratio = op.norm(&op.apply(&xi).unwrap()) / op.norm(&xi);
    check(ratio < 1e-4, format!("‖Lξ‖/‖ξ‖ = {ratio:.2e} at n = 512"))
}

fn c6_condition_b() -> Outcome {
    let eos = power_sum(&[(1.0, 1.5), (1.0, 1.8)]).unwrap();
    let cond = check_mass_condition_b(&eos, &SampleSpec::default().points());
    let curve = mass_curve(&eos, 0.5, 2.0, 16).unwrap();
    let margin = curve.samples.iter().map(|s| s.mass_prime.abs() * s.a / s.mass).fold(f64::INFINITY, f64::min);
    check(cond.holds && margin > 1e-3, format!("condition (b) holds = {}, min |M'|a/M = {margin:.3}", cond.holds))
}

fn c7_oblateness() -> Outcome {
    let star = solve_radial(&power_law(1.5).unwrap(), 1.0).unwrap();
    let prof = RotationProfile::rigid(1.0);
    let first = first_order_shape(&star, &prof, 1e-3, &ShapeOptions::default()).unwrap();
    let curve = newton_continue(&star, &prof, &[0.0, 5e-4, 1e-3], &NewtonOptions::default()).unwrap();
    let last = curve.solutions.last().unwrap();
    if curve.stop.is_some() || last.kappa != 1e-3 {
        return Err(format!("continuation stopped early: {:?}", curve.stop));
    }
    let slope = (last.equatorial_radius - last.polar_radius) / last.kappa;
    let pred = first.oblateness_slope();
    let rel = (slope - pred).abs() / pred.abs();
    check(
        first.trace(2) < 0.0 && last.equatorial_radius > last.polar_radius && rel < 0.05,
        format!("ξ₂(R) = {:.3e}; R_eq - R_pole = {:.4e}; slope {slope:.4} vs first order {pred:.4} ({:.2}%)", first.trace(2), last.equatorial_radius - last.polar_radius, 100.0 * rel),
    )
}

/// Smooth random even field with ‖·‖_X equal to `norm`.
fn random_field(rng: &mut ChaCha8Rng, grid: FieldGrid, norm: f64) -> DeformationField {
    let r0 = grid.r_dom;
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = DeformationField::from_fn(grid, |r, t| {
        let s = (r / r0).powi(2);
        let c2 = (2.0 * t).cos();
        r * r * (c[0] + c[1] * s + (c[2] + c[3] * s) * c2 + (c[4] + c[5] * s) * (2.0 * c2 * c2 - 1.0))
    })
    .unwrap();
    let x = f.x_norm();
    f.scaled(norm / x)
}

fn fd_error(j: &[f64], fp: &[f64], fm: &[f64], h: f64) -> f64 {
    let fd: Vec<f64> = fp.iter().zip(fm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let err: Vec<f64> = fd.iter().zip(j).map(|(a, b)| a - b).collect();
    sup_norm(&err) / sup_norm(&fd)
}

fn c8_frechet() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let po = PotentialOptions::default();
    let h = 1e-5;
    let ep = solve_radial(&power_law(1.5).unwrap(), 1.0).unwrap();
    let prof = RotationProfile::rigid(1.0);
    let vp = solve_vp_radial(&VlasovAnsatz::polytropic(0.0, Psi::Quadratic(1.0)).unwrap(), 1.0).unwrap();
    let (mut w_ep, mut w_vp) = (0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let grid = FieldGrid::new(10, 5, ep.radius).unwrap();
        let zn = rng.gen_range(0.0..0.05);
        let z = random_field(&mut rng, grid, zn);
        let xi = random_field(&mut rng, grid, 1.0);
        let kappa = rng.gen_range(0.0..1e-3);
        let j = frechet_apply(&ep, &prof, &z, kappa, &xi, &po).unwrap();
        let fp = evaluate_f(&ep, &prof, &z.axpy(h, &xi).unwrap(), kappa, &po).unwrap();
        let fm = evaluate_f(&ep, &prof, &z.axpy(-h, &xi).unwrap(), kappa, &po).unwrap();
        w_ep = w_ep.max(fd_error(j.values(), fp.values(), fm.values(), h));

        let grid = FieldGrid::new(10, 5, vp.radius).unwrap();
        let zn = rng.gen_range(0.0..0.05);
        let z = random_field(&mut rng, grid, zn);
        let xi = random_field(&mut rng, grid, 1.0);
        let kappa = rng.gen_range(0.0..0.5);
        let j = vp_frechet_apply(&vp, &z, kappa, &xi, &po).unwrap();
        let fp = vp_evaluate_f(&vp, &z.axpy(h, &xi).unwrap(), kappa, &po).unwrap();
        let fm = vp_evaluate_f(&vp, &z.axpy(-h, &xi).unwrap(), kappa, &po).unwrap();
        w_vp = w_vp.max(fd_error(j.values(), fp.values(), fm.values(), h));
    }
    check(w_ep < 1e-4 && w_vp < 1e-4, format!("20 random triples: max relative error EP {w_ep:.1e}, VP {w_vp:.1e}"))
}

fn c9_mass() -> Outcome {
    let ep = solve_radial(&power_law(1.5).unwrap(), 1.0).unwrap();
    let c_ep = newton_continue(&ep, &RotationProfile::rigid(1.0), &[0.0, 5e-4, 1e-3], &NewtonOptions::default()).unwrap();
    let vp = solve_vp_radial(&VlasovAnsatz::polytropic(0.0, Psi::Quadratic(1.0)).unwrap(), 1.0).unwrap();
    let c_vp = vp_newton(&vp, &[0.0, 1e-2, 2e-2], &NewtonOptions::default()).unwrap();
    let drift = |c: &rotstar::rotating::Continuation, m: f64| {
        c.solutions.iter().map(|s| ((s.mass_check - m) / m).abs()).fold(0.0, f64::max)
    };
    let (d_ep, d_vp) = (drift(&c_ep, ep.mass), drift(&c_vp, vp.mass));
    let complete = c_ep.stop.is_none() && c_vp.stop.is_none();
    check(
        complete && d_ep < 1e-6 && d_vp < 1e-6,
        format!("max relative mass drift EP {d_ep:.1e} ({} points), VP {d_vp:.1e} ({} points)", c_ep.solutions.len(), c_vp.solutions.len()),
    )
}

fn c10_vp_identities() -> Outcome {
    let (mut ids, mut g_err, mut eq) = (0.0_f64, 0.0_f64, 0.0_f64);
    for mu in [-1.0, 0.0, 0.5] {
        let ans = VlasovAnsatz::polytropic(mu, Psi::Quadratic(1.0)).unwrap();
        let star = solve_vp_radial(&ans, 1.0).unwrap();
        let v = vs_identities(&star, 400);
        ids = ids.max(v.scaling).max(v.boundary);
        for u in [0.05, 0.3, 1.0, 2.5] {
            g_err = g_err.max(((ans.g_quadrature(u) - ans.g(u)) / ans.g(u)).abs());
        }
        eq = eq.max(polytropic_equivalence(mu, 1.0, 400).unwrap());
    }
    check(
        ids < 1e-7 && g_err < 1e-10 && eq < 1e-6,
        format!("identity residual {ids:.1e}; G quadrature vs closed form {g_err:.1e}; VP/EP profile {eq:.1e}"),
    )
}

fn c11_vp_order() -> Outcome {
    let vp = solve_vp_radial(&VlasovAnsatz::polytropic(0.0, Psi::Quadratic(1.0)).unwrap(), 1.0).unwrap();
    let grid = FieldGrid::new(16, 6, vp.radius).unwrap();
    let fk = sup_norm(vp_first_order_forcing(&vp, grid, &PotentialOptions::default()).unwrap().values());
    let c = vp_newton(&vp, &[0.0, 1e-2, 2e-2], &NewtonOptions::default()).unwrap();
    if c.solutions.len() < 3 {
        return Err(format!("continuation stopped early: {:?}", c.stop));
    }
    let ratio = c.solutions[2].x_norm / c.solutions[1].x_norm;
    check(fk < 1e-10 && (ratio - 4.0).abs() < 0.4, format!("‖∂F/∂κ(0,0)‖ = {fk:.1e}; ‖ζ(2κ)‖/‖ζ(κ)‖ = {ratio:.4} at κ = 1e-2"))
}

fn run_cli(dir: &Path, cmd: &str, config: &Path) -> Result<(), String> {
    let st = Command::new(env!("CARGO_BIN_EXE_rotstar"))
        .args([cmd, "--config"])
        .arg(config)
        .arg("--out")
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if st.status.success() {
        Ok(())
    } else {
        Err(format!("{cmd} failed: {}", String::from_utf8_lossy(&st.stderr)))
    }
}

fn c12_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "gamma = 1.5\nkappa = [0.0, 5e-4]\nladder = [64, 128]\n").map_err(|e| e.to_string())?;
    let mut compared = 0;
    for cmd in ["radial", "mass-curve", "kernel-margin", "perturb", "continue"] {
        let (a, b) = (tmp.path().join(format!("{cmd}-1")), tmp.path().join(format!("{cmd}-2")));
        run_cli(&a, cmd, &cfg)?;
        run_cli(&b, cmd, &cfg)?;
        let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for n in names {
            let (x, y) = (std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
            if x != y {
                return Err(format!("{cmd}: {} differs between runs", n.to_string_lossy()));
            }
            compared += 1;
        }
    }
    check(compared > 0, format!("{compared} output files bit-identical across two runs"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("closed-form star (γ = 2)", c1_closed_form),
        ("power-law scaling identity", c2_scaling),
        ("mass-derivative consistency", c3_mass_derivative),
        ("γ = 4/3 degeneracy", c4_degeneracy),
        ("kernel witness at γ = 4/3", c5_witness),
        ("condition (b) regime", c6_condition_b),
        ("oblateness", c7_oblateness),
        ("Fréchet-derivative fidelity", c8_frechet),
        ("mass invariance along continuation", c9_mass),
        ("kinetic identities", c10_vp_identities),
        ("kinetic first-order vanishing", c11_vp_order),
        ("determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of 12 passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
