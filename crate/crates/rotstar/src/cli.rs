//! Command-line front end. Each subcommand reads a [`RunConfig`], runs one
//! computation and writes CSV/JSON files into the output directory.

use crate::config::{Model, RunConfig};
use crate::dilation::{DeformationField, DilationMap, FieldGrid};
use crate::eos::{check_mass_condition_b, validate_assumptions, AssumptionReport, MassConditionReport};
use crate::error::RunError;
use crate::linop::{assemble_mode, kernel_margins, LinopOptions, RadialBase};
use crate::output::{write_json, Table};
use crate::radial::{mass_curve, solve_radial, MassSample, RadialStar};
use crate::rotating::{first_order_shape, newton_continue, Continuation, ShapeReport, StopReason};
use crate::vlasov::{solve_vp_radial, vp_newton, vp_rotation_response, vs_identities, VlasovStar, VsIdentities};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "rotstar", version, about = "Steady states of rotating self-gravitating bodies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// flat TOML config; defaults apply to missing keys
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// output directory (overrides `out` in the config; default "out")
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// worker threads
    #[arg(long, global = true, value_name = "N", env = "ROTSTAR_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Radial fluid star: star.json, star.csv
    Radial,
    /// M(a), M′(a) over [a_min, a_max]: mass_curve.csv
    MassCurve,
    /// σ_min of the mode operators over the refinement ladder: kernel_margin.csv
    KernelMargin,
    /// First-order rotating fluid shape: shape.csv, modes.csv, shape.json
    Perturb,
    /// Newton continuation of the fluid model in κ: continuation.csv, kappa_*.json
    Continue,
    /// Structural checks of the equation of state: eos_check.json
    EosCheck,
    /// Radial kinetic star: star.json, star.csv
    VpRadial,
    /// Leading rotational response of the kinetic model
    VpPerturb,
    /// Newton continuation of the kinetic model in κ
    VpContinue,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Loads the config, sets up the thread pool and dispatches.
pub fn execute(cli: &Cli) -> Result<String, RunError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli.out.clone().or_else(|| cfg.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Solver(format!("thread pool: {e}")))?;
    pool.install(|| run_command(cli.command, &cfg, &out))
}

/// Runs one subcommand with an already loaded config. Returns the summary
/// line printed on success.
pub fn run_command(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    match cmd {
        Command::Radial => cmd_radial(cfg, out),
        Command::VpRadial => cmd_vp_radial(cfg, out),
        Command::MassCurve => cmd_mass_curve(cfg, out),
        Command::EosCheck => cmd_eos_check(cfg, out),
        Command::KernelMargin => cmd_kernel_margin(cfg, out),
        Command::Perturb => {
            let star = solve_radial(&cfg.equation_of_state()?, cfg.a)?;
            let rep = first_order_shape(&star, &cfg.rotation_profile()?, cfg.kappa_perturb, &cfg.shape())?;
            write_shape(cfg, out, &rep)
        }
        Command::VpPerturb => {
            let star = solve_vp_radial(&cfg.ansatz()?, cfg.a)?;
            let rep = vp_rotation_response(&star, cfg.kappa_perturb, &cfg.shape())?;
            write_shape(cfg, out, &rep)
        }
        Command::Continue => {
            let star = solve_radial(&cfg.equation_of_state()?, cfg.a)?;
            let c = newton_continue(&star, &cfg.rotation_profile()?, &cfg.kappa, &cfg.newton())?;
            write_continuation(cfg, out, star.radius, star.mass, None, &c)
        }
        Command::VpContinue => {
            let star = solve_vp_radial(&cfg.ansatz()?, cfg.a)?;
            let c = vp_newton(&star, &cfg.kappa, &cfg.newton())?;
            write_continuation(cfg, out, star.radius, star.mass, Some(cfg.mu), &c)
        }
    }
}

const MASS_CONDITION_TOL: f64 = 1e-6;

fn radial_table(base: &dyn Fn(f64) -> [f64; 3], nodes: &[f64]) -> Table {
    let mut t = Table::new(&["r [length]", "u0 [enthalpy]", "u0_prime [enthalpy/length]", "rho0 [density]"]);
    for &r in nodes {
        let [u, up, rho] = base(r);
        t.push(&[r, u, up, rho]);
    }
    t
}

#[derive(Serialize)]
struct EpStarFile<'a> {
    model: Model,
    gamma: Option<f64>,
    star: &'a RadialStar,
    central_density: f64,
    mass_condition_holds: bool,
}

fn cmd_radial(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let eos = cfg.equation_of_state()?;
    let star = solve_radial(&eos, cfg.a)?;
    let holds = star.mass_prime.abs() >= MASS_CONDITION_TOL * star.mass / star.a;
    write_json(
        &out.join("star.json"),
        &EpStarFile { model: Model::Ep, gamma: eos.is_power_law(), star: &star, central_density: star.central_density(), mass_condition_holds: holds },
    )?;
    radial_table(&|r| [star.u0_at(r), star.u0p_at(r), star.rho0_at(r)], star.grid.nodes()).write(&out.join("star.csv"))?;
    let mut line = format!("R = {:.10} M = {:.10} M' = {:.6e}", star.radius, star.mass, star.mass_prime);
    if !holds {
        match eos.is_power_law() {
            Some(g) if (g - 4.0 / 3.0).abs() < 1e-9 => line.push_str(" mass condition FAILED (γ=4/3)"),
            Some(g) => line.push_str(&format!(" mass condition FAILED (γ={g})")),
            None => line.push_str(" mass condition FAILED (M'(a) = 0)"),
        }
    }
    Ok(line)
}

#[derive(Serialize)]
struct VpStarFile<'a> {
    model: Model,
    mu: f64,
    effective_gamma: f64,
    star: &'a VlasovStar,
    flux_residual: f64,
    identities: VsIdentities,
}

fn cmd_vp_radial(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let ansatz = cfg.ansatz()?;
    let star = solve_vp_radial(&ansatz, cfg.a)?;
    let ids = vs_identities(&star, 200);
    write_json(
        &out.join("star.json"),
        &VpStarFile {
            model: Model::Vp,
            mu: ansatz.mu,
            effective_gamma: ansatz.effective_gamma(),
            star: &star,
            flux_residual: star.flux_residual(),
            identities: ids,
        },
    )?;
    radial_table(&|r| [star.u0_at(r), star.u0p_at(r), star.rho0_at(r)], star.grid.nodes()).write(&out.join("star.csv"))?;
    Ok(format!(
        "R = {:.10} M = {:.10} M' = {:.6e} flux residual = {:.3e} identity residuals = {:.3e}, {:.3e}",
        star.radius,
        star.mass,
        star.mass_prime,
        star.flux_residual(),
        ids.scaling,
        ids.boundary
    ))
}

fn cmd_mass_curve(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let samples: Vec<MassSample> = match cfg.model {
        Model::Ep => mass_curve(&cfg.equation_of_state()?, cfg.a_min, cfg.a_max, cfg.n_samples)?.samples,
        Model::Vp => {
            let ansatz = cfg.ansatz()?;
            let (l0, l1) = (cfg.a_min.ln(), cfg.a_max.ln());
            let n = cfg.n_samples;
            let r: Result<Vec<MassSample>, RunError> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let a = (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp();
                    let s = solve_vp_radial(&ansatz, a)?;
                    Ok(MassSample { a, radius: s.radius, mass: s.mass, mass_prime: s.mass_prime })
                })
                .collect();
            r?
        }
    };
    let mut header = vec!["a [enthalpy]", "R [length]", "M [mass]", "dM_da [mass/enthalpy]"];
    if cfg.model == Model::Vp {
        header.push("mu [1]");
    }
    let mut t = Table::new(&header);
    for s in &samples {
        let mut row = vec![s.a, s.radius, s.mass, s.mass_prime];
        if cfg.model == Model::Vp {
            row.push(cfg.mu);
        }
        t.push(&row);
    }
    t.write(&out.join("mass_curve.csv"))?;
    let margin = samples.iter().map(|s| s.mass_prime.abs() * s.a / s.mass).fold(f64::INFINITY, f64::min);
    Ok(format!("{} samples, min |M'| a/M = {margin:.6e}", samples.len()))
}

#[derive(Serialize)]
struct EosCheckFile {
    gamma: f64,
    gamma_star: f64,
    power_law: Option<f64>,
    assumptions: AssumptionReport,
    mass_condition_b: MassConditionReport,
}

fn cmd_eos_check(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let eos = cfg.equation_of_state()?;
    let spec = cfg.samples();
    let assumptions = validate_assumptions(&eos, &spec);
    let cond = check_mass_condition_b(&eos, &spec.points());
    let line = format!(
        "assumptions {} condition (b) {}",
        if assumptions.all_pass() { "pass" } else { "FAIL" },
        if cond.holds { "holds" } else { "does not hold" }
    );
    write_json(
        &out.join("eos_check.json"),
        &EosCheckFile { gamma: eos.gamma, gamma_star: eos.gamma_star, power_law: eos.is_power_law(), assumptions, mass_condition_b: cond },
    )?;
    Ok(line)
}

fn cmd_kernel_margin(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let ep;
    let vp;
    let base: &dyn RadialBase = match cfg.model {
        Model::Ep => {
            ep = solve_radial(&cfg.equation_of_state()?, cfg.a)?;
            &ep
        }
        Model::Vp => {
            vp = solve_vp_radial(&cfg.ansatz()?, cfg.a)?;
            &vp
        }
    };
    // deformations are even in x₃, so only even harmonics occur
    let ls: Vec<usize> = (0..=cfg.l_max).step_by(2).collect();
    let opts = cfg.linop();
    let margins = kernel_margins(base, &ls, &cfg.ladder, &opts)?;
    let mut t = Table::new(&["l [1]", "n [1]", "sigma_min [1]"]);
    for m in &margins {
        t.push(&[m.l as f64, m.n as f64, m.sigma_min]);
    }
    t.write(&out.join("kernel_margin.csv"))?;
    if cfg.dump_operator {
        let n = *cfg.ladder.last().expect("validated non-empty");
        for &l in &ls {
            let op = assemble_mode(base, l, &LinopOptions { n, ..opts })?;
            let m = op.weighted_matrix();
            let cols: Vec<String> = (0..m.cols()).map(|j| format!("c{j} [1]")).collect();
            let mut t = Table::new(&cols);
            for i in 0..m.rows() {
                t.push(m.row(i));
            }
            t.write(&out.join(format!("operator_l{l}.csv")))?;
        }
    }
    let ratios: Vec<String> = ls
        .iter()
        .map(|&l| {
            let s: Vec<f64> = margins.iter().filter(|m| m.l == l).map(|m| m.sigma_min).collect();
            format!("l={l}: {:.3e} -> {:.3e}", s[0], s[s.len() - 1])
        })
        .collect();
    Ok(ratios.join("; "))
}

#[derive(Serialize)]
struct ShapeFile<'a> {
    report: &'a ShapeReport,
    oblateness_slope: f64,
    max_displacement_theta: f64,
}

fn write_shape(cfg: &RunConfig, out: &Path, rep: &ShapeReport) -> Result<String, RunError> {
    let n = cfg.n_theta_out;
    let mut shape = Table::new(&["theta [rad]", "displacement [length]", "radius [length]"]);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..n {
        let theta = PI * i as f64 / (n - 1) as f64;
        let d = rep.scale * rep.displacement(theta);
        if d > best.0 {
            best = (d, theta);
        }
        shape.push(&[theta, d, rep.radius + d]);
    }
    shape.write(&out.join("shape.csv"))?;
    let mut modes = Table::new(&["l [1]", "xi_l(R) [length^2]"]);
    for m in &rep.xi_l {
        modes.push(&[m.l as f64, m.value]);
    }
    modes.write(&out.join("modes.csv"))?;
    let slope = rep.oblateness_slope();
    write_json(&out.join("shape.json"), &ShapeFile { report: rep, oblateness_slope: slope, max_displacement_theta: best.1 })?;
    Ok(format!(
        "R_eq = {:.10} R_pole = {:.10} (R_eq - R_pole)/scale = {slope:.6e} max displacement at theta = {:.6}",
        rep.equatorial_radius, rep.polar_radius, best.1
    ))
}

#[derive(Serialize)]
struct KappaFile<'a> {
    solution: &'a crate::rotating::RotatingSolution,
    base_radius: f64,
    base_mass: f64,
    grid: &'a FieldGrid,
    /// `(r, θ)` collocation nodes, index-aligned with `zeta`
    nodes: Vec<(f64, f64)>,
    zeta: &'a [f64],
    /// `(θ, boundary radius)` samples of the deformed body
    boundary: Vec<(f64, f64)>,
}

fn boundary(zeta: &DeformationField, radius: f64, n: usize) -> Result<Vec<(f64, f64)>, RunError> {
    let map = DilationMap::new(zeta.clone()).map_err(|e| RunError::Solver(e.to_string()))?;
    Ok((0..n)
        .map(|i| {
            let theta = PI * i as f64 / (n - 1) as f64;
            (theta, map.image_radius(radius, theta))
        })
        .collect())
}

fn write_continuation(
    cfg: &RunConfig,
    out: &Path,
    radius: f64,
    mass: f64,
    mu: Option<f64>,
    c: &Continuation,
) -> Result<String, RunError> {
    let mut header = vec![
        "kappa [1]",
        "R_eq [length]",
        "R_pole [length]",
        "mass [mass]",
        "residual [enthalpy]",
        "newton_iters [1]",
        "x_norm [1]",
        "mass_factor [1]",
    ];
    if mu.is_some() {
        header.push("mu [1]");
    }
    let mut t = Table::new(&header);
    for (i, s) in c.solutions.iter().enumerate() {
        let mut row = vec![s.kappa, s.equatorial_radius, s.polar_radius, s.mass_check, s.residual, s.newton_iters as f64, s.x_norm, s.mass_factor];
        row.extend(mu);
        t.push(&row);
        let file = KappaFile {
            solution: s,
            base_radius: radius,
            base_mass: mass,
            grid: s.zeta.grid(),
            nodes: s.zeta.grid().nodes(),
            zeta: s.zeta.values(),
            boundary: boundary(&s.zeta, radius, cfg.n_theta_out)?,
        };
        write_json(&out.join(format!("kappa_{i:03}.json")), &file)?;
    }
    t.write(&out.join("continuation.csv"))?;
    let drift = c.solutions.iter().map(|s| (s.mass_check - mass).abs() / mass).fold(0.0, f64::max);
    match &c.stop {
        None => Ok(format!("{} points, max relative mass drift {drift:.3e}", c.solutions.len())),
        Some(StopReason::DeformationCap { kappa, norm }) => Err(RunError::Solver(format!(
            "deformation cap reached at kappa = {kappa:.4e} (||zeta||_X = {norm:.4e}); {} points written",
            c.solutions.len()
        ))),
        Some(StopReason::Divergence { kappa, residuals }) => Err(RunError::Solver(format!(
            "Newton iteration failed at kappa = {kappa:.4e} (residuals {residuals:?}); {} points written",
            c.solutions.len()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_global_flags_after_subcommand() {
        let c = Cli::try_parse_from(["rotstar", "radial", "--config", "x.toml", "--out", "o", "--threads", "2"]).unwrap();
        assert_eq!(c.command, Command::Radial);
        assert_eq!(c.threads, Some(2));
        assert_eq!(c.out.as_deref(), Some(Path::new("o")));
        assert!(Cli::try_parse_from(["rotstar", "radial", "extra"]).is_err());
        assert!(Cli::try_parse_from(["rotstar", "vp-continue"]).is_ok());
    }
}
