//! Property tests over randomized inputs.

use proptest::prelude::*;
use rotstar::config::RunConfig;
use rotstar::dilation::{DeformationField, DilationMap, FieldGrid};
use rotstar::eos::power_law;
use rotstar::numerics::{y_l0, GaussRule};
use rotstar::output::Table;
use rotstar::radial::{scaling_law_deviation, solve_radial};
use rotstar::vlasov::{Psi, VlasovAnsatz};
use std::f64::consts::PI;

fn field(c: [f64; 4], scale: f64) -> DeformationField {
    let grid = FieldGrid::new(12, 6, 1.0).unwrap();
    let f = DeformationField::from_fn(grid, |r, t| {
        let c2 = (2.0 * t).cos();
        r * r * (c[0] + c[1] * r * r + (c[2] + c[3] * r * r) * c2)
    })
    .unwrap();
    let n = f.x_norm();
    if n == 0.0 {
        f
    } else {
        f.scaled(scale / n)
    }
}

fn point(r: f64, theta: f64, phi: f64) -> [f64; 3] {
    [r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos()]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn enthalpy_is_increasing_and_invertible(gamma in 1.05f64..1.95, l1 in -18.0f64..18.0, dl in 0.01f64..2.0) {
        let eos = power_law(gamma).unwrap();
        let (s1, s2) = (l1.exp(), (l1 + dl).exp());
        prop_assert!(eos.enthalpy(s2) > eos.enthalpy(s1));
        let back = eos.inverse_enthalpy(eos.enthalpy(s1));
        prop_assert!(((back - s1) / s1).abs() < 1e-10);
    }

    #[test]
    fn enthalpy_quadrature_matches_closed_form(gamma in 1.05f64..1.95, l in -8.0f64..8.0) {
        let eos = power_law(gamma).unwrap();
        let s = l.exp();
        let q = eos.enthalpy_by_quadrature(s).unwrap();
        prop_assert!(((q - eos.enthalpy(s)) / eos.enthalpy(s)).abs() < 1e-10);
    }

    #[test]
    fn harmonics_are_orthonormal(l in 0usize..10, lp in 0usize..10) {
        let g = GaussRule::new(32);
        let ip: f64 = g.x.iter().zip(&g.w).map(|(x, w)| {
            let t = x.acos();
            2.0 * PI * w * y_l0(l, t) * y_l0(lp, t)
        }).sum();
        let expect = if l == lp { 1.0 } else { 0.0 };
        prop_assert!((ip - expect).abs() < 1e-10);
    }

    #[test]
    fn dilation_is_linear_in_the_field(
        a in prop::array::uniform4(-1.0f64..1.0),
        b in prop::array::uniform4(-1.0f64..1.0),
        r in 0.0f64..1.0, theta in 0.0f64..PI, phi in 0.0f64..(2.0 * PI),
    ) {
        let (f, g) = (field(a, 0.03), field(b, 0.03));
        let sum = f.axpy(1.0, &g).unwrap();
        let x = point(r, theta, phi);
        let (mf, mg, ms) = (DilationMap::new(f).unwrap(), DilationMap::new(g).unwrap(), DilationMap::new(sum).unwrap());
        let (yf, yg, ys) = (mf.apply(x), mg.apply(x), ms.apply(x));
        for k in 0..3 {
            prop_assert!((ys[k] - x[k] - (yf[k] - x[k]) - (yg[k] - x[k])).abs() < 1e-14);
        }
    }

    #[test]
    fn dilation_deviation_is_controlled_by_the_x_norm(
        a in prop::array::uniform4(-1.0f64..1.0),
        eps in 1e-3f64..0.1,
        p in (0.0f64..1.0, 0.0f64..PI, 0.0f64..(2.0 * PI)),
        q in (0.0f64..1.0, 0.0f64..PI, 0.0f64..(2.0 * PI)),
    ) {
        let map = DilationMap::new(field(a, eps)).unwrap();
        let ratio = map.deviation_ratio(point(p.0, p.1, p.2), point(q.0, q.1, q.2));
        prop_assert!(ratio.is_finite() && ratio <= 3.0, "ratio {}", ratio);
    }

    #[test]
    fn quadratic_field_has_x_norm_two_c(c in -0.05f64..0.05) {
        let grid = FieldGrid::new(16, 8, 1.0).unwrap();
        let f = DeformationField::from_fn(grid, |r, _| c * r * r).unwrap();
        prop_assert!((f.x_norm() - 2.0 * c.abs()).abs() < 1e-12);
    }

    #[test]
    fn table_round_trips(rows in prop::collection::vec(prop::array::uniform3(prop::num::f64::NORMAL), 0..20)) {
        let mut t = Table::new(&["x [1]", "y [1]", "z [1]"]);
        for r in &rows {
            t.push(r);
        }
        let bytes = t.to_bytes().unwrap();
        let mut rd = csv::Reader::from_reader(bytes.as_slice());
        let back: Vec<[f64; 3]> = rd.records().map(|r| {
            let r = r.unwrap();
            [r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap()]
        }).collect();
        prop_assert_eq!(back, rows);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn radial_flux_identity(gamma in 1.25f64..1.95, a in 0.3f64..3.0) {
        let star = solve_radial(&power_law(gamma).unwrap(), a).unwrap();
        let flux = star.radius * star.radius * star.u0p_at(star.radius) + star.mass;
        prop_assert!(flux.abs() < 1e-8 * star.mass);
    }

    #[test]
    fn power_law_scaling(gamma in 1.25f64..1.8, s in 0.5f64..2.0) {
        let eos = power_law(gamma).unwrap();
        prop_assert!(scaling_law_deviation(&eos, 1.0, s, 100).unwrap() < 1e-8);
    }

    #[test]
    fn kinetic_macroscopic_density(mu in -1.5f64..0.45, c in 0.0f64..3.0, u in 1e-3f64..3.0) {
        let ans = VlasovAnsatz::polytropic(mu, Psi::Quadratic(c)).unwrap();
        prop_assert!(ans.g(u) > 0.0);
        prop_assert!(ans.g(1.1 * u) > ans.g(u));
        // G = w(0, ·, u) and rotation only adds density for ψ increasing in L²
        prop_assert!((ans.w(0.0, 0.5, u) - ans.g(u)).abs() <= 1e-12 * ans.g(u));
        prop_assert!(ans.w(0.1, 0.5, u) >= ans.g(u) * (1.0 - 1e-12));
    }

    #[test]
    fn config_round_trips_through_toml(gamma in 1.05f64..1.95, a in 0.1f64..10.0, n in 8usize..64, k in 1e-5f64..1e-2) {
        let cfg = RunConfig { gamma, a, n, kappa: vec![0.0, k], ..RunConfig::default() };
        let text = toml::to_string(&cfg).unwrap();
        prop_assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }
}
