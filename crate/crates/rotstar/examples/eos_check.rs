//! Structural checks of pressure laws and the sufficient mass condition.

use rotstar::eos::{check_mass_condition_b, power_law, power_sum, validate_assumptions, SampleSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SampleSpec::default();
    let laws = [
        ("s^1.5", power_law(1.5)?),
        ("s^(4/3)", power_law(4.0 / 3.0)?),
        ("s^1.5 + s^1.8", power_sum(&[(1.0, 1.5), (1.0, 1.8)])?),
    ];
    for (name, eos) in &laws {
        let a = validate_assumptions(eos, &spec);
        let b = check_mass_condition_b(eos, &spec.points());
        println!(
            "{name:>14}: assumptions {} (exponents {:.4}, {:.4}); condition (b) {} (margins {:.3e}, {:.3e})",
            if a.all_pass() { "ok" } else { "fail" },
            a.small_exponent,
            a.large_exponent,
            if b.holds { "holds" } else { "fails" },
            b.lower_margin,
            b.upper_margin
        );
    }
    Ok(())
}
