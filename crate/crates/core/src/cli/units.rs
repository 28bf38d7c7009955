/// Formats `value` with five significant figures and an SI prefix chosen so
/// the mantissa lands in `[1, 1000)`.
pub fn engineering(value: f64, unit: &str) -> String {
    const PREFIXES: [(i32, &str); 9] = [
        (12, "T"),
        (9, "G"),
        (6, "M"),
        (3, "k"),
        (0, ""),
        (-3, "m"),
        (-6, "µ"),
        (-9, "n"),
        (-12, "p"),
    ];
    if value == 0.0 || !value.is_finite() {
        return format!("{value} {unit}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    let mut exp = (magnitude.div_euclid(3) * 3).clamp(-12, 12);
    let mut mantissa = value / 10f64.powi(exp);
    // rounding to 5 figures can carry into the next prefix
    if format!("{:.*}", decimals(mantissa), mantissa.abs()).starts_with("1000") && exp < 12 {
        exp += 3;
        mantissa = value / 10f64.powi(exp);
    }
    let prefix = PREFIXES.iter().find(|(e, _)| *e == exp).map_or("", |(_, p)| p);
    format!("{:.*} {prefix}{unit}", decimals(mantissa), mantissa)
}

fn decimals(mantissa: f64) -> usize {
    let int_digits = mantissa.abs().log10().floor().max(0.0) as usize + 1;
    5usize.saturating_sub(int_digits)
}
