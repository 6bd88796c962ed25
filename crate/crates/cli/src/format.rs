/// `x` to 6 significant digits, switching to exponent form outside
/// `[1e-4, 1e6)`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exponent) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - exponent).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new digit (9.999996 -> 10.00000).
    if s.trim_start_matches('-').split('.').next().map_or(0, str::len) > (exponent + 1).max(1) as usize {
        let decimals = decimals.saturating_sub(1);
        return format!("{x:.decimals$}");
    }
    s
}

pub fn sig6_list(values: &[f64]) -> String {
    values.iter().map(|&x| sig6(x)).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn significant_digits() {
        assert_eq!(sig6(0.5529875734), "0.552988");
        assert_eq!(sig6(0.670074), "0.670074");
        assert_eq!(sig6(9.372583), "9.37258");
        assert_eq!(sig6(-32.0), "-32.0000");
        assert_eq!(sig6(9.9999996), "10.0000");
        assert_eq!(sig6(1.5e-13), "1.50000e-13");
        assert_eq!(sig6(0.0), "0");
    }
}
