/// Number with ten significant digits, plain where readable and in
/// exponent form otherwise.
pub fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..10).contains(&mag) {
        let decimals = (9 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.9e}")
    }
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn keeps_ten_digits() {
        assert_eq!(num(0.37033901), "0.3703390100");
        assert_eq!(num(1.0), "1.000000000");
        assert_eq!(num(123456.789), "123456.7890");
        assert_eq!(num(1.5e-7), "1.500000000e-7");
        assert_eq!(num(0.0), "0");
    }
}
