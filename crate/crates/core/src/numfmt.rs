//! Fixed-point decimal rendering with 17 significant digits, enough to
//! round-trip any `f64`.

pub fn sig17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            "0.0000000000000000".to_string()
        } else {
            x.to_string()
        };
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (16 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    // log10 can land one decade low right below a power of ten
    let digits = s
        .bytes()
        .filter(u8::is_ascii_digit)
        .skip_while(|&b| b == b'0')
        .count();
    if digits > 17 && decimals > 0 {
        format!("{:.*}", decimals - 1, x)
    } else {
        s
    }
}
