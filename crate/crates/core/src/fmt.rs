//! Decimal output for `key=value` lines.

/// Formats `x` rounded to `digits` significant digits, printed in the
/// shortest form that parses back to the rounded value. `None` prints the
/// shortest round-trip form of `x` itself (at most 17 significant digits).
pub fn number(x: f64, digits: Option<usize>) -> String {
    match digits {
        None => format!("{x:?}"),
        Some(d) if x.is_finite() => {
            let rounded: f64 = format!("{:.*e}", d.saturating_sub(1), x)
                .parse()
                .expect("exponent format parses");
            format!("{rounded:?}")
        }
        Some(_) => format!("{x:?}"),
    }
}
