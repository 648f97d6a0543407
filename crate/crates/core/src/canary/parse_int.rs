use crate::numeric::digits_to_f64;
use crate::syntax::is_trimmable;

/// `parseInt(s)` with no radix argument, as ECMAScript defines it: skip
/// leading whitespace, take an optional sign, read hex after `0x`/`0X` and
/// decimal otherwise, and stop at the first character that is not a digit.
/// No digits at all yields NaN.
pub fn numeric_prefix_parse(s: &str) -> f64 {
    let s = s.trim_start_matches(is_trimmable);
    let (sign, s) = match s.as_bytes().first() {
        Some(b'-') => (-1.0, &s[1..]),
        Some(b'+') => (1.0, &s[1..]),
        _ => (1.0, s),
    };
    let (radix, s) = match s.get(..2) {
        Some("0x" | "0X") => (16, &s[2..]),
        _ => (10, s),
    };
    let end = s.find(|c: char| !c.is_digit(radix)).unwrap_or(s.len());
    match digits_to_f64(&s[..end], radix) {
        Some(v) => sign * v,
        None => f64::NAN,
    }
}
