//! Digit-string to IEEE-754 double conversion shared by the lexer and the
//! `parseInt` model. Both paths must round identically, so they live here.

/// Converts a run of ASCII digits in `radix` (2, 8, 10 or 16) to the nearest
/// double. Power-of-two radices are rounded exactly (ties to even); decimal
/// goes through the standard library's correctly rounded parser.
///
/// Returns `None` if `digits` is empty or contains a non-digit.
pub fn digits_to_f64(digits: &str, radix: u32) -> Option<f64> {
    if digits.is_empty() || !digits.chars().all(|c| c.is_digit(radix)) {
        return None;
    }
    if radix == 10 {
        return digits.parse::<f64>().ok();
    }
    debug_assert!(radix.is_power_of_two());
    let bits_per_digit = radix.trailing_zeros();
    let trimmed = digits.trim_start_matches('0');
    if trimmed.is_empty() {
        return Some(0.0);
    }

    // Up to 128 bits fit exactly; beyond that keep a sticky bit so the final
    // u128 -> f64 conversion still rounds correctly.
    let max_digits = (128 / bits_per_digit) as usize;
    let (head, tail) = trimmed.split_at(trimmed.len().min(max_digits));
    let mut acc: u128 = 0;
    for c in head.chars() {
        acc = (acc << bits_per_digit) | c.to_digit(radix)? as u128;
    }
    if tail.is_empty() {
        return Some(acc as f64);
    }
    // `head` has a non-zero leading digit, so `acc` carries well over 64
    // significant bits and bit 0 sits far below the rounding position.
    if tail.chars().any(|c| c != '0') {
        acc |= 1;
    }
    let shift = tail.len() as i32 * bits_per_digit as i32;
    Some(acc as f64 * 2f64.powi(shift))
}
