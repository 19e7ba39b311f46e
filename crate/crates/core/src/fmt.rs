//! Fixed float formatting for CSV and report output.

/// Formats with 9 significant digits. Plain notation for magnitudes in
/// [1e-5, 1e9), scientific otherwise.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // round first so the exponent reflects the printed mantissa
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').expect("exponent present") + 1..].parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        format!("{:.*}", (8 - exp) as usize, x)
    } else {
        sci
    }
}

pub(crate) fn csv_row(fields: &[String]) -> String {
    let mut row = fields.join(",");
    row.push('\n');
    row
}
