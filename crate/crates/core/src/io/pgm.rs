use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

/// Plain (P2) 8-bit grayscale image, values scaled linearly from 0 to the
/// largest value. Negative and non-finite values map to 0.
pub fn format_pgm(width: usize, height: usize, values: &[f64]) -> String {
    let max = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let mut out = String::new();
    let _ = writeln!(out, "P2\n{width} {height}\n255");
    for row in values.chunks(width.max(1)) {
        let line: Vec<String> = row
            .iter()
            .map(|&v| {
                if max > 0.0 && v.is_finite() && v > 0.0 {
                    ((v / max * 255.0).round() as u32).min(255).to_string()
                } else {
                    "0".to_string()
                }
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_pgm(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<()> {
    super::write_file(path, &format_pgm(width, height, values))
}
