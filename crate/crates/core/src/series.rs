// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

//! Plain numeric CSV output shared by trajectories and plant time series.

use std::fmt::Write;

/// Nine significant digits in scientific notation.
pub fn format_value(x: f64) -> String {
    format!("{x:.8e}")
}

/// Header row plus one row per sample; `columns` are stored column-major.
pub fn to_csv(header: &[String], columns: &[&[f64]]) -> String {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..rows {
        for (c, col) in columns.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_value(col[k]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(format_value(std::f64::consts::PI), "3.14159265e0");
        let csv = to_csv(&["t".into(), "v".into()], &[&[0.0, 1.0], &[2.5, -1e-3]]);
        assert_eq!(csv, "t,v\n0.00000000e0,2.50000000e0\n1.00000000e0,-1.00000000e-3\n");
    }
}
