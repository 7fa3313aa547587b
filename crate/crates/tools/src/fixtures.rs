//! Reference coefficient tables for `k = 1..5`, zeros included, embedded at build time.

use bs5_core::coeffs::Rational;

use crate::error::{Result, ToolError};
use crate::table_io;

const TABLES: [&str; 5] = [
    include_str!("../data/table_k1.csv"),
    include_str!("../data/table_k2.csv"),
    include_str!("../data/table_k3.csv"),
    include_str!("../data/table_k4.csv"),
    include_str!("../data/table_k5.csv"),
];

/// Every reference cell `(i, j, alpha)` of the table for `k`.
pub fn reference_table(k: u32) -> Result<Vec<(u32, u32, Rational)>> {
    let text = TABLES
        .get((k as usize).wrapping_sub(1))
        .ok_or_else(|| ToolError::Usage(format!("no reference table for k = {k}")))?;
    table_io::parse_csv_cells(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_counts() {
        let counts: Vec<usize> = (1..=5).map(|k| reference_table(k).unwrap().len()).collect();
        assert_eq!(counts, [10, 32, 62, 168, 255]);
        assert!(reference_table(0).is_err());
        assert!(reference_table(6).is_err());
    }
}
