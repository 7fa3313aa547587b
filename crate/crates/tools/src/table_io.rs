//! Lossless CSV and JSON forms of coefficient tables.
//!
//! Rationals are always written as strings, `"p/q"` or `"p"` for integers.

use bs5_core::coeffs::{CoeffTable, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ToolError};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    i: u32,
    j: u32,
    value: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TableJson {
    k: u32,
    entries: Vec<Row>,
}

/// Parses `"p/q"` or `"p"` into a rational in lowest terms.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    t.parse().map_err(|_| ToolError::Parse(format!("not a rational: {t:?}")))
}

/// Nonzero entries as `i,j,value` CSV with a header.
pub fn to_csv(table: &CoeffTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, j, v) in table.iter() {
        w.serialize(Row { i, j, value: v.to_string() })?;
    }
    let bytes = w.into_inner().map_err(|e| ToolError::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| ToolError::Parse(e.to_string()))
}

/// Every `(i, j, value)` row of a CSV table, zeros included.
pub fn parse_csv_cells(text: &str) -> Result<Vec<(u32, u32, Rational)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: Row = row?;
        out.push((row.i, row.j, parse_rational(&row.value)?));
    }
    Ok(out)
}

pub fn from_csv(k: u32, text: &str) -> Result<CoeffTable> {
    Ok(CoeffTable::from_entries(k, parse_csv_cells(text)?)?)
}

pub fn to_json(table: &CoeffTable) -> Result<String> {
    let doc =
        TableJson { k: table.k(), entries: table.iter().map(|(i, j, v)| Row { i, j, value: v.to_string() }).collect() };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json(text: &str) -> Result<CoeffTable> {
    let doc: TableJson = serde_json::from_str(text)?;
    let cells =
        doc.entries.into_iter().map(|r| Ok((r.i, r.j, parse_rational(&r.value)?))).collect::<Result<Vec<_>>>()?;
    Ok(CoeffTable::from_entries(doc.k, cells)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bs5_core::coeffs;

    #[test]
    fn csv_round_trip() {
        let t = coeffs::tables_up_to(3).unwrap().pop().unwrap();
        let text = to_csv(&t).unwrap();
        assert!(text.lines().any(|l| l == "9,0,487/1260"));
        assert_eq!(from_csv(3, &text).unwrap(), t);
    }

    #[test]
    fn json_round_trip() {
        let t = coeffs::tables_up_to(2).unwrap().pop().unwrap();
        let text = to_json(&t).unwrap();
        assert!(text.contains("\"-19/3\""));
        assert_eq!(from_json(&text).unwrap(), t);
    }

    #[test]
    fn seed_table_has_three_rows() {
        let text = to_csv(&coeffs::seed_table_k1()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().any(|l| l == "3,0,1/3"));
        assert!(text.lines().any(|l| l == "2,0,-1"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_rational("1.5").is_err());
        assert!(parse_rational("1/0").is_err());
        assert_eq!(parse_rational(" -6/4 ").unwrap(), Rational::new((-3).into(), 2.into()));
        assert!(from_csv(2, "i,j,value\n0,1,1/2\n").is_err());
    }
}
