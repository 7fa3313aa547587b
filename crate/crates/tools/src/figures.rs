//! Curve data for the marginal-density and CDF-comparison figures.

use bs5_core::coeffs;
use bs5_core::steady::{self, MarginalForm, SteadyModel};

use crate::error::Result;

/// Which figure to tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Columns `x, k0..k6, limit`: marginal densities after `k` steps and in the limit.
    MargDens,
    /// Columns `x, five_species, conjectured`: limit CDF against the uniform law on `[2/3, 1]`.
    CdfCompare,
}

/// A header plus rows of numbers, written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curves {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| crate::ToolError::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| crate::ToolError::Parse(e.to_string()))
    }
}

/// Tabulates `fig` at `n_points` equally spaced `x` in `[0, 1]`.
pub fn figure_data(model: &SteadyModel, fig: Figure, n_points: usize) -> Result<Curves> {
    let n = n_points.max(2);
    let xs = (0..n).map(|i| i as f64 / (n - 1) as f64);
    let form = MarginalForm::Integrated;
    match fig {
        Figure::MargDens => {
            let polys: Vec<_> = coeffs::tables_up_to(6)?.iter().map(|t| coeffs::marginal_poly_k(t).to_f64()).collect();
            let mut header = vec!["x".to_string()];
            header.extend((0..=6).map(|k| format!("k{k}")));
            header.push("limit".into());
            let rows = xs
                .map(|x| {
                    let mut r = vec![x, 1.0];
                    r.extend(polys.iter().map(|p| p.eval(x)));
                    r.push(model.marginal_pdf(x, form)?.value);
                    Ok(r)
                })
                .collect::<Result<_>>()?;
            Ok(Curves { header, rows })
        }
        Figure::CdfCompare => {
            let header = vec!["x".into(), "five_species".into(), "conjectured".into()];
            let rows = xs
                .map(|x| Ok(vec![x, model.marginal_cdf(x, form)?.value, steady::conjectured_cdf(x)]))
                .collect::<Result<_>>()?;
            Ok(Curves { header, rows })
        }
    }
}
