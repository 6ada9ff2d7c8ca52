//! Convergence tables and estimated orders of convergence.

use alloc::vec::Vec;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::float::Float;

/// `log(e_prev / e) / log(h_prev / h)`, or `None` when undefined.
pub fn rate(e_prev: f64, e: f64, h_prev: f64, h: f64) -> Option<f64> {
    let ok = |v: f64| v > 0.0 && v.is_finite();
    if !(ok(e_prev) && ok(e) && ok(h_prev) && ok(h)) || h_prev == h {
        return None;
    }
    Some((e_prev / e).ln() / (h_prev / h).ln())
}

/// Rates between consecutive entries; one shorter than the input.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(Error::InvalidArgument("eoc needs two or more matching entries"));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| rate(e[0], e[1], h[0], h[1]))
        .collect())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub ndof: usize,
    pub err_l2: f64,
    pub err_energy: f64,
    pub err_h1: [f64; 2],
    /// `None` on the first row and where the rate is undefined
    pub eoc_l2: Option<f64>,
    pub eoc_energy: Option<f64>,
    /// `None` when not estimated; infinite for a singular matrix
    pub cond: Option<f64>,
}

/// Rows ordered by level with strictly decreasing `h`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row and fills its rates from the previous one.
    pub fn push(&mut self, mut row: ConvergenceRow) -> Result<()> {
        row.eoc_l2 = None;
        row.eoc_energy = None;
        if let Some(prev) = self.rows.last() {
            if !(row.h < prev.h) {
                return Err(Error::InvalidArgument("mesh size must decrease down the table"));
            }
            row.eoc_l2 = rate(prev.err_l2, row.err_l2, prev.h, row.h);
            row.eoc_energy = rate(prev.err_energy, row.err_energy, prev.h, row.h);
        }
        self.rows.push(row);
        Ok(())
    }

    /// Builds a table from rows in any order.
    pub fn from_rows(mut rows: Vec<ConvergenceRow>) -> Result<Self> {
        rows.sort_by_key(|r| r.level);
        let mut t = Self::new();
        for r in rows {
            t.push(r)?;
        }
        Ok(t)
    }

    pub fn rows(&self) -> &[ConvergenceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&ConvergenceRow> {
        self.rows.last()
    }

    pub fn final_eoc_l2(&self) -> Option<f64> {
        self.last().and_then(|r| r.eoc_l2)
    }

    pub fn final_eoc_energy(&self) -> Option<f64> {
        self.last().and_then(|r| r.eoc_energy)
    }
}
