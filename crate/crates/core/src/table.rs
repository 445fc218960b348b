//! Whitespace- and comma-separated numeric tables.
//!
//! Every float is written with 17 significant digits so that tables
//! round-trip exactly through a parser.

use std::fmt::Write as _;

/// Formats a float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A column-oriented text table with a header line.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    separator: &'static str,
}

impl Table {
    /// Space-separated table; the header is written as a `#` comment.
    pub fn whitespace<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            separator: " ",
        }
    }

    pub fn csv<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            separator: ",",
        }
    }

    pub fn push_numbers(&mut self, values: &[f64]) {
        self.rows.push(values.iter().copied().map(num).collect());
    }

    pub fn push_cells<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if self.separator == " " {
            out.push_str("# ");
        }
        out.push_str(&self.header.join(self.separator));
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(self.separator));
        }
        out
    }
}
