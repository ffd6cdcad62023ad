//! Plain CSV tables of floats with shortest round-trip formatting.
//!
//! Rows are written with Rust's `{:?}` float formatting, which is the
//! shortest decimal string that parses back to the same bits, so a dump
//! re-parsed and re-rendered is byte-identical. Trailing `#` lines carry
//! run metadata such as truncation notices.

use crate::error::{GeometryError, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub footer: Vec<String>,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        for line in &self.footer {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |reason: String| GeometryError::InvalidParameter {
            name: "csv".into(),
            reason,
        };
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| bad("empty input".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut table = Table::new(header);
        for (n, line) in lines.enumerate() {
            if let Some(note) = line.strip_prefix("# ") {
                table.footer.push(note.to_string());
                continue;
            }
            let row = line
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("line {}: {e}", n + 2)))?;
            if row.len() != table.header.len() {
                return Err(bad(format!("line {}: expected {} columns", n + 2, table.header.len())));
            }
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}
