//! Deterministic text reports.
//!
//! Rendering is a pure function of the inserted content and f64 formatting
//! uses the shortest round-trip representation, so identical runs produce
//! byte-identical documents.

use std::fmt::Display;

/// Ordered key-value document with optional tables.
#[derive(Clone, Debug, Default)]
pub struct ReportDocument {
    title: String,
    entries: Vec<(String, String)>,
    tables: Vec<Table>,
}

/// A named table; cells are preformatted strings, commas are the caller's
/// responsibility to avoid.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Two-column index/value table from a series.
    pub fn from_series(name: impl Into<String>, column: &str, values: &[f64]) -> Self {
        let mut t = Table::new(name, &["k", column]);
        for (k, v) in values.iter().enumerate() {
            t.push_row(vec![k.to_string(), v.to_string()]);
        }
        t
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl ReportDocument {
    pub fn new(title: impl Into<String>) -> Self {
        ReportDocument {
            title: title.into(),
            entries: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn push_table(&mut self, table: Table) {
        self.tables.push(table);
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn render(&self) -> String {
        let mut out = format!("# {}\n", self.title);
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        for t in &self.tables {
            out.push('\n');
            out.push_str("## ");
            out.push_str(&t.name);
            out.push('\n');
            out.push_str(&t.to_csv());
        }
        out
    }
}
