//! Rendering of command results as JSON, CSV or an aligned table.

use clap::ValueEnum;
use ctinfo::json::{format_f64, to_string_pretty};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Rows for the tabular formats. Without one, the JSON value is flattened
/// into `key,value` pairs.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Parses CSV text that already has a header row.
    pub fn from_csv(text: &str) -> anyhow::Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Table { header, rows })
    }
}

pub struct Doc {
    pub value: Value,
    pub table: Option<Table>,
}

impl Doc {
    pub fn new(value: Value) -> Self {
        Doc { value, table: None }
    }

    pub fn with_table(value: Value, table: Table) -> Self {
        Doc {
            value,
            table: Some(table),
        }
    }

    pub fn render(self, format: Format) -> anyhow::Result<String> {
        match format {
            Format::Json => Ok(to_string_pretty(&self.value)? + "\n"),
            Format::Csv => csv_text(&self.into_table()),
            Format::Table => Ok(aligned(&self.into_table())),
        }
    }

    fn into_table(self) -> Table {
        if let Some(t) = self.table {
            return t;
        }
        let mut t = Table::new(&["key", "value"]);
        flatten(&self.value, String::new(), &mut t.rows);
        t
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if !n.is_i64() && !n.is_u64() => format_f64(x),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(v: &Value, prefix: String, out: &mut Vec<Vec<String>>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                flatten(item, join(k), out);
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                flatten(item, join(&i.to_string()), out);
            }
        }
        other => out.push(vec![prefix, scalar(other)]),
    }
}

/// Formats a float cell the same way as JSON output.
pub fn cell(x: f64) -> String {
    if x.is_finite() {
        format_f64(x)
    } else {
        x.to_string()
    }
}

fn csv_text(t: &Table) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(&t.header)?;
    for r in &t.rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn aligned(t: &Table) -> String {
    let mut widths: Vec<usize> = t.header.iter().map(|h| h.chars().count()).collect();
    for r in &t.rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.truncate(s.trim_end().len());
        s + "\n"
    };
    let mut out = line(&t.header);
    for r in &t.rows {
        out += &line(r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flattens_nested_values() {
        let doc = Doc::new(json!({"a": {"b": 0.5, "n": 3}, "v": [true, null]}));
        let t = doc.into_table();
        assert_eq!(t.rows[0], vec!["a.b", "5.0000000000000000e-1"]);
        assert_eq!(t.rows[1], vec!["a.n", "3"]);
        assert_eq!(t.rows[2], vec!["v.0", "true"]);
        assert_eq!(t.rows[3], vec!["v.1", ""]);
    }

    #[test]
    fn table_columns_line_up() {
        let mut t = Table::new(&["x", "long"]);
        t.push(vec!["123".into(), "1".into()]);
        assert_eq!(aligned(&t), "x    long\n123  1\n");
    }
}
