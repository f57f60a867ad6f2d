//! CSV tables with fixed numeric formatting, and CDF plot data.

use super::ExperimentError;

/// One cell of an output row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    /// Written with six decimals; non-finite values are written empty.
    Num(f64),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "true" } else { "false" }.into())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) if v.is_finite() => {
                // avoid "-0.000000"
                let s = format!("{v:.6}");
                if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
                    s.trim_start_matches('-').to_string()
                } else {
                    s
                }
            }
            Cell::Num(_) | Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

/// Numeric values of `column`; empty cells are skipped.
pub fn read_column(csv_text: &str, column: &str) -> Result<Vec<f64>, ExperimentError> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = r.headers().map_err(|e| ExperimentError::Config(format!("bad CSV header: {e}")))?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| ExperimentError::Config(format!("no column {column:?}")))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| ExperimentError::Config(format!("bad CSV row {}: {e}", i + 2)))?;
        let cell = rec.get(idx).unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        let v: f64 = cell.parse().map_err(|_| ExperimentError::Config(format!("row {}: {cell:?} is not numeric", i + 2)))?;
        out.push(v);
    }
    Ok(out)
}

/// Sorted `(value, cumulative fraction)` pairs, one per sample.
pub fn cdf_points(values: &[f64]) -> Result<Vec<(f64, f64)>, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::Config("empty input".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    Ok(v.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect())
}

/// CDF of a CSV column as CSV plot data with columns `value,fraction`.
pub fn emit_cdf(csv_text: &str, column: &str) -> Result<String, ExperimentError> {
    let points = cdf_points(&read_column(csv_text, column)?)?;
    let mut t = Table::new(&["value", "fraction"]);
    for (x, f) in points {
        t.push(vec![x.into(), f.into()]);
    }
    Ok(t.to_csv())
}
