//! Tabular outputs and their CSV/JSON/SVG emission.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use mer_core::simulator::TrialRecord;

use crate::svg::Plot;

/// One table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Num(if v { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column (non-numeric cells skipped).
    pub fn values(&self, name: &str) -> Vec<f64> {
        match self.column(name) {
            Some(k) => self.rows.iter().filter_map(|r| r[k].as_f64()).collect(),
            None => Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| HarnessError::config(format!("csv {}: {e}", self.name));
        w.write_record(&self.columns).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::config(format!("csv {}: {e}", self.name)))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(name: &str, text: &str) -> Result<Table> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let fail = |e: csv::Error| HarnessError::config(format!("csv {name}: {e}"));
        let columns: Vec<String> = r.headers().map_err(fail)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(fail)?;
            rows.push(
                rec.iter()
                    .map(|s| s.parse::<f64>().map(Cell::Num).unwrap_or_else(|_| Cell::Text(s.to_string())))
                    .collect(),
            );
        }
        Ok(Table {
            name: name.to_string(),
            columns,
            rows,
        })
    }

    /// Rows as JSON objects keyed by column.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let obj = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| {
                        let v = match v {
                            Cell::Num(x) => serde_json::Number::from_f64(*x)
                                .map(serde_json::Value::Number)
                                .unwrap_or(serde_json::Value::Null),
                            Cell::Text(s) => serde_json::Value::String(s.clone()),
                        };
                        (c.clone(), v)
                    })
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

/// Extra output formats written next to the CSVs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    /// CSV only.
    Csv,
    /// CSV plus one JSON document per table.
    Json,
    /// CSV plus SVG plots.
    #[default]
    Svg,
}

/// Everything a recipe produces.
#[derive(Debug, Clone, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    pub plots: Vec<(String, Plot)>,
    /// Preformatted files `(name, contents)`.
    pub files: Vec<(String, String)>,
}

/// Writes a file, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Writes the outputs into `dir`; returns the relative names written.
pub fn emit(output: &Output, dir: &Path, format: Format) -> Result<Vec<String>> {
    let mut written = Vec::new();
    for t in &output.tables {
        let name = format!("{}.csv", t.name);
        write_file(&dir.join(&name), &t.to_csv()?)?;
        written.push(name);
        if format == Format::Json {
            let name = format!("{}.json", t.name);
            let text = serde_json::to_string_pretty(&t.to_json()).expect("json values serialize");
            write_file(&dir.join(&name), &(text + "\n"))?;
            written.push(name);
        }
    }
    for (name, text) in &output.files {
        write_file(&dir.join(name), text)?;
        written.push(name.clone());
    }
    if format == Format::Svg {
        for (name, plot) in &output.plots {
            let name = format!("{name}.svg");
            write_file(&dir.join(&name), &plot.render())?;
            written.push(name);
        }
    }
    Ok(written)
}

/// A trial as a JSON document plus per-step and per-cycle series tables.
pub fn trial_outputs(name: &str, rec: &TrialRecord) -> Result<(Vec<Table>, (String, String))> {
    let json = serde_json::to_string(rec).map_err(|e| HarnessError::config(format!("{name}: {e}")))?;
    let mut poses = Table::new(&format!("{name}_poses"), &["step", "x", "y", "theta", "thrust", "stance"]);
    for (k, p) in rec.poses.iter().enumerate() {
        let thrust: f64 = rec.thrust[k].iter().sum();
        let stance = rec.realized[k].iter().filter(|&&b| b).count();
        poses.push(vec![k.into(), p[0].into(), p[1].into(), p[2].into(), thrust.into(), stance.into()]);
    }
    let mut cycles = Table::new(
        &format!("{name}_cycles"),
        &["cycle", "stride", "stride_bl", "duty", "a_p", "a_b", "a_leg"],
    );
    for (c, t) in rec.trace.iter().enumerate() {
        cycles.push(vec![
            c.into(),
            rec.stride[c].into(),
            rec.stride_bl[c].into(),
            rec.duty[c].into(),
            t.vertical_amplitude.into(),
            t.body_amplitude.into(),
            t.shoulder_amplitude.into(),
        ]);
    }
    Ok((vec![poses, cycles], (format!("{name}.json"), json + "\n")))
}
