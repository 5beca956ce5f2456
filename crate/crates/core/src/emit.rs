//! CSV and JSON output.
//!
//! CSV follows RFC 4180 quoting with LF line ends; floats are written as the
//! shortest decimal that parses back to the same value. JSON output is
//! wrapped in a versioned envelope `{"schema": "biphoton-report/1", ...}`.

use serde_json::{json, Map, Value};
use std::io::Write;

use crate::config::{ConfigDoc, SweepSpec};
use crate::error::{Error, Result};
use crate::observables::{ObservablesReport, SliceGrid};
use crate::sweep::ReportRow;

pub const SCHEMA: &str = "biphoton-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Shortest round-trip decimal.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?
        .flush()?;
    Ok(())
}

fn write_json<W: Write>(mut out: W, value: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(e.into()))?;
    out.write_all(b"\n")?;
    Ok(())
}

fn envelope(kind: &str, body: Map<String, Value>) -> Value {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("kind".into(), json!(kind));
    m.extend(body);
    Value::Object(m)
}

pub fn report_json(r: &ObservablesReport) -> Value {
    let mut observables = Map::new();
    for (name, v) in r.fields() {
        observables.insert(name.into(), json!(v));
    }
    let mut body = Map::new();
    body.insert("config".into(), json!(ConfigDoc::resolved(&r.config)));
    body.insert("observables".into(), Value::Object(observables));
    envelope("report", body)
}

pub fn emit_report<W: Write>(r: &ObservablesReport, format: Format, out: W) -> Result<()> {
    match format {
        Format::Json => write_json(out, &report_json(r)),
        Format::Csv => {
            let mut w = csv_writer(out);
            let fields = r.fields();
            w.write_record(fields.iter().map(|f| f.0)).map_err(csv_err)?;
            w.write_record(fields.iter().map(|f| format_float(f.1))).map_err(csv_err)?;
            finish(w)
        }
    }
}

fn axis_header(g: &SliceGrid) -> String {
    let [a, b] = g.axes;
    format!("{}\\{} [{}]", a.label(), b.label(), a.unit())
}

pub fn slice_json(g: &SliceGrid) -> Value {
    let mut body = Map::new();
    body.insert("domain".into(), json!(g.domain));
    body.insert("mask".into(), json!(g.mask));
    body.insert("axes".into(), json!([g.axes[0].label(), g.axes[1].label()]));
    body.insert("unit".into(), json!(g.axes[0].unit()));
    body.insert("x".into(), json!(g.x));
    body.insert("y".into(), json!(g.y));
    body.insert("values".into(), json!(g.values));
    envelope("slice", body)
}

/// CSV: a header row of column positions, then one row per first-axis value.
pub fn emit_slice<W: Write>(g: &SliceGrid, format: Format, out: W) -> Result<()> {
    match format {
        Format::Json => write_json(out, &slice_json(g)),
        Format::Csv => {
            let mut w = csv_writer(out);
            let mut header = vec![axis_header(g)];
            header.extend(g.y.iter().map(|&v| format_float(v)));
            w.write_record(&header).map_err(csv_err)?;
            for (x, row) in g.x.iter().zip(&g.values) {
                let mut rec = vec![format_float(*x)];
                rec.extend(row.iter().map(|&v| format_float(v)));
                w.write_record(&rec).map_err(csv_err)?;
            }
            finish(w)
        }
    }
}

/// Long-format slices of a figure: one row per panel and grid point.
pub fn emit_slices<W: Write>(grids: &[SliceGrid], title: Option<&str>, format: Format, out: W) -> Result<()> {
    match format {
        Format::Json => {
            let mut body = Map::new();
            body.insert("title".into(), json!(title));
            let panels: Vec<Value> = grids
                .iter()
                .map(|g| {
                    let mut v = slice_json(g);
                    let o = v.as_object_mut().expect("envelope is an object");
                    o.remove("schema");
                    o.remove("kind");
                    v
                })
                .collect();
            body.insert("panels".into(), Value::Array(panels));
            write_json(out, &envelope("slices", body))
        }
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record(["panel", "domain", "mask", "x", "y", "value"]).map_err(csv_err)?;
            for (k, g) in grids.iter().enumerate() {
                let domain = json!(g.domain).as_str().unwrap_or_default().to_string();
                let mask = json!(g.mask).as_str().unwrap_or_default().to_string();
                for (x, row) in g.x.iter().zip(&g.values) {
                    for (y, v) in g.y.iter().zip(row) {
                        w.write_record([
                            k.to_string(),
                            domain.clone(),
                            mask.clone(),
                            format_float(*x),
                            format_float(*y),
                            format_float(*v),
                        ])
                        .map_err(csv_err)?;
                    }
                }
            }
            finish(w)
        }
    }
}

/// Column names of a sweep table: one per axis path, the observables, and
/// the error marker.
pub fn sweep_columns(spec: &SweepSpec) -> Vec<String> {
    let mut cols: Vec<String> = spec
        .axes
        .iter()
        .flat_map(|a| a.paths.iter().map(|p| p.trim_start_matches('/').replace('/', ".")))
        .collect();
    cols.extend(spec.observables.iter().map(|o| o.name().to_string()));
    cols.push("error".into());
    cols
}

fn expand_axes(spec: &SweepSpec, row: &ReportRow) -> Vec<f64> {
    spec.axes
        .iter()
        .zip(&row.axis_values)
        .flat_map(|(a, &v)| std::iter::repeat_n(v, a.paths.len()))
        .collect()
}

pub fn emit_rows<W: Write>(spec: &SweepSpec, rows: &[ReportRow], format: Format, out: W) -> Result<()> {
    let columns = sweep_columns(spec);
    match format {
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record(&columns).map_err(csv_err)?;
            for row in rows {
                let mut rec: Vec<String> = expand_axes(spec, row).into_iter().map(format_float).collect();
                if row.error.is_some() {
                    rec.extend(std::iter::repeat_n(String::new(), spec.observables.len()));
                } else {
                    rec.extend(row.values.iter().map(|&v| format_float(v)));
                }
                rec.push(row.error.clone().unwrap_or_default());
                w.write_record(&rec).map_err(csv_err)?;
            }
            finish(w)
        }
        Format::Json => {
            let data: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    let mut cells = expand_axes(spec, row).into_iter().map(|v| json!(v)).collect::<Vec<_>>();
                    if row.error.is_some() {
                        cells.extend(std::iter::repeat_n(Value::Null, spec.observables.len()));
                    } else {
                        cells.extend(row.values.iter().map(|&v| json!(v)));
                    }
                    cells.push(json!(row.error));
                    for (c, v) in columns.iter().zip(cells) {
                        m.insert(c.clone(), v);
                    }
                    Value::Object(m)
                })
                .collect();
            let mut body = Map::new();
            body.insert("title".into(), json!(spec.title));
            body.insert("columns".into(), json!(columns));
            body.insert("rows".into(), Value::Array(data));
            write_json(out, &envelope("sweep", body))
        }
    }
}
