//! Per-method CSV traces.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), absent values
//! as empty fields, so a trace is byte-identical across runs of the same
//! config and parses back to the same values.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::CliError;

pub const HEADER: [&str; 10] =
    ["k", "loss", "loss_gap", "normalized_loss_gap", "V", "delta_V", "bound", "envelope", "satisfied", "diverged_at"];

/// One iteration of one method. `V` and its companions are present only for
/// certified tuner runs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub loss: f64,
    pub loss_gap: Option<f64>,
    pub normalized_loss_gap: Option<f64>,
    pub v: Option<f64>,
    pub delta_v: Option<f64>,
    pub bound: Option<f64>,
    pub envelope: Option<f64>,
    pub satisfied: Option<bool>,
    /// Set on the last row when the step out of it tripped the divergence guard.
    pub diverged_at: Option<usize>,
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

impl TraceRow {
    pub fn fields(&self) -> [String; 10] {
        [
            self.k.to_string(),
            float(self.loss),
            opt(self.loss_gap),
            opt(self.normalized_loss_gap),
            opt(self.v),
            opt(self.delta_v),
            opt(self.bound),
            opt(self.envelope),
            self.satisfied.map(|b| b.to_string()).unwrap_or_default(),
            self.diverged_at.map(|k| k.to_string()).unwrap_or_default(),
        ]
    }
}

/// Rows of one method, in iteration order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn diverged_at(&self) -> Option<usize> {
        self.rows.last().and_then(|r| r.diverged_at)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.fields()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii fields")
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
        f.write_all(self.to_csv().as_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| CliError::trace(path, e))?;
        if header.iter().ne(HEADER) {
            return Err(CliError::trace(path, format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
        }
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CliError::trace(path, e))?;
            let at = |msg: String| CliError::trace(path, format!("row {}: {msg}", line + 1));
            let num = |i: usize| -> Result<Option<f64>, CliError> {
                match &rec[i] {
                    "" => Ok(None),
                    s => s.parse().map(Some).map_err(|_| at(format!("`{s}` in column {} is not a number", HEADER[i]))),
                }
            };
            let int = |i: usize| -> Result<Option<usize>, CliError> {
                match &rec[i] {
                    "" => Ok(None),
                    s => s.parse().map(Some).map_err(|_| at(format!("`{s}` in column {} is not an index", HEADER[i]))),
                }
            };
            let satisfied = match &rec[8] {
                "" => None,
                "true" => Some(true),
                "false" => Some(false),
                s => return Err(at(format!("`{s}` is not a boolean"))),
            };
            rows.push(TraceRow {
                k: int(0)?.ok_or_else(|| at("missing k".into()))?,
                loss: num(1)?.ok_or_else(|| at("missing loss".into()))?,
                loss_gap: num(2)?,
                normalized_loss_gap: num(3)?,
                v: num(4)?,
                delta_v: num(5)?,
                bound: num(6)?,
                envelope: num(7)?,
                satisfied,
                diverged_at: int(9)?,
            });
        }
        Ok(Self { rows })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }
}
