//! Reading `x,y,value` observations and aggregating repeats per location.

use std::io::Read;

use robust_recon_core::{DVector, Point2};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: u64, column: usize, message: String },

    #[error("line {line}, column {column}: non-finite value")]
    NonFiniteValue { line: u64, column: usize },

    #[error("expected header `x,y,value`, found `{0}`")]
    BadHeader(String),

    #[error("no observations")]
    EmptyInput,
}

/// Repeated observations collapsed to one sample mean per location.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub locations: Vec<Point2>,
    /// Sample means `z_i`.
    pub values: Vec<f64>,
    /// Sample standard deviations with denominator `n - 1` (zero for a single sample).
    pub stds: Vec<f64>,
    pub counts: Vec<usize>,
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn nominal(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn std_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.stds)
    }
}

struct Accumulator {
    location: Point2,
    count: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    fn push(&mut self, v: f64) {
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
    }

    fn std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0).sqrt()
        }
    }
}

/// Parses CSV with header `x,y,value`. Rows whose locations agree within
/// 1e-12 in both coordinates are merged; locations keep first-seen order.
pub fn ingest_csv<R: Read>(reader: R) -> Result<ObservationSet, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers().map_err(|e| parse_error(&e))?.clone();
    let names: Vec<String> = header.iter().map(|h| h.trim_start_matches('\u{feff}').to_ascii_lowercase()).collect();
    if names != ["x", "y", "value"] {
        return Err(IngestError::BadHeader(header.iter().collect::<Vec<_>>().join(",")));
    }

    let mut groups: Vec<Accumulator> = Vec::new();
    let mut last = 0usize;
    for record in rdr.records() {
        let record = record.map_err(|e| parse_error(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut fields = [0.0f64; 3];
        for (column, slot) in fields.iter_mut().enumerate() {
            let text = record.get(column).unwrap_or("");
            let v: f64 = text.parse().map_err(|_| IngestError::Parse {
                line,
                column: column + 1,
                message: format!("cannot parse `{text}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(IngestError::NonFiniteValue { line, column: column + 1 });
            }
            *slot = v;
        }
        let p = Point2::new(fields[0], fields[1]);
        // Repeats usually arrive in runs, so try the previous location first.
        let idx = if groups.get(last).is_some_and(|g| g.location.coincides(&p)) {
            Some(last)
        } else {
            groups.iter().position(|g| g.location.coincides(&p))
        };
        let idx = idx.unwrap_or_else(|| {
            groups.push(Accumulator {
                location: p,
                count: 0,
                mean: 0.0,
                m2: 0.0,
            });
            groups.len() - 1
        });
        groups[idx].push(fields[2]);
        last = idx;
    }
    if groups.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(ObservationSet {
        locations: groups.iter().map(|g| g.location).collect(),
        values: groups.iter().map(|g| g.mean).collect(),
        stds: groups.iter().map(Accumulator::std).collect(),
        counts: groups.iter().map(|g| g.count).collect(),
    })
}

fn parse_error(e: &csv::Error) -> IngestError {
    let line = e.position().map_or(0, |p| p.line());
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
        _ => e.to_string(),
    };
    IngestError::Parse { line, column: 0, message }
}
