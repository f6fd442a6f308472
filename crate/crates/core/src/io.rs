//! Sample files, CSV tables and histograms.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk_core::SampleSet;
use crate::sim::Trajectory;

/// Parse samples from a JSON array or from the first column of a CSV file.
/// A CSV header row is detected by its first field not parsing as a number.
pub fn parse_samples(text: &str, json: bool) -> Result<SampleSet> {
    if json {
        let values: Vec<f64> = serde_json::from_str(text)?;
        return SampleSet::new(values);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let Some(field) = record.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if line == 0 => {}
            Err(_) => {
                return Err(Error::invalid(format!(
                    "line {}: '{field}' is not a number",
                    line + 1
                )))
            }
        }
    }
    SampleSet::new(values)
}

/// Read samples from `path`; `.json` files are parsed as arrays, anything else
/// as CSV.
pub fn read_samples(path: &Path) -> Result<SampleSet> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    parse_samples(&text, json)
}

pub fn write_csv<T: Serialize>(writer: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(reader: impl Read) -> Result<Vec<T>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_csv_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_csv(File::create(path)?, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Bin center.
    pub value: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]`; a degenerate range gives one bin.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("histogram needs finite values"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(vec![HistogramBin {
            value: lo,
            count: values.len(),
        }]);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            value: lo + width * (k as f64 + 0.5),
            count,
        })
        .collect())
}

#[derive(Serialize)]
struct TrajectoryRow {
    t: f64,
    x1: f64,
    y1: f64,
    theta1: f64,
    x2: f64,
    y2: f64,
    theta2: f64,
    x3: f64,
    y3: f64,
    theta3: f64,
}

/// One row per state: `t, x1, y1, theta1, ..., x3, y3, theta3`.
pub fn write_trajectory_csv(writer: impl Write, traj: &Trajectory) -> Result<()> {
    let rows: Vec<TrajectoryRow> = traj
        .states
        .iter()
        .map(|s| {
            let [a, b, c] = s.agents;
            TrajectoryRow {
                t: s.time,
                x1: a.x,
                y1: a.y,
                theta1: a.theta,
                x2: b.x,
                y2: b.y,
                theta2: b.theta,
                x3: c.x,
                y3: c.y,
                theta3: c.theta,
            }
        })
        .collect();
    write_csv(writer, &rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}
