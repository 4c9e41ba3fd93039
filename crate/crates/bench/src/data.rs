//! Hourly series CSV files: header `hour,value`, one row per sample, with
//! `hour` cycling through `1..=24`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use htfmlp::series::{TimeSeries, PERIOD};

use crate::error::{BenchError, Result};

pub fn load_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    read_csv(file)
}

pub fn read_csv<R: Read>(input: R) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut values = Vec::new();
    let mut start_phase = None;
    let mut prev_hour = None;
    for (k, record) in reader.records().enumerate() {
        let line = k as u64 + 1;
        let record = record.map_err(|e| BenchError::Parse { line, msg: e.to_string() })?;
        if k == 0 {
            if record.len() != 2 || &record[0] != "hour" || &record[1] != "value" {
                return Err(BenchError::Parse { line, msg: "expected header `hour,value`".into() });
            }
            continue;
        }
        if record.len() != 2 {
            return Err(BenchError::Parse {
                line,
                msg: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let hour: usize = record[0]
            .parse()
            .ok()
            .filter(|h| (1..=PERIOD).contains(h))
            .ok_or_else(|| BenchError::Parse { line, msg: format!("invalid hour {:?}", &record[0]) })?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| BenchError::Parse { line, msg: format!("invalid value {:?}", &record[1]) })?;
        if !value.is_finite() {
            return Err(BenchError::NonFiniteValue { line });
        }
        if let Some(prev) = prev_hour {
            if hour != prev % PERIOD + 1 {
                return Err(BenchError::NonHourlyStep { line, prev, got: hour });
            }
        }
        start_phase.get_or_insert(hour);
        prev_hour = Some(hour);
        values.push(value);
    }
    let start_phase = start_phase.ok_or(BenchError::Parse { line: 2, msg: "no samples".into() })?;
    Ok(TimeSeries::new(values, start_phase)?)
}

pub fn write_csv<W: Write>(series: &TimeSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| BenchError::Invalid(e.to_string());
    w.write_record(["hour", "value"]).map_err(io)?;
    for (k, v) in series.values().iter().enumerate() {
        w.write_record([series.phase(k + 1).to_string(), v.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| BenchError::Invalid(e.to_string()))?;
    Ok(())
}

pub fn save_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    write_csv(series, std::io::BufWriter::new(file))
}
