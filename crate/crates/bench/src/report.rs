//! Experiment reports: the series × predictor nRMSE grid, in CSV or as an
//! aligned text table with a best-configuration summary.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use htfmlp::forecast::{PredictorKind, PredictorSpec};

use crate::error::{BenchError, Result};

pub const CSV_HEADER: [&str; 5] = ["series", "predictor", "nrmse", "n_forecasts", "seed"];

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Ok {
        nrmse: f64,
        n_forecasts: usize,
        /// Restart seed that won selection; `None` for baselines.
        seed: Option<u64>,
        validation_nrmse: Option<f64>,
    },
    Failed(String),
}

impl CellOutcome {
    pub fn nrmse(&self) -> Option<f64> {
        match self {
            CellOutcome::Ok { nrmse, .. } => Some(*nrmse),
            CellOutcome::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub series: String,
    pub predictor: String,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesInfo {
    pub name: String,
    pub vc: Option<f64>,
}

/// Per-series minimum, ties resolved to the earlier predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct BestRow<'a> {
    pub series: &'a SeriesInfo,
    pub cell: &'a Cell,
    pub nrmse: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub series: Vec<SeriesInfo>,
    pub predictors: Vec<String>,
    /// Row-major over `series` then `predictors`.
    pub cells: Vec<Cell>,
    pub metadata: Vec<(String, String)>,
}

impl Report {
    pub fn cell(&self, series: &str, predictor: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.series == series && c.predictor == predictor)
    }

    pub fn best(&self) -> Vec<BestRow<'_>> {
        self.series
            .iter()
            .filter_map(|s| {
                let mut best: Option<(&Cell, f64)> = None;
                for p in &self.predictors {
                    let Some(cell) = self.cell(&s.name, p) else { continue };
                    if let Some(v) = cell.outcome.nrmse() {
                        if best.is_none_or(|(_, b)| v < b) {
                            best = Some((cell, v));
                        }
                    }
                }
                best.map(|(cell, nrmse)| BestRow { series: s, cell, nrmse })
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| BenchError::Invalid(format!("writing report: {e}"));
        w.write_record(CSV_HEADER).map_err(err)?;
        for c in &self.cells {
            let row = match &c.outcome {
                CellOutcome::Ok { nrmse, n_forecasts, seed, .. } => [
                    c.series.clone(),
                    c.predictor.clone(),
                    nrmse.to_string(),
                    n_forecasts.to_string(),
                    seed.map(|s| s.to_string()).unwrap_or_default(),
                ],
                CellOutcome::Failed(msg) => [
                    c.series.clone(),
                    c.predictor.clone(),
                    format!("error: {msg}"),
                    String::new(),
                    String::new(),
                ],
            };
            w.write_record(&row).map_err(err)?;
        }
        w.flush().map_err(|e| BenchError::Invalid(format!("writing report: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    /// Rebuilds a report from its CSV form. Variation coefficients, validation
    /// scores and metadata are not stored in CSV and come back empty.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
        let mut report = Report::default();
        for (k, record) in reader.records().enumerate() {
            let line = k as u64 + 1;
            let record = record.map_err(|e| BenchError::Parse { line, msg: e.to_string() })?;
            if k == 0 {
                if record.iter().ne(CSV_HEADER) {
                    return Err(BenchError::Parse { line, msg: format!("expected header `{}`", CSV_HEADER.join(",")) });
                }
                continue;
            }
            let bad = |msg: String| BenchError::Parse { line, msg };
            let (series, predictor, nrmse, n, seed) = (&record[0], &record[1], &record[2], &record[3], &record[4]);
            let outcome = match nrmse.strip_prefix("error: ") {
                Some(msg) => CellOutcome::Failed(msg.to_string()),
                None => CellOutcome::Ok {
                    nrmse: nrmse.parse().map_err(|_| bad(format!("invalid nrmse {nrmse:?}")))?,
                    n_forecasts: n.parse().map_err(|_| bad(format!("invalid n_forecasts {n:?}")))?,
                    seed: match seed {
                        "" => None,
                        s => Some(s.parse().map_err(|_| bad(format!("invalid seed {s:?}")))?),
                    },
                    validation_nrmse: None,
                },
            };
            if !report.series.iter().any(|s| s.name == series) {
                report.series.push(SeriesInfo { name: series.to_string(), vc: None });
            }
            if !report.predictors.iter().any(|p| p == predictor) {
                report.predictors.push(predictor.to_string());
            }
            report.cells.push(Cell { series: series.to_string(), predictor: predictor.to_string(), outcome });
        }
        Ok(report)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
        Self::read_csv(file)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        if !self.metadata.is_empty() {
            out.push('\n');
        }
        out.push_str("nRMSE (* marks the lowest value per series)\n");
        let minima: Vec<Option<f64>> = self.series.iter().map(|s| self.series_min(&s.name)).collect();
        let rows: Vec<Vec<String>> = self
            .series
            .iter()
            .zip(&minima)
            .map(|(s, min)| {
                let mut row = vec![s.name.clone()];
                row.extend(self.predictors.iter().map(|p| match self.cell(&s.name, p).map(|c| &c.outcome) {
                    Some(CellOutcome::Ok { nrmse, .. }) => {
                        let mark = if Some(*nrmse) == *min { "*" } else { " " };
                        format!("{nrmse:.3}{mark}")
                    }
                    Some(CellOutcome::Failed(_)) => "error".into(),
                    None => "-".into(),
                }));
                row
            })
            .collect();
        let mut header = vec!["series".to_string()];
        header.extend(self.predictors.iter().cloned());
        render_table(&mut out, &header, &rows);

        let val_rows: Vec<Vec<String>> = self
            .series
            .iter()
            .filter_map(|s| {
                let vals: Vec<String> = self
                    .predictors
                    .iter()
                    .map(|p| match self.cell(&s.name, p).map(|c| &c.outcome) {
                        Some(CellOutcome::Ok { validation_nrmse: Some(v), .. }) => format!("{v:.3}"),
                        _ => "-".into(),
                    })
                    .collect();
                vals.iter().any(|v| v != "-").then(|| {
                    let mut row = vec![s.name.clone()];
                    row.extend(vals);
                    row
                })
            })
            .collect();
        if !val_rows.is_empty() {
            out.push_str("\nValidation nRMSE of the selected restart (on the series the network is trained on)\n");
            render_table(&mut out, &header, &val_rows);
        }

        let best = self.best();
        if !best.is_empty() {
            out.push_str("\nBest configuration per series\n");
            let header: Vec<String> = ["series", "VC", "Type", "nRMSE", "Time index", "Stationary", "Transfer functions"]
                .map(String::from)
                .to_vec();
            let rows: Vec<Vec<String>> = best
                .iter()
                .map(|b| {
                    let spec = PredictorSpec::from_name(&b.cell.predictor).ok();
                    let yes_no = |f: fn(&PredictorSpec) -> bool| match &spec {
                        Some(s) => if f(s) { "Yes" } else { "No" }.to_string(),
                        None => "-".into(),
                    };
                    let transfer = match &spec {
                        Some(s) if s.kind == PredictorKind::Mlp => s.transfer_functions_label(),
                        _ => "-".into(),
                    };
                    vec![
                        b.series.name.clone(),
                        b.series.vc.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into()),
                        b.cell.predictor.clone(),
                        format!("{:.3}", b.nrmse),
                        yes_no(|s| s.time_index),
                        yes_no(|s| s.stationarized),
                        transfer,
                    ]
                })
                .collect();
            render_table(&mut out, &header, &rows);
        }

        let failures: Vec<&Cell> = self.cells.iter().filter(|c| matches!(c.outcome, CellOutcome::Failed(_))).collect();
        if !failures.is_empty() {
            out.push_str("\nFailed cells\n");
            for c in failures {
                if let CellOutcome::Failed(msg) = &c.outcome {
                    let _ = writeln!(out, "{} / {}: {msg}", c.series, c.predictor);
                }
            }
        }
        out
    }

    fn series_min(&self, series: &str) -> Option<f64> {
        self.cells
            .iter()
            .filter(|c| c.series == series)
            .filter_map(|c| c.outcome.nrmse())
            .reduce(f64::min)
    }
}

/// First column left-aligned, the rest right-aligned, two spaces apart.
fn render_table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain([header[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[0]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}
