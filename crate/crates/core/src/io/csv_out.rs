use std::io::Write;
use std::path::Path;

use crate::harness::{RatePoint, ReportRow, VerificationReport};
use crate::moments::ChoquetMoments;
use crate::montecarlo::{EventEstimate, EventKind, EventSpec, SimResult};

use super::IoError;

/// `%.17g`: 17 significant digits, trailing zeros dropped, so every finite
/// value reads back bit-exact.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (16 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A record type with a fixed column order.
pub trait CsvRow {
    fn schema() -> &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

pub const SIM_SCHEMA: &[&str] = &[
    "run_id", "n", "event_kind", "alpha1", "alpha2", "frequency", "reps", "se", "seed",
];

pub const REPORT_SCHEMA: &[&str] = &[
    "experiment", "n", "alpha1", "alpha2", "theory", "empirical", "deviation", "se", "pass",
];

/// One line of a simulation CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRow {
    pub run_id: String,
    pub seed: u64,
    pub estimate: EventEstimate,
}

impl SimRow {
    pub fn from_result(result: &SimResult) -> Vec<SimRow> {
        result
            .estimates
            .iter()
            .map(|e| SimRow {
                run_id: result.run_id.clone(),
                seed: result.seed,
                estimate: *e,
            })
            .collect()
    }
}

impl CsvRow for SimRow {
    fn schema() -> &'static [&'static str] {
        SIM_SCHEMA
    }

    fn record(&self) -> Vec<String> {
        let e = &self.estimate;
        vec![
            self.run_id.clone(),
            e.n.to_string(),
            e.event.kind.as_str().to_string(),
            format_float(e.event.alpha1),
            format_float(e.event.alpha2),
            format_float(e.frequency()),
            e.reps.to_string(),
            format_float(e.se()),
            self.seed.to_string(),
        ]
    }
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

impl CsvRow for ReportRow {
    fn schema() -> &'static [&'static str] {
        REPORT_SCHEMA
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            opt_float(self.alpha1),
            opt_float(self.alpha2),
            format_float(self.theory),
            format_float(self.empirical),
            format_float(self.deviation),
            opt_float(self.se),
            self.pass.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentsRow {
    pub route: String,
    pub moments: ChoquetMoments,
}

impl CsvRow for MomentsRow {
    fn schema() -> &'static [&'static str] {
        &[
            "route", "bound", "lower_mean", "upper_mean", "lower_sd", "upper_sd", "cross_moment",
            "rho_prime", "rho",
        ]
    }

    fn record(&self) -> Vec<String> {
        let mut r = vec![self.route.clone(), format_float(self.moments.bound)];
        r.extend(self.moments.fields().iter().map(|&x| format_float(x)));
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePointRow(pub RatePoint);

impl CsvRow for RatePointRow {
    fn schema() -> &'static [&'static str] {
        &["n", "max_deviation", "noise_floor", "used"]
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.0.n.to_string(),
            format_float(self.0.max_deviation),
            format_float(self.0.noise_floor),
            self.0.above_floor().to_string(),
        ]
    }
}

/// Header plus one line per row, LF-terminated.
pub fn write_csv<R: CsvRow, W: Write>(rows: &[R], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(R::schema())?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv<R: CsvRow>(rows: &[R], path: &Path) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    write_csv(rows, std::io::BufWriter::new(file)).map_err(|source| IoError::Csv {
        path: path.display().to_string(),
        source,
    })
}

fn open(path: &Path, schema: &[&str]) -> Result<csv::Reader<std::fs::File>, IoError> {
    let csv_err = |source| IoError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(schema.iter().copied()) {
        return Err(IoError::Plan {
            path: path.display().to_string(),
            message: format!("expected columns {}", schema.join(",")),
        });
    }
    Ok(r)
}

fn field_error(path: &Path, line: u64, what: &str) -> IoError {
    IoError::Plan {
        path: path.display().to_string(),
        message: format!("record {line}: bad {what}"),
    }
}

/// Reads a CSV written from a [`SimResult`]. Counts are recovered as
/// `frequency · reps`.
pub fn read_sim_csv(path: &Path) -> Result<SimResult, IoError> {
    let mut reader = open(path, SIM_SCHEMA)?;
    let mut result = SimResult {
        run_id: String::new(),
        seed: 0,
        reps: 0,
        estimates: Vec::new(),
    };
    for (i, rec) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|source| IoError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        let f = |k: usize, what: &str| -> Result<f64, IoError> {
            rec[k].parse::<f64>().map_err(|_| field_error(path, line, what))
        };
        let u = |k: usize, what: &str| -> Result<u64, IoError> {
            rec[k].parse::<u64>().map_err(|_| field_error(path, line, what))
        };
        let kind = EventKind::parse(&rec[2]).ok_or_else(|| field_error(path, line, "event_kind"))?;
        let reps = u(6, "reps")?;
        let frequency = f(5, "frequency")?;
        result.run_id = rec[0].to_string();
        result.seed = u(8, "seed")?;
        result.reps = reps;
        result.estimates.push(EventEstimate {
            n: u(1, "n")?,
            event: EventSpec {
                kind,
                alpha1: f(3, "alpha1")?,
                alpha2: f(4, "alpha2")?,
            },
            count: (frequency * reps as f64).round() as u64,
            reps,
        });
    }
    Ok(result)
}

/// Reads a report CSV. Tolerances are not stored, so rows come back with
/// `tolerance = NaN` and `pass` as written.
pub fn read_report_csv(path: &Path) -> Result<VerificationReport, IoError> {
    let mut reader = open(path, REPORT_SCHEMA)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|source| IoError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        let opt = |k: usize, what: &str| -> Result<Option<f64>, IoError> {
            if rec[k].is_empty() {
                Ok(None)
            } else {
                rec[k].parse::<f64>().map(Some).map_err(|_| field_error(path, line, what))
            }
        };
        let req = |k: usize, what: &str| opt(k, what)?.ok_or_else(|| field_error(path, line, what));
        rows.push(ReportRow {
            experiment: rec[0].to_string(),
            n: if rec[1].is_empty() {
                None
            } else {
                Some(rec[1].parse().map_err(|_| field_error(path, line, "n"))?)
            },
            alpha1: opt(2, "alpha1")?,
            alpha2: opt(3, "alpha2")?,
            theory: req(4, "theory")?,
            empirical: req(5, "empirical")?,
            deviation: req(6, "deviation")?,
            se: opt(7, "se")?,
            tolerance: f64::NAN,
            pass: rec[8].parse().map_err(|_| field_error(path, line, "pass"))?,
        });
    }
    Ok(VerificationReport {
        run_id: path
            .file_stem()
            .map_or("report".into(), |s| s.to_string_lossy().into_owned()),
        rows,
        rate_fit: None,
    })
}
