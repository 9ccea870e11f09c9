//! CSV and JSON writers. Floats are written with 17 significant digits so
//! that every value parses back to the same bits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use localopt_core::RoundTrace;
use serde::Serialize;

use crate::error::CliError;

pub const TRACE_HEADER: [&str; 9] = [
    "round",
    "loss_x",
    "loss_avg",
    "dist_sq",
    "delta_norm",
    "drift_max",
    "g1_sq_sum",
    "g2_sq_sum",
    "cos_sim_mean",
];

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

/// Writes all `rows` after `header`; rows are fully formatted before the
/// file is created, so an error never leaves a partial file behind.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

pub fn trace_rows(traces: &[RoundTrace]) -> Vec<Vec<String>> {
    traces
        .iter()
        .map(|t| {
            let mut row = vec![t.round.to_string()];
            row.extend(
                [
                    t.loss_x,
                    t.loss_running_avg,
                    t.dist_sq,
                    t.delta_norm,
                    t.drift_max,
                    t.grad_sq_sum_avg,
                    t.grad_sq_sum_local,
                    t.cos_sim_mean,
                ]
                .map(fmt_float),
            );
            row
        })
        .collect()
}

pub fn write_trace_csv(path: &Path, traces: &[RoundTrace]) -> Result<(), CliError> {
    write_csv(path, &TRACE_HEADER, &trace_rows(traces))
}

/// Parses a trace CSV back into `(round, [8 floats])` records.
pub fn read_trace_csv(path: &Path) -> Result<Vec<(usize, [f64; 8])>, CliError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != TRACE_HEADER {
        return Err(CliError::invalid(
            "header",
            format!("unexpected trace header {header:?}"),
        ));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse_err = |field: &str| CliError::invalid("trace", format!("unparsable field {field:?}"));
        let round = record[0].parse().map_err(|_| parse_err(&record[0]))?;
        let mut values = [0.0; 8];
        for (slot, field) in values.iter_mut().zip(record.iter().skip(1)) {
            *slot = field.parse().map_err(|_| parse_err(field))?;
        }
        out.push((round, values));
    }
    Ok(out)
}

/// Pretty JSON with keys in declaration order and a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
