//! Benchmark report rendering and parsing: CSV (machine-readable,
//! round-trippable), Markdown tables, and the plot-ready per-algorithm pivot.

use std::str::FromStr;

use crate::error::{Error, Result};

use super::BenchResult;

/// Column order of the CSV schema.
pub const CSV_COLUMNS: [&str; 14] = [
    "label", "window", "stride", "rows", "cols", "cin", "cout", "batch", "algorithm", "reps",
    "best_ns", "mean_ns", "flops", "gflops",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// One flattened report row; what the CSV schema carries.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub window: usize,
    pub stride: usize,
    pub rows: usize,
    pub cols: usize,
    pub cin: usize,
    pub cout: usize,
    pub batch: usize,
    pub algorithm: String,
    pub reps: usize,
    pub best_ns: u64,
    pub mean_ns: u64,
    pub flops: u64,
    pub gflops: f64,
}

impl From<&BenchResult> for ReportRow {
    fn from(r: &BenchResult) -> Self {
        let p = &r.config.params;
        ReportRow {
            label: r.config.label.clone(),
            window: p.window_rows,
            stride: p.stride_rows,
            rows: p.input.rows,
            cols: p.input.cols,
            cin: p.input.channels,
            cout: p.features,
            batch: p.input.batch,
            algorithm: r.algorithm.to_string(),
            reps: r.reps,
            best_ns: r.best_time_ns,
            mean_ns: r.mean_time_ns,
            flops: r.flops,
            gflops: r.gflops,
        }
    }
}

impl ReportRow {
    fn fields(&self) -> [String; 14] {
        [
            self.label.clone(),
            self.window.to_string(),
            self.stride.to_string(),
            self.rows.to_string(),
            self.cols.to_string(),
            self.cin.to_string(),
            self.cout.to_string(),
            self.batch.to_string(),
            self.algorithm.clone(),
            self.reps.to_string(),
            self.best_ns.to_string(),
            self.mean_ns.to_string(),
            self.flops.to_string(),
            // Default float formatting: shortest representation that parses
            // back to the same value, `.` separator, no locale.
            format!("{}", self.gflops),
        ]
    }
}

/// Render results in the requested format; row order is preserved.
pub fn write_report(results: &[BenchResult], format: ReportFormat) -> String {
    let rows: Vec<ReportRow> = results.iter().map(ReportRow::from).collect();
    match format {
        ReportFormat::Csv => rows_to_csv(&rows),
        ReportFormat::Markdown => rows_to_markdown(&rows),
    }
}

fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_COLUMNS).expect("in-memory csv write");
    for row in rows {
        writer.write_record(row.fields()).expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv flush"))
        .expect("csv output is utf-8")
}

/// Render rows as an aligned Markdown table; gflops to two decimals.
pub fn rows_to_markdown(rows: &[ReportRow]) -> String {
    let mut cells: Vec<[String; 14]> = Vec::with_capacity(rows.len() + 1);
    cells.push(CSV_COLUMNS.map(str::to_string));
    for row in rows {
        let mut fields = row.fields();
        fields[13] = format!("{:.2}", row.gflops);
        cells.push(fields);
    }
    let widths: Vec<usize> = (0..14)
        .map(|col| cells.iter().map(|row| row[col].len()).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        out.push('|');
        for (col, cell) in row.iter().enumerate() {
            // Left-align the text columns, right-align the numbers.
            if col == 0 || col == 8 {
                out.push_str(&format!(" {:<width$} |", cell, width = widths[col]));
            } else {
                out.push_str(&format!(" {:>width$} |", cell, width = widths[col]));
            }
        }
        out.push('\n');
        if i == 0 {
            out.push('|');
            for width in &widths {
                out.push_str(&format!("{}|", "-".repeat(width + 2)));
            }
            out.push('\n');
        }
    }
    out
}

fn parse_field<T: FromStr>(record: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<T> {
    let raw = record.get(idx).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("column `{name}`: cannot parse `{raw}`"),
    })
}

/// Parse a CSV report written by [`write_report`].
///
/// Columns are located by name; a missing required column is reported as
/// [`Error::MissingColumn`] naming it. Extra columns are ignored.
pub fn read_report(text: &str) -> Result<Vec<ReportRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut indices = [0usize; 14];
    for (slot, name) in indices.iter_mut().zip(CSV_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        rows.push(ReportRow {
            label: record.get(indices[0]).unwrap_or("").to_string(),
            window: parse_field(&record, indices[1], "window", line)?,
            stride: parse_field(&record, indices[2], "stride", line)?,
            rows: parse_field(&record, indices[3], "rows", line)?,
            cols: parse_field(&record, indices[4], "cols", line)?,
            cin: parse_field(&record, indices[5], "cin", line)?,
            cout: parse_field(&record, indices[6], "cout", line)?,
            batch: parse_field(&record, indices[7], "batch", line)?,
            algorithm: record.get(indices[8]).unwrap_or("").to_string(),
            reps: parse_field(&record, indices[9], "reps", line)?,
            best_ns: parse_field(&record, indices[10], "best_ns", line)?,
            mean_ns: parse_field(&record, indices[11], "mean_ns", line)?,
            flops: parse_field(&record, indices[12], "flops", line)?,
            gflops: parse_field(&record, indices[13], "gflops", line)?,
        });
    }
    Ok(rows)
}

/// Pivot rows into plot-ready series: one row per label, one gflops column
/// per algorithm, both in first-appearance order. Missing (label, algorithm)
/// cells are left empty; duplicate cells keep the first value.
pub fn write_pivot(rows: &[ReportRow]) -> String {
    let mut labels: Vec<&str> = Vec::new();
    let mut algorithms: Vec<&str> = Vec::new();
    for row in rows {
        if !labels.contains(&row.label.as_str()) {
            labels.push(&row.label);
        }
        if !algorithms.contains(&row.algorithm.as_str()) {
            algorithms.push(&row.algorithm);
        }
    }

    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["label"];
    header.extend(&algorithms);
    writer.write_record(&header).expect("in-memory csv write");
    for label in &labels {
        let mut record = vec![label.to_string()];
        for alg in &algorithms {
            let cell = rows
                .iter()
                .find(|r| r.label == *label && r.algorithm == *alg)
                .map(|r| format!("{}", r.gflops))
                .unwrap_or_default();
            record.push(cell);
        }
        writer.write_record(&record).expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv flush"))
        .expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{run_bench, ConvConfig};
    use crate::selector::Algorithm;

    fn sample_results(n: usize) -> Vec<BenchResult> {
        let config = ConvConfig::from_tuple("tiny", 3, 1, 6, 6, 2, 2, 1).unwrap();
        let mut out = Vec::new();
        let algorithms = [Algorithm::Direct, Algorithm::Im2col, Algorithm::Winograd];
        for &alg in algorithms.iter().take(n) {
            out.push(run_bench(&config, alg, 2, 0, 5).unwrap());
        }
        out
    }

    #[test]
    fn empty_results_give_header_only_csv() {
        let csv = write_report(&[], ReportFormat::Csv);
        assert_eq!(
            csv.trim_end(),
            "label,window,stride,rows,cols,cin,cout,batch,algorithm,reps,best_ns,mean_ns,flops,gflops"
        );
        assert!(read_report(&csv).unwrap().is_empty());
    }

    #[test]
    fn one_result_round_trips_all_fields() {
        let results = sample_results(1);
        let csv = write_report(&results, ReportFormat::Csv);
        let rows = read_report(&csv).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0], ReportRow::from(&results[0]));
    }

    #[test]
    fn row_order_is_preserved() {
        let results = sample_results(3);
        let csv = write_report(&results, ReportFormat::Csv);
        let rows = read_report(&csv).unwrap();
        let got: Vec<&str> = rows.iter().map(|r| r.algorithm.as_str()).collect();
        assert_eq!(got, vec!["direct", "im2col", "winograd"]);
    }

    #[test]
    fn missing_column_is_named() {
        let err = read_report("label,window\nx,1\n").unwrap_err();
        match err {
            Error::MissingColumn(name) => assert_eq!(name, "stride"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_cell_reports_its_line() {
        let results = sample_results(1);
        let csv = write_report(&results, ReportFormat::Csv);
        let broken = csv.replace(&results[0].flops.to_string(), "not_a_number");
        match read_report(&broken).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("flops"), "message: {message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn markdown_has_two_decimal_gflops_and_separator() {
        let results = sample_results(1);
        let md = write_report(&results, ReportFormat::Markdown);
        let lines: Vec<&str> = md.lines().collect();
        assert!(lines[0].starts_with("| label"));
        assert!(lines[1].starts_with("|--"));
        let gflops_cell = lines[2].rsplit('|').nth(1).unwrap().trim();
        assert!(
            gflops_cell.split('.').nth(1).map(str::len) == Some(2),
            "gflops cell `{gflops_cell}` not 2-decimal"
        );
    }

    #[test]
    fn pivot_produces_one_row_with_one_column_per_algorithm() {
        let results = sample_results(2);
        let rows = read_report(&write_report(&results, ReportFormat::Csv)).unwrap();
        let pivot = write_pivot(&rows);
        let lines: Vec<&str> = pivot.lines().collect();
        assert_eq!(lines[0], "label,direct,im2col");
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("tiny,"));
        assert_eq!(lines[1].split(',').count(), 3);
    }
}
