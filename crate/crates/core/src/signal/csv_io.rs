//! CSV dataset format: one window per row, no header. The first cell is the
//! integer label, followed by `channels * length` samples in channel-major
//! order.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use super::{EegWindow, LabeledDataset};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CsvError {
    #[error("dataset file contains no rows")]
    Empty,
    #[error("row {row}: expected {expected} columns, found {found}")]
    ColumnCount { row: usize, expected: usize, found: usize },
    #[error("row {row}: column {column} is not numeric (`{value}`)")]
    NonNumeric { row: usize, column: usize, value: String },
    #[error("row {row}: label {label} is not below class count {classes}")]
    LabelOutOfRange { row: usize, label: usize, classes: usize },
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
}

pub fn load_csv_dataset(path: &Path, channels: usize, length: usize, classes: usize) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_dataset(file, channels, length, classes)
}

pub fn read_csv_dataset<R: Read>(reader: R, channels: usize, length: usize, classes: usize) -> Result<LabeledDataset> {
    let expected = channels * length + 1;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut windows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CsvError::Malformed { row, message: e.to_string() })?;
        if record.len() != expected {
            return Err(CsvError::ColumnCount { row, expected, found: record.len() }.into());
        }
        let label_cell = &record[0];
        let label: usize = label_cell
            .parse()
            .map_err(|_| CsvError::NonNumeric { row, column: 1, value: label_cell.to_string() })?;
        if label >= classes {
            return Err(CsvError::LabelOutOfRange { row, label, classes }.into());
        }
        let mut samples = Vec::with_capacity(expected - 1);
        for (c, cell) in record.iter().enumerate().skip(1) {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| CsvError::NonNumeric { row, column: c + 1, value: cell.to_string() })?;
            samples.push(v);
        }
        windows.push(EegWindow::new(channels, length, samples, label)?);
    }
    if windows.is_empty() {
        return Err(CsvError::Empty.into());
    }
    LabeledDataset::new(windows, classes)
}

/// Renders a dataset in the format read by [`read_csv_dataset`]. Values use
/// shortest round-trip formatting.
pub fn dataset_to_csv(dataset: &LabeledDataset) -> String {
    let mut out = String::new();
    for w in dataset.windows() {
        let _ = write!(out, "{}", w.label);
        for v in w.samples() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_csv_dataset(dataset: &LabeledDataset, path: &Path) -> Result<()> {
    std::fs::write(path, dataset_to_csv(dataset)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_err(r: Result<LabeledDataset>) -> CsvError {
        match r {
            Err(Error::Csv(e)) => e,
            other => panic!("expected csv error, got {other:?}"),
        }
    }

    #[test]
    fn single_row_maps_directly() {
        let data = read_csv_dataset("3,1.0,2.0,3.0,4.0\n".as_bytes(), 2, 2, 4).unwrap();
        assert_eq!(data.len(), 1);
        let w = &data.windows()[0];
        assert_eq!(w.label, 3);
        assert_eq!(w.channel(0), &[1.0, 2.0]);
        assert_eq!(w.channel(1), &[3.0, 4.0]);
        assert!(data.require_all_classes().is_err());
    }

    #[test]
    fn label_three_row_is_parsed() {
        let text = "3,1.0,2.0,3.0,4.0\n0,0,0,0,0\n1,0,0,0,0\n2,0,0,0,0\n";
        let data = read_csv_dataset(text.as_bytes(), 2, 2, 4).unwrap();
        assert_eq!(data.len(), 4);
        let w = &data.windows()[0];
        assert_eq!(w.label, 3);
        assert_eq!(w.samples(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn short_row_names_row_and_expected_columns() {
        let err = csv_err(read_csv_dataset("3,1.0,2.0,3.0\n".as_bytes(), 2, 2, 4));
        assert_eq!(err, CsvError::ColumnCount { row: 1, expected: 5, found: 4 });
        assert!(err.to_string().starts_with("row 1: expected 5 columns"));
    }

    #[test]
    fn non_numeric_cell() {
        let err = csv_err(read_csv_dataset("0,1,2,3,4\n1,1,x,3,4\n".as_bytes(), 2, 2, 2));
        assert_eq!(err, CsvError::NonNumeric { row: 2, column: 3, value: "x".into() });
        let err = csv_err(read_csv_dataset("a,1,2,3,4\n".as_bytes(), 2, 2, 2));
        assert!(matches!(err, CsvError::NonNumeric { row: 1, column: 1, .. }));
    }

    #[test]
    fn label_out_of_range() {
        let err = csv_err(read_csv_dataset("0,1,2,3,4\n4,1,2,3,4\n".as_bytes(), 2, 2, 4));
        assert_eq!(err, CsvError::LabelOutOfRange { row: 2, label: 4, classes: 4 });
    }

    #[test]
    fn empty_file_is_an_error() {
        assert_eq!(csv_err(read_csv_dataset("".as_bytes(), 2, 2, 4)), CsvError::Empty);
    }
}
