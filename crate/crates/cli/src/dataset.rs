//! Canonical CSV dataset files.
//!
//! ```text
//! vector,2,1,3          kind,p,q,N
//! y1,y2,w               column names, weight last
//! 2,0,1
//! ...
//! ```
//!
//! Matrix samples are flattened row-major under columns `x<i>_<j>`.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use orbitlap::{Dataset, WeightedMatrixData, WeightedSample, WeightedVectorData};

use crate::error::{CliError, CliResult};
use crate::report::format_f64;

/// Column names for a `kind` with dimensions `p x q`, weight last.
pub fn column_names(matrix: bool, p: usize, q: usize) -> Vec<String> {
    let mut names: Vec<String> = if matrix {
        (1..=p).flat_map(|i| (1..=q).map(move |j| format!("x{i}_{j}"))).collect()
    } else {
        (1..=p).map(|i| format!("y{i}")).collect()
    };
    names.push("w".to_string());
    names
}

pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_dataset(&text, &path.display().to_string())
}

pub fn parse_dataset(text: &str, source: &str) -> CliResult<Dataset> {
    let err =
        |line: u64, column: usize, message: String| CliError::Parse { path: source.to_string(), line, column, message };
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut records = reader.records();
    let mut next = |what: &str| -> CliResult<Option<(u64, csv::StringRecord)>> {
        match records.next() {
            None => Ok(None),
            Some(Err(e)) => {
                let line = e.position().map_or(0, |p| p.line());
                Err(err(line, 1, format!("unreadable {what}: {e}")))
            }
            Some(Ok(r)) => Ok(Some((r.position().map_or(0, |p| p.line()), r))),
        }
    };

    let (line, header) = next("header")?.ok_or_else(|| err(1, 1, "empty file".into()))?;
    if header.len() != 4 {
        return Err(err(line, 1, format!("header needs kind,p,q,N, found {} fields", header.len())));
    }
    let matrix = match &header[0] {
        "vector" => false,
        "matrix" => true,
        other => return Err(err(line, 1, format!("kind must be vector or matrix, found {other:?}"))),
    };
    let count =
        |column: usize| -> CliResult<usize> {
            header[column - 1].parse::<usize>().ok().filter(|v| *v > 0).ok_or_else(|| {
                err(line, column, format!("expected a positive integer, found {:?}", &header[column - 1]))
            })
        };
    let (p, q, n) = (count(2)?, count(3)?, count(4)?);
    if !matrix && q != 1 {
        return Err(err(line, 3, format!("vector data need q = 1, found {q}")));
    }

    let (line, names) = next("column names")?.ok_or_else(|| err(line + 1, 1, "missing column names".into()))?;
    let expected = column_names(matrix, p, q);
    if names.len() != expected.len() {
        return Err(err(line, 1, format!("expected {} columns, found {}", expected.len(), names.len())));
    }
    if let Some(column) = names.iter().zip(&expected).position(|(a, b)| a != b) {
        return Err(err(
            line,
            column + 1,
            format!("expected column {:?}, found {:?}", expected[column], &names[column]),
        ));
    }

    let width = p * q;
    let mut entries = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut last_line = line;
    while let Some((line, record)) = next("row")? {
        last_line = line;
        if record.len() != width + 1 {
            return Err(err(
                line,
                record.len().min(width + 1),
                format!("expected {} fields, found {}", width + 1, record.len()),
            ));
        }
        let mut values = Vec::with_capacity(width + 1);
        for (column, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| err(line, column + 1, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(err(line, column + 1, format!("non-finite value {field:?}")));
            }
            values.push(v);
        }
        let w = values.pop().expect("width + 1 fields");
        if !(w > 0.0) {
            return Err(err(line, width + 1, format!("weight must be positive, found {w}")));
        }
        entries.push(values);
        weights.push(w);
    }
    if entries.len() != n {
        return Err(err(last_line, 1, format!("header declares N = {n}, found {} rows", entries.len())));
    }

    Ok(if matrix {
        let samples = entries.iter().map(|v| DMatrix::from_row_slice(p, q, v)).collect();
        Dataset::Matrix(WeightedMatrixData::new(samples, weights)?)
    } else {
        let samples = entries.into_iter().map(DVector::from_vec).collect();
        Dataset::Vector(WeightedVectorData::new(samples, weights)?)
    })
}

pub fn write_dataset<W: Write>(data: &Dataset, out: W) -> csv::Result<()> {
    let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let (p, q) = data.shape();
    let matrix = matches!(data, Dataset::Matrix(_));
    let kind = if matrix { "matrix" } else { "vector" };
    writer.write_record([kind.to_string(), p.to_string(), q.to_string(), data.len().to_string()])?;
    writer.write_record(column_names(matrix, p, q))?;
    let mut row = |entries: Vec<f64>, w: f64| {
        let mut fields: Vec<String> = entries.into_iter().map(format_f64).collect();
        fields.push(format_f64(w));
        writer.write_record(fields)
    };
    match data {
        Dataset::Vector(d) => {
            for (y, w) in d.samples().iter().zip(d.weights()) {
                row(y.iter().copied().collect(), *w)?;
            }
        }
        Dataset::Matrix(d) => {
            for (x, w) in d.samples().iter().zip(d.weights()) {
                row(x.transpose().iter().copied().collect(), *w)?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<Dataset> {
        parse_dataset(text, "test.csv")
    }

    #[test]
    fn parses_vector_and_matrix_files() {
        let v = parse("vector,2,1,2\ny1,y2,w\n2,0,1\n0.5,-1,3\n").unwrap();
        assert_eq!(v.shape(), (2, 1));
        assert_eq!(v.len(), 2);
        let m = parse("matrix,2,2,1\nx1_1,x1_2,x2_1,x2_2,w\n1,2,3,4,2\n").unwrap();
        let Dataset::Matrix(d) = m else { panic!("expected matrix data") };
        assert_eq!(d.samples()[0], DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn round_trips_bit_exactly() {
        let x = DMatrix::from_row_slice(2, 3, &[0.1, -2.5e-7, 3.0, 1.0 / 3.0, 7.0, -1e300]);
        let data = Dataset::Matrix(WeightedMatrixData::new(vec![x], vec![0.3]).unwrap());
        let mut out = Vec::new();
        write_dataset(&data, &mut out).unwrap();
        let back = parse(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn reports_line_and_column() {
        let e = parse("vector,2,1,2\ny1,y2,w\n2,0,1\n0.5,abc,3\n").unwrap_err().to_string();
        assert!(e.starts_with("test.csv:4:2:"), "{e}");
        let e = parse("vector,2,1,1\ny1,y2,w\n2,0,0\n").unwrap_err().to_string();
        assert!(e.starts_with("test.csv:3:3:"), "{e}");
        let e = parse("vector,2,1,1\ny1,y3,w\n2,0,1\n").unwrap_err().to_string();
        assert!(e.starts_with("test.csv:2:2:"), "{e}");
        let e = parse("vector,2,1,3\ny1,y2,w\n2,0,1\n").unwrap_err().to_string();
        assert!(e.contains("N = 3"), "{e}");
        let e = parse("tensor,2,1,1\n").unwrap_err().to_string();
        assert!(e.starts_with("test.csv:1:1:"), "{e}");
        let e = parse("vector,2,1,1\ny1,y2,w\n2,1\n").unwrap_err().to_string();
        assert!(e.starts_with("test.csv:3:"), "{e}");
    }
}
