use std::fs::File;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use varmix::{Dataset, Task};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskArg {
    Regression,
    Classification,
    Multinomial,
}

/// Reads a headed numeric CSV. `response` names the response column; every
/// other column becomes a predictor, in file order. Classification labels
/// may be coded 0/1 (0 is mapped to -1); multinomial labels are 1..K.
pub fn read_csv(path: &Path, response: &str, task: TaskArg) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Parse {
            line: 1,
            column: "header".into(),
            message: e.to_string(),
        })?
        .iter()
        .map(String::from)
        .collect();
    let resp = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| CliError::Usage(format!("response column {response:?} not found in {}", path.display())))?;
    let names: Vec<String> = headers.iter().enumerate().filter(|(j, _)| *j != resp).map(|(_, h)| h.clone()).collect();
    if names.is_empty() {
        return Err(CliError::Usage(format!("{} has no predictor columns", path.display())));
    }

    let mut cells = Vec::new();
    let mut y = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            column: "-".into(),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| CliError::Parse {
                line,
                column: headers[j].clone(),
                message: format!("{cell:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(CliError::Parse {
                    line,
                    column: headers[j].clone(),
                    message: format!("{cell:?} is not finite"),
                });
            }
            if j == resp {
                y.push(v);
            } else {
                cells.push(v);
            }
        }
        lines.push(line);
    }
    let n = y.len();
    if n == 0 {
        return Err(CliError::Usage(format!("{} has no data rows", path.display())));
    }

    let mut remapped = 0;
    let task = match task {
        TaskArg::Regression => Task::Regression,
        TaskArg::Classification => {
            let zero_one = y.iter().all(|&v| v == 0.0 || v == 1.0) && y.contains(&0.0);
            for (i, v) in y.iter_mut().enumerate() {
                match *v {
                    1.0 | -1.0 => {}
                    0.0 if zero_one => {
                        *v = -1.0;
                        remapped += 1;
                    }
                    _ => {
                        return Err(CliError::Coding {
                            line: lines[i],
                            value: v.to_string(),
                        })
                    }
                }
            }
            Task::Classification
        }
        TaskArg::Multinomial => {
            if let Some(i) = y.iter().position(|&v| v.fract() != 0.0 || v < 1.0) {
                return Err(CliError::Coding {
                    line: lines[i],
                    value: y[i].to_string(),
                });
            }
            Task::Multinomial {
                classes: y.iter().fold(0.0_f64, |m, &v| m.max(v)) as usize,
            }
        }
    };
    if remapped > 0 {
        log::info!("mapped {remapped} labels coded 0 to -1");
    }
    let x = Array2::from_shape_vec((n, names.len()), cells).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Dataset::new(x, Array1::from(y), task)?.with_column_names(names)?)
}

/// Writes predictors and response as a headed CSV (`x1..xp`, `y`).
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let p = data.p();
    let mut header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    let csv_err = |e: csv::Error| CliError::Usage(format!("{}: {e}", path.display()));
    w.write_record(&header).map_err(csv_err)?;
    for (row, y) in data.x().rows().into_iter().zip(data.y().iter()) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(format!("{y}"));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes `text` to `path`, or to standard output when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.write_all(b"\n"))
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn well_formed_file_parses() {
        let f = file("a,b,y\n1,2,0.5\n3,4,1.5\n5,6,2.5\n");
        let d = read_csv(f.path(), "y", TaskArg::Regression).unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.column_names(), ["a", "b"]);
        assert_eq!(d.x()[[2, 1]], 6.0);
    }

    #[test]
    fn zero_one_labels_are_recoded() {
        let f = file("y,x\n0,1\n1,2\n0,3\n");
        let d = read_csv(f.path(), "y", TaskArg::Classification).unwrap();
        assert_eq!(d.y().to_vec(), vec![-1.0, 1.0, -1.0]);
    }

    #[test]
    fn bad_cell_reports_location() {
        let f = file("x,y\n1,2\nabc,3\n");
        match read_csv(f.path(), "y", TaskArg::Regression) {
            Err(CliError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "x");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_label_is_a_coding_error() {
        let f = file("x,y\n1,1\n2,2\n");
        assert!(matches!(
            read_csv(f.path(), "y", TaskArg::Classification),
            Err(CliError::Coding { line: 3, .. })
        ));
    }
}
