//! CSV and JSON files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// One header line then one line per row.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(create(path)?));
    for row in rows {
        w.serialize(row).map_err(|source| Error::Csv { path: path.to_path_buf(), source })?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    serde_json::from_reader(BufReader::new(f)).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        a: usize,
        b: Option<f64>,
    }

    #[test]
    fn csv_rows_and_empty_options() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/out.csv");
        write_csv(&p, &[Row { a: 1, b: Some(0.5) }, Row { a: 2, b: None }]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "a,b\n1,0.5\n2,\n");
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        let v = vec![0.1f64, 1.0 / 3.0, 1e-300];
        write_json(&p, &v).unwrap();
        let back: Vec<f64> = read_json(&p).unwrap();
        assert_eq!(v, back);
    }

    #[test]
    fn errors_carry_path() {
        let err = read_json::<Vec<f64>>(Path::new("/nonexistent/x.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.json"), "{err}");
    }
}
