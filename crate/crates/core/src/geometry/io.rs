//! Point-sample files: a CSV of coordinates (`x0,...,x{d-1}[,mark]`) plus a
//! JSON sidecar `{dim, side, boundary}`.
//!
//! Values are written with 17 significant digits so that reading a file back
//! reproduces every coordinate bit for bit.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Boundary, Configuration, MarkedPoint, Position, Window};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSidecar {
    pub dim: usize,
    pub side: f64,
    pub boundary: Boundary,
}

impl From<&Window> for WindowSidecar {
    fn from(w: &Window) -> Self {
        Self { dim: w.dim(), side: w.side(), boundary: w.boundary() }
    }
}

impl WindowSidecar {
    pub fn window(&self) -> Result<Window> {
        Window::new(self.side, self.dim, self.boundary)
    }
}

/// Formats a value with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_csv<W: Write>(out: W, config: &Configuration) -> Result<()> {
    let d = config.window().dim();
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    if config.is_marked() {
        header.push("mark".into());
    }
    wtr.write_record(&header)?;
    let mut row = Vec::with_capacity(d + 1);
    for p in config.points() {
        row.clear();
        row.extend(p.pos.slice(d).iter().map(|&c| format_f64(c)));
        if let Some(m) = p.mark {
            row.push(format_f64(m));
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R, window: Window, cell_hint: f64, origin: &Path) -> Result<Configuration> {
    let bad = |reason: String| Error::SampleFormat { path: origin.to_path_buf(), reason };
    let d = window.dim();
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let expected: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    let marked = match header.len() {
        n if n == d => false,
        n if n == d + 1 && &header[d] == "mark" => true,
        _ => return Err(bad(format!("unexpected header {header:?}"))),
    };
    if header.iter().take(d).ne(expected.iter().map(String::as_str)) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut config = Configuration::new(window, marked, cell_hint);
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
        if values.len() != header.len() {
            return Err(bad(format!("row {}: wrong field count", line + 1)));
        }
        let pos = Position::new(&values[..d])?;
        let mark = marked.then(|| values[d]);
        config.insert(MarkedPoint::new(pos, mark)?)?;
    }
    Ok(config)
}

/// Writes `path` (CSV) and its JSON sidecar.
pub fn write_sample(path: &Path, config: &Configuration) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), config)?;
    let sidecar = WindowSidecar::from(config.window());
    let mut f = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer(&mut f, &sidecar)?;
    f.flush()?;
    Ok(())
}

/// Reads a CSV sample together with its sidecar.
pub fn read_sample(path: &Path, cell_hint: f64) -> Result<Configuration> {
    let sidecar: WindowSidecar = serde_json::from_reader(File::open(sidecar_path(path))?)?;
    read_csv(File::open(path)?, sidecar.window()?, cell_hint, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(
            coords in prop::collection::vec((0.0f64..7.0, 0.0f64..7.0, 0.0f64..3.0), 0..40),
            marked in any::<bool>(),
        ) {
            let w = Window::periodic(7.0, 2).unwrap();
            let pts = coords.iter().map(|&(x, y, m)| {
                MarkedPoint::new(Position::new(&[x, y]).unwrap(), marked.then_some(m)).unwrap()
            });
            // duplicates are possible in principle; skip those draws
            let Ok(config) = Configuration::from_points(w, marked, 0.5, pts) else {
                return Ok(());
            };
            let mut buf = Vec::new();
            write_csv(&mut buf, &config).unwrap();
            let back = read_csv(buf.as_slice(), w, 0.5, Path::new("mem")).unwrap();
            prop_assert_eq!(back, config);
        }
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let w = Window::free(2.5, 3).unwrap();
        let p = MarkedPoint::unmarked(Position::new(&[0.1, 0.2, 2.4999999999999996]).unwrap());
        let config = Configuration::from_points(w, false, 0.3, [p]).unwrap();
        let path = dir.path().join("s.csv");
        write_sample(&path, &config).unwrap();
        let text = std::fs::read_to_string(sidecar_path(&path)).unwrap();
        assert!(text.contains("\"boundary\":\"free\""));
        assert_eq!(read_sample(&path, 0.3).unwrap(), config);
    }

    #[test]
    fn rejects_bad_header() {
        let w = Window::periodic(1.0, 2).unwrap();
        let err = read_csv("a,b\n0.1,0.2\n".as_bytes(), w, 0.1, Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::SampleFormat { .. }));
    }
}
