//! CSV, Touchstone and JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use synthrot_core::linalg::CMatrix;

use crate::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Comma-separated table with a header row and LF line endings.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(path: PathBuf, header: &[String]) -> Result<Self, CliError> {
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::new(file));
        writer.write_record(header).map_err(|e| csv_err(&path, e))?;
        Ok(Self { path, writer })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        let path = &self.path;
        self.writer
            .write_record(values.iter().map(|v| v.to_string()))
            .map_err(|e| csv_err(path, e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(io_err(&self.path))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

/// Version-1 Touchstone file of 4x4 matrices in real/imaginary pairs, one
/// matrix row per line.
pub fn write_touchstone(path: &Path, r: f64, points: &[(f64, CMatrix)]) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "! 4-port scattering, exact lumped model")?;
        writeln!(w, "# HZ S RI R {r}")?;
        for (f, s) in points {
            for i in 0..4 {
                if i == 0 {
                    write!(w, "{f}")?;
                } else {
                    write!(w, " ")?;
                }
                for j in 0..4 {
                    write!(w, " {} {}", s[(i, j)].re, s[(i, j)].im)?;
                }
                writeln!(w)?;
            }
        }
        w.flush()
    };
    body().map_err(io_err(path))
}
