// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Artifact formats. Every CSV starts with `# ramopt <version> seed=<seed>`
//! followed by a column header; floats use Rust's shortest round-trip
//! formatting so files are byte-stable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::{ScalarField, SpatialGrid};
use crate::tomography::{DensityMatrix, QuadratureSample};
use crate::waveforms::ControlWaveform;

/// CSV text with the standard comment header.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(seed: u64, columns: &[&str]) -> Self {
        let mut text = format!("# ramopt {} seed={seed}\n", crate::VERSION);
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row<I, T>(&mut self, fields: I) -> &mut Self
    where
        I: IntoIterator<Item = T>,
        T: std::fmt::Display,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.text.push(',');
            }
            first = false;
            let _ = write!(self.text, "{f}");
        }
        self.text.push('\n');
        self
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Data rows of a CSV written by [`Csv`]: comments and the header skipped.
pub fn parse_csv(text: &str, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("missing CSV header".into()))?;
    if header.split(',').map(str::trim).ne(columns.iter().copied()) {
        return Err(Error::Parse(format!(
            "expected columns {}, found {header}",
            columns.join(",")
        )));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let row: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("data row {}: {e}", i + 1)))?;
            if row.len() != columns.len() {
                return Err(Error::Parse(format!(
                    "data row {} has {} fields, expected {}",
                    i + 1,
                    row.len(),
                    columns.len()
                )));
            }
            Ok(row)
        })
        .collect()
}

pub fn waveform_csv(w: &ControlWaveform, seed: u64) -> String {
    let mut csv = Csv::new(seed, &["time_ns", "amplitude"]);
    for (t, a) in w.grid().times().iter().zip(w.amplitude()) {
        csv.row([t, a]);
    }
    csv.into_string()
}

pub fn quadrature_csv(samples: &[QuadratureSample], seed: u64) -> String {
    let mut csv = Csv::new(seed, &["theta_rad", "x"]);
    for s in samples {
        csv.row([s.theta, s.x]);
    }
    csv.into_string()
}

pub fn parse_quadratures(text: &str) -> Result<Vec<QuadratureSample>> {
    parse_csv(text, &["theta_rad", "x"])?
        .into_iter()
        .map(|r| QuadratureSample::new(r[0], r[1]))
        .collect()
}

pub fn density_csv(rho: &DensityMatrix, seed: u64) -> String {
    let mut csv = Csv::new(seed, &["i", "j", "re", "im"]);
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            let c = rho.get(i, j);
            csv.row([
                i.to_string(),
                j.to_string(),
                c.re.to_string(),
                c.im.to_string(),
            ]);
        }
    }
    csv.into_string()
}

pub fn parse_density(text: &str) -> Result<DensityMatrix> {
    let rows = parse_csv(text, &["i", "j", "re", "im"])?;
    let dim = (rows.len() as f64).sqrt().round() as usize;
    if dim * dim != rows.len() || dim == 0 {
        return Err(Error::Parse(format!(
            "{} entries do not form a square matrix",
            rows.len()
        )));
    }
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
    for r in rows {
        let (i, j) = (r[0] as usize, r[1] as usize);
        if i >= dim || j >= dim {
            return Err(Error::Parse(format!(
                "index ({i}, {j}) outside {dim}x{dim}"
            )));
        }
        m[(i, j)] = Complex64::new(r[2], r[3]);
    }
    DensityMatrix::new(m)
}

/// `rows cols` header then one `re im` pair per line, row-major.
pub fn field_text(f: &ScalarField) -> String {
    let mut text = format!("{} {}\n", f.grid.n_y, f.grid.n_x);
    for v in &f.values {
        let _ = writeln!(text, "{} {}", v.re, v.im);
    }
    text
}

/// Reads a complex field; `extent` is not stored in the text format.
pub fn parse_field(text: &str, extent: f64) -> Result<ScalarField> {
    let mut tokens = text.split_whitespace();
    let mut next = |what: &str| -> Result<&str> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))
    };
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad field size: {e}")))
    };
    let rows = parse_usize(next("row count")?)?;
    let cols = parse_usize(next("column count")?)?;
    let mut values = Vec::with_capacity(rows * cols);
    for k in 0..rows * cols {
        let mut num = || -> Result<f64> {
            next("field value")?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("field value {k}: {e}")))
        };
        let re = num()?;
        let im = num()?;
        values.push(Complex64::new(re, im));
    }
    ScalarField::new(SpatialGrid::new(cols, rows, extent)?, values)
}

/// Reads a text file, naming the path in any I/O error.
pub fn read_text(path: &str) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{path}: {e}"))))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveforms::TimeGrid;

    #[test]
    fn waveform_round_trip() {
        let grid = TimeGrid::new(0.0, 10.0, 5).unwrap();
        let w = ControlWaveform::new(grid, vec![0.0, 0.1, 1.0 / 3.0, 2.5, 1e-17]).unwrap();
        let text = waveform_csv(&w, 7);
        assert!(text.starts_with(&format!(
            "# ramopt {} seed=7\ntime_ns,amplitude\n",
            crate::VERSION
        )));
        let rows = parse_csv(&text, &["time_ns", "amplitude"]).unwrap();
        let back: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        assert_eq!(back, w.amplitude());
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(parse_csv("a,b\n1,2\n", &["a", "c"]).is_err());
        assert!(parse_csv("a,b\n1\n", &["a", "b"]).is_err());
    }

    #[test]
    fn density_round_trip() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::pure(&[Complex64::new(s, 0.0), Complex64::new(0.0, s)]).unwrap();
        assert_eq!(parse_density(&density_csv(&rho, 1)).unwrap(), rho);
    }

    #[test]
    fn field_round_trip() {
        let grid = SpatialGrid::square(16, 1.0).unwrap();
        let f = crate::modes::lg_field(1, 0.3, &grid).unwrap();
        assert_eq!(parse_field(&field_text(&f), 1.0).unwrap(), f);
    }
}
