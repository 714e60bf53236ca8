// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Real intensity images and PGM (P5) I/O.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Row-major intensity image; pixel `(x, y)` is column `x`, row `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::invalid(format!(
                "image {width}x{height} does not match {} pixels",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Geometric center in pixel coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.width as f64 - 1.0),
            0.5 * (self.height as f64 - 1.0),
        )
    }

    /// Writes a 16-bit binary PGM scaled so the maximum maps to 65535.
    pub fn write_pgm16<W: Write>(&self, mut out: W) -> Result<()> {
        let peak = self.max();
        let scale = if peak > 0.0 { 65535.0 / peak } else { 0.0 };
        write!(out, "P5\n{} {}\n65535\n", self.width, self.height)?;
        let mut bytes = Vec::with_capacity(2 * self.data.len());
        for v in &self.data {
            let q = (v.max(0.0) * scale).round().min(65535.0) as u16;
            bytes.extend_from_slice(&q.to_be_bytes());
        }
        out.write_all(&bytes)?;
        Ok(())
    }

    /// Reads an 8- or 16-bit binary PGM; values are returned in raw counts.
    pub fn read_pgm<R: Read>(mut input: R) -> Result<Self> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf)?;
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < buf.len() && (buf[pos].is_ascii_whitespace() || buf[pos] == b'#') {
                if buf[pos] == b'#' {
                    while pos < buf.len() && buf[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Parse("truncated PGM header".into()));
            }
            fields.push(String::from_utf8_lossy(&buf[start..pos]).into_owned());
        }
        pos += 1;
        if fields[0] != "P5" {
            return Err(Error::Parse(format!("unsupported PGM magic {}", fields[0])));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse(format!("PGM header: {e}")))
        };
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        let wide = maxval > 255;
        let bytes_per = if wide { 2 } else { 1 };
        let need = width * height * bytes_per;
        let body = buf
            .get(pos..pos + need)
            .ok_or_else(|| Error::Parse("truncated PGM data".into()))?;
        let data = if wide {
            body.chunks_exact(2)
                .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])))
                .collect()
        } else {
            body.iter().map(|&b| f64::from(b)).collect()
        };
        Self::new(width, height, data)
    }
}
