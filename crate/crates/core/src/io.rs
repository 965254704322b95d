//! File formats: headerless CSV matrices, binary PGM images and JSON documents.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

fn format_row(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",")
}

/// One line per row, 17 significant digits.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    write_matrix_csv_with_header(path, m, None)
}

pub fn write_matrix_csv_with_header(
    path: impl AsRef<Path>,
    m: &DMatrix<f64>,
    header: Option<&[String]>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    if let Some(h) = header {
        writeln!(out, "{}", h.join(","))?;
    }
    for row in m.row_iter() {
        writeln!(out, "{}", format_row(row.iter().copied()))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a rectangular headerless CSV of numbers.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| {
                    Error::Parse(format!("{}:{}: {field:?}: {e}", path.display(), line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "{}:{}: expected {} columns, found {}",
                    path.display(),
                    line + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: no rows", path.display())));
    }
    let cols = rows[0].len();
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
}

/// Single column of values.
pub fn write_vector_csv(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    write_matrix_csv(path, &DMatrix::from_column_slice(v.len(), 1, v))
}

/// 8-bit greyscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", img.width, img.height)?;
    out.write_all(&img.pixels)?;
    out.flush()?;
    Ok(())
}

fn next_token(reader: &mut impl BufRead) -> Result<String> {
    let mut token = String::new();
    loop {
        let mut byte = [0u8; 1];
        if reader.read(&mut byte)? == 0 {
            break;
        }
        let c = byte[0] as char;
        if c == '#' && token.is_empty() {
            let mut skip = String::new();
            reader.read_line(&mut skip)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(c);
    }
    if token.is_empty() {
        return Err(Error::Parse("truncated PGM header".into()));
    }
    Ok(token)
}

/// Reads a binary (P5) PGM with maxval ≤ 255.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let mut reader = BufReader::new(File::open(path)?);
    if next_token(&mut reader)? != "P5" {
        return Err(Error::Parse("only binary P5 PGM is supported".into()));
    }
    let mut number = |what: &str| -> Result<usize> {
        next_token(&mut reader)?
            .parse()
            .map_err(|_| Error::Parse(format!("bad PGM {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parse(format!("unsupported PGM maxval {maxval}")));
    }
    let mut pixels = vec![0u8; width * height];
    reader.read_exact(&mut pixels)?;
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

/// Tiles square images (rows of `images`, side `s`) left to right.
///
/// Values are mapped affinely so that `[lo, hi]` spans `[0, 255]`, then clamped.
pub fn image_strip(images: &DMatrix<f64>, side: usize, lo: f64, hi: f64) -> GrayImage {
    let count = images.nrows();
    let width = side * count;
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 1.0 };
    let mut pixels = vec![0u8; width * side];
    for (k, img) in images.row_iter().enumerate() {
        for y in 0..side {
            for x in 0..side {
                let v = ((img[y * side + x] - lo) * scale).round().clamp(0.0, 255.0);
                pixels[y * width + k * side + x] = v as u8;
            }
        }
    }
    GrayImage {
        width,
        height: side,
        pixels,
    }
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
