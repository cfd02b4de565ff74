//! File formats used by the command-line tools.
//!
//! Three formats cover every pipeline: single-column CSV for 1D signals
//! (plus a comma-separated variant for dense design matrices), PGM for
//! grayscale images, and a small binary container for arbitrary tensors.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;
use tvprox_nd::TensorND;

#[derive(Debug, Error)]
pub enum FileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    /// The file was readable but its contents do not match the format.
    #[error("{0}")]
    Format(String),
}

fn format_err<T>(msg: impl Into<String>) -> Result<T, FileError> {
    Err(FileError::Format(msg.into()))
}

/// Reads a signal stored one value per line. Blank lines are ignored.
pub fn read_signal_csv(path: &Path) -> Result<Vec<f64>, FileError> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        match token.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) => {
                return format_err(format!(
                    "{}: line {} is not a number: {:?}",
                    path.display(),
                    lineno + 1,
                    token
                ))
            }
        }
    }
    if out.is_empty() {
        return format_err(format!("{}: no values found", path.display()));
    }
    Ok(out)
}

/// Writes a signal one value per line using the shortest round-trip
/// decimal form, so save followed by load reproduces the exact bits.
pub fn write_signal_csv(path: &Path, values: &[f64]) -> Result<(), FileError> {
    let mut text = String::new();
    for v in values {
        writeln!(text, "{v}").expect("string write cannot fail");
    }
    fs::write(path, text)?;
    Ok(())
}

/// Reads a dense matrix stored as comma-separated rows, returning the
/// entries in row-major order together with the shape.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<f64>, usize, usize), FileError> {
    let text = fs::read_to_string(path)?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut width = 0usize;
        for token in trimmed.split(',') {
            let token = token.trim();
            match token.parse::<f64>() {
                Ok(v) => data.push(v),
                Err(_) => {
                    return format_err(format!(
                        "{}: line {} has a bad entry: {:?}",
                        path.display(),
                        lineno + 1,
                        token
                    ))
                }
            }
            width += 1;
        }
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return format_err(format!(
                    "{}: line {} has {} entries, expected {}",
                    path.display(),
                    lineno + 1,
                    width,
                    c
                ))
            }
            Some(_) => {}
        }
        rows += 1;
    }
    let cols = match cols {
        Some(c) => c,
        None => return format_err(format!("{}: no rows found", path.display())),
    };
    Ok((data, rows, cols))
}

pub fn write_matrix_csv(path: &Path, data: &[f64], rows: usize, cols: usize) -> Result<(), FileError> {
    if data.len() != rows * cols {
        return format_err(format!(
            "matrix data has {} entries, shape {}x{} needs {}",
            data.len(),
            rows,
            cols,
            rows * cols
        ));
    }
    let mut text = String::new();
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                text.push(',');
            }
            write!(text, "{}", data[r * cols + c]).expect("string write cannot fail");
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Grayscale image loaded from PGM, with intensities normalized to [0, 1].
///
/// Keeps the source maxval so that a save after processing quantizes back
/// to the same grid the file came from.
pub struct ImageGray {
    pub tensor: TensorND,
    pub maxval: u16,
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmCursor<'a> {
    /// Advances past whitespace and `#` comment lines, then reads one
    /// whitespace-delimited token.
    fn token(&mut self) -> Option<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Some(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u64, FileError> {
        let token = match self.token() {
            Some(t) => t,
            None => return format_err(format!("unexpected end of PGM header reading {what}")),
        };
        let text = std::str::from_utf8(token)
            .map_err(|_| FileError::Format(format!("PGM {what} is not ASCII")))?;
        text.parse::<u64>()
            .map_err(|_| FileError::Format(format!("PGM {what} is not a number: {text:?}")))
    }
}

/// Reads a P2 (ASCII) or P5 (binary) PGM image. Sample values are divided
/// by maxval, so the returned tensor lies in [0, 1] with shape
/// [rows, columns].
pub fn read_pgm(path: &Path) -> Result<ImageGray, FileError> {
    let bytes = fs::read(path)?;
    let mut cur = PgmCursor { bytes: &bytes, pos: 0 };
    let magic = match cur.token() {
        Some(m) => m,
        None => return format_err(format!("{}: empty file", path.display())),
    };
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        other => {
            return format_err(format!(
                "{}: not a PGM file (magic {:?})",
                path.display(),
                String::from_utf8_lossy(other)
            ))
        }
    };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return format_err(format!("{}: degenerate image {}x{}", path.display(), width, height));
    }
    if maxval == 0 || maxval > 65535 {
        return format_err(format!("{}: maxval {} is out of range", path.display(), maxval));
    }
    let count = width * height;
    let scale = 1.0 / maxval as f64;
    let mut data = Vec::with_capacity(count);
    if binary {
        // The raster starts after exactly one whitespace byte following maxval.
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return format_err(format!("{}: missing separator before raster", path.display()));
        }
        let raster = &bytes[cur.pos + 1..];
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        if raster.len() < need {
            return format_err(format!(
                "{}: raster has {} bytes, needs {}",
                path.display(),
                raster.len(),
                need
            ));
        }
        if wide {
            for pair in raster[..need].chunks_exact(2) {
                let sample = u16::from_be_bytes([pair[0], pair[1]]) as u64;
                if sample > maxval {
                    return format_err(format!(
                        "{}: sample {} exceeds maxval {}",
                        path.display(),
                        sample,
                        maxval
                    ));
                }
                data.push(sample as f64 * scale);
            }
        } else {
            for &b in &raster[..need] {
                if b as u64 > maxval {
                    return format_err(format!(
                        "{}: sample {} exceeds maxval {}",
                        path.display(),
                        b,
                        maxval
                    ));
                }
                data.push(b as f64 * scale);
            }
        }
    } else {
        for _ in 0..count {
            let sample = cur.number("sample")?;
            if sample > maxval {
                return format_err(format!(
                    "{}: sample {} exceeds maxval {}",
                    path.display(),
                    sample,
                    maxval
                ));
            }
            data.push(sample as f64 * scale);
        }
    }
    let tensor = TensorND::new(vec![height, width], data)
        .map_err(|e| FileError::Format(e.to_string()))?;
    Ok(ImageGray { tensor, maxval })
}

/// Writes a 2D tensor as PGM. Values are clamped to [0, 1] and rounded to
/// the nearest of the maxval + 1 levels, so a load after save differs from
/// the clamped input by at most half a quantization step.
pub fn write_pgm(path: &Path, image: &TensorND, maxval: u16, binary: bool) -> Result<(), FileError> {
    if image.ndim() != 2 {
        return format_err(format!("PGM output needs a 2D tensor, got {} axes", image.ndim()));
    }
    if maxval == 0 {
        return format_err("PGM maxval must be positive".to_string());
    }
    let height = image.dims()[0];
    let width = image.dims()[1];
    let quantize = |v: f64| -> u64 {
        let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        (v * maxval as f64).round() as u64
    };
    let mut out = Vec::new();
    if binary {
        out.extend_from_slice(format!("P5\n{width} {height}\n{maxval}\n").as_bytes());
        if maxval > 255 {
            for &v in image.data() {
                out.extend_from_slice(&(quantize(v) as u16).to_be_bytes());
            }
        } else {
            for &v in image.data() {
                out.push(quantize(v) as u8);
            }
        }
    } else {
        let mut text = format!("P2\n{width} {height}\n{maxval}\n");
        for r in 0..height {
            for c in 0..width {
                if c > 0 {
                    text.push(' ');
                }
                write!(text, "{}", quantize(image.data()[r * width + c]))
                    .expect("string write cannot fail");
            }
            text.push('\n');
        }
        out = text.into_bytes();
    }
    fs::write(path, out)?;
    Ok(())
}

const TENSOR_MAGIC: &[u8; 4] = b"TVT1";

/// Reads the binary tensor container: magic "TVT1", little-endian u32
/// axis count, one little-endian u32 per axis length, then the elements
/// as little-endian f64 in row-major order.
pub fn read_tensor(path: &Path) -> Result<TensorND, FileError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 8 || &bytes[..4] != TENSOR_MAGIC {
        return format_err(format!("{}: not a TVT1 tensor file", path.display()));
    }
    let ndim = u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
    if ndim == 0 {
        return format_err(format!("{}: tensor has zero axes", path.display()));
    }
    let header = 8 + 4 * ndim;
    if bytes.len() < header {
        return format_err(format!("{}: truncated dimension list", path.display()));
    }
    let mut dims = Vec::with_capacity(ndim);
    let mut count = 1usize;
    for k in 0..ndim {
        let off = 8 + 4 * k;
        let d = u32::from_le_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]])
            as usize;
        count = count
            .checked_mul(d)
            .ok_or_else(|| FileError::Format(format!("{}: dimensions overflow", path.display())))?;
        dims.push(d);
    }
    let body = &bytes[header..];
    if body.len() != count * 8 {
        return format_err(format!(
            "{}: body has {} bytes, shape {:?} needs {}",
            path.display(),
            body.len(),
            dims,
            count * 8
        ));
    }
    let mut data = Vec::with_capacity(count);
    for chunk in body.chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().expect("chunk is 8 bytes")));
    }
    TensorND::new(dims, data).map_err(|e| FileError::Format(e.to_string()))
}

pub fn write_tensor(path: &Path, tensor: &TensorND) -> Result<(), FileError> {
    let mut out = Vec::with_capacity(8 + 4 * tensor.ndim() + 8 * tensor.len());
    out.extend_from_slice(TENSOR_MAGIC);
    let ndim = u32::try_from(tensor.ndim())
        .map_err(|_| FileError::Format("too many axes for the tensor format".to_string()))?;
    out.extend_from_slice(&ndim.to_le_bytes());
    for &d in tensor.dims() {
        let d = u32::try_from(d)
            .map_err(|_| FileError::Format("axis too long for the tensor format".to_string()))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for &v in tensor.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}
