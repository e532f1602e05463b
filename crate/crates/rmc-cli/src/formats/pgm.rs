//! Binary PGM (P5) frames and frame stacks.
//!
//! A video is a directory of same-sized P5 frames, ordered by lexicographic
//! filename. Each frame is stacked column-major into one column of a
//! (width·height) × frame_count matrix with pixel values scaled to [0, 1].

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{CliError, Result};
use crate::formats::atomic_write;

/// A grayscale video as a stacked pixel matrix.
#[derive(Debug, Clone)]
pub struct FrameStack {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    /// (width·height) × frame_count; column j is frame j, itself stacked
    /// column-major (pixel (row, col) at index col·height + row).
    pub pixels: DMatrix<f64>,
}

/// One decoded frame, column-major, values in [0, 1].
#[derive(Debug, Clone)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

/// Read a single binary PGM (P5) file. maxval up to 65535 (two-byte
/// big-endian samples above 255, per the format).
pub fn read_pgm(path: &Path) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut pos = 0usize;

    let magic = next_token(path, &bytes, &mut pos)?;
    if magic != "P5" {
        return Err(CliError::format(path, format!("bad magic \"{magic}\", expected P5")));
    }
    let width = parse_header_int(path, &bytes, &mut pos, "width")?;
    let height = parse_header_int(path, &bytes, &mut pos, "height")?;
    let maxval = parse_header_int(path, &bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(CliError::format(path, format!("maxval {maxval} out of range 1..=65535")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(CliError::format(path, "missing whitespace before raster"));
    }
    pos += 1;

    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let expected = width * height * sample_bytes;
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(CliError::TruncatedFile {
            path: path.to_path_buf(),
            expected,
            found: raster.len(),
        });
    }
    if raster.len() > expected {
        return Err(CliError::format(
            path,
            format!("{} trailing bytes after raster", raster.len() - expected),
        ));
    }

    let scale = maxval as f64;
    let mut pixels = vec![0.0; width * height];
    for row in 0..height {
        for col in 0..width {
            let idx = row * width + col;
            let raw = if sample_bytes == 1 {
                raster[idx] as u32
            } else {
                u32::from(raster[2 * idx]) << 8 | u32::from(raster[2 * idx + 1])
            };
            // raster order is row-major; storage is column-major
            pixels[col * height + row] = raw as f64 / scale;
        }
    }
    Ok(Frame { width, height, pixels })
}

/// Write one stacked column back out as a P5 frame, clamping to [0, 1] and
/// quantizing by rounding. Inverts the stacking convention of [`read_pgm`].
pub fn write_pgm(path: &Path, column: &[f64], width: usize, height: usize, maxval: u16) -> Result<()> {
    assert_eq!(column.len(), width * height, "column length != width*height");
    assert!(maxval > 0);
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    let scale = f64::from(maxval);
    for row in 0..height {
        for col in 0..width {
            let v = column[col * height + row].clamp(0.0, 1.0);
            let q = (v * scale).round() as u32;
            if maxval < 256 {
                out.push(q as u8);
            } else {
                out.push((q >> 8) as u8);
                out.push((q & 0xff) as u8);
            }
        }
    }
    atomic_write(path, &out)
}

/// Read an explicit list of frame paths into a stack.
pub fn read_pgm_stack(paths: &[PathBuf]) -> Result<FrameStack> {
    if paths.is_empty() {
        return Err(CliError::format(Path::new("."), "no frames given"));
    }
    let first = read_pgm(&paths[0])?;
    let (width, height) = (first.width, first.height);
    let mut pixels = DMatrix::zeros(width * height, paths.len());
    pixels.column_mut(0).copy_from_slice(&first.pixels);
    for (j, path) in paths.iter().enumerate().skip(1) {
        let frame = read_pgm(path)?;
        if frame.width != width || frame.height != height {
            return Err(CliError::InconsistentDimensions {
                path: path.clone(),
                found_w: frame.width,
                found_h: frame.height,
                want_w: width,
                want_h: height,
            });
        }
        pixels.column_mut(j).copy_from_slice(&frame.pixels);
    }
    Ok(FrameStack { width, height, frame_count: paths.len(), pixels })
}

/// Read every `.pgm` file in a directory, ordered by lexicographic filename.
pub fn read_pgm_dir(dir: &Path) -> Result<FrameStack> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "pgm") {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(CliError::format(dir, "directory contains no .pgm frames"));
    }
    paths.sort();
    read_pgm_stack(&paths)
}

fn next_token<'a>(path: &Path, bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    // skip whitespace and '#' comments (to end of line)
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= bytes.len() {
        return Err(CliError::format(path, "unexpected end of header"));
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| CliError::format(path, "non-ASCII header token"))
}

fn parse_header_int(path: &Path, bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(path, bytes, pos)?;
    tok.parse()
        .map_err(|_| CliError::format(path, format!("invalid {what} \"{tok}\"")))
}
