//! Grayscale frames and binary PGM (P5) reading/writing.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use latentmotion_tensor::Tensor;

use crate::error::{FlowError, Result};

/// Smallest frame side the pyramid estimator can work with.
pub const MIN_SIDE: usize = 8;

/// A grayscale image with values in [0,1], at least 8 px per side.
#[derive(Clone)]
pub struct Frame {
    data: Tensor, // [h, w]
}

impl Frame {
    pub fn new(data: Tensor) -> Result<Frame> {
        let shape = data.shape();
        if shape.len() != 2 {
            return Err(FlowError::Contract(format!(
                "frame must be rank 2, got shape {shape:?}"
            )));
        }
        let (h, w) = (shape[0], shape[1]);
        if h < MIN_SIDE || w < MIN_SIDE {
            return Err(FlowError::Contract(format!(
                "frame must be at least {MIN_SIDE}x{MIN_SIDE}, got {h}x{w}"
            )));
        }
        let in_range = data.with_data(|d| d.iter().all(|&v| v.is_finite() && (0.0..=1.0).contains(&v)));
        if !in_range {
            return Err(FlowError::Contract("frame values must lie in [0,1]".into()));
        }
        Ok(Frame { data })
    }

    /// Build a frame by evaluating `f(x, y)`; the result is clamped to [0,1].
    pub fn from_fn(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> Result<Frame> {
        let mut data = vec![0.0; h * w];
        for y in 0..h {
            for x in 0..w {
                data[y * w + x] = f(x, y).clamp(0.0, 1.0);
            }
        }
        Frame::new(Tensor::from_vec(data, &[h, w])?)
    }

    pub fn height(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn width(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn tensor(&self) -> &Tensor {
        &self.data
    }

    pub fn pixels(&self) -> Vec<f64> {
        self.data.data()
    }

    // ── PGM I/O ──────────────────────────────────────────────────────

    /// Write as binary PGM (P5), 8-bit.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write!(w, "P5\n{} {}\n255\n", self.width(), self.height())?;
        let bytes: Vec<u8> = self
            .pixels()
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        w.write_all(&bytes)?;
        w.flush()?;
        Ok(())
    }

    /// Read a binary PGM (P5) with maxval ≤ 255; values map linearly to [0,1].
    pub fn read_pgm(path: &Path) -> Result<Frame> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        let mut pos = 0;
        let magic = next_token(&bytes, &mut pos)
            .ok_or_else(|| FlowError::Format("missing magic".into()))?;
        if magic != b"P5" {
            return Err(FlowError::Format(format!(
                "expected P5, got {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            let tok = next_token(&bytes, &mut pos)
                .ok_or_else(|| FlowError::Format("truncated header".into()))?;
            *d = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| FlowError::Format("bad header integer".into()))?;
        }
        let (w, h, maxval) = (dims[0], dims[1], dims[2]);
        if maxval == 0 || maxval > 255 {
            return Err(FlowError::Format(format!("unsupported maxval {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let need = w * h;
        if bytes.len() < pos + need {
            return Err(FlowError::Format(format!(
                "raster truncated: need {need} bytes, have {}",
                bytes.len().saturating_sub(pos)
            )));
        }
        let data: Vec<f64> = bytes[pos..pos + need]
            .iter()
            .map(|&b| b as f64 / maxval as f64)
            .collect();
        Frame::new(Tensor::from_vec(data, &[h, w])?)
    }
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
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
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(&bytes[start..*pos])
}

/// Per-pixel displacement field: `u` horizontal (+x right), `v` vertical
/// (+y down), in pixels, both shaped like the source frame.
#[derive(Clone)]
pub struct FlowField {
    pub u: Tensor,
    pub v: Tensor,
}

impl FlowField {
    pub fn new(u: Tensor, v: Tensor) -> Result<FlowField> {
        if u.shape() != v.shape() || u.rank() != 2 {
            return Err(FlowError::ShapeMismatch { op: "flow_field", lhs: u.shape(), rhs: v.shape() });
        }
        if !u.is_finite() || !v.is_finite() {
            return Err(FlowError::Contract("flow field must be finite".into()));
        }
        Ok(FlowField { u, v })
    }

    pub fn height(&self) -> usize {
        self.u.shape()[0]
    }

    pub fn width(&self) -> usize {
        self.u.shape()[1]
    }
}
