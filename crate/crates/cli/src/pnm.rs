//! Binary 8-bit PGM (P5) and PPM (P6) images.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// An 8-bit image with 1 (grey) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pnm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Pnm {
    /// Quantizes values in `[0, 1]` (clamped) to 8 bits.
    pub fn from_unit(width: usize, height: usize, channels: usize, values: &[f64]) -> Self {
        debug_assert_eq!(values.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            data: values.iter().map(|&v| to_byte(v)).collect(),
        }
    }

    pub fn to_unit(&self) -> Vec<f64> {
        self.data.iter().map(|&b| f64::from(b) / 255.0).collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let magic = next_token(bytes, &mut pos)?;
        let channels = match magic.as_str() {
            "P5" => 1,
            "P6" => 3,
            other => bail!("unsupported image format {other:?}, expected binary P5 or P6"),
        };
        let width = parse_dim(bytes, &mut pos, "width")?;
        let height = parse_dim(bytes, &mut pos, "height")?;
        let maxval = parse_dim(bytes, &mut pos, "maxval")?;
        if maxval != 255 {
            bail!("only 8-bit images with maxval 255 are supported, found {maxval}");
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let len = width * height * channels;
        let raster = bytes.get(pos..).unwrap_or_default();
        if raster.len() < len {
            bail!("truncated raster: expected {len} bytes, found {}", raster.len());
        }
        Ok(Self {
            width,
            height,
            channels,
            data: raster[..len].to_vec(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Self::decode(&bytes).with_context(|| format!("decoding {}", path.display()))
    }
}

pub fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        match bytes.get(*pos) {
            None => bail!("unexpected end of header"),
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn parse_dim(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(bytes, pos)?;
    let v: usize = tok.parse().with_context(|| format!("invalid {what} {tok:?}"))?;
    if v == 0 {
        bail!("{what} must be positive");
    }
    Ok(v)
}
