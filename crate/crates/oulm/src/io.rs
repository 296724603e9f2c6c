//! Bit-exact raster file I/O.
//!
//! Images and masks travel as binary PGM (`P5`, maxval 255); probability and
//! entropy maps as grayscale PFM (`Pf`, 32-bit little-endian floats, scale
//! `-1.0`, bottom-up row order per the PFM convention).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage, ProbMap};

/// Reads one whitespace-delimited PNM header token, skipping `#` comments.
fn read_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    while *pos < bytes.len() {
        let b = bytes[*pos];
        if b == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else if b.is_ascii_whitespace() {
            *pos += 1;
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("unexpected end of header".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn parse_dim(token: &str) -> Result<usize> {
    let v: usize = token
        .parse()
        .map_err(|_| Error::Format(format!("invalid dimension {token:?}")))?;
    if v == 0 {
        return Err(Error::Format("empty raster rejected".into()));
    }
    Ok(v)
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let magic = read_token(&bytes, &mut pos)?;
    if magic != "P5" {
        return Err(Error::Format(format!("expected P5 magic, got {magic:?}")));
    }
    let width = parse_dim(&read_token(&bytes, &mut pos)?)?;
    let height = parse_dim(&read_token(&bytes, &mut pos)?)?;
    let maxval = read_token(&bytes, &mut pos)?;
    if maxval != "255" {
        return Err(Error::Format(format!("expected maxval 255, got {maxval:?}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Format("missing separator after maxval".into()));
    }
    pos += 1;
    let n = width * height;
    if bytes.len() - pos < n {
        return Err(Error::Format(format!(
            "raster truncated: expected {n} bytes, found {}",
            bytes.len() - pos
        )));
    }
    let data = bytes[pos..pos + n].iter().map(|b| *b as f32).collect();
    GrayImage::new(width, height, data)
}

/// Reads a PGM that must be strictly binary: every pixel 0 or 255.
pub fn read_pgm_mask(path: &Path) -> Result<BinaryMask> {
    let img = read_pgm(path)?;
    let mut data = Vec::with_capacity(img.as_slice().len());
    for v in img.as_slice() {
        match *v as u8 {
            0 => data.push(false),
            255 => data.push(true),
            other => {
                return Err(Error::MaskDomain(format!(
                    "mask contains intermediate value {other}"
                )))
            }
        }
    }
    BinaryMask::new(img.width(), img.height(), data)
}

pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{} {}\n255\n", img.width(), img.height())?;
    let bytes: Vec<u8> = img.as_slice().iter().map(|v| GrayImage::quantize(*v)).collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_pgm_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{} {}\n255\n", mask.width(), mask.height())?;
    let bytes: Vec<u8> = mask.as_slice().iter().map(|v| if *v { 255 } else { 0 }).collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_pfm(map: &ProbMap, path: &Path) -> Result<()> {
    if let Some(v) = map.as_slice().iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("PFM export: non-finite value {v}")));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "Pf\n{} {}\n-1.0\n", map.width(), map.height())?;
    // PFM stores rows bottom-up
    for y in (0..map.height()).rev() {
        for x in 0..map.width() {
            w.write_all(&map.get(x, y).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_pfm(path: &Path) -> Result<ProbMap> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let magic = read_token(&bytes, &mut pos)?;
    if magic != "Pf" {
        return Err(Error::Format(format!("expected Pf magic, got {magic:?}")));
    }
    let width = parse_dim(&read_token(&bytes, &mut pos)?)?;
    let height = parse_dim(&read_token(&bytes, &mut pos)?)?;
    let scale: f32 = read_token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| Error::Format("invalid scale field".into()))?;
    if scale == 0.0 {
        return Err(Error::Format("scale must be nonzero".into()));
    }
    let little_endian = scale < 0.0;
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Format("missing separator after scale".into()));
    }
    pos += 1;
    let n = width * height;
    if bytes.len() - pos < n * 4 {
        return Err(Error::Format(format!(
            "raster truncated: expected {} bytes, found {}",
            n * 4,
            bytes.len() - pos
        )));
    }
    let mut data = vec![0.0f32; n];
    for y in 0..height {
        for x in 0..width {
            let chunk: [u8; 4] = bytes[pos..pos + 4].try_into().unwrap();
            let v = if little_endian {
                f32::from_le_bytes(chunk)
            } else {
                f32::from_be_bytes(chunk)
            };
            // bottom-up storage: first stored row is the last image row
            data[(height - 1 - y) * width + x] = v;
            pos += 4;
        }
    }
    ProbMap::new(width, height, data)
}
