//! Binary greyscale PGM (P5, 8-bit) reading and writing; pixels map to `[0, 1]`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::operators::ImageShape;

pub fn decode(bytes: &[u8]) -> Result<(ImageShape, Vector)> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    if magic != "P5" {
        return Err(Error::Parse(format!("expected P5 magic, found {magic:?}")));
    }
    let mut number = |what: &str| -> Result<usize> {
        let t = token()?;
        t.parse().map_err(|_| Error::Parse(format!("bad {what} {t:?}")))
    };
    let cols = number("width")?;
    let rows = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parse(format!("only 8-bit PGM is supported, maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() {
        return Err(Error::Parse("missing raster".into()));
    }
    let data = &bytes[pos + 1..];
    let shape = ImageShape::new(rows, cols)?;
    if data.len() < shape.len() {
        return Err(Error::Parse(format!(
            "raster has {} bytes, expected {}",
            data.len(),
            shape.len()
        )));
    }
    let scale = maxval as f64;
    let pixels = data[..shape.len()].iter().map(|&b| b as f64 / scale).collect();
    Ok((shape, Vector::new(pixels)?))
}

pub fn encode(shape: ImageShape, image: &Vector) -> Result<Vec<u8>> {
    shape.check(image)?;
    let mut out = format!("P5\n{} {}\n255\n", shape.cols, shape.rows).into_bytes();
    out.extend(image.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

pub fn read_pgm(path: &Path) -> Result<(ImageShape, Vector)> {
    decode(&fs::read(path)?)
}

pub fn write_pgm(path: &Path, shape: ImageShape, image: &Vector) -> Result<()> {
    fs::write(path, encode(shape, image)?)?;
    Ok(())
}
