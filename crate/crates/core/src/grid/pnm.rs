//! Binary PGM (P5) and PPM (P6) rasters, 8 bits per sample.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::ScalarField;
use crate::error::{Error, Result};
use crate::levelset::BinaryMask;

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: u32,
    data_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::MalformedHeader("missing P-number magic".into()));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for (n, slot) in fields.iter_mut().enumerate() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while let Some(b) = bytes.get(pos) {
            if b.is_ascii_digit() {
                pos += 1;
            } else {
                break;
            }
        }
        if start == pos {
            let name = ["width", "height", "maxval"][n];
            return Err(Error::MalformedHeader(format!("expected {name}")));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *slot = text.parse().map_err(|_| Error::MalformedHeader(format!("number out of range: {text}")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedHeader("missing separator before pixel data".into())),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!("maxval {maxval} out of range")));
    }
    Ok(Header { magic, width: width as usize, height: height as usize, maxval: maxval as u32, data_offset: pos })
}

/// Decodes a binary 8-bit PGM, rescaling samples to `[0, 255]`.
pub fn decode_pgm(bytes: &[u8]) -> Result<ScalarField> {
    let h = parse_header(bytes)?;
    if &h.magic != b"P5" {
        return Err(Error::MalformedHeader(format!("expected P5, found {}", String::from_utf8_lossy(&h.magic))));
    }
    if h.maxval > 255 {
        return Err(Error::UnsupportedDepth(h.maxval));
    }
    let n = h.width * h.height;
    let data = &bytes[h.data_offset..];
    if data.len() < n {
        return Err(Error::Truncated { expected: n, found: data.len() });
    }
    let scale = 255.0 / h.maxval as f64;
    let values = data[..n].iter().map(|&b| b as f64 * scale).collect();
    ScalarField::new(h.width, h.height, values)
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

fn to_byte(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Encodes a field as P5, rounding and clamping to `0..=255`.
pub fn encode_pgm(f: &ScalarField) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", f.width(), f.height()).into_bytes();
    out.extend(f.as_slice().iter().map(|&v| to_byte(v)));
    out
}

/// Masks are stored as 0 (background) / 255 (object).
pub fn encode_mask(m: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", m.width(), m.height()).into_bytes();
    out.extend(m.as_slice().iter().map(|&b| if b { 255u8 } else { 0 }));
    out
}

/// Any sample at or above half scale counts as object.
pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask> {
    let f = decode_pgm(bytes)?;
    let bits = f.as_slice().iter().map(|&v| v >= 127.5).collect();
    BinaryMask::new(f.width(), f.height(), bits)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_mask(&bytes)
}

/// Grayscale image as P6 with the mask boundary drawn in pure red.
///
/// Boundary pixels are object pixels with at least one 4-neighbour outside
/// the object (frame edges count as outside).
pub fn encode_overlay(image: &ScalarField, mask: &BinaryMask) -> Result<Vec<u8>> {
    if image.width() != mask.width() || image.height() != mask.height() {
        return Err(Error::DimensionMismatch(format!(
            "overlay image {}x{} vs mask {}x{}",
            image.width(),
            image.height(),
            mask.width(),
            mask.height()
        )));
    }
    let (w, h) = (image.width(), image.height());
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(3 * w * h);
    for y in 0..h {
        for x in 0..w {
            if mask.is_boundary(x, y) {
                out.extend_from_slice(&[255, 0, 0]);
            } else {
                let g = to_byte(image.get(x, y));
                out.extend_from_slice(&[g, g, g]);
            }
        }
    }
    Ok(out)
}

/// Writes `bytes` to a sibling temporary file, then renames it into place,
/// so a failed run never leaves a partial file at `path`.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let file_name =
        path.file_name().ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
