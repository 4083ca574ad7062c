use super::IngestError;
use crate::mask::Bitmask;

fn skip_whitespace_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn read_number(bytes: &[u8], pos: &mut usize, field: &str) -> Result<u32, IngestError> {
    *pos = skip_whitespace_and_comments(bytes, *pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| IngestError::Pgm(format!("missing or invalid {field}")))
}

/// Decodes a binary (P5) greymap with `maxval <= 255`; pixels `> 0` become set bits.
pub fn decode_pgm(bytes: &[u8]) -> Result<Bitmask, IngestError> {
    if !bytes.starts_with(b"P5") {
        return Err(IngestError::BadMagic {
            expected: "P5".into(),
            found: bytes.iter().take(2).copied().collect(),
        });
    }
    let mut pos = 2;
    let width = read_number(bytes, &mut pos, "width")?;
    let height = read_number(bytes, &mut pos, "height")?;
    let maxval = read_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(IngestError::ZeroDimensions { width, height });
    }
    if maxval == 0 || maxval > 255 {
        return Err(IngestError::Pgm(format!("maxval {maxval} not in 1..=255")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(IngestError::Pgm("missing separator after maxval".into()));
    }
    let raster = &bytes[pos + 1..];
    let expected = width as usize * height as usize;
    if raster.len() < expected {
        return Err(IngestError::Truncated {
            what: "payload",
            expected,
            actual: raster.len(),
        });
    }
    if raster.len() > expected {
        return Err(IngestError::TrailingData {
            extra: raster.len() - expected,
        });
    }
    let pixels: Vec<bool> = raster.iter().map(|&v| v > 0).collect();
    Ok(Bitmask::from_pixels(width, height, &pixels)?)
}
