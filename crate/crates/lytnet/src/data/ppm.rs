//! Binary PPM (P6) decoding and encoding.
//!
//! Only 8-bit P6 is accepted (maxval <= 255). Header comments (`#`) are
//! honored. Pixels decode to `(3, H, W)` tensors as `byte / 255`; trailing
//! bytes after the raster are a format error.

use crate::data::DataError;
use crate::tensor::Tensor;
use std::path::Path;

struct HeaderScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderScanner<'a> {
    fn skip_whitespace_and_comments(&mut self) -> Result<(), DataError> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => return Ok(()),
                None => {
                    return Err(DataError::PpmFormat(
                        "unexpected end of header".to_string(),
                    ))
                }
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8], DataError> {
        self.skip_whitespace_and_comments()?;
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(DataError::PpmFormat("empty header token".to_string()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize, DataError> {
        let token = self.token()?;
        std::str::from_utf8(token)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DataError::PpmFormat(format!("bad {what} field")))
    }
}

/// Decodes a P6 image from raw bytes.
pub fn decode_ppm(bytes: &[u8]) -> Result<Tensor, DataError> {
    let mut scanner = HeaderScanner { bytes, pos: 0 };
    let magic = scanner.token()?;
    if magic != b"P6" {
        return Err(DataError::PpmFormat(format!(
            "not a binary PPM (magic {:?})",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = scanner.number("width")?;
    let height = scanner.number("height")?;
    let maxval = scanner.number("maxval")?;
    if maxval > 255 {
        return Err(DataError::PpmFormat(format!(
            "maxval {maxval} exceeds 8 bits"
        )));
    }
    if maxval == 0 {
        return Err(DataError::PpmFormat("maxval must be positive".to_string()));
    }
    if width == 0 || height == 0 {
        return Err(DataError::PpmFormat(format!(
            "degenerate dimensions {width}x{height}"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(scanner.pos) {
        Some(b) if b.is_ascii_whitespace() => scanner.pos += 1,
        _ => {
            return Err(DataError::PpmFormat(
                "missing whitespace before raster".to_string(),
            ))
        }
    }
    let raster = &bytes[scanner.pos..];
    let expected = width * height * 3;
    if raster.len() < expected {
        return Err(DataError::PpmFormat(format!(
            "raster has {} bytes, expected {expected}",
            raster.len()
        )));
    }
    if raster.len() > expected {
        return Err(DataError::PpmFormat(format!(
            "{} trailing bytes after the raster",
            raster.len() - expected
        )));
    }

    // interleaved RGB rows -> channel-major planes
    let mut data = vec![0.0f32; 3 * height * width];
    let plane = height * width;
    for (i, px) in raster.chunks_exact(3).enumerate() {
        data[i] = px[0] as f32 / 255.0;
        data[plane + i] = px[1] as f32 / 255.0;
        data[2 * plane + i] = px[2] as f32 / 255.0;
    }
    Ok(Tensor::from_vec(3, height, width, data)?)
}

/// Reads and decodes a P6 file.
pub fn load_image(path: &Path) -> Result<Tensor, DataError> {
    let bytes = std::fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_ppm(&bytes)
}

/// Encodes a `(3, H, W)` tensor as binary PPM, rounding each value into an
/// 8-bit sample.
pub fn encode_ppm(image: &Tensor) -> Result<Vec<u8>, DataError> {
    let (c, h, w) = image.shape();
    if c != 3 {
        return Err(DataError::PpmFormat(format!(
            "PPM needs 3 channels, tensor has {c}"
        )));
    }
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(3 * h * w);
    let to_byte = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    for y in 0..h {
        for x in 0..w {
            out.push(to_byte(image.get(0, y, x)));
            out.push(to_byte(image.get(1, y, x)));
            out.push(to_byte(image.get(2, y, x)));
        }
    }
    Ok(out)
}

/// Writes a tensor to a P6 file.
pub fn save_ppm(path: &Path, image: &Tensor) -> Result<(), DataError> {
    let bytes = encode_ppm(image)?;
    std::fs::write(path, bytes).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_built_2x2_image_decodes_exactly() {
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        // (r, g, b) per pixel, row-major
        bytes.extend_from_slice(&[
            255, 0, 0, // red
            0, 255, 0, // green
            0, 0, 255, // blue
            128, 64, 32, // gray-ish
        ]);
        let image = decode_ppm(&bytes).unwrap();
        assert_eq!(image.shape(), (3, 2, 2));
        assert_eq!(image.get(0, 0, 0), 1.0);
        assert_eq!(image.get(1, 0, 1), 1.0);
        assert_eq!(image.get(2, 1, 0), 1.0);
        assert_eq!(image.get(0, 1, 1), 128.0 / 255.0);
        assert_eq!(image.get(1, 1, 1), 64.0 / 255.0);
        assert_eq!(image.get(2, 1, 1), 32.0 / 255.0);
        assert_eq!(image.get(1, 0, 0), 0.0);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P6\n# a comment\n2 1 # another\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let image = decode_ppm(&bytes).unwrap();
        assert_eq!(image.shape(), (3, 1, 2));
    }

    #[test]
    fn non_p6_is_rejected() {
        let bytes = b"P3\n1 1\n255\n1 2 3\n".to_vec();
        assert!(matches!(decode_ppm(&bytes), Err(DataError::PpmFormat(_))));
    }

    #[test]
    fn sixteen_bit_is_rejected() {
        let bytes = b"P6\n1 1\n65535\n\0\0\0\0\0\0".to_vec();
        let err = decode_ppm(&bytes).unwrap_err();
        assert!(err.to_string().contains("8 bits"), "{err}");
    }

    #[test]
    fn short_and_long_rasters_are_rejected() {
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0; 11]);
        assert!(decode_ppm(&bytes).is_err());
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0; 13]);
        assert!(decode_ppm(&bytes).is_err());
    }

    #[test]
    fn encode_decode_round_trip_preserves_bytes() {
        let mut bytes = b"P6\n3 2\n255\n".to_vec();
        bytes.extend((0u8..18).map(|i| i * 13));
        let image = decode_ppm(&bytes).unwrap();
        let encoded = encode_ppm(&image).unwrap();
        assert_eq!(encoded, bytes);
    }
}
