//! PGM/PPM reading and writing (P2, P3, P5, P6; maxval 255 only).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{ColorImage, Image};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    AsciiGray,
    AsciiRgb,
    BinaryGray,
    BinaryRgb,
}

impl Kind {
    fn channels(self) -> usize {
        match self {
            Kind::AsciiGray | Kind::BinaryGray => 1,
            Kind::AsciiRgb | Kind::BinaryRgb => 3,
        }
    }

    fn is_binary(self) -> bool {
        matches!(self, Kind::BinaryGray | Kind::BinaryRgb)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, field: &'static str) -> Result<u64> {
        let tok = self
            .token()
            .ok_or_else(|| Error::format(field, "missing value"))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| {
                Error::format(
                    field,
                    format!("not an unsigned integer: {:?}", String::from_utf8_lossy(tok)),
                )
            })
    }
}

/// Decodes an in-memory PNM file.
pub fn decode_pnm(bytes: &[u8]) -> Result<ColorImage> {
    let mut cur = Cursor { bytes, pos: 0 };
    let kind = match cur.token() {
        Some(b"P2") => Kind::AsciiGray,
        Some(b"P3") => Kind::AsciiRgb,
        Some(b"P5") => Kind::BinaryGray,
        Some(b"P6") => Kind::BinaryRgb,
        other => {
            return Err(Error::format(
                "magic",
                format!(
                    "expected P2, P3, P5 or P6, found {:?}",
                    other.map(String::from_utf8_lossy)
                ),
            ))
        }
    };
    let width = cur.number("width")?;
    if width == 0 {
        return Err(Error::format("width", "must be positive"));
    }
    let height = cur.number("height")?;
    if height == 0 {
        return Err(Error::format("height", "must be positive"));
    }
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::format(
            "maxval",
            format!("only 255 is supported, found {maxval}"),
        ));
    }
    let (width, height) = (width as usize, height as usize);
    let channels = kind.channels();
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format("width", "image too large"))?;

    let samples: Vec<u8> = if kind.is_binary() {
        // Exactly one whitespace byte separates maxval from the raster.
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(Error::format("payload", "missing separator after maxval"));
        }
        let start = cur.pos + 1;
        let avail = bytes.len() - start.min(bytes.len());
        if avail < count {
            return Err(Error::format(
                "payload",
                format!("truncated: expected {count} bytes, found {avail}"),
            ));
        }
        bytes[start..start + count].to_vec()
    } else {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let v = match cur.number("payload") {
                Ok(v) => v,
                Err(_) if cur.pos >= bytes.len() => {
                    return Err(Error::format(
                        "payload",
                        format!("truncated: expected {count} samples, found {}", out.len()),
                    ))
                }
                Err(e) => return Err(e),
            };
            if v > 255 {
                return Err(Error::format(
                    "payload",
                    format!("sample {v} exceeds maxval 255"),
                ));
            }
            out.push(v as u8);
        }
        out
    };

    let planes = (0..channels)
        .map(|ch| {
            let data = samples
                .iter()
                .skip(ch)
                .step_by(channels)
                .map(|&b| b as f64)
                .collect();
            Image::new(width, height, data)
        })
        .collect::<Result<Vec<_>>>()?;
    ColorImage::new(planes)
}

pub fn load_pnm(path: impl AsRef<Path>) -> Result<ColorImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes)
}

/// Quantizes a gray level: round half away from zero, then clamp to `[0, 255]`.
#[inline]
pub fn quantize(value: f64) -> u8 {
    value.round().clamp(0.0, 255.0) as u8
}

/// Encodes as binary PNM: P5 for one plane, P6 for three.
pub fn encode_pnm(img: &ColorImage) -> Vec<u8> {
    let (w, h) = img.dims();
    let magic = if img.num_planes() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * img.num_planes());
    for i in 0..w * h {
        for plane in img.planes() {
            out.push(quantize(plane.data()[i]));
        }
    }
    out
}

pub fn save_pnm(img: &ColorImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pnm(img)).map_err(|e| Error::io(path, e))
}

/// Convenience for single-plane maps.
pub fn save_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    save_pnm(&ColorImage::gray(img.clone()), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(err: Error) -> &'static str {
        match err {
            Error::Format { field, .. } => field,
            other => panic!("expected format error, got {other}"),
        }
    }

    #[test]
    fn binary_gray_identity_decode() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 128, 64]);
        let img = decode_pnm(&bytes).unwrap();
        assert_eq!(img.num_planes(), 1);
        assert_eq!(img.planes()[0].data(), &[0.0, 255.0, 128.0, 64.0]);
    }

    #[test]
    fn binary_rgb_plane_split() {
        let mut bytes = b"P6 1 1 255\n".to_vec();
        bytes.extend_from_slice(&[10, 20, 30]);
        let img = decode_pnm(&bytes).unwrap();
        let vals: Vec<f64> = img.planes().iter().map(|p| p.data()[0]).collect();
        assert_eq!(vals, vec![10.0, 20.0, 30.0]);
    }

    #[test]
    fn ascii_variants_with_comments() {
        let img = decode_pnm(b"P2\n# comment\n3 1\n255\n1 2\n3\n").unwrap();
        assert_eq!(img.planes()[0].data(), &[1.0, 2.0, 3.0]);
        let img = decode_pnm(b"P3 1 2 255 1 2 3 4 5 6").unwrap();
        assert_eq!(img.planes()[2].data(), &[3.0, 6.0]);
    }

    #[test]
    fn header_errors_name_the_field() {
        assert_eq!(field_of(decode_pnm(b"P5 0 5 255\n").unwrap_err()), "width");
        assert_eq!(field_of(decode_pnm(b"P5 5 0 255\n").unwrap_err()), "height");
        assert_eq!(field_of(decode_pnm(b"P5 1 1 65535\n\0\0").unwrap_err()), "maxval");
        assert_eq!(field_of(decode_pnm(b"P7 1 1 255\n\0").unwrap_err()), "magic");
        assert_eq!(field_of(decode_pnm(b"P5 2 2 255\n\0\0").unwrap_err()), "payload");
        assert_eq!(field_of(decode_pnm(b"P2 2 2 255 1 2 3").unwrap_err()), "payload");
        assert_eq!(field_of(decode_pnm(b"P2 1 1 255 256").unwrap_err()), "payload");
        assert_eq!(field_of(decode_pnm(b"P5 x 1 255\n\0").unwrap_err()), "width");
    }

    #[test]
    fn quantization_rules() {
        assert_eq!(quantize(254.5), 255);
        assert_eq!(quantize(-3.2), 0);
        assert_eq!(quantize(300.0), 255);
        assert_eq!(quantize(127.49), 127);
        assert_eq!(quantize(0.5), 1);
    }

    #[test]
    fn saved_values_are_rounded_and_clamped() {
        let img = Image::new(3, 1, vec![254.5, -3.2, 99.6]).unwrap();
        let back = decode_pnm(&encode_pnm(&ColorImage::gray(img))).unwrap();
        assert_eq!(back.planes()[0].data(), &[255.0, 0.0, 100.0]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ppm");
        let planes = (0..3)
            .map(|k| Image::from_fn(4, 3, |r, c| ((r * 4 + c) * 20 + k) as f64))
            .collect();
        let img = ColorImage::new(planes).unwrap();
        save_pnm(&img, &path).unwrap();
        assert_eq!(load_pnm(&path).unwrap(), img);
    }

    #[test]
    fn missing_file_carries_path() {
        let err = load_pnm("/nonexistent/dir/img.pgm").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/dir/img.pgm"));
    }
}
