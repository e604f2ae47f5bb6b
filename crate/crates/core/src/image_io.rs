//! Netpbm (binary PGM/PPM) and grayscale PNG reading and writing.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{PivError, Result};
use crate::field::GrayImage;

/// Sample depth used when writing a PGM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    fn max_value(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }
}

/// Loads a grayscale frame. Binary PGM (`P5`, 8 or 16 bit) is detected by
/// magic number, PNG by signature. Color inputs are rejected unless
/// `convert_color` is set, in which case they are reduced to luma.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    load_image_with(path, false)
}

pub fn load_image_with(path: impl AsRef<Path>, convert_color: bool) -> Result<GrayImage> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| PivError::io(path, e))?;
    decode_image(&bytes, convert_color)
}

pub fn decode_image(bytes: &[u8], convert_color: bool) -> Result<GrayImage> {
    if bytes.starts_with(b"P5") {
        decode_pnm(bytes, false)
    } else if bytes.starts_with(b"P6") {
        if !convert_color {
            return Err(PivError::Format(
                "color PPM input requires color conversion".into(),
            ));
        }
        decode_pnm(bytes, true)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(bytes, convert_color)
    } else {
        Err(PivError::Format(
            "expected binary PGM (P5) or PNG input".into(),
        ))
    }
}

struct Header<'a> {
    cursor: &'a [u8],
}

impl<'a> Header<'a> {
    fn skip_ws_and_comments(&mut self) {
        loop {
            match self.cursor.first() {
                Some(c) if c.is_ascii_whitespace() => self.cursor = &self.cursor[1..],
                Some(b'#') => {
                    let end = self
                        .cursor
                        .iter()
                        .position(|&c| c == b'\n')
                        .unwrap_or(self.cursor.len());
                    self.cursor = &self.cursor[end..];
                }
                _ => return,
            }
        }
    }

    fn number(&mut self) -> Result<u32> {
        self.skip_ws_and_comments();
        let len = self
            .cursor
            .iter()
            .position(|c| !c.is_ascii_digit())
            .unwrap_or(self.cursor.len());
        if len == 0 {
            return Err(PivError::Format("malformed netpbm header".into()));
        }
        let text = std::str::from_utf8(&self.cursor[..len]).expect("ascii digits");
        self.cursor = &self.cursor[len..];
        text.parse()
            .map_err(|_| PivError::Format(format!("bad header number {text}")))
    }
}

fn decode_pnm(bytes: &[u8], color: bool) -> Result<GrayImage> {
    let mut h = Header {
        cursor: &bytes[2..],
    };
    let width = h.number()? as usize;
    let height = h.number()? as usize;
    let maxval = h.number()?;
    if maxval == 0 || maxval > 65535 {
        return Err(PivError::Format(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates header and raster
    match h.cursor.first() {
        Some(c) if c.is_ascii_whitespace() => h.cursor = &h.cursor[1..],
        _ => return Err(PivError::Format("malformed netpbm header".into())),
    }
    let channels = if color { 3 } else { 1 };
    let bytes_per = if maxval > 255 { 2 } else { 1 };
    let n = width * height;
    let need = n * channels * bytes_per;
    if h.cursor.len() < need {
        return Err(PivError::Format(format!(
            "raster truncated: need {need} bytes, have {}",
            h.cursor.len()
        )));
    }
    let raster = &h.cursor[..need];
    let scale = f64::from(maxval);
    let sample = |i: usize| -> f64 {
        let raw = if bytes_per == 2 {
            u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as u32
        } else {
            raster[i] as u32
        };
        f64::from(raw.min(maxval)) / scale
    };
    let data = if color {
        (0..n)
            .map(|p| luma(sample(3 * p), sample(3 * p + 1), sample(3 * p + 2)))
            .collect()
    } else {
        (0..n).map(sample).collect()
    };
    GrayImage::new(width, height, data)
}

fn luma(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

fn decode_png(bytes: &[u8], convert_color: bool) -> Result<GrayImage> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| PivError::Format(format!("png: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| PivError::Format("png: image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| PivError::Format(format!("png: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = info.color_type.samples();
    let wide = info.bit_depth == png::BitDepth::Sixteen;
    let is_color = matches!(info.color_type, png::ColorType::Rgb | png::ColorType::Rgba);
    if is_color && !convert_color {
        return Err(PivError::Format(
            "color PNG input requires color conversion".into(),
        ));
    }
    let max = if wide { 65535.0 } else { 255.0 };
    let sample = |i: usize| -> f64 {
        if wide {
            f64::from(u16::from_be_bytes([buf[2 * i], buf[2 * i + 1]])) / max
        } else {
            f64::from(buf[i]) / max
        }
    };
    let data = (0..w * h)
        .map(|p| {
            let base = p * channels;
            if is_color {
                luma(sample(base), sample(base + 1), sample(base + 2))
            } else {
                sample(base)
            }
        })
        .collect();
    GrayImage::new(w, h, data)
}

/// Quantizes to the given depth (round to nearest) and writes binary PGM.
pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(img, depth);
    write_bytes(path, &bytes)
}

pub fn encode_pgm(img: &GrayImage, depth: BitDepth) -> Vec<u8> {
    let max = depth.max_value();
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), max).into_bytes();
    for &v in img.data() {
        let q = (v.clamp(0.0, 1.0) * f64::from(max)).round() as u32;
        match depth {
            BitDepth::Eight => out.push(q as u8),
            BitDepth::Sixteen => out.extend_from_slice(&(q as u16).to_be_bytes()),
        }
    }
    out
}

/// Writes an 8-bit binary PPM from packed RGB triples.
pub fn save_ppm(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    rgb: &[[u8; 3]],
) -> Result<()> {
    write_bytes(path.as_ref(), &encode_ppm(width, height, rgb))
}

pub fn encode_ppm(width: usize, height: usize, rgb: &[[u8; 3]]) -> Vec<u8> {
    assert_eq!(rgb.len(), width * height);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for px in rgb {
        out.extend_from_slice(px);
    }
    out
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| PivError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| PivError::io(path, e))
}
