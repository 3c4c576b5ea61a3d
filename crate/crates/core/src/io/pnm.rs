//! Binary portable maps: P5 (grayscale) and P6 (RGB), maxval 255 or 65535.
//!
//! Samples map to `[0, 1]` by division by maxval. Writing quantises with
//! round-half-to-even and clamps to `[0, maxval]`, and always emits the
//! canonical header `P5\n<w> <h>\n<maxval>\n`.

use std::path::Path;

use crate::error::{AdeError, Result};
use crate::field::FieldStack;

#[derive(Debug, Clone, PartialEq)]
pub struct PnmImage {
    pub stack: FieldStack,
    pub maxval: u16,
}

pub fn has_pnm_extension(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
        Some(ref e) if e == "pgm" || e == "ppm" || e == "pnm"
    )
}

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    maxval: u16,
    payload_at: usize,
}

fn skip_space_and_comments(b: &[u8], mut i: usize) -> usize {
    loop {
        while i < b.len() && b[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < b.len() && b[i] == b'#' {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
        } else {
            return i;
        }
    }
}

fn parse_uint(b: &[u8], i: usize, what: &str) -> Result<(u64, usize)> {
    let start = skip_space_and_comments(b, i);
    let mut end = start;
    while end < b.len() && b[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return Err(AdeError::format(start as u64, format!("expected {what}")));
    }
    let s = std::str::from_utf8(&b[start..end]).unwrap();
    let v = s
        .parse::<u64>()
        .map_err(|_| AdeError::format(start as u64, format!("{what} out of range")))?;
    Ok((v, end))
}

fn parse_header(b: &[u8]) -> Result<Header> {
    if b.len() < 2 || b[0] != b'P' {
        return Err(AdeError::format(0, "missing portable-map magic"));
    }
    let channels = match b[1] {
        b'5' => 1,
        b'6' => 3,
        other => {
            return Err(AdeError::format(
                1,
                format!("unsupported portable-map type P{}", other as char),
            ))
        }
    };
    let (width, i) = parse_uint(b, 2, "width")?;
    let (height, i) = parse_uint(b, i, "height")?;
    let maxval_at = skip_space_and_comments(b, i);
    let (maxval, i) = parse_uint(b, i, "maxval")?;
    if maxval != 255 && maxval != 65535 {
        return Err(AdeError::format(
            maxval_at as u64,
            format!("unsupported maxval {maxval}"),
        ));
    }
    if i >= b.len() || !b[i].is_ascii_whitespace() {
        return Err(AdeError::format(i as u64, "expected whitespace after maxval"));
    }
    if width == 0 || height == 0 {
        return Err(AdeError::format(2, "zero-sized image"));
    }
    Ok(Header {
        channels,
        width: width as usize,
        height: height as usize,
        maxval: maxval as u16,
        payload_at: i + 1,
    })
}

pub fn decode(bytes: &[u8]) -> Result<PnmImage> {
    let h = parse_header(bytes)?;
    let sample = if h.maxval > 255 { 2 } else { 1 };
    let n = h
        .width
        .checked_mul(h.height)
        .and_then(|p| p.checked_mul(h.channels))
        .ok_or_else(|| AdeError::format(2, "image dimensions overflow"))?;
    let need = n * sample;
    let payload = &bytes[h.payload_at..];
    if payload.len() < need {
        return Err(AdeError::format(
            bytes.len() as u64,
            format!("truncated payload: {} of {need} bytes", payload.len()),
        ));
    }
    if payload.len() > need {
        return Err(AdeError::format(
            (h.payload_at + need) as u64,
            "trailing bytes after payload",
        ));
    }
    let plane = h.width * h.height;
    let scale = 1.0 / h.maxval as f64;
    let mut data = vec![0.0; n];
    for i in 0..n {
        let raw = if sample == 1 {
            payload[i] as u32
        } else {
            u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]) as u32
        };
        if raw > h.maxval as u32 {
            return Err(AdeError::format(
                (h.payload_at + i * sample) as u64,
                format!("sample {raw} exceeds maxval {}", h.maxval),
            ));
        }
        // interleaved pixel-major samples -> planar [C, H, W]
        let (pixel, c) = (i / h.channels, i % h.channels);
        data[c * plane + pixel] = raw as f64 * scale;
    }
    Ok(PnmImage {
        stack: FieldStack::from_vec(h.channels, h.height, h.width, data)?,
        maxval: h.maxval,
    })
}

/// Quantises `x` in `[0, 1]` to an integer sample.
pub fn quantize(x: f64, maxval: u16) -> u16 {
    if x.is_nan() {
        return 0;
    }
    (x * maxval as f64).round_ties_even().clamp(0.0, maxval as f64) as u16
}

pub fn encode(stack: &FieldStack, maxval: u16) -> Result<Vec<u8>> {
    if maxval != 255 && maxval != 65535 {
        return Err(AdeError::Spec(format!("unsupported maxval {maxval}")));
    }
    let magic = match stack.channels {
        1 => "P5",
        3 => "P6",
        c => {
            return Err(AdeError::Shape(format!(
                "portable maps hold 1 or 3 channels, got {c}"
            )))
        }
    };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", stack.width, stack.height).into_bytes();
    let plane = stack.plane_len();
    for pixel in 0..plane {
        for c in 0..stack.channels {
            let q = quantize(stack.data[c * plane + pixel], maxval);
            if maxval > 255 {
                out.extend_from_slice(&q.to_be_bytes());
            } else {
                out.push(q as u8);
            }
        }
    }
    Ok(out)
}

pub fn read_image(path: &Path) -> Result<PnmImage> {
    decode(&super::read_bytes(path)?)
}

pub fn write_image(path: &Path, stack: &FieldStack, maxval: u16) -> Result<()> {
    super::atomic_write(path, &encode(stack, maxval)?)
}
