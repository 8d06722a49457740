//! Saliency map persistence.
//!
//! The binary format is lossless up to `f32` precision:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "ODSG"
//! 4       4     height  (u32 LE)
//! 8       4     width   (u32 LE)
//! 12      4     format version (u32 LE, currently 1)
//! 16      4·h·w values (f32 LE, row-major)
//! ```
//!
//! The PNG rendering is 16-bit grayscale scaled so the map maximum maps to
//! 65535; the scale (the map maximum) has to be stored alongside it.

use std::path::Path;

use image::{ImageBuffer, Luma};

use crate::error::{Error, Result};
use crate::saliency::SaliencyMap;

pub const MAGIC: &[u8; 4] = b"ODSG";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

pub fn encode_map(map: &SaliencyMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * map.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for &v in map.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_map(bytes: &[u8]) -> std::result::Result<SaliencyMap, String> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err("missing ODSG header".into());
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let (h, w, version) = (word(4) as usize, word(8) as usize, word(12));
    if version != FORMAT_VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let body = &bytes[HEADER_LEN..];
    if body.len() != 4 * h * w {
        return Err(format!("expected {} value bytes, found {}", 4 * h * w, body.len()));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
        .collect();
    SaliencyMap::new(h, w, values).map_err(|e| e.to_string())
}

pub fn write_map(path: impl AsRef<Path>, map: &SaliencyMap) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_map(map)).map_err(|e| Error::io(path, e))
}

pub fn read_map(path: impl AsRef<Path>) -> Result<SaliencyMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_map(&bytes).map_err(|message| Error::MapFormat {
        path: path.to_path_buf(),
        message,
    })
}

/// Writes the max-normalized 16-bit PNG and returns the scale (map maximum).
pub fn write_map_png(path: impl AsRef<Path>, map: &SaliencyMap) -> Result<f64> {
    let path = path.as_ref();
    let scale = map.max();
    let norm = if scale > 0.0 { 1.0 / scale } else { 0.0 };
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_fn(map.width() as u32, map.height() as u32, |c, r| {
            let v = map.get(r as usize, c as usize) * norm;
            Luma([(v.clamp(0.0, 1.0) * 65535.0).round() as u16])
        });
    buf.save(path).map_err(|e| Error::png(path, e))?;
    Ok(scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let map = SaliencyMap::new(2, 3, vec![0.0, 1.0, 2.0, 3.0, 4.0, 0.5]).unwrap();
        let bytes = encode_map(&map);
        assert_eq!(bytes.len(), 16 + 24);
        assert_eq!(&bytes[..4], b"ODSG");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &0.0f32.to_le_bytes());
        assert_eq!(&bytes[36..40], &0.5f32.to_le_bytes());
    }

    #[test]
    fn rejects_truncated_and_foreign_files() {
        let map = SaliencyMap::zeros(4, 4);
        let bytes = encode_map(&map);
        assert!(decode_map(&bytes[..bytes.len() - 1]).is_err());
        let mut foreign = bytes.clone();
        foreign[0] = b'X';
        assert!(decode_map(&foreign).is_err());
        assert!(decode_map(b"ODSG").is_err());
    }

    #[test]
    fn png_scale_is_max() {
        let dir = tempfile::tempdir().unwrap();
        let map = SaliencyMap::new(8, 8, (0..64).map(|i| i as f64 * 0.25).collect()).unwrap();
        let path = dir.path().join("m.png");
        assert_eq!(write_map_png(&path, &map).unwrap(), 63.0 * 0.25);
        let back = image::open(&path).unwrap().into_luma16();
        assert_eq!(back.get_pixel(7, 7).0[0], 65535);
        assert_eq!(back.get_pixel(0, 0).0[0], 0);
    }

    proptest! {
        #[test]
        fn round_trip_at_f32_precision(h in 1usize..12, w in 1usize..12, seed in any::<u64>()) {
            let values: Vec<f64> = (0..h * w)
                .map(|i| ((seed.wrapping_mul(i as u64 + 1) >> 11) as f64) / (1u64 << 53) as f64 * 10.0)
                .collect();
            let map = SaliencyMap::new(h, w, values).unwrap();
            let back = decode_map(&encode_map(&map)).unwrap();
            prop_assert_eq!(back.dims(), map.dims());
            for (a, b) in back.values().iter().zip(map.values()) {
                prop_assert_eq!(*a, f64::from(*b as f32));
            }
        }
    }
}
