//! Binary dataset decoders: IDX (MNIST), CIFAR-10 batches and the `FFC1` raw
//! container used for SVHN and any other pre-converted set.
//!
//! `FFC1` layout (little-endian):
//!
//! ```text
//! b"FFC1" | u32 N | u32 H | u32 W | u32 C | u8 has_labels
//! | N·H·W·C pixel bytes (N, H, W, C order) | N label bytes if has_labels
//! ```

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{s, Array4};

use super::{ColorTag, ImageSet};
use crate::{FfError, Result};

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;
/// Zero border added on each side of IDX images (28×28 becomes 32×32).
pub const IDX_PAD: usize = 2;
pub const CIFAR_RECORD_BYTES: usize = 1 + 32 * 32 * 3;
pub const RAW_MAGIC: &[u8; 4] = b"FFC1";

const CIFAR_CLASSES: usize = 10;

fn to_unit(b: u8) -> f32 {
    f32::from(b) / 255.0
}

fn truncated(what: &str) -> FfError {
    FfError::format(format!("{what}: truncated payload"))
}

/// Decodes an IDX image file into an unlabeled gray set, zero padded by
/// [`IDX_PAD`] pixels on every side.
pub fn load_idx(path: impl AsRef<Path>) -> Result<ImageSet> {
    let bytes = fs::read(path.as_ref())?;
    decode_idx_images(&bytes)
}

fn decode_idx_images(bytes: &[u8]) -> Result<ImageSet> {
    let mut cur = Cursor::new(bytes);
    let magic = cur
        .read_u32::<BigEndian>()
        .map_err(|_| truncated("idx header"))?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(FfError::format(format!(
            "idx image magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x}"
        )));
    }
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        *d = cur
            .read_u32::<BigEndian>()
            .map_err(|_| truncated("idx header"))? as usize;
    }
    let [n, rows, cols] = dims;
    let payload = &bytes[16..];
    if payload.len() < n * rows * cols {
        return Err(truncated("idx images"));
    }
    let (h, w) = (rows + 2 * IDX_PAD, cols + 2 * IDX_PAD);
    let mut pixels = Array4::<f32>::zeros((n, h, w, 1));
    for (i, img) in payload.chunks_exact(rows * cols).take(n).enumerate() {
        let mut dst = pixels.slice_mut(s![i, IDX_PAD..IDX_PAD + rows, IDX_PAD..IDX_PAD + cols, 0]);
        for (d, &b) in dst.iter_mut().zip(img) {
            *d = to_unit(b);
        }
    }
    ImageSet::unlabeled(pixels, ColorTag::Gray)
}

/// Decodes an IDX label file.
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let bytes = fs::read(path.as_ref())?;
    decode_idx_labels(&bytes)
}

fn decode_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let mut cur = Cursor::new(bytes);
    let magic = cur
        .read_u32::<BigEndian>()
        .map_err(|_| truncated("idx header"))?;
    if magic != IDX_LABEL_MAGIC {
        return Err(FfError::format(format!(
            "idx label magic {magic:#010x}, expected {IDX_LABEL_MAGIC:#010x}"
        )));
    }
    let n = cur
        .read_u32::<BigEndian>()
        .map_err(|_| truncated("idx header"))? as usize;
    let payload = &bytes[8..];
    if payload.len() < n {
        return Err(truncated("idx labels"));
    }
    Ok(payload[..n].iter().map(|&b| b as usize).collect())
}

/// Loads a matching IDX image/label pair. The class count is inferred as
/// `max(label) + 1`.
pub fn load_idx_pair(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<ImageSet> {
    let set = load_idx(images)?;
    let labels = load_idx_labels(labels)?;
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    ImageSet::new(set.into_pixels(), Some(labels), classes, ColorTag::Gray)
}

/// Decodes and concatenates CIFAR-10 binary batches.
pub fn load_cifar10<P: AsRef<Path>>(paths: &[P]) -> Result<ImageSet> {
    let mut blobs = Vec::with_capacity(paths.len());
    for p in paths {
        let bytes = fs::read(p.as_ref())?;
        if bytes.len() % CIFAR_RECORD_BYTES != 0 {
            return Err(FfError::format(format!(
                "{}: size {} is not a multiple of {CIFAR_RECORD_BYTES}",
                p.as_ref().display(),
                bytes.len()
            )));
        }
        blobs.push(bytes);
    }
    decode_cifar(&blobs)
}

fn decode_cifar(blobs: &[Vec<u8>]) -> Result<ImageSet> {
    let n: usize = blobs.iter().map(|b| b.len() / CIFAR_RECORD_BYTES).sum();
    let mut pixels = Array4::<f32>::zeros((n, 32, 32, 3));
    let mut labels = Vec::with_capacity(n);
    let records = blobs
        .iter()
        .flat_map(|b| b.chunks_exact(CIFAR_RECORD_BYTES));
    for (i, rec) in records.enumerate() {
        let label = rec[0] as usize;
        if label >= CIFAR_CLASSES {
            return Err(FfError::format(format!(
                "record {i}: label byte {label} outside [0, {CIFAR_CLASSES})"
            )));
        }
        labels.push(label);
        // Planes are R, G, B, each 32×32 row-major.
        for (c, plane) in rec[1..].chunks_exact(1024).enumerate() {
            for (k, &b) in plane.iter().enumerate() {
                pixels[[i, k / 32, k % 32, c]] = to_unit(b);
            }
        }
    }
    ImageSet::new(pixels, Some(labels), CIFAR_CLASSES, ColorTag::Rgb)
}

/// Decodes an `FFC1` raw container.
pub fn load_raw_container(path: impl AsRef<Path>) -> Result<ImageSet> {
    let bytes = fs::read(path.as_ref())?;
    decode_raw(&bytes)
}

fn decode_raw(bytes: &[u8]) -> Result<ImageSet> {
    let mut cur = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic)
        .map_err(|_| truncated("raw header"))?;
    if &magic != RAW_MAGIC {
        return Err(FfError::format("raw container magic mismatch"));
    }
    let mut dims = [0usize; 4];
    for d in dims.iter_mut() {
        *d = cur
            .read_u32::<LittleEndian>()
            .map_err(|_| truncated("raw header"))? as usize;
    }
    let has_labels = cur.read_u8().map_err(|_| truncated("raw header"))? != 0;
    let [n, h, w, c] = dims;
    let header = cur.position() as usize;
    let npix = n
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .and_then(|v| v.checked_mul(c))
        .ok_or_else(|| FfError::format("raw container dimensions overflow"))?;
    let expected = header + npix + if has_labels { n } else { 0 };
    if bytes.len() != expected {
        return Err(FfError::format(format!(
            "raw container holds {} bytes, header declares {expected}",
            bytes.len()
        )));
    }
    let body = &bytes[header..header + npix];
    let pixels = Array4::from_shape_vec((n, h, w, c), body.iter().map(|&b| to_unit(b)).collect())
        .map_err(|e| FfError::format(e.to_string()))?;
    let tag = if c == 3 { ColorTag::Rgb } else { ColorTag::Gray };
    if has_labels {
        let labels: Vec<usize> = bytes[header + npix..].iter().map(|&b| b as usize).collect();
        let classes = labels.iter().max().map_or(0, |&m| m + 1);
        ImageSet::new(pixels, Some(labels), classes, tag)
    } else {
        ImageSet::unlabeled(pixels, tag)
    }
}

/// Writes a set as an `FFC1` container, quantizing pixels to 8 bits.
pub fn write_raw_container(set: &ImageSet, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::with_capacity(21 + set.len() * (set.dim_in() + 1));
    out.write_all(RAW_MAGIC)?;
    for d in [set.len(), set.height(), set.width(), set.channels()] {
        let d = u32::try_from(d).map_err(|_| FfError::dim("dimension exceeds u32"))?;
        out.write_u32::<LittleEndian>(d)?;
    }
    out.write_u8(u8::from(set.labels().is_some()))?;
    out.extend(
        set.pixels()
            .iter()
            .map(|&p| (p * 255.0).round().clamp(0.0, 255.0) as u8),
    );
    if let Some(labels) = set.labels() {
        for &l in labels {
            let l = u8::try_from(l).map_err(|_| FfError::format("label exceeds 255"))?;
            out.push(l);
        }
    }
    fs::write(path.as_ref(), out)?;
    Ok(())
}
