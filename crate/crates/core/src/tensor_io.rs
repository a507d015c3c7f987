//! Raw little-endian float32 blobs, row-major, no header.

use std::fs;
use std::io;
use std::path::Path;

use ndarray::Array2;

pub fn f32_to_le_bytes(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes a blob; `None` if the length is not a multiple of 4.
pub fn f32_from_le_bytes(bytes: &[u8]) -> Option<Vec<f32>> {
    if !bytes.len().is_multiple_of(4) {
        return None;
    }
    Some(
        bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
    )
}

pub fn write_f32_matrix(path: &Path, m: &Array2<f32>) -> io::Result<()> {
    let bytes = match m.as_slice() {
        Some(s) => f32_to_le_bytes(s),
        None => f32_to_le_bytes(&m.iter().copied().collect::<Vec<_>>()),
    };
    fs::write(path, bytes)
}

pub fn write_f64_as_f32(path: &Path, values: &[f64]) -> io::Result<()> {
    let v: Vec<f32> = values.iter().map(|&x| x as f32).collect();
    fs::write(path, f32_to_le_bytes(&v))
}
