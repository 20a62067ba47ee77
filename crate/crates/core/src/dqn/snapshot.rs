//! Flat binary encoding of an f32 parameter set, used for the parameter
//! messages between trainer and inference sides.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! u32  layer_count
//! per layer:
//!   u16 name_len, name bytes (utf-8), u32 rows, u32 cols
//! u64  total value count
//! f32  values, layer by layer in table order, row-major
//! ```
//!
//! f32 on the wire is lossless against the f32 runtime nets: a decoded
//! snapshot is bit-identical to the encoded one.

use thiserror::Error;

use super::net::QNet;

#[derive(Debug, Error, PartialEq)]
pub enum SnapshotError {
    #[error("snapshot truncated at byte {at}")]
    Truncated { at: usize },
    #[error("layer {index} is named {got:?}, expected {expected:?}")]
    NameMismatch {
        index: usize,
        expected: String,
        got: String,
    },
    #[error("layer {name} has shape {got_rows}x{got_cols}, expected {rows}x{cols}")]
    ShapeMismatch {
        name: String,
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("value count {got} does not match layer table total {expected}")]
    CountMismatch { expected: u64, got: u64 },
    #[error("layer count {0} is not the expected parameter set")]
    LayerCount(u32),
    #[error("{0} trailing bytes after the value block")]
    TrailingBytes(usize),
    #[error("layer name is not utf-8")]
    BadName,
}

/// Serialize the full parameter set.
pub fn encode(net: &QNet<f32>) -> Vec<u8> {
    let views = net.layer_views();
    let total: usize = views.iter().map(|(_, _, _, d)| d.len()).sum();
    let mut out = Vec::with_capacity(16 + views.len() * 24 + total * 4);
    out.extend_from_slice(&(views.len() as u32).to_le_bytes());
    for (name, rows, cols, _) in &views {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(*rows as u32).to_le_bytes());
        out.extend_from_slice(&(*cols as u32).to_le_bytes());
    }
    out.extend_from_slice(&(total as u64).to_le_bytes());
    for (_, _, _, data) in &views {
        for v in *data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        if self.pos + n > self.buf.len() {
            return Err(SnapshotError::Truncated { at: self.buf.len() });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u16(&mut self) -> Result<u16, SnapshotError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32, SnapshotError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Deserialize into a fresh net. The layer table must match the canonical
/// parameter set exactly (names, order, shapes); the hidden width is
/// inferred from the first layer.
pub fn decode(bytes: &[u8]) -> Result<QNet<f32>, SnapshotError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let layer_count = cur.u32()?;
    let mut table = Vec::with_capacity(layer_count as usize);
    for _ in 0..layer_count {
        let name_len = cur.u16()? as usize;
        let name = std::str::from_utf8(cur.take(name_len)?)
            .map_err(|_| SnapshotError::BadName)?
            .to_string();
        let rows = cur.u32()? as usize;
        let cols = cur.u32()? as usize;
        table.push((name, rows, cols));
    }
    // gru.w_z is h x 4, so its row count fixes the hidden width.
    let hidden = table
        .first()
        .filter(|(name, _, _)| name == "gru.w_z")
        .map(|(_, rows, _)| *rows)
        .ok_or(SnapshotError::LayerCount(layer_count))?;
    let mut net = QNet::zeros(hidden);
    let expected = net.layer_views();
    if table.len() != expected.len() {
        return Err(SnapshotError::LayerCount(layer_count));
    }
    for (i, ((name, rows, cols), (e_name, e_rows, e_cols, _))) in
        table.iter().zip(expected.iter()).enumerate()
    {
        if name != e_name {
            return Err(SnapshotError::NameMismatch {
                index: i,
                expected: e_name.to_string(),
                got: name.clone(),
            });
        }
        if rows != e_rows || cols != e_cols {
            return Err(SnapshotError::ShapeMismatch {
                name: name.clone(),
                rows: *e_rows,
                cols: *e_cols,
                got_rows: *rows,
                got_cols: *cols,
            });
        }
    }
    let declared = cur.u64()?;
    let expected_total: usize = expected.iter().map(|(_, _, _, d)| d.len()).sum();
    if declared != expected_total as u64 {
        return Err(SnapshotError::CountMismatch {
            expected: expected_total as u64,
            got: declared,
        });
    }
    drop(expected);
    for slice in net.param_slices_mut() {
        for v in slice {
            *v = cur.f32()?;
        }
    }
    if cur.pos != bytes.len() {
        return Err(SnapshotError::TrailingBytes(bytes.len() - cur.pos));
    }
    Ok(net)
}

/// FNV-1a 64-bit hash, used to checksum parameter payloads on the wire.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
